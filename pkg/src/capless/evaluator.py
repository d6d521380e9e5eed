"""Small-step store machine for configurations ``⟨Σ | t⟩``.

The evaluation context is the let-spine: a term is decomposed into frames
``let x = [] in u`` / ``let <c, x> = [] in u`` around a focus.  Six rules fire
on the focus: apply, tapply, capply (which look a function up in the store),
rename, rename-e and lift (which allocates a fresh location).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from .ops import open_capt, open_term, open_type
from .syntax import (
    App, CApp, CLam, Lam, Let, LetEx, Loc, Pack, TApp, TLam, Var,
    is_answer, is_value,
)

__all__ = [
    "Store", "LetFrame", "LetExFrame", "Config", "Stepped", "AnswerReached",
    "Stuck", "decompose", "plug", "step", "run", "RunResult", "REDUCTION_RULES",
    "DEFAULT_FUEL",
]

log = logging.getLogger(__name__)

REDUCTION_RULES = ("apply", "tapply", "capply", "rename", "rename-e", "lift")
DEFAULT_FUEL = 10_000


@dataclass(frozen=True)
class Store:
    """Append-only heap; location ``ℓi`` is ``values[i]``."""

    values: Tuple = ()

    def __len__(self):
        return len(self.values)

    def __contains__(self, loc: Loc):
        return isinstance(loc, Loc) and loc.id < len(self.values)

    def lookup(self, loc: Loc):
        if loc not in self:
            raise KeyError(loc)
        return self.values[loc.id]

    def extend(self, v) -> Tuple[Store, Loc]:
        if not is_value(v):
            raise TypeError(f"only values can be stored, got {v!r}")
        return Store(self.values + (v,)), Loc(len(self.values))

    def locations(self):
        return [Loc(i) for i in range(len(self.values))]


@dataclass(frozen=True)
class LetFrame:
    body: object


@dataclass(frozen=True)
class LetExFrame:
    body: object


@dataclass(frozen=True)
class Config:
    store: Store
    term: object


@dataclass(frozen=True)
class Stepped:
    next: Config
    rule: str
    lookups: Tuple[Loc, ...] = ()


@dataclass(frozen=True)
class AnswerReached:
    answer: object


@dataclass(frozen=True)
class Stuck:
    reason: str
    detail: str = ""


def decompose(t) -> Optional[Tuple[List, object]]:
    """Split ``t`` into frames (outermost first) and focus; ``None`` for answers."""
    if is_answer(t):
        return None
    frames = []
    while isinstance(t, (Let, LetEx)) and not is_answer(t.bound):
        frames.append(LetFrame(t.body) if isinstance(t, Let) else LetExFrame(t.body))
        t = t.bound
    return frames, t


def plug(frames, t):
    for f in reversed(frames):
        t = Let(t, f.body) if isinstance(f, LetFrame) else LetEx(t, f.body)
    return t


def _head(store: Store, fn, want, rule):
    """Resolve an application head, returning the stored function or a Stuck."""
    if not isinstance(fn, Loc):
        return Stuck("UnboundLocation", f"application head {fn!r} is a variable, not a location")
    if fn not in store:
        return Stuck("UnboundLocation", f"{fn!r} is not in the store")
    v = store.lookup(fn)
    if not isinstance(v, want):
        return Stuck("NotAFunction", f"{rule}: {fn!r} holds {type(v).__name__}")
    return v


def _reduce(store: Store, focus):
    """Fire the unique rule matching ``focus``: ``(store, term, rule, lookups)`` or Stuck."""
    if isinstance(focus, App):
        f = _head(store, focus.fn, Lam, "apply")
        if isinstance(f, Stuck):
            return f
        return store, open_term(f.body, focus.arg), "apply", (focus.fn,)
    if isinstance(focus, TApp):
        f = _head(store, focus.fn, TLam, "tapply")
        if isinstance(f, Stuck):
            return f
        return store, open_type(f.body, focus.arg), "tapply", (focus.fn,)
    if isinstance(focus, CApp):
        f = _head(store, focus.fn, CLam, "capply")
        if isinstance(f, Stuck):
            return f
        return store, open_capt(f.body, focus.arg), "capply", (focus.fn,)
    if isinstance(focus, Let):
        a = focus.bound
        if isinstance(a, Var):
            return store, open_term(focus.body, a.x), "rename", ()
        store2, loc = store.extend(a)
        return store2, open_term(focus.body, loc), "lift", ()
    if isinstance(focus, LetEx):
        a = focus.bound
        if not isinstance(a, Pack):
            return Stuck("PackShapeMismatch", f"existential let of {a!r}")
        # capture binder is outermost: eliminate x first, then c
        return store, open_capt(open_term(focus.body, a.x), a.captures), "rename-e", ()
    raise AssertionError(f"not a redex: {focus!r}")


def step(c: Config) -> Union[Stepped, AnswerReached, Stuck]:
    """One reduction step."""
    d = decompose(c.term)
    if d is None:
        return AnswerReached(c.term)
    frames, focus = d
    out = _reduce(c.store, focus)
    if isinstance(out, Stuck):
        return out
    store, t, rule, lookups = out
    return Stepped(Config(store, plug(frames, t)), rule, tuple(lookups))


@dataclass
class TraceStep:
    index: int
    rule: str
    lookups: Tuple[Loc, ...]
    focus: object  # the redex that fired


@dataclass
class RunResult:
    status: str  # 'answer' | 'stuck' | 'fuel'
    config: Config
    trace: List[TraceStep] = field(default_factory=list)
    stuck: Optional[Stuck] = None

    @property
    def answer(self):
        return self.config.term if self.status == "answer" else None

    @property
    def store(self) -> Store:
        return self.config.store

    @property
    def steps(self) -> int:
        return len(self.trace)


def run(c: Union[Config, object], fuel: int = DEFAULT_FUEL) -> RunResult:
    """Iterate :func:`step` until an answer, a stuck state, or ``fuel`` steps."""
    if fuel <= 0:
        raise ValueError("fuel must be positive")
    if not isinstance(c, Config):
        c = Config(Store(), c)
    trace: List[TraceStep] = []
    for k in range(fuel + 1):
        d = decompose(c.term)
        if d is None:
            return RunResult("answer", c, trace)
        if k == fuel:
            break
        out = step(c)
        if isinstance(out, Stuck):
            log.debug("stuck after %d steps: %s", k, out.reason)
            return RunResult("stuck", c, trace, out)
        trace.append(TraceStep(k + 1, out.rule, out.lookups, d[1]))
        c = out.next
    return RunResult("fuel", c, trace)
