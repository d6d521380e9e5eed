"""Well-formedness, subcapturing, subtyping and use-set synthesis.

Typing is algorithmic: :func:`synth` computes a minimal use-set and type for
a term, and subsumption is only applied at rule premises that demand a
particular type (argument checks, bound checks, packs).  Every successful
judgement yields a :class:`Derivation` naming the declarative rule used at
each node, so callers can inspect or serialise the proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

from .diagnostics import CaplessError, Diagnostic
from .ops import Depth, free_atoms, open_capt, open_term, open_type, shift, shift_all
from .syntax import (
    CAPT, EMPTY, STAR, TERM, TYPE,
    App, CApp, CLam, CaptureSet, CaptVar, Exists, FunCap, FunDep, FunTyp, Lam,
    Let, LetEx, Loc, Pack, Star, TApp, TLam, Top, TVar, TermVar, Type, Var,
)

__all__ = [
    "TermBind", "TypeBind", "CaptBind", "Context", "Derivation", "TypingResult",
    "CheckError", "wf_captures", "wf_bound", "wf_type", "wf_context",
    "subcapture", "subcapture_derivation", "sub_bound", "sub_bound_derivation",
    "subtype", "subtype_derivation", "synth", "check_against", "type_of",
    "TYPING_RULES", "SUBCAPTURE_RULES", "SUBTYPE_RULES",
]

TYPING_RULES = ("var", "pack", "sub", "abs", "app", "tabs", "tapp", "cabs", "capp", "let", "let-e")
SUBCAPTURE_RULES = ("sc-trans", "sc-var", "sc-bound", "sc-elem", "sc-set")
SUBTYPE_RULES = ("top", "refl", "trans", "tvar", "capt", "exist", "fun", "tfun", "cfun")

SUBTYPE_BUDGET = 200_000


class CheckError(CaplessError):
    """A typing failure.  ``term`` is the offending core node, when known."""

    def __init__(self, code: str, message: str, term=None):
        self.code = code
        self.term = term
        super().__init__(Diagnostic(code, message))


# --------------------------------------------------------------------------
# contexts


@dataclass(frozen=True)
class TermBind:
    type: Type


@dataclass(frozen=True)
class TypeBind:
    bound: object  # ShapeType


@dataclass(frozen=True)
class CaptBind:
    bound: object  # Bound


_NS_OF = {TermBind: TERM, TypeBind: TYPE, CaptBind: CAPT}


class Context:
    """Γ: bindings innermost last, plus a location context for run-time terms.

    Annotations are stored as written (well-formed in the prefix preceding
    them); lookups shift them into the full context.
    """

    __slots__ = ("bindings", "locs", "_pos", "_cache")

    def __init__(self, bindings=(), locs: Optional[Mapping[int, Type]] = None):
        self.bindings = tuple(bindings)
        self.locs = dict(locs or {})
        pos = {TERM: [], TYPE: [], CAPT: []}
        for i, b in enumerate(self.bindings):
            pos[_NS_OF[type(b)]].append(i)
        self._pos = pos
        self._cache = {}

    def __repr__(self):
        return f"Context({list(self.bindings)!r}, locs={self.locs!r})"

    def __eq__(self, other):
        return isinstance(other, Context) and self.bindings == other.bindings and self.locs == other.locs

    def __hash__(self):
        return hash((self.bindings, tuple(sorted(self.locs.items()))))

    def count(self, ns: str) -> int:
        return len(self._pos[ns])

    def _extend(self, b) -> Context:
        return Context(self.bindings + (b,), self.locs)

    def ext_term(self, t: Type) -> Context:
        return self._extend(TermBind(t))

    def ext_type(self, s) -> Context:
        return self._extend(TypeBind(s))

    def ext_capt(self, b) -> Context:
        return self._extend(CaptBind(b))

    def with_locs(self, locs) -> Context:
        return Context(self.bindings, locs)

    def _lookup(self, ns: str, idx: int):
        key = (ns, idx)
        if key in self._cache:
            return self._cache[key]
        positions = self._pos[ns]
        if idx < 0 or idx >= len(positions):
            return None
        p = positions[len(positions) - 1 - idx]
        b = self.bindings[p]
        ann = b.type if isinstance(b, TermBind) else b.bound
        n = len(self.bindings)
        shifted = shift_all(
            ann,
            term=sum(1 for q in self._pos[TERM] if q >= p),
            type=sum(1 for q in self._pos[TYPE] if q >= p),
            capt=sum(1 for q in self._pos[CAPT] if q >= p),
        ) if p < n else ann
        self._cache[key] = shifted
        return shifted

    def lookup_term(self, idx: int) -> Optional[Type]:
        return self._lookup(TERM, idx)

    def lookup_type(self, idx: int):
        return self._lookup(TYPE, idx)

    def lookup_capt(self, idx: int):
        return self._lookup(CAPT, idx)

    def lookup_atom(self, a) -> Optional[Type]:
        """Declared type of a term variable or location."""
        if isinstance(a, TermVar):
            return self.lookup_term(a.index)
        if isinstance(a, Loc):
            return self.locs.get(a.id)
        return None

    def atom_bound(self, a) -> Optional[CaptureSet]:
        """The set a single capture atom is bounded by (sc-var / sc-bound), if any."""
        if isinstance(a, CaptVar):
            b = self.lookup_capt(a.index)
            return b if isinstance(b, CaptureSet) else None
        t = self.lookup_atom(a)
        return t.captures if t is not None else None

    def names(self):
        """Deterministic display names for the binders (x0, X0, c0, ...)."""
        from .surface import _Names
        env = {TERM: [], TYPE: [], CAPT: []}
        prefix = {TERM: "x", TYPE: "X", CAPT: "c"}
        for b in self.bindings:
            ns = _NS_OF[type(b)]
            env[ns].append(f"{prefix[ns]}{len(env[ns])}")
        return _Names(env[TERM], env[TYPE], env[CAPT])


# --------------------------------------------------------------------------
# derivations


@dataclass
class Derivation:
    """One node of a derivation tree.

    ``judgement`` is ``(ctx, lhs, rhs)`` for relations and ``(ctx, term)`` for
    typing; ``use_set``/``type`` are set on typing nodes only.
    """

    rule: str
    children: list = field(default_factory=list)
    judgement: tuple = ()
    use_set: Optional[CaptureSet] = None
    type: object = None

    def rules(self):
        yield self.rule
        for c in self.children:
            yield from c.rules()

    def to_json(self) -> dict:
        from .surface import print_captures, print_shape, print_type
        out = {"rule": self.rule}
        ctx = self.judgement[0] if self.judgement else None
        names = ctx.names() if ctx is not None else None
        if self.use_set is not None:
            out["useSet"] = print_captures(self.use_set, names)
        if self.type is not None:
            out["type"] = print_type(self.type, names)
        if len(self.judgement) == 3:
            def show(x):
                if isinstance(x, CaptureSet):
                    return print_captures(x, names)
                if isinstance(x, Star):
                    return "*"
                if isinstance(x, (Type, Exists)):
                    return print_type(x, names)
                return print_shape(x, names)
            out["judgement"] = f"{show(self.judgement[1])} <: {show(self.judgement[2])}"
        out["children"] = [c.to_json() for c in self.children]
        return out


@dataclass
class TypingResult:
    use_set: CaptureSet
    type: object  # ExistType
    trace: Derivation


# --------------------------------------------------------------------------
# well-formedness


def wf_captures(ctx: Context, c: CaptureSet) -> bool:
    nt, nc = ctx.count(TERM), ctx.count(CAPT)
    for a in c.atoms:
        if isinstance(a, TermVar):
            if a.index >= nt:
                return False
        elif isinstance(a, CaptVar):
            if a.index >= nc:
                return False
        elif a.id not in ctx.locs:
            return False
    return True


def wf_bound(ctx: Context, b) -> bool:
    return isinstance(b, Star) or wf_captures(ctx, b)


def wf_type(ctx: Context, t) -> bool:
    """Scoping check for shapes, types and existential types."""
    if isinstance(t, Exists):
        return wf_type(ctx.ext_capt(STAR), t.body)
    if isinstance(t, Type):
        return wf_captures(ctx, t.captures) and wf_type(ctx, t.shape)
    if isinstance(t, Top):
        return True
    if isinstance(t, TVar):
        return t.index < ctx.count(TYPE)
    if isinstance(t, FunDep):
        return wf_type(ctx, t.param) and wf_type(ctx.ext_term(t.param), t.result)
    if isinstance(t, FunTyp):
        return wf_type(ctx, t.bound) and wf_type(ctx.ext_type(t.bound), t.result)
    if isinstance(t, FunCap):
        return wf_bound(ctx, t.bound) and wf_type(ctx.ext_capt(t.bound), t.result)
    raise TypeError(f"not a type: {t!r}")


def wf_context(ctx: Context) -> bool:
    prefix = Context((), ctx.locs)
    for b in ctx.bindings:
        ok = (wf_type(prefix, b.type) if isinstance(b, TermBind)
              else wf_type(prefix, b.bound) if isinstance(b, TypeBind)
              else wf_bound(prefix, b.bound))
        if not ok:
            return False
        prefix = prefix._extend(b)
    return True


# --------------------------------------------------------------------------
# subcapturing


def _closure(ctx: Context, c2: CaptureSet) -> set:
    """Largest set containing ``c2`` closed under the variable bounds of Γ."""
    result = set(c2.atoms)
    candidates = [TermVar(i) for i in range(ctx.count(TERM))]
    candidates += [CaptVar(i) for i in range(ctx.count(CAPT))]
    candidates += [Loc(i) for i in ctx.locs]
    bounds = []
    for a in candidates:
        if a in result:
            continue
        b = ctx.atom_bound(a)
        if b is not None:
            bounds.append((a, b.atoms))
    changed = True
    while changed:
        changed = False
        rest = []
        for a, b in bounds:
            if b <= result:
                result.add(a)
                changed = True
            else:
                rest.append((a, b))
        bounds = rest
    return result


def _explain(ctx, c1: CaptureSet, c2: CaptureSet) -> Derivation:
    """Build a declarative derivation of ``c1 <: c2`` (assumes it holds)."""
    j = (ctx, c1, c2)
    if c1.atoms <= c2.atoms:
        return Derivation("sc-elem", [], j)
    if len(c1) == 1:
        (a,) = c1.atoms
        b = ctx.atom_bound(a)
        base = Derivation("sc-bound" if isinstance(a, CaptVar) else "sc-var", [], (ctx, c1, b))
        return Derivation("sc-trans", [base, _explain(ctx, b, c2)], j)
    first, *rest = list(c1)
    return Derivation("sc-set", [_explain(ctx, CaptureSet([first]), c2),
                                 _explain(ctx, CaptureSet(rest), c2)], j)


def subcapture_derivation(ctx: Context, c1: CaptureSet, c2: CaptureSet) -> Optional[Derivation]:
    if not (wf_captures(ctx, c1) and wf_captures(ctx, c2)):
        raise CheckError("ill-formed-capture-set", f"ill-formed capture set in {c1!r} <: {c2!r}")
    if c1.atoms <= c2.atoms:
        return Derivation("sc-elem", [], (ctx, c1, c2))
    if not c1.atoms <= _closure(ctx, c2):
        return None
    return _explain(ctx, c1, c2)


def subcapture(ctx: Context, c1: CaptureSet, c2: CaptureSet) -> bool:
    """Γ ⊢ c1 <: c2."""
    if not (wf_captures(ctx, c1) and wf_captures(ctx, c2)):
        raise CheckError("ill-formed-capture-set", f"ill-formed capture set in {c1!r} <: {c2!r}")
    return c1.atoms <= c2.atoms or c1.atoms <= _closure(ctx, c2)


def sub_bound_derivation(ctx: Context, b1, b2) -> Optional[Derivation]:
    if isinstance(b2, Star):
        return Derivation("sb-star", [], (ctx, b1, b2))
    if isinstance(b1, Star):
        return None
    return subcapture_derivation(ctx, b1, b2)


def sub_bound(ctx: Context, b1, b2) -> bool:
    """Γ ⊢ b1 <: b2 on capture bounds; ``*`` is the top."""
    if isinstance(b2, Star):
        return True
    if isinstance(b1, Star):
        return False
    return subcapture(ctx, b1, b2)


# --------------------------------------------------------------------------
# subtyping


class _Budget:
    def __init__(self, n):
        self.n = n

    def tick(self):
        self.n -= 1
        if self.n < 0:
            raise CheckError("subtype-budget", "subtyping search exceeded its budget")


def _sub(ctx: Context, a, b, budget: _Budget) -> Optional[Derivation]:
    budget.tick()
    j = (ctx, a, b)
    if a == b:
        return Derivation("refl", [], j)
    if isinstance(a, Exists) or isinstance(b, Exists):
        if isinstance(a, Exists) and isinstance(b, Exists):
            d = _sub(ctx.ext_capt(STAR), a.body, b.body, budget)
            return Derivation("exist", [d], j) if d else None
        return None
    if isinstance(a, Type) or isinstance(b, Type):
        if not (isinstance(a, Type) and isinstance(b, Type)):
            return None
        ds = _sub(ctx, a.shape, b.shape, budget)
        if ds is None:
            return None
        dc = subcapture_derivation(ctx, a.captures, b.captures)
        if dc is None:
            return None
        return Derivation("capt", [ds, dc], j)
    # shapes
    if isinstance(b, Top):
        return Derivation("top", [], j)
    if isinstance(a, TVar):
        bound = ctx.lookup_type(a.index)
        if bound is None:
            raise CheckError("ill-formed-type", f"unbound type variable {a!r}")
        step = Derivation("tvar", [], (ctx, a, bound))
        if bound == b:
            return step
        rest = _sub(ctx, bound, b, budget)
        return Derivation("trans", [step, rest], j) if rest else None
    if isinstance(a, FunDep) and isinstance(b, FunDep):
        d1 = _sub(ctx, b.param, a.param, budget)
        if d1 is None:
            return None
        d2 = _sub(ctx.ext_term(b.param), a.result, b.result, budget)
        return Derivation("fun", [d2, d1], j) if d2 else None
    if isinstance(a, FunTyp) and isinstance(b, FunTyp):
        d1 = _sub(ctx, b.bound, a.bound, budget)
        if d1 is None:
            return None
        d2 = _sub(ctx.ext_type(b.bound), a.result, b.result, budget)
        return Derivation("tfun", [d2, d1], j) if d2 else None
    if isinstance(a, FunCap) and isinstance(b, FunCap):
        d1 = sub_bound_derivation(ctx, b.bound, a.bound)
        if d1 is None:
            return None
        d2 = _sub(ctx.ext_capt(b.bound), a.result, b.result, budget)
        return Derivation("cfun", [d2, d1], j) if d2 else None
    return None


def _kind(x):
    if isinstance(x, Exists):
        return "etype"
    if isinstance(x, Type):
        return "type"
    return "shape"


def subtype_derivation(ctx: Context, a, b) -> Optional[Derivation]:
    for side in (a, b):
        if not wf_type(ctx, side):
            raise CheckError("ill-formed-type", f"ill-formed type {side!r}")
    return _sub(ctx, a, b, _Budget(SUBTYPE_BUDGET))


def subtype(ctx: Context, a, b) -> bool:
    """Γ ⊢ a <: b for shapes, types or existential types."""
    return subtype_derivation(ctx, a, b) is not None


# --------------------------------------------------------------------------
# typing


def _abstract(ctx: Context, c: CaptureSet, x, t: Type) -> Type:
    """Body of the package type synthesised for ``<c, x>`` where ``x: t``.

    Only the outermost capture set is abstracted: it becomes ``{c}`` (when
    the packed set is non-empty) together with ``t``'s own captures unless
    ``{x} <: c`` already.  Substitution can only shrink this choice, which
    keeps the synthesised type stable under reduction.
    """
    covered = subcapture(ctx, CaptureSet([x]), c)
    top = EMPTY if covered else t.captures
    top = shift(CAPT, 1, 0, top)
    if c:
        top = top | CaptureSet([CaptVar(0)])
    return Type(shift(CAPT, 1, 0, t.shape), top)


def _err(code, msg, term):
    return CheckError(code, msg, term)


def _show(ctx, x):
    from .surface import print_captures, print_shape, print_type
    names = ctx.names()
    if isinstance(x, CaptureSet):
        return print_captures(x, names)
    if isinstance(x, (Type, Exists)):
        return print_type(x, names)
    return print_shape(x, names)


def _var(ctx: Context, a, term) -> TypingResult:
    t = ctx.lookup_atom(a)
    if t is None:
        raise _err("unbound-variable", f"unbound variable {a!r}", term)
    c = CaptureSet([a])
    ty = Type(t.shape, c)
    return TypingResult(c, ty, Derivation("var", [], (ctx, Var(a)), c, ty))


def _promote(ctx: Context, r: TypingResult, want, what: str, term):
    """Expose a function shape through type-variable bounds."""
    shape = r.type.shape
    steps = shape
    while isinstance(steps, TVar):
        steps = ctx.lookup_type(steps.index)
    if not isinstance(steps, want):
        raise _err("not-a-function", f"expected a {what}, got {_show(ctx, r.type)}", term)
    if steps is shape:
        return steps, r.trace
    target = Type(steps, r.type.captures)
    d = subtype_derivation(ctx, r.type, target)
    return steps, Derivation("sub", [r.trace, d], (ctx, term), r.use_set, target)


class _Escapes(Exception):
    pass


def _avoid(t, ns: str, caps: Optional[CaptureSet]):
    """A supertype of ``t`` not mentioning variable 0 of namespace ``ns``.

    In a contravariant capture set the variable is simply dropped (a smaller
    set there gives a supertype).  In a covariant one it is traded for
    ``caps``, the captures of its type (sound by sc-var); with ``caps=None``
    (a capture variable bounded by ``*``) there is nothing to trade it for and
    :class:`_Escapes` is raised, except inside a capture bound, which becomes
    ``*``.  Indices are left unshifted.
    """
    def cset(c: CaptureSet, d, pos: bool) -> CaptureSet:
        hit = TermVar(d.term) if ns == TERM else CaptVar(d.capt)
        if hit not in c.atoms:
            return c
        rest = CaptureSet(c.atoms - {hit})
        if not pos:
            return rest
        if caps is None:
            raise _Escapes
        return rest | shift_all(caps, d.term, 0, d.capt)

    def ty(x, d, pos):
        if isinstance(x, Exists):
            return Exists(ty(x.body, d.bump(CAPT), pos))
        return Type(shape(x.shape, d, pos), cset(x.captures, d, pos))

    def shape(x, d, pos):
        if isinstance(x, FunDep):
            return FunDep(ty(x.param, d, not pos), ty(x.result, d.bump(TERM), pos))
        if isinstance(x, FunTyp):
            return FunTyp(shape(x.bound, d, not pos), ty(x.result, d.bump(TYPE), pos))
        if isinstance(x, FunCap):
            b = x.bound
            if not isinstance(b, Star):
                try:
                    b = cset(b, d, not pos)
                except _Escapes:
                    # a bound may always grow to *
                    b = Star()
            return FunCap(b, ty(x.result, d.bump(CAPT), pos))
        return x
    return ty(t, Depth(), True)


def _widen(ctx_in: Context, ty, tr: Derivation, use_set, ns: str, caps, term):
    """Widen a body type away from the innermost binder of ``ns``, recording a
    (sub) step when anything changed."""
    if 0 not in free_atoms(ns, ty):
        return ty, tr
    try:
        wide = _avoid(ty, ns, caps)
    except _Escapes:
        raise _err("avoidance-failure",
                   f"result type {_show(ctx_in, ty)} exposes the unpacked capture variable",
                   term) from None
    d = subtype_derivation(ctx_in, ty, wide)
    return wide, Derivation("sub", [tr, d], (ctx_in, term), use_set, wide)


def synth(ctx: Context, t) -> TypingResult:
    """Synthesise ``C;Γ ⊢ t : E`` with a minimal use-set ``C``."""
    if isinstance(t, Var):
        return _var(ctx, t.x, t)

    if isinstance(t, Lam):
        if not wf_type(ctx, t.param):
            raise _err("ill-formed-type", f"ill-formed parameter type {t.param!r}", t)
        r = synth(ctx.ext_term(t.param), t.body)
        c = shift(TERM, -1, 0, r.use_set.minus_term_var(0))
        ty = Type(FunDep(t.param, r.type), c)
        return TypingResult(EMPTY, ty, Derivation("abs", [r.trace], (ctx, t), EMPTY, ty))

    if isinstance(t, TLam):
        if not wf_type(ctx, t.bound):
            raise _err("ill-formed-type", f"ill-formed bound {t.bound!r}", t)
        r = synth(ctx.ext_type(t.bound), t.body)
        ty = Type(FunTyp(t.bound, r.type), r.use_set)
        return TypingResult(EMPTY, ty, Derivation("tabs", [r.trace], (ctx, t), EMPTY, ty))

    if isinstance(t, CLam):
        if not wf_bound(ctx, t.bound):
            raise _err("ill-formed-capture-set", f"ill-formed bound {t.bound!r}", t)
        r = synth(ctx.ext_capt(t.bound), t.body)
        if CaptVar(0) in r.use_set:
            raise _err("avoidance-failure",
                       "the body of a capture abstraction may not use its capture parameter", t)
        c = shift(CAPT, -1, 0, r.use_set)
        ty = Type(FunCap(t.bound, r.type), c)
        return TypingResult(EMPTY, ty, Derivation("cabs", [r.trace], (ctx, t), EMPTY, ty))

    if isinstance(t, Pack):
        if not wf_captures(ctx, t.captures):
            raise _err("ill-formed-capture-set", f"ill-formed capture set {t.captures!r}", t)
        declared = ctx.lookup_atom(t.x)
        if declared is None:
            raise _err("unbound-variable", f"unbound variable {t.x!r}", t)
        ty = Exists(_abstract(ctx, t.captures, t.x, declared))
        return _check_pack(ctx, t, ty)

    if isinstance(t, App):
        rf = _var(ctx, t.fn, t)
        fun, ftrace = _promote(ctx, rf, FunDep, "term function", t)
        try:
            ry = check_against(ctx, Var(t.arg), fun.param)
        except CheckError as e:
            if e.code != "subtype-failure":
                raise
            raise _err("argument-type-mismatch",
                       f"argument {_show(ctx, CaptureSet([t.arg]))} does not conform to "
                       f"{_show(ctx, fun.param)}", t) from None
        ty = open_term(fun.result, t.arg)
        c = rf.use_set | ry.use_set
        return TypingResult(c, ty, Derivation("app", [ftrace, ry.trace], (ctx, t), c, ty))

    if isinstance(t, TApp):
        if not wf_type(ctx, t.arg):
            raise _err("ill-formed-type", f"ill-formed type argument {t.arg!r}", t)
        rf = _var(ctx, t.fn, t)
        fun, ftrace = _promote(ctx, rf, FunTyp, "type function", t)
        d = subtype_derivation(ctx, t.arg, fun.bound)
        if d is None:
            raise _err("bound-not-satisfied",
                       f"{_show(ctx, t.arg)} is not a subtype of the bound {_show(ctx, fun.bound)}", t)
        ty = open_type(fun.result, t.arg)
        return TypingResult(rf.use_set, ty, Derivation("tapp", [ftrace, d], (ctx, t), rf.use_set, ty))

    if isinstance(t, CApp):
        if not wf_captures(ctx, t.arg):
            raise _err("ill-formed-capture-set", f"ill-formed capture argument {t.arg!r}", t)
        rf = _var(ctx, t.fn, t)
        fun, ftrace = _promote(ctx, rf, FunCap, "capture function", t)
        d = sub_bound_derivation(ctx, t.arg, fun.bound)
        if d is None:
            raise _err("bound-not-satisfied",
                       f"{_show(ctx, t.arg)} does not conform to the capture bound", t)
        ty = open_capt(fun.result, t.arg)
        return TypingResult(rf.use_set, ty, Derivation("capp", [ftrace, d], (ctx, t), rf.use_set, ty))

    if isinstance(t, Let):
        r1 = synth(ctx, t.bound)
        if isinstance(r1.type, Exists):
            raise _err("existential-escape",
                       "bound term has an existential type; unpack it with let <c, x> = ...", t)
        inner = ctx.ext_term(r1.type)
        r2 = synth(inner, t.body)
        body_ty, body_tr = _widen(inner, r2.type, r2.trace, r2.use_set, TERM,
                                   shift(TERM, 1, 0, r1.type.captures), t)
        ty = shift(TERM, -1, 0, body_ty)
        c = r1.use_set | _pop_term(r2.use_set, r1.type.captures)
        return TypingResult(c, ty, Derivation("let", [r1.trace, body_tr], (ctx, t), c, ty))

    if isinstance(t, LetEx):
        r1 = synth(ctx, t.bound)
        if not isinstance(r1.type, Exists):
            raise _err("expected-existential",
                       f"bound term has type {_show(ctx, r1.type)}, not an existential", t)
        inner_ty = r1.type.body
        inner = ctx.ext_capt(STAR).ext_term(inner_ty)
        r2 = synth(inner, t.body)
        body_ty, body_tr = _widen(inner, r2.type, r2.trace, r2.use_set, TERM,
                                  shift(TERM, 1, 0, inner_ty.captures), t)
        body_ty, body_tr = _widen(inner, body_ty, body_tr, r2.use_set, CAPT, None, t)
        ty = shift(CAPT, -1, 0, shift(TERM, -1, 0, body_ty))
        c_mid = _pop_term(r2.use_set, inner_ty.captures)
        if CaptVar(0) in c_mid:
            raise _err("avoidance-failure",
                       "the body uses the unpacked value, whose capabilities are hidden", t)
        c = r1.use_set | shift(CAPT, -1, 0, c_mid)
        return TypingResult(c, ty, Derivation("let-e", [r1.trace, body_tr], (ctx, t), c, ty))

    raise TypeError(f"not a term: {t!r}")


def _pop_term(c: CaptureSet, bound_captures: CaptureSet) -> CaptureSet:
    """Leave the scope of term variable 0: an occurrence is replaced by the
    capture set of its type (sound by sc-var)."""
    had = TermVar(0) in c
    out = shift(TERM, -1, 0, c.minus_term_var(0))
    return out | bound_captures if had else out


def _check_pack(ctx: Context, t: Pack, expected: Exists) -> TypingResult:
    rx = _var(ctx, t.x, t)
    target = open_capt(expected.body, t.captures)
    d = subtype_derivation(ctx, rx.type, target)
    if d is None:
        raise _err("subtype-failure",
                   f"packed variable has type {_show(ctx, rx.type)}, expected {_show(ctx, target)}", t)
    sub = Derivation("sub", [rx.trace, d], (ctx, Var(t.x)), rx.use_set, target)
    return TypingResult(EMPTY, expected, Derivation("pack", [sub], (ctx, t), EMPTY, expected))


def check_against(ctx: Context, t, expected) -> TypingResult:
    """Check ``t`` against ``expected``; the returned use-set is the minimal one."""
    if not wf_type(ctx, expected):
        raise _err("ill-formed-type", f"ill-formed expected type {expected!r}", t)
    if isinstance(expected, Exists) and isinstance(t, Pack):
        if not wf_captures(ctx, t.captures):
            raise _err("ill-formed-capture-set", f"ill-formed capture set {t.captures!r}", t)
        return _check_pack(ctx, t, expected)
    if isinstance(t, Let):
        # push the expectation into the body; it cannot mention the binder
        r1 = synth(ctx, t.bound)
        if isinstance(r1.type, Exists):
            raise _err("existential-escape",
                       "bound term has an existential type; unpack it with let <c, x> = ...", t)
        r2 = check_against(ctx.ext_term(r1.type), t.body, shift(TERM, 1, 0, expected))
        c = r1.use_set | _pop_term(r2.use_set, r1.type.captures)
        return TypingResult(c, expected, Derivation("let", [r1.trace, r2.trace], (ctx, t), c, expected))
    if isinstance(t, LetEx):
        r1 = synth(ctx, t.bound)
        if not isinstance(r1.type, Exists):
            raise _err("expected-existential",
                       f"bound term has type {_show(ctx, r1.type)}, not an existential", t)
        inner_ty = r1.type.body
        inner = ctx.ext_capt(STAR).ext_term(inner_ty)
        r2 = check_against(inner, t.body, shift(TERM, 1, 0, shift(CAPT, 1, 0, expected)))
        c_mid = _pop_term(r2.use_set, inner_ty.captures)
        if CaptVar(0) in c_mid:
            raise _err("avoidance-failure",
                       "the body uses the unpacked value, whose capabilities are hidden", t)
        c = r1.use_set | shift(CAPT, -1, 0, c_mid)
        return TypingResult(c, expected, Derivation("let-e", [r1.trace, r2.trace], (ctx, t), c, expected))
    r = synth(ctx, t)
    d = subtype_derivation(ctx, r.type, expected)
    if d is None:
        raise _err("subtype-failure",
                   f"{_show(ctx, r.type)} is not a subtype of {_show(ctx, expected)}", t)
    return TypingResult(r.use_set, expected,
                        Derivation("sub", [r.trace, d], (ctx, t), r.use_set, expected))


def type_of(t, ctx: Optional[Context] = None) -> TypingResult:
    return synth(ctx or Context(), t)
