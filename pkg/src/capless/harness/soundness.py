"""Empirical soundness: progress, preservation, termination and the capture monitor.

A configuration ``⟨Σ | t⟩`` is typed by treating each store location as a
term binding of its annotated type (see :func:`type_config`).  A program is
driven step by step; after every step the new configuration is re-typed and
compared with the original judgement.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

from ..checker import CheckError, Context, TypingResult, check_against, subcapture, subtype, synth
from ..evaluator import (
    DEFAULT_FUEL, AnswerReached, Config, Store, Stuck, decompose, step,
)
from ..surface import print_captures, print_term, print_type
from ..syntax import CaptureSet, Exists, Loc, Type

__all__ = [
    "StoreIllTyped", "type_store", "type_config", "StepRecord", "SoundnessReport",
    "check_soundness", "check_config",
]


class StoreIllTyped(CheckError):
    def __init__(self, message, loc=None):
        super().__init__("store-ill-typed", message)
        self.loc = loc


def type_store(locs: Dict[int, Type], store: Store) -> None:
    """Each stored value must check against its annotation, seeing only earlier entries."""
    for i, v in enumerate(store.values):
        if i not in locs:
            raise StoreIllTyped(f"ℓ{i} has no annotation", Loc(i))
        earlier = Context((), {j: locs[j] for j in range(i)})
        try:
            check_against(earlier, v, locs[i])
        except CheckError as e:
            raise StoreIllTyped(f"ℓ{i} does not have its annotated type: {e}", Loc(i)) from None


def type_config(locs: Dict[int, Type], store: Store, t, check_store: bool = True) -> TypingResult:
    """Type a run-time configuration under the location context ``locs``."""
    if check_store:
        type_store(locs, store)
    return synth(Context((), locs), t)


@dataclass
class StepRecord:
    index: int
    rule: str
    lookups: List[int]
    preservation_ok: bool
    use_set_shrank_ok: bool
    monitor_ok: bool
    store_monotone_ok: bool
    note: str = ""
    checked_against_original: bool = False


@dataclass
class SoundnessReport:
    program: str
    steps: List[StepRecord] = field(default_factory=list)
    progress_ok: bool = True
    preservation_ok: bool = True
    termination_ok: bool = True
    monitor_ok: bool = True
    store_monotone_ok: bool = True
    termination_steps: Optional[int] = None
    counterexample: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return (self.progress_ok and self.preservation_ok and self.termination_ok
                and self.monitor_ok and self.store_monotone_ok)

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False)


def _show_config(c: Config) -> dict:
    return {
        "store": [f"ℓ{i} ↦ {print_term(v)}" for i, v in enumerate(c.store.values)],
        "term": print_term(c.term),
    }


def check_config(config: Config, locs: Dict[int, Type], expected_type, expected_use: CaptureSet,
                 fuel: int = DEFAULT_FUEL, name: str = "<config>") -> SoundnessReport:
    """Drive ``config`` to an answer, checking every step against the initial judgement."""
    report = SoundnessReport(name)
    locs = dict(locs)
    ctx = Context((), locs)
    try:
        current = type_config(locs, config.store, config.term)
    except CheckError as e:
        current = None
        report.preservation_ok = False
        report.counterexample = {"step": 0, "reason": f"initial configuration ill-typed: {e}",
                                 "config": _show_config(config)}

    for k in range(1, fuel + 1):
        out = step(config)
        if isinstance(out, AnswerReached):
            report.termination_steps = k - 1
            return report
        if isinstance(out, Stuck):
            report.progress_ok = False
            report.counterexample = report.counterexample or {
                "step": k, "reason": f"stuck: {out.reason} {out.detail}".strip(),
                "config": _show_config(config)}
            report.termination_ok = False
            return report

        before, after = config.store, out.next.store
        monotone = (len(after) >= len(before) and after.values[:len(before)] == before.values)
        note = ""
        # annotate newly allocated locations with the stored value's type
        for i in range(len(before), len(after)):
            try:
                r = synth(Context((), locs), after.values[i])
                if isinstance(r.type, Exists):
                    raise CheckError("existential-escape", "stored value has an existential type")
                locs[i] = r.type
            except CheckError as e:
                note = f"cannot annotate ℓ{i}: {e}"
                locs[i] = None
        pre_ctx = ctx
        ctx = Context((), {i: t for i, t in locs.items() if t is not None})

        # capture monitor: every looked-up location is covered by the use-set
        monitor = True
        if current is not None:
            for loc in out.lookups:
                if not subcapture(pre_ctx, CaptureSet([loc]), current.use_set):
                    monitor = False
        else:
            monitor = not out.lookups

        preserved, shrank = True, True
        via_check = False
        nxt = None
        if note or expected_type is None:
            # an untyped start (``--unchecked``) has nothing to preserve
            preserved = False
            note = note or "no initial typing"
        else:
            try:
                nxt = type_config(locs, after, out.next.term, check_store=False)
                if not subtype(ctx, nxt.type, expected_type):
                    # synthesis picks one package type; a declarative typing may pick
                    # another, so fall back to checking against the original type
                    try:
                        nxt = check_against(ctx, out.next.term, expected_type)
                        via_check = True
                    except CheckError:
                        preserved = False
                        note = (f"type {print_type(nxt.type)} is not a subtype of "
                                f"{print_type(expected_type)}")
                if not preserved:
                    pass
                elif not subcapture(ctx, nxt.use_set, expected_use):
                    preserved = False
                    note = f"use-set {print_captures(nxt.use_set)} exceeds {print_captures(expected_use)}"
                if current is not None and not subcapture(ctx, nxt.use_set, current.use_set):
                    shrank = False
            except CheckError as e:
                preserved = False
                note = f"ill-typed after step: {e}"

        # ... and by the reduced configuration's use-set under the extended Λ′
        if nxt is not None:
            for loc in out.lookups:
                if not subcapture(ctx, CaptureSet([loc]), nxt.use_set):
                    monitor = False
                    note = note or f"lookup of ℓ{loc.id} not covered by {print_captures(nxt.use_set)}"

        rec = StepRecord(k, out.rule, [l.id for l in out.lookups], preserved, shrank, monitor,
                         monotone, note, via_check)
        report.steps.append(rec)
        bad = not (preserved and shrank and monitor and monotone)
        report.preservation_ok &= preserved and shrank
        report.monitor_ok &= monitor
        report.store_monotone_ok &= monotone
        if bad and report.counterexample is None:
            report.counterexample = {
                "step": k, "rule": out.rule, "reason": note or "flag failed",
                "before": _show_config(config), "after": _show_config(out.next),
                "flags": {"preservation": preserved, "useSetShrank": shrank,
                          "monitor": monitor, "storeMonotone": monotone},
            }
        config = out.next
        current = nxt

    report.termination_ok = decompose(config.term) is None
    if report.termination_ok:
        report.termination_steps = fuel
    elif report.counterexample is None:
        report.counterexample = {"step": fuel, "reason": "fuel exhausted", "config": _show_config(config)}
    return report


def check_soundness(program, fuel: int = DEFAULT_FUEL, name: str = "<program>") -> SoundnessReport:
    """Run a closed, well-typed program and report the soundness flags.

    Raises :class:`CheckError` if the program does not type-check (that is a
    precondition, not a soundness failure).
    """
    r0 = synth(Context(), program)
    return check_config(Config(Store(), program), {}, r0.type, r0.use_set, fuel, name)
