"""Oracles, configuration typing, the soundness driver and the generator."""

import collections

import pytest

from capless.checker import TYPING_RULES, CheckError, Context, synth
from capless.evaluator import Config, Store, step
from capless.harness.generator import IDENTITY, gen_programs, gen_well_typed
from capless.harness.oracle import BudgetExceeded, oracle_subcapture, oracle_subtype
from capless.harness.soundness import (
    StoreIllTyped, check_config, check_soundness, type_config, type_store,
)
from capless.surface import parse_program
from capless.syntax import (
    EMPTY, STAR, TOP, App, CaptVar, FunDep, Let, Loc, TApp, TermVar, TLam, TVar, Type, Var, cs,
    pure,
)

from conftest import CORPUS

ID_TYPE = pure(FunDep(pure(TOP), Type(TOP, cs(TermVar(0)))))


# -- oracles -------------------------------------------------------------------

def test_oracle_subcapture_elem():
    assert oracle_subcapture(Context(), EMPTY, EMPTY, 1)


def test_oracle_subcapture_var():
    ctx = Context().ext_capt(STAR).ext_term(Type(TOP, cs(CaptVar(0))))
    assert oracle_subcapture(ctx, cs(TermVar(0)), cs(CaptVar(0)), 2)
    assert not oracle_subcapture(ctx, cs(CaptVar(0)), cs(TermVar(0)), 8)


def test_oracle_subcapture_depth_matters():
    # c1 <: {c2} <: {} needs bound, bound and a transitive step
    ctx = Context().ext_capt(EMPTY).ext_capt(cs(CaptVar(0)))
    assert oracle_subcapture(ctx, cs(CaptVar(0)), EMPTY, 8)
    assert not oracle_subcapture(ctx, cs(CaptVar(0)), EMPTY, 1)


def test_oracle_subcapture_budget():
    ctx = Context()
    for _ in range(5):
        ctx = ctx.ext_capt(STAR)
    with pytest.raises(BudgetExceeded):
        oracle_subcapture(ctx, EMPTY, EMPTY, 8)


def test_oracle_subtype_refl_and_tvar():
    assert oracle_subtype(Context(), ID_TYPE, ID_TYPE)
    ctx = Context().ext_type(TOP)
    assert oracle_subtype(ctx, TVar(0), TOP)
    assert not oracle_subtype(ctx, TOP, TVar(0))


# -- configuration typing --------------------------------------------------------

def test_type_config_empty_store_is_synth():
    t = parse_program((CORPUS / "03_apply_identity.capless").read_text())
    assert type_config({}, Store(), t) == synth(Context(), t)


def test_type_config_after_lift():
    t = Let(IDENTITY, Var(TermVar(0)))
    out = step(Config(Store(), t))
    locs = {0: synth(Context(), IDENTITY).type}
    r = type_config(locs, out.next.store, out.next.term)
    assert locs[0] == ID_TYPE
    assert r.type == Type(ID_TYPE.shape, cs(Loc(0)))
    assert r.use_set == cs(Loc(0))


def test_ill_typed_store():
    store = Store((IDENTITY,))
    with pytest.raises(StoreIllTyped):
        type_store({0: Type(TVar(0), EMPTY)}, store)
    with pytest.raises(StoreIllTyped):
        # a type lambda annotated with a term-function shape
        type_store({0: pure(FunDep(ID_TYPE, pure(TOP)))}, Store((TLam(TOP, Var(Loc(0))),)))
    with pytest.raises(StoreIllTyped):
        type_store({}, store)


# -- soundness driver -----------------------------------------------------------

def test_identity_application_report():
    t = parse_program((CORPUS / "03_apply_identity.capless").read_text())
    rep = check_soundness(t, name="03")
    assert rep.ok
    assert rep.termination_steps == 3
    assert [s.rule for s in rep.steps] == ["lift", "lift", "apply"]
    assert rep.counterexample is None


def test_ill_typed_program_is_rejected():
    with pytest.raises(CheckError):
        check_soundness(parse_program("fun (x: Top) => x[Top]"))


def test_stuck_config_is_reported():
    # a type application of a stored term lambda
    store = Store((IDENTITY,))
    rep = check_config(Config(store, TApp(Loc(0), TOP)), {0: ID_TYPE}, None, EMPTY, 10)
    assert not rep.progress_ok
    assert rep.counterexample is not None
    # the earliest failure is recorded: the configuration is already ill typed
    assert rep.counterexample["step"] == 0
    assert rep.steps == []


def test_fuel_exhaustion_is_reported():
    t = parse_program((CORPUS / "33_long_chain.capless").read_text())
    rep = check_soundness(t, fuel=2)
    assert not rep.termination_ok
    assert rep.counterexample["reason"] == "fuel exhausted"


def test_counterexample_iff_flag_false():
    for path in sorted(CORPUS.glob("*.capless"))[:6]:
        rep = check_soundness(parse_program(path.read_text()))
        assert rep.ok == (rep.counterexample is None)


def test_report_json():
    rep = check_soundness(Let(IDENTITY, Var(TermVar(0))), name="lift")
    d = rep.to_json()
    assert d["program"] == "lift" and d["steps"][0]["rule"] == "lift"
    assert '"lift"' in rep.dumps()


def test_monitor_accepts_lookup_in_use_set():
    # ℓ0 ℓ0 uses {ℓ0} verbatim
    rep = check_config(Config(Store((IDENTITY,)), App(Loc(0), Loc(0))), {0: ID_TYPE},
                       Type(ID_TYPE.shape, cs(Loc(0))), cs(Loc(0)))
    assert rep.monitor_ok and rep.ok


# -- generator --------------------------------------------------------------------

def test_size_zero_is_identity():
    assert gen_well_typed(7, 0) == IDENTITY


@pytest.mark.parametrize("seed", range(25))
def test_generated_programs_type_check(seed):
    synth(Context(), gen_well_typed(seed))


def test_generator_is_deterministic():
    assert gen_programs(3, 5) == gen_programs(3, 5)
    assert gen_well_typed(11) == gen_well_typed(11)


def test_generator_distribution(generated):
    kinds = collections.Counter()
    rules = collections.Counter()

    def walk(t):
        kinds[type(t).__name__] += 1
        for f in ("body", "bound"):
            sub = getattr(t, f, None)
            if sub is not None and type(sub).__name__ in TERM_KINDS:
                walk(sub)

    for t in generated:
        walk(t)
        rules.update(set(synth(Context(), t).trace.rules()))
    assert set(TERM_KINDS) <= set(kinds), kinds
    assert set(TYPING_RULES) <= set(rules), rules


TERM_KINDS = ("Var", "Lam", "TLam", "CLam", "Pack", "App", "TApp", "CApp", "Let", "LetEx")
