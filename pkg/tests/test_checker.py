"""Well-formedness, subcapturing, subtyping and use-set synthesis."""

import pytest

from capless.checker import (
    SUBCAPTURE_RULES, SUBTYPE_RULES, TYPING_RULES, CheckError, Context, check_against,
    sub_bound, subcapture, subcapture_derivation, subtype, subtype_derivation, synth, wf_captures,
    wf_type,
)
from capless.surface import parse_program, parse_type, print_type
from capless.syntax import (
    EMPTY, STAR, TOP, CaptVar, Exists, FunCap, FunDep, FunTyp, Pack, TermVar, TVar, Type, Var,
    cs, pure,
)

x = TermVar
c = CaptVar
ID_TYPE = pure(FunDep(pure(TOP), Type(TOP, cs(x(0)))))


def typ(src):
    return synth(Context(), parse_program(src))


# -- well-formedness ---------------------------------------------------------

def test_wf_capture_sets():
    assert wf_captures(Context(), EMPTY)
    assert wf_captures(Context().ext_term(pure(TOP)), cs(x(0)))
    assert not wf_captures(Context(), cs(c(0)))


def test_wf_types():
    assert wf_type(Context(), pure(TOP))
    assert wf_type(Context(), ID_TYPE)
    assert not wf_type(Context(), pure(TVar(0)))


# -- subcapturing --------------------------------------------------------------

def test_subcapture_var():
    ctx = Context().ext_capt(STAR).ext_term(Type(TOP, cs(c(0))))
    assert subcapture(ctx, cs(x(0)), cs(c(0)))
    d = subcapture_derivation(ctx, cs(x(0)), cs(c(0)))
    assert "sc-var" in set(d.rules())


def test_subcapture_empty():
    assert subcapture(Context(), EMPTY, EMPTY)


def test_subcapture_bound_chain():
    # c2 <: {}, c1 <: {c2}
    ctx = Context().ext_capt(EMPTY).ext_capt(cs(c(0)))
    assert subcapture(ctx, cs(c(0)), EMPTY)
    assert "sc-bound" in set(subcapture_derivation(ctx, cs(c(0)), EMPTY).rules())


def test_subcapture_star_bound_is_opaque():
    ctx = Context().ext_capt(STAR)
    assert not subcapture(ctx, cs(c(0)), EMPTY)
    assert subcapture(ctx, EMPTY, cs(c(0)))


def test_sub_bound():
    assert sub_bound(Context(), EMPTY, STAR)
    assert not sub_bound(Context(), STAR, EMPTY)
    ctx = Context().ext_capt(EMPTY).ext_capt(cs(c(0)))
    assert sub_bound(ctx, cs(c(0)), cs(c(1)))


# -- subtyping -------------------------------------------------------------------

def test_subtype_refl():
    assert subtype(Context(), ID_TYPE, ID_TYPE)


def test_subtype_tvar():
    ctx = Context().ext_type(TOP)
    assert subtype(ctx, TVar(0), TOP)
    assert not subtype(ctx, TOP, TVar(0))
    # top fires first against Top; a function bound needs (tvar)
    f = FunDep(pure(TOP), pure(TOP))
    ctx = Context().ext_type(f)
    assert "tvar" in set(subtype_derivation(ctx, TVar(0), f).rules())


def test_subtype_widening_to_top():
    ctx = Context().ext_term(pure(TOP))
    assert subtype(ctx, ID_TYPE, Type(TOP, cs(x(0))))
    # x: Top^{} so {x} <: {} by sc-var
    assert subtype(ctx, Type(TOP, cs(x(0))), pure(TOP))


def test_subtype_function_variance():
    wide = pure(FunDep(pure(TOP), pure(TOP)))
    narrow = pure(FunDep(ID_TYPE, pure(TOP)))
    assert subtype(Context(), wide, narrow)
    assert not subtype(Context(), narrow, wide)


def test_subtype_existentials():
    a = parse_type("exists c. Top^{}")
    b = parse_type("exists c. Top^{c}")
    assert subtype(Context(), a, b)
    assert not subtype(Context(), b, a)


def test_subtype_capture_function_bound():
    loose = pure(FunCap(STAR, pure(TOP)))
    tight = pure(FunCap(EMPTY, pure(TOP)))
    assert subtype(Context(), loose, tight)
    assert not subtype(Context(), tight, loose)


def test_subtype_type_function_bound():
    a = pure(FunTyp(TOP, pure(TOP)))
    b = pure(FunTyp(FunDep(pure(TOP), pure(TOP)), pure(TOP)))
    assert subtype(Context(), a, b)


# -- synthesis ------------------------------------------------------------------

def test_var_use_set():
    r = synth(Context().ext_term(pure(TOP)), Var(x(0)))
    assert r.use_set == cs(x(0))
    assert r.type == Type(TOP, cs(x(0)))


def test_identity_type():
    r = typ("fun (x: Top) => x")
    assert r.use_set == EMPTY
    assert r.type == ID_TYPE
    assert set(r.trace.rules()) >= {"var", "abs"}


def test_self_application_avoids_binder():
    # the binder-mentioning result Top^{x} is widened through the captures of x
    r = typ("let x = fun (y: Top) => y in x x")
    assert r.type == pure(TOP)
    assert "sub" in set(r.trace.rules())


def test_capture_polymorphism():
    r = typ("fun [c <: *] => fun (x: Top^{c}) => x")
    assert print_type(r.type) == "forall [c0 <: *] forall (x0: Top^{c0}) Top^{x0}"


def test_check_pack():
    ctx = Context().ext_term(pure(TOP)).ext_term(Type(TOP, cs(x(0))))
    r = check_against(ctx, Pack(cs(x(1)), x(0)), Exists(Type(TOP, cs(c(0)))))
    assert r.use_set == EMPTY


def test_check_against_var():
    ctx = Context().ext_term(pure(TOP))
    assert check_against(ctx, Var(x(0)), Type(TOP, cs(x(0)))).use_set == cs(x(0))


def test_check_against_mismatch():
    ctx = Context().ext_term(pure(TOP))
    with pytest.raises(CheckError) as e:
        check_against(ctx, Var(x(0)), pure(FunDep(pure(TOP), pure(TOP))))
    assert e.value.code == "subtype-failure"


MK = "let mk = fun [d <: *] => fun (x: Top^{d}) => <{d}, x> in "


@pytest.mark.parametrize("src, code", [
    ("fun (x: Top) => x[Top]", "not-a-function"),
    ("fun (x: Top) => x[{}]", "not-a-function"),
    ("fun [c <: *] => fun (f: (forall (y: Top) Top)^{c}) => f f", "argument-type-mismatch"),
    (MK + "fun (a: Top) => let m = mk[{a}] in let <c, y> = m a in y", "avoidance-failure"),
    (MK + "fun (a: Top) => let m = mk[{a}] in let <c, y> = m a in let z = y in fun (w: Top) => w",
     "avoidance-failure"),
    (MK + "fun (a: Top) => let m = mk[{a}] in let <c, y> = m a in fun (w: Top) => y",
     "avoidance-failure"),
])
def test_type_errors(src, code):
    with pytest.raises(CheckError) as e:
        typ(src)
    assert e.value.code == code


def test_unpacked_capture_in_parameter_is_dropped():
    r = typ(MK + "fun (a: Top) => let m = mk[{a}] in let <c, y> = m a in fun (w: Top^{c}) => w")
    assert print_type(r.type) == "forall (x0: Top) forall (x1: Top) Top^{x1}"


def test_pack_synthesis():
    r = typ("fun (x: Top) => <{}, x>")
    assert print_type(r.type) == "forall (x0: Top) exists c0. Top"


def test_rule_names_are_stable():
    assert len(TYPING_RULES) == 11
    assert len(SUBCAPTURE_RULES) == 5
    assert len(SUBTYPE_RULES) == 9
