"""The graded λ-calculus demo: parsing, grading under cbn/cbv, and the
usage-counting property on linear terms."""

from __future__ import annotations

import operator
import random

import pytest

from coeffect_lab.algebra import NAT, SemiringSpec, UsageGrade, ZOW
from coeffect_lab.corpus import LAM_DISCARD, LAM_VAR
from coeffect_lab.lambda_demo import (
    Abs,
    App,
    Fun,
    INT_T,
    LVar,
    LambdaError,
    Num,
    demo_judgment,
    linfer,
    lsub,
    lterm_free_vars,
    occurrences,
    parse_grade,
    parse_lterm,
    show_term,
    show_type,
)

import oracles


# ---------------------------------------------------------------------------
# the headline judgment: a discarded argument


def test_discard_cbn_zow():
    out = demo_judgment(LAM_DISCARD, ZOW, cbv=False)
    assert out["type"] == "int"
    assert out["context"] == {"y": "0"}
    assert out["semiring"] == "zow"
    assert out["cbv"] is False


def test_discard_cbv_zow():
    out = demo_judgment(LAM_DISCARD, ZOW, cbv=True)
    assert out["context"] == {"y": "w"}
    assert out["cbv"] is True


def test_discard_cbv_nat():
    out = demo_judgment(LAM_DISCARD, NAT, cbv=True)
    assert out["context"] == {"y": "1"}


def test_discard_cbn_nat():
    out = demo_judgment(LAM_DISCARD, NAT, cbv=False)
    assert out["context"] == {"y": "0"}


def test_variable_costs_one():
    for spec in (ZOW, NAT):
        for cbv in (False, True):
            out = demo_judgment(LAM_VAR, spec, cbv=cbv)
            assert out["context"] == {"x": "1"}
            assert out["type"] == "int"


def test_closed_term_has_empty_context():
    out = demo_judgment("(\\x:int. x) 3", ZOW)
    assert out["context"] == {}
    assert out["type"] == "int"


def test_duplicating_term_is_omega():
    # x used twice: 1 + 1 saturates in zow, counts in nat
    env = {"g": Fun(INT_T, UsageGrade.ONE, Fun(INT_T, UsageGrade.ONE, INT_T)),
           "x": INT_T}
    _, ctx = linfer(parse_lterm("g x x", ZOW), env, ZOW)
    assert ctx == {"g": UsageGrade.ONE, "x": UsageGrade.OMEGA}
    nenv = {"g": Fun(INT_T, 1, Fun(INT_T, 1, INT_T)), "x": INT_T}
    _, nctx = linfer(parse_lterm("g x x", NAT), nenv, NAT)
    assert nctx == {"g": 1, "x": 2}


def test_arrow_grade_scales_argument():
    # a function that promises two uses charges its argument twice
    src = "\\g:int -2> int. g y"
    _, ctx = linfer(parse_lterm(src, NAT), {"y": INT_T}, NAT)
    assert ctx == {"y": 2}


# ---------------------------------------------------------------------------
# syntax


def test_parse_shapes():
    t = parse_lterm(LAM_DISCARD, ZOW)
    assert t == App(Abs("x", INT_T, Num(5)), LVar("y"))
    ty = parse_lterm("\\f:int -1> int. f 3", ZOW).ty
    assert ty == Fun(INT_T, UsageGrade.ONE, INT_T)


def test_application_is_left_associative():
    t = parse_lterm("f a b", NAT)
    assert t == App(App(LVar("f"), LVar("a")), LVar("b"))


def test_show_round_trips():
    for src in (
        "5",
        "x",
        "(\\x:int. 5) y",
        "\\x:int. x",
        "\\f:int -1> int. f 3",
        "\\f:(int -0> int) -1> int. 2",
        "f a b",
        "f (a b)",
        "(\\x:int. x) (\\y:int. y)",
    ):
        t = parse_lterm(src, ZOW)
        assert show_term(t) == src
        assert parse_lterm(show_term(t), ZOW) == t


def test_arrow_types_right_associate():
    ty = parse_lterm("\\f:int -1> int -0> int. 9", ZOW).ty
    assert ty == Fun(INT_T, UsageGrade.ONE, Fun(INT_T, UsageGrade.ZERO, INT_T))
    assert show_type(ty) == "int -1> int -0> int"


def test_nat_grades_in_arrows():
    ty = parse_lterm("\\f:int -7> int. 0", NAT).ty
    assert ty.grade == 7


def test_grade_parsing_is_semiring_specific():
    assert parse_grade("w", ZOW) == UsageGrade.OMEGA
    assert parse_grade("3", NAT) == 3
    with pytest.raises(LambdaError):
        parse_grade("3", ZOW)
    with pytest.raises(LambdaError):
        parse_grade("w", NAT)


def test_free_vars():
    t = parse_lterm("(\\x:int. x y) z", ZOW)
    assert lterm_free_vars(t) == {"y", "z"}


# ---------------------------------------------------------------------------
# errors


def test_int_is_not_a_term():
    with pytest.raises(LambdaError):
        parse_lterm("int 3", ZOW)


def test_unbound_variable():
    with pytest.raises(LambdaError) as exc:
        linfer(LVar("q"), {}, ZOW)
    assert "q" in str(exc.value)


def test_cannot_apply_a_number():
    with pytest.raises(LambdaError) as exc:
        linfer(parse_lterm("5 3", ZOW), {}, ZOW)
    assert "cannot apply" in str(exc.value)


def test_argument_type_mismatch():
    with pytest.raises(LambdaError) as exc:
        linfer(parse_lterm("(\\x:int. x) (\\y:int. y)", ZOW), {}, ZOW)
    assert "int -1> int" in str(exc.value)


def test_tokenizer_rejects_junk():
    with pytest.raises(LambdaError):
        parse_lterm("\\x:int. $", ZOW)


def test_trailing_input_rejected():
    with pytest.raises(LambdaError):
        parse_lterm("x )", ZOW)


def test_cbv_needs_a_join():
    nojoin = SemiringSpec(
        name="nat-nojoin",
        zero=0,
        one=1,
        sum=operator.add,
        mul=operator.mul,
        leq=operator.le,
        join=None,
        contains=lambda v: isinstance(v, int) and v >= 0,
    )
    t = parse_lterm(LAM_DISCARD, nojoin)
    linfer(t, {"y": INT_T}, nojoin, cbv=False)
    with pytest.raises(LambdaError) as exc:
        linfer(t, {"y": INT_T}, nojoin, cbv=True)
    assert "join" in str(exc.value)


# ---------------------------------------------------------------------------
# the resource order


def test_lsub_zow():
    one = {"x": UsageGrade.ONE}
    assert lsub(ZOW, one, {"x": UsageGrade.OMEGA})
    assert not lsub(ZOW, one, {"x": UsageGrade.ZERO})
    assert not lsub(ZOW, {"x": UsageGrade.ZERO}, one)
    # absent entries read as zero on either side
    assert lsub(ZOW, {}, {"x": UsageGrade.ZERO})
    assert lsub(ZOW, {"x": UsageGrade.ZERO}, {})
    assert not lsub(ZOW, one, {})


def test_lsub_nat():
    assert lsub(NAT, {"x": 2}, {"x": 3})
    assert not lsub(NAT, {"x": 3}, {"x": 2})
    assert lsub(NAT, {}, {"y": 5})


# ---------------------------------------------------------------------------
# grades count occurrences on linear terms


_FRESH = iter(range(10**6))


def _gen_linear(rng: random.Random, depth: int, names: tuple):
    """An int-typed term whose internal binders each occur exactly once."""
    if depth <= 0 or rng.random() < 0.3:
        if rng.random() < 0.75:
            return LVar(rng.choice(names))
        return Num(rng.randrange(5))
    u = f"b{next(_FRESH)}"
    body = _gen_hole(rng, depth - 1, names, u)
    arg = _gen_linear(rng, depth - 1, names)
    return App(Abs(u, INT_T, body), arg)


def _gen_hole(rng: random.Random, depth: int, names: tuple, v: str):
    """An int-typed term containing v exactly once, all binders linear."""
    if depth <= 0 or rng.random() < 0.4:
        return LVar(v)
    u = f"b{next(_FRESH)}"
    body = _gen_hole(rng, depth - 1, names, u)
    return App(Abs(u, INT_T, body), _gen_hole(rng, depth - 1, names, v))


def test_nat_grades_count_occurrences_on_linear_terms():
    names = ("x", "y", "z")
    env = {n: INT_T for n in names}
    rng = random.Random(7)
    for _ in range(300):
        t = _gen_linear(rng, rng.randint(1, 5), names)
        ty, ctx = linfer(t, env, NAT)
        assert ty == INT_T
        for n in names:
            want = oracles.count_occurrences(t, n)
            assert ctx.get(n, 0) == want
            assert occurrences(t, n) == want


def test_zow_grades_collapse_occurrence_counts():
    names = ("x", "y")
    env = {n: INT_T for n in names}
    rng = random.Random(11)
    for _ in range(300):
        t = _gen_linear(rng, rng.randint(1, 5), names)
        _, ctx = linfer(t, env, ZOW)
        for n in names:
            count = oracles.count_occurrences(t, n)
            got = ctx.get(n, UsageGrade.ZERO)
            if count == 0:
                assert got == UsageGrade.ZERO
            elif count == 1:
                assert got == UsageGrade.ONE
            else:
                assert got == UsageGrade.OMEGA


def test_type_strings_agree_across_semirings():
    for src in ("\\x:int. x", "(\\x:int. 5) y", "\\f:int -1> int. f 3"):
        zow_t, _ = linfer(parse_lterm(src, ZOW),
                          {x: INT_T for x in lterm_free_vars(parse_lterm(src, ZOW))},
                          ZOW)
        nat_t, _ = linfer(parse_lterm(src, NAT),
                          {x: INT_T for x in lterm_free_vars(parse_lterm(src, NAT))},
                          NAT)
        assert show_type(zow_t) == show_type(nat_t)
