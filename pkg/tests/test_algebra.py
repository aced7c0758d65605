"""Semiring, module and closure laws, checked against table and saturation
oracles and by bulk randomized sampling."""

from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from coeffect_lab.algebra import (
    LINKS,
    NAT,
    RES,
    SHARING_MODULE,
    ZOW,
    Coeffect,
    CoeffectCtx,
    FreshCounter,
    Link,
    UsageGrade,
    canonical_partition,
    close,
    closure_hom,
    ctx_links,
    ctx_scale,
    ctx_sum,
    fixpoint_module,
    link_scale,
    partitions_equal,
    restrict,
    sr_leq,
    sr_mul,
    sr_sum,
    structural_module,
)
from coeffect_lab._closure_py import closure_indexed as closure_pure

import oracles

N_LAW_SAMPLES = 10_000

GRADES = (UsageGrade.ZERO, UsageGrade.ONE, UsageGrade.OMEGA)
LABELS = ("res", "a", "b", "c", "#0", "#1", "#2", "#3")
VARS = ("u", "v", "w", "p", "q")


def s_zow(rng):
    return rng.choice(GRADES)


def s_nat(rng):
    return rng.randrange(0, 50)


def s_links(rng):
    return Coeffect.of_labels(*(lb for lb in LABELS if rng.random() < 0.4))


def s_map(rng, sample):
    return {x: sample(rng) for x in VARS if rng.random() < 0.6}


# ---------------------------------------------------------------------------
# grade tables


def test_zow_tables_match_oracle():
    for (sa, sb), want in oracles.ZOW_SUM.items():
        a, b = UsageGrade(sa), UsageGrade(sb)
        assert ZOW.sum(a, b) is UsageGrade(want)
    for (sa, sb), want in oracles.ZOW_MUL.items():
        a, b = UsageGrade(sa), UsageGrade(sb)
        assert ZOW.mul(a, b) is UsageGrade(want)
    for sa in "01w":
        for sb in "01w":
            a, b = UsageGrade(sa), UsageGrade(sb)
            assert ZOW.leq(a, b) == ((sa, sb) in oracles.ZOW_LEQ)
            assert ZOW.join(a, b) is UsageGrade(oracles.ZOW_JOIN[(sa, sb)])


def test_zow_one_plus_one_is_omega():
    assert ZOW.sum(UsageGrade.ONE, UsageGrade.ONE) is UsageGrade.OMEGA


def test_zow_zero_one_incomparable_join_is_top():
    assert not ZOW.leq(UsageGrade.ZERO, UsageGrade.ONE)
    assert not ZOW.leq(UsageGrade.ONE, UsageGrade.ZERO)
    assert ZOW.join(UsageGrade.ZERO, UsageGrade.ONE) is UsageGrade.OMEGA


def test_link_scale_matches_oracle_cases():
    res1 = Coeffect.res()
    x = Coeffect.of_labels("a", "b")
    y_res = Coeffect.of_labels("res", "c")
    y_plain = Coeffect.of_labels("c", "d")
    assert link_scale(Coeffect.empty(), y_res) == Coeffect.empty()
    assert link_scale(x, y_plain) == y_plain
    assert link_scale(x, y_res) == Coeffect.of_labels("a", "b", "c")
    assert link_scale(x, res1) == x


def test_link_scale_matches_oracle_bulk():
    rng = random.Random(11)
    for _ in range(N_LAW_SAMPLES):
        x, y = s_links(rng), s_links(rng)
        want = oracles.raw_scale(
            frozenset(x.sorted_labels()), frozenset(y.sorted_labels())
        )
        assert frozenset(link_scale(x, y).sorted_labels()) == want


# ---------------------------------------------------------------------------
# semiring laws


def assert_semiring_laws(spec, sample, seed, n=N_LAW_SAMPLES):
    rng = random.Random(seed)
    zero, one = spec.zero, spec.one
    for _ in range(n):
        a, b, c = sample(rng), sample(rng), sample(rng)
        # commutative monoid under +
        assert spec.sum(a, spec.sum(b, c)) == spec.sum(spec.sum(a, b), c)
        assert spec.sum(a, b) == spec.sum(b, a)
        assert spec.sum(a, zero) == a
        # monoid under * with annihilating zero
        assert spec.mul(a, spec.mul(b, c)) == spec.mul(spec.mul(a, b), c)
        assert spec.mul(a, one) == a
        assert spec.mul(one, a) == a
        assert spec.mul(a, zero) == zero
        assert spec.mul(zero, a) == zero
        # distributivity
        assert spec.mul(a, spec.sum(b, c)) == spec.sum(spec.mul(a, b), spec.mul(a, c))
        assert spec.mul(spec.sum(a, b), c) == spec.sum(spec.mul(a, c), spec.mul(b, c))
        # preorder: reflexive, transitive on a comparable chain
        assert spec.leq(a, a)
        if spec.join is not None:
            up = spec.join(a, b)
            top = spec.join(up, c)
            assert spec.leq(a, up) and spec.leq(b, up)
            if spec.leq(a, up) and spec.leq(up, top):
                assert spec.leq(a, top)
            # operations are monotone along a <= up
            assert spec.leq(spec.sum(a, c), spec.sum(up, c))
            assert spec.leq(spec.mul(a, c), spec.mul(up, c))
            assert spec.leq(spec.mul(c, a), spec.mul(c, up))


def test_semiring_laws_zow():
    assert_semiring_laws(ZOW, s_zow, seed=1)


def test_semiring_laws_nat():
    assert_semiring_laws(NAT, s_nat, seed=2)


def test_semiring_laws_links():
    assert_semiring_laws(LINKS, s_links, seed=3)


def test_dispatching_ops_agree_with_spec_fields():
    rng = random.Random(4)
    for spec, sample in ((ZOW, s_zow), (NAT, s_nat), (LINKS, s_links)):
        for _ in range(500):
            a, b = sample(rng), sample(rng)
            assert sr_sum(a, b) == spec.sum(a, b)
            assert sr_mul(a, b) == spec.mul(a, b)
            assert sr_leq(a, b) == spec.leq(a, b)
    with pytest.raises(TypeError):
        sr_sum("a", "b")


def test_nat_contains_rejects_bool_and_negative():
    assert NAT.contains(3)
    assert not NAT.contains(True)
    assert not NAT.contains(-1)
    assert ZOW.contains(UsageGrade.ONE)
    assert not ZOW.contains(1)
    assert LINKS.contains(Coeffect.empty())


# ---------------------------------------------------------------------------
# module laws


def assert_module_laws(module, sample_scalar, seed, canon=None, n=N_LAW_SAMPLES):
    rng = random.Random(seed)
    spec = module.semiring
    canon = canon or (lambda m: {k: v for k, v in m.items() if v != spec.zero})
    for _ in range(n):
        m = canon(s_map(rng, lambda r: sample_scalar(r)))
        nmap = canon(s_map(rng, lambda r: sample_scalar(r)))
        k = canon(s_map(rng, lambda r: sample_scalar(r)))
        r, s = sample_scalar(rng), sample_scalar(rng)
        # commutative monoid
        assert module.sum(m, module.sum(nmap, k)) == module.sum(module.sum(m, nmap), k)
        assert module.sum(m, nmap) == module.sum(nmap, m)
        assert module.sum(m, module.zero()) == m
        # scaling
        assert module.scale(spec.one, m) == m
        assert module.scale(spec.zero, m) == module.zero()
        assert module.scale(r, module.zero()) == module.zero()
        assert module.scale(r, module.sum(m, nmap)) == module.sum(
            module.scale(r, m), module.scale(r, nmap)
        )
        assert module.scale(spec.sum(r, s), m) == module.sum(
            module.scale(r, m), module.scale(s, m)
        )
        assert module.scale(spec.mul(r, s), m) == module.scale(r, module.scale(s, m))
        # order: reflexive, pointwise
        assert module.leq(m, m)
        keys = set(m) | set(nmap)
        want = all(
            spec.leq(m.get(x, spec.zero), nmap.get(x, spec.zero)) for x in keys
        )
        assert module.leq(m, nmap) == want


def test_structural_module_laws_zow():
    assert_module_laws(structural_module(ZOW), s_zow, seed=5)


def test_structural_module_laws_nat():
    assert_module_laws(structural_module(NAT), s_nat, seed=6)


def test_structural_module_laws_links():
    assert_module_laws(structural_module(LINKS), s_links, seed=7)


def test_sharing_module_laws():
    # the closed-context module: structural link maps followed by saturation
    assert_module_laws(SHARING_MODULE, s_links, seed=8, canon=closure_hom)


def test_closure_hom_is_idempotent_and_lax():
    base = structural_module(LINKS)
    rng = random.Random(9)
    for _ in range(N_LAW_SAMPLES):
        m = s_map(rng, s_links)
        nmap = s_map(rng, s_links)
        r = s_links(rng)
        cm = closure_hom(m)
        assert closure_hom(cm) == cm
        # closing after a raw operation equals the fixpoint-module operation
        # on the closed arguments
        assert closure_hom(base.sum(m, nmap)) == SHARING_MODULE.sum(
            closure_hom(m), closure_hom(nmap)
        )
        assert closure_hom(base.scale(r, m)) == SHARING_MODULE.scale(r, cm)


def test_fixpoint_module_over_identity_is_structural():
    base = structural_module(NAT)
    ident = fixpoint_module(base, lambda m: m)
    rng = random.Random(10)
    for _ in range(200):
        m, nmap = s_map(rng, s_nat), s_map(rng, s_nat)
        assert ident.sum(m, nmap) == base.sum(m, nmap)
        assert ident.scale(3, m) == base.scale(3, m)


# ---------------------------------------------------------------------------
# closure


def _ctx(mapping):
    return CoeffectCtx({x: Coeffect.of_labels(*ls) for x, ls in mapping.items()})


def _as_labels(ctx):
    return {x: frozenset(c.sorted_labels()) for x, c in ctx.items()}


def test_close_matches_saturation_oracle():
    rng = random.Random(12)
    for _ in range(N_LAW_SAMPLES):
        raw = {x: frozenset(c.sorted_labels()) for x, c in s_map(rng, s_links).items()}
        got = _as_labels(close(CoeffectCtx(
            {x: Coeffect.of_labels(*ls) for x, ls in raw.items()}
        )))
        assert got == oracles.saturate(raw)


def test_close_golden():
    ctx = _ctx({"x": ("a", "b"), "y": ("b", "c"), "z": ("d",), "e": ()})
    got = close(ctx)
    assert got.get("x") == Coeffect.of_labels("a", "b", "c")
    assert got.get("y") == Coeffect.of_labels("a", "b", "c")
    assert got.get("z") == Coeffect.of_labels("d")
    assert got.get("e") == Coeffect.empty()
    assert "e" in got  # empty entries keep the domain
    assert got.closed


def test_close_produces_equal_or_disjoint():
    rng = random.Random(13)
    for _ in range(2000):
        ctx = close(CoeffectCtx(s_map(rng, s_links)))
        assert oracles.equal_or_disjoint(_as_labels(ctx))


def test_close_is_extensive_and_idempotent():
    rng = random.Random(14)
    for _ in range(2000):
        ctx = CoeffectCtx(s_map(rng, s_links))
        closed = close(ctx)
        for x, c in ctx.items():
            assert c.subset_of(closed.get(x))
        assert close(closed) is closed  # already-closed contexts short-circuit


def test_ctx_sum_is_close_of_pointwise_union():
    rng = random.Random(15)
    for _ in range(2000):
        a = CoeffectCtx(s_map(rng, s_links))
        b = CoeffectCtx(s_map(rng, s_links))
        raw = dict(a.mapping())
        for x, c in b.mapping().items():
            raw[x] = raw[x].union(c) if x in raw else c
        assert ctx_sum(a, b) == close(CoeffectCtx(raw))
        assert ctx_sum(a, b) == ctx_sum(b, a)


def test_ctx_scale_is_close_of_pointwise_product():
    rng = random.Random(16)
    for _ in range(2000):
        a = CoeffectCtx(s_map(rng, s_links))
        x = s_links(rng)
        raw = {v: link_scale(x, c) for v, c in a.mapping().items()}
        assert ctx_scale(x, a) == close(CoeffectCtx(raw))


def test_kernels_agree():
    rng = random.Random(17)
    try:
        from coeffect_lab._closure_cy import closure_indexed as closure_compiled
    except ImportError:
        pytest.skip("compiled kernel not built")
    for _ in range(2000):
        n_links = rng.randrange(0, 12)
        sets = [
            sorted(rng.sample(range(n_links), rng.randrange(0, n_links + 1)))
            for _ in range(rng.randrange(0, 8))
        ] if n_links else [[] for _ in range(rng.randrange(0, 4))]
        a = [sorted(row) for row in closure_pure([list(s) for s in sets], n_links)]
        b = [sorted(row) for row in closure_compiled([list(s) for s in sets], n_links)]
        assert a == b


def test_pure_kernel_golden():
    out = closure_pure([[0, 1], [1, 2], [3], []], 4)
    assert [sorted(r) for r in out] == [[0, 1, 2], [0, 1, 2], [3], []]


# ---------------------------------------------------------------------------
# restriction


def test_restrict_matches_oracle():
    rng = random.Random(18)
    for _ in range(2000):
        ctx = CoeffectCtx(s_map(rng, s_links))
        keep_vars = {x for x in VARS if rng.random() < 0.5}
        keep_links = frozenset(
            Link(lb) for lb in LABELS if rng.random() < 0.5
        )
        got = _as_labels(restrict(ctx, keep_vars, keep_links))
        want = oracles.raw_restrict(
            _as_labels(ctx), keep_vars, frozenset(lk.label for lk in keep_links)
        )
        assert got == want


def test_restriction_of_sum_is_extensive():
    # one half holds for arbitrary contexts: summing and restricting back
    # never loses any of the original links
    rng = random.Random(19)
    for _ in range(2000):
        gamma = close(CoeffectCtx(s_map(rng, s_links)))
        delta = close(CoeffectCtx(s_map(rng, s_links)))
        back = restrict(ctx_sum(gamma, delta), gamma.domain(), ctx_links(gamma))
        for x in gamma.domain():
            assert gamma.get(x).subset_of(back.get(x))


def _compatible_extension(rng, gamma, tag):
    """New sharing that respects gamma's classes: each added coeffect touches
    at most one whole class of gamma, everything else is fresh. Along a
    reduction this is the only shape new sharing can take, because a typing
    already merges anything that could ever alias."""
    classes = []
    seen = set()
    for x in gamma.domain():
        links = frozenset(gamma.get(x).links)
        if links and links not in seen:
            seen.add(links)
            classes.append(links)
    out = {}
    for i, x in enumerate(VARS + ("extra1", "extra2")):
        if rng.random() < 0.5:
            continue
        if x in gamma:
            # a variable the old context already constrains can only repeat
            # its own class; anything else would claim sharing the old
            # typing ruled out
            own = frozenset(gamma.get(x).links)
            base = set(own) if own and rng.random() < 0.7 else set()
        else:
            base = set(rng.choice(classes)) if classes and rng.random() < 0.6 else set()
        fresh = {Link(f"${tag}.{i}.{j}") for j in range(rng.randrange(0, 3))}
        out[x] = Coeffect(frozenset(base | fresh))
    return close(CoeffectCtx(out))


def test_restriction_recovers_compatible_summand():
    # the algebraic heart of type preservation: adding class-respecting new
    # sharing and restricting to the old variables and links changes nothing
    rng = random.Random(20)
    for _ in range(2000):
        gamma = close(CoeffectCtx(s_map(rng, s_links)))
        delta = _compatible_extension(rng, gamma, "d")
        total = ctx_sum(gamma, delta)
        back = restrict(total, gamma.domain(), ctx_links(gamma))
        assert back == gamma, (gamma, delta, total, back)


@given(st.data())
def test_restriction_recovers_compatible_summand_hypothesis(data):
    def coeff():
        return st.sets(st.sampled_from(LABELS), max_size=5).map(
            lambda ls: Coeffect.of_labels(*ls)
        )

    gamma = data.draw(
        st.dictionaries(st.sampled_from(VARS), coeff(), max_size=5).map(
            lambda m: close(CoeffectCtx(m))
        )
    )
    seed = data.draw(st.integers(0, 2**16))
    delta = _compatible_extension(random.Random(seed), gamma, "h")
    total = ctx_sum(gamma, delta)
    assert restrict(total, gamma.domain(), ctx_links(gamma)) == gamma


# ---------------------------------------------------------------------------
# canonical forms


def test_canonical_partition_groups_and_res():
    ctx = _ctx({"x": ("a",), "y": ("a",), "z1": ("res", "b"), "z2": ("res", "b")})
    assert canonical_partition(ctx) == (
        (("x", "y"), False),
        (("z1", "z2"), True),
    )


def test_canonical_partition_drops_private_links():
    # a variable alone on a fresh link is canonically the same as one with
    # no links at all
    a = _ctx({"x": ("#9",), "y": ()})
    b = _ctx({"x": (), "y": ()})
    assert canonical_partition(a) == canonical_partition(b) == (
        (("x",), False),
        (("y",), False),
    )
    # unless the private link is res
    c = _ctx({"x": ("res",)})
    assert canonical_partition(c) == ((("x",), True),)


def test_partitions_equal_ignores_link_identity():
    a = _ctx({"x": ("#0",), "y": ("#0",)})
    b = _ctx({"x": ("#5",), "y": ("#5",)})
    c = _ctx({"x": ("#5",), "y": ("#6",)})
    assert partitions_equal(a, b)
    assert not partitions_equal(a, c)


# ---------------------------------------------------------------------------
# contexts and counters


def test_ctx_equality_ignores_explicit_empties():
    a = CoeffectCtx({"x": Coeffect.of_labels("a"), "y": Coeffect.empty()})
    b = CoeffectCtx({"x": Coeffect.of_labels("a")})
    assert a == b
    assert a.domain() == ("x", "y")
    assert b.domain() == ("x",)


def test_ctx_without():
    a = CoeffectCtx({"x": Coeffect.of_labels("a"), "y": Coeffect.of_labels("b")})
    assert a.without("x").domain() == ("y",)
    assert a.without("zz") is a


def test_fresh_counter_streams_are_deterministic_and_disjoint():
    c1, c2 = FreshCounter(), FreshCounter()
    assert [str(c1.link()) for _ in range(3)] == ["#0", "#1", "#2"]
    assert [str(c2.link()) for _ in range(3)] == ["#0", "#1", "#2"]
    assert c1.ref() == "r0"
    assert c1.ref(taken=("r1", "r2")) == "r3"
    assert c1.seal_id() == 0 and c1.seal_id() == 1
    assert c1.name().startswith("%")


def test_res_is_not_machine():
    assert Link(RES.label).is_res()
    assert not RES.is_machine()
    assert Link("#0").is_machine()
