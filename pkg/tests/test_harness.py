"""The differential harness: step-retyping, capsule and immutability
verification against the running interpreter, generators, shrinking, and
report serialization."""

from __future__ import annotations

import xml.etree.ElementTree as ET

from coeffect_lab.algebra import FreshCounter
from coeffect_lab.corpus import BASE_CLASSES, E0_EXPR, MIX_MEM, MU0
from coeffect_lab.harness import (
    Report,
    coeffect_groups,
    corpus_configs,
    gen_config,
    gen_program,
    junit_xml,
    mutation_witness,
    oracle_groups,
    reports_json,
    run_capsule_suite,
    run_imm_suite,
    run_memory_suite,
    run_sr_suite,
    shrink_config,
    verify_capsule,
    verify_immutability,
    verify_subject_reduction,
)
from coeffect_lab.interp import Obj
from coeffect_lab.lang import (
    Block,
    ClassType,
    New,
    Const,
    Var,
    free_vars,
    parse,
    parse_expr,
    pretty_program,
    table_of,
)
from coeffect_lab.sharing import type_configuration, type_memory


def _base_table():
    return table_of(parse(BASE_CLASSES + "; 0"))


# ---------------------------------------------------------------------------
# subject reduction


def test_sr_holds_on_corpus():
    for label, table, e, mem, demand in corpus_configs():
        sharing = verify_subject_reduction(table, e, mem, mode="sharing",
                                           label=label)
        assert sharing.ok, (label, sharing.failures())
        mod = verify_subject_reduction(table, e, mem, mode="modifiers",
                                       demand=demand, label=label)
        assert mod.ok, (label, mod.failures())


def test_sr_report_names_each_step():
    table = _base_table()
    rep = verify_subject_reduction(table, parse_expr(E0_EXPR), MU0,
                                   label="e0")
    assert rep.ok
    # five reduction steps, one check per post-step configuration
    assert len(rep.results) == 5
    assert all(r.name.startswith("e0: step") for r in rep.results)


def test_sr_detects_stuck_configuration():
    table = _base_table()
    rep = verify_subject_reduction(table, parse_expr("q.f1"), {})
    assert not rep.ok
    assert "stuck" in rep.failures()[0].detail


def test_sr_untypeable_configuration_can_be_skipped():
    table = _base_table()
    mem = {"y": Obj("B", (1,))}
    # the caps binder is used twice, so no modifier typing exists
    e = parse_expr("{caps B c = y; new C(c, c)}")
    strict = verify_subject_reduction(table, e, mem, mode="modifiers")
    assert not strict.ok
    assert "initial typing" in strict.failures()[0].name
    lenient = verify_subject_reduction(table, e, mem, mode="modifiers",
                                       skip_untypeable=True)
    assert lenient.ok
    assert "skipped" in lenient.results[0].name


def test_sr_threads_demand_through_sealing():
    table = _base_table()
    rep = verify_subject_reduction(table, parse_expr(E0_EXPR), MU0,
                                   mode="modifiers",
                                   demand=ClassType("C", "caps"), label="e0")
    assert rep.ok, rep.failures()


# ---------------------------------------------------------------------------
# capsule and immutability


def test_verify_capsule_e0():
    table = _base_table()
    rep = verify_capsule(table, parse_expr(E0_EXPR), MU0, label="e0")
    assert rep.ok
    names = " | ".join(r.name for r in rep.results)
    assert "capsule=True" in names
    assert "lent x unrelated" in names


def test_verify_immutability_rejects_write_through_pin():
    configs = {label: (t, e, m) for label, t, e, m, _ in corpus_configs()}
    table, _, _ = configs["e1-mod"]
    mutate = parse_expr("a1.f.f = 3")
    rep = verify_immutability(table, mutate, MIX_MEM, "a1")
    assert not rep.ok
    assert "typing with a1 imm" in rep.failures()[0].name


def test_verify_immutability_catches_dynamic_change():
    configs = {label: (t, e, m) for label, t, e, m, _ in corpus_configs()}
    table, _, _ = configs["e1-mod"]
    mutate = parse_expr("a1.f.f = 3")
    rep = verify_immutability(table, mutate, MIX_MEM, "a1",
                              require_typed=False)
    assert not rep.ok
    assert "changed at step" in rep.failures()[0].detail


def test_mutation_witness():
    configs = {label: (t, e, m) for label, t, e, m, _ in corpus_configs()}
    table, _, _ = configs["e1-mod"]
    mutate = parse_expr("a1.f.f = 3")
    assert mutation_witness(table, mutate, MIX_MEM, "a1")
    assert mutation_witness(table, mutate, MIX_MEM, "b")
    mem = dict(MIX_MEM)
    mem["c"] = Obj("B", (9,))
    assert not mutation_witness(table, mutate, mem, "c")


# ---------------------------------------------------------------------------
# generators


def test_gen_config_is_deterministic():
    for seed in (0, 3, 11):
        t1, e1, m1, p1 = gen_config(seed, allow_caps=True)
        t2, e2, m2, p2 = gen_config(seed, allow_caps=True)
        assert e1 == e2
        assert m1 == m2
        assert p1 == p2
        assert pretty_program(gen_program(seed)) == pretty_program(gen_program(seed))
        assert sorted(t1.class_names()) == sorted(t2.class_names())


def test_generated_configs_type_under_sharing():
    for seed in range(30):
        table, e, mem, _ = gen_config(seed)
        j = type_configuration(table, e, mem, FreshCounter())
        assert j.type is not None


def test_generated_memories_cover_every_class():
    for seed in range(10):
        table, _, mem, pins = gen_config(seed)
        present = {mem[r].cname for r in mem}
        assert present == set(table.class_names())
        for r, mod in pins.items():
            assert r in mem and mod == "imm"


def test_shrink_config_drops_noise():
    table = _base_table()
    mem = {"m0": Obj("B", (1,)), "m1": Obj("B", (2,))}
    e = Block(ClassType("B"), "u", New("B", (Const(5),)),
              Block(ClassType("B"), "v", New("B", (Const(6),)), Var("m0")))

    def still_failing(_table, ex, m):
        return "m0" in free_vars(ex) and "m0" in m

    small_e, small_mem = shrink_config(table, e, mem, still_failing)
    assert small_e == Var("m0")
    assert set(small_mem) == {"m0"}


# ---------------------------------------------------------------------------
# partitions


def test_memory_partition_matches_graph_oracle():
    for src, mem in ((BASE_CLASSES, MU0),):
        table = table_of(parse(src + "; 0"))
        mt = type_memory(table, mem, FreshCounter())
        assert coeffect_groups(mt.ctx) == oracle_groups(mem)
    configs = {label: (t, e, m) for label, t, e, m, _ in corpus_configs()}
    table, _, _ = configs["e1"]
    mt = type_memory(table, MIX_MEM, FreshCounter())
    assert coeffect_groups(mt.ctx) == oracle_groups(MIX_MEM)


# ---------------------------------------------------------------------------
# suites


def test_memory_suite_small():
    rep = run_memory_suite(n_random=50, seed=1)
    assert rep.ok, rep.failures()


def test_sr_suite_small():
    rep = run_sr_suite(n_random=40, seed=1)
    assert rep.ok, rep.failures()


def test_capsule_suite_small_includes_negative_control():
    rep = run_capsule_suite(n_random=30, seed=1)
    assert rep.ok, rep.failures()
    names = [r.name for r in rep.results]
    assert "e2: a1 statically connected to the result" in names
    assert ("e2: sharing of a1 with the result observed at runtime"
            in names)


def test_imm_suite_small_includes_negative_control():
    rep = run_imm_suite(n_random=20, seed=1)
    assert rep.ok, rep.failures()
    names = [r.name for r in rep.results]
    assert ("e2 result pinned imm: mutation through a1 rejected statically"
            in names)
    assert ("e2 result pinned imm: mutation observed dynamically" in names)


def test_suites_are_deterministic():
    a = reports_json([run_capsule_suite(n_random=10, seed=3)])
    b = reports_json([run_capsule_suite(n_random=10, seed=3)])
    assert a == b


# ---------------------------------------------------------------------------
# report serialization


def test_reports_json_schema():
    rep = Report("demo")
    rep.add("fine", True)
    rep.add("broken", False, "why it broke")
    payload = reports_json([rep])
    assert payload["schema"] == "1"
    assert payload["ok"] is False
    (suite,) = payload["suites"]
    assert suite["suite"] == "demo"
    assert suite["passed"] == 1 and suite["failed"] == 1
    assert suite["failures"] == [{"name": "broken", "detail": "why it broke"}]


def test_junit_is_well_formed():
    rep = Report("demo")
    rep.add("fine", True)
    rep.add("broken", False, 'detail with "quotes" & <angles>')
    doc = ET.fromstring(junit_xml([rep]))
    assert doc.tag == "testsuites"
    (suite,) = list(doc)
    assert suite.get("name") == "demo"
    assert suite.get("tests") == "2"
    assert suite.get("failures") == "1"
    cases = {c.get("name"): c for c in suite}
    assert set(cases) == {"fine", "broken"}
    (failure,) = list(cases["broken"])
    assert failure.tag == "failure"
    assert failure.get("message") == 'detail with "quotes" & <angles>'
