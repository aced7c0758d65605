"""Parser, printer, class tables and signature handling."""

from __future__ import annotations

import pytest

from coeffect_lab.algebra import Coeffect, FreshCounter, canonical_partition
from coeffect_lab.corpus import (
    BASE_CLASSES,
    CALL_CLASSES,
    E0_PROGRAM,
    MIX_CLASSES,
    MIX_CLASSES_MOD,
    PROGRAMS,
)
from coeffect_lab.harness import gen_config
from coeffect_lab.lang import (
    Block,
    ClassType,
    Const,
    FieldAccess,
    FieldAssign,
    INT,
    Invoke,
    LangError,
    New,
    ParseError,
    TableError,
    Var,
    alpha_fresh_sig,
    base_equal,
    free_vars,
    is_prim,
    is_value,
    parse,
    parse_expr,
    pretty,
    pretty_program,
    pretty_type,
    table_of,
    with_mod,
)


# ---------------------------------------------------------------------------
# parsing shapes


def test_parse_expr_shapes():
    e = parse_expr("x.f1 = y")
    assert isinstance(e, FieldAssign) and e.field == "f1"
    assert isinstance(e.target, Var) and isinstance(e.value, Var)

    e = parse_expr("new C(z1, z2)")
    assert isinstance(e, New) and e.cname == "C" and len(e.args) == 2

    e = parse_expr("x.m(a, b).f")
    assert isinstance(e, FieldAccess)
    assert isinstance(e.target, Invoke) and e.target.method == "m"

    e = parse_expr("{ B z = new B(0); z }")
    assert isinstance(e, Block) and e.var == "z"
    assert e.decl_type == ClassType("B")
    assert isinstance(e.body, Var)

    assert parse_expr("42") == Const(42)


def test_sequencing_sugar_desugars_to_blocks():
    e = parse_expr("{ x.f1 = y; new C(z1, z2) }")
    # a sequence is a block binding a throwaway variable with no declared
    # type; the binder cannot be written in source, so it cannot capture
    assert isinstance(e, Block)
    assert e.decl_type is None
    assert e.var.startswith("%")
    assert e.var not in free_vars(e.body)


def test_modifier_declarations_parse():
    e = parse_expr("{ caps A c = new A(new B(0)); c }")
    assert isinstance(e, Block)
    assert e.decl_type == ClassType("A", "caps")
    e = parse_expr("{ read A r = a1; r }")
    assert e.decl_type == ClassType("A", "read")


def test_modifier_on_primitive_rejected():
    with pytest.raises(LangError):
        parse_expr("{ imm int n = 5; n }")


def test_annotated_method_headers_parse():
    table = table_of(parse(MIX_CLASSES + ";\n0"))
    sig = table.mtype("A", "mix")
    assert sig.recv_coeff == Coeffect.res()
    assert sig.params[0][2] == Coeffect.res()
    assert sig.is_annotated()

    sig = table.mtype("A", "clone")
    assert sig.recv_coeff == Coeffect.of_labels("l")
    assert sig.ret == ClassType("A")

    table = table_of(parse(MIX_CLASSES_MOD + ";\n0"))
    assert table.mtype("A", "clone").recv_mod == "read"
    assert table.mtype("A", "mix").recv_mod == "mut"


def test_unannotated_methods_have_no_coeffs():
    src = "class B { int f; B id (B x) { x } };\n0"
    sig = table_of(parse(src)).mtype("B", "id")
    assert sig.recv_coeff is None
    assert sig.params[0][2] is None
    assert not sig.is_annotated()


def test_call_golden_table_shape():
    table = table_of(parse(CALL_CLASSES + ";\n0"))
    sig = table.mtype("C", "m")
    assert [n for n, _, _ in sig.params] == ["y", "z1", "z2"]
    assert sig.params[0][2] == Coeffect.of_labels("l")
    assert sig.params[1][2] == Coeffect.res()


# ---------------------------------------------------------------------------
# printing round trips


@pytest.mark.parametrize("name", sorted(PROGRAMS))
def test_program_round_trip(name):
    p = parse(PROGRAMS[name])
    assert parse(pretty_program(p)) == p


def test_expr_round_trip_on_corpus():
    for src in (
        "x",
        "5",
        "x.f1",
        "x.f1 = y",
        "new C(new B(0), z)",
        "x.m(a, b)",
        "{ B z = new B(2); x.f1 = y; new C(z, z) }",
        "{ caps A c = { A a2 = new A(new B(1)); a2 }; c }",
    ):
        e = parse_expr(src)
        assert parse_expr(pretty(e)) == e


def test_generated_programs_round_trip():
    for seed in range(30):
        table, e, _mem, _pins = gen_config(seed, allow_caps=seed % 2 == 0)
        assert parse_expr(pretty(e)) == e


def test_pretty_type_forms():
    assert pretty_type(INT) == "int"
    assert pretty_type(ClassType("C")) == "C"
    assert pretty_type(ClassType("C", "imm")) == "imm C"


# ---------------------------------------------------------------------------
# diagnostics


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as exc:
        parse("class B { int f; }\n;\nnew B(")
    assert exc.value.line is not None
    assert "3" in exc.value.format("f")


def test_table_errors():
    with pytest.raises(TableError):
        table_of(parse("class B { int f; int f; };\n0"))
    with pytest.raises(TableError):
        table_of(parse("class B { int f; }\nclass B { int g; };\n0"))
    with pytest.raises(TableError):
        table_of(parse("class B { int f; B m (B x, B x) { x } };\n0"))
    # references to undeclared classes are caught while parsing, with a
    # position
    with pytest.raises(ParseError) as exc:
        parse("class B { D f; };\n0")
    assert exc.value.line == 1


def test_keywords_are_not_identifiers():
    for kw in ("class", "new", "res", "mut", "read", "imm", "caps"):
        with pytest.raises(LangError):
            parse_expr(f"{kw}.f")


def test_error_format_without_position():
    err = LangError("boom")
    assert err.format("file") == "file: boom"


# ---------------------------------------------------------------------------
# helpers


def test_free_vars():
    e = parse_expr("{ B z = new B(0); x.f1 = z; y }")
    assert free_vars(e) == frozenset({"x", "y"})
    assert free_vars(parse_expr("5")) == frozenset()


def test_is_value():
    assert is_value(parse_expr("5"))
    assert is_value(parse_expr("x"))
    assert not is_value(parse_expr("x.f"))


def test_type_helpers():
    assert is_prim(INT) and not is_prim(ClassType("C"))
    assert base_equal(ClassType("C", "imm"), ClassType("C"))
    assert not base_equal(ClassType("C"), ClassType("B"))
    assert not base_equal(INT, ClassType("C"))
    assert with_mod(ClassType("C"), "caps") == ClassType("C", "caps")
    assert with_mod(INT, "caps") == INT


def test_alpha_fresh_sig_renames_consistently():
    table = table_of(parse(CALL_CLASSES + ";\n0"))
    sig = table.mtype("C", "m")
    counter = FreshCounter()
    fresh1 = alpha_fresh_sig(sig, counter)
    fresh2 = alpha_fresh_sig(sig, counter)
    # res survives, source links become machine links
    assert fresh1.params[1][2] == Coeffect.res()
    recv1 = fresh1.recv_coeff
    assert all(lk.is_machine() for lk in recv1.links)
    # the receiver and the first parameter shared l, so they share its image
    assert fresh1.recv_coeff == fresh1.params[0][2]
    # distinct instantiations use distinct links
    assert fresh1.recv_coeff != fresh2.recv_coeff
    # and renaming never changes the grouping structure
    def groups(s):
        ctx = {"this": s.recv_coeff}
        ctx.update({n: c for n, _, c in s.params})
        from coeffect_lab.algebra import CoeffectCtx

        return canonical_partition(CoeffectCtx(ctx))

    assert groups(fresh1) == groups(fresh2) == groups(sig)


def test_table_round_trip_preserves_main():
    p = parse(E0_PROGRAM)
    assert pretty(p.main) == "{B z = new B(2); x.f1 = y; new C(z, z)}"
    table = table_of(p)
    assert set(table.class_names()) == {"B", "C"}
    assert table.field("C", "f1").type == ClassType("B")
    assert table.field_index("C", "f2") == 1


def test_base_classes_are_method_free():
    table = table_of(parse(BASE_CLASSES + ";\n0"))
    assert table.methods("B") == ()
