"""Worked programs, memories and expected outcomes shared by the tests,
the harness and the CLI examples."""

from __future__ import annotations

from coeffect_lab.interp import Obj
from coeffect_lab.lang import ClassType

B_INT = ClassType("B")
C_MUT = ClassType("C")
A_MUT = ClassType("A")

# two plain classes; a block building a fresh pair while assigning through
# free variables
BASE_CLASSES = """\
class B { int f; }
class C { B f1; B f2; }
"""

# the two-assignment sequence whose judgment links x with y, and z1, z2
# with the result
STAR_EXPR = "{ x.f1 = y; new C(z1, z2) }"
STAR_ENV = {"x": C_MUT, "y": B_INT, "z1": B_INT, "z2": B_INT}

# the same sequence as a method body; the declared link sets expose which
# argument flows into the receiver and which into the result
CALL_CLASSES = """\
class B { int f; }
class C {
  B f1;
  B f2;
  C m [^{l}] (B ^{l} y, B ^{res} z1, B ^{res} z2) { this.f1 = y; new C(z1, z2) }
}
"""
# distinct arguments: {x, z} share, {y1, y2} share with the result
CALL_EXPR_DISTINCT = "x.m(z, y1, y2)"
CALL_ENV_DISTINCT = {"x": C_MUT, "z": B_INT, "y1": B_INT, "y2": B_INT}
# one variable fed to both a receiver-linked and a result-linked position
# drags everything into a single result-connected group
CALL_EXPR_SHARED = "x.m(z, z, y)"
CALL_ENV_SHARED = {"x": C_MUT, "z": B_INT, "y": B_INT}

E0_EXPR = "{ B z = new B(2); x.f1 = y; new C(z, z) }"
E0_ENV = {"x": C_MUT, "y": B_INT}
E0_PROGRAM = BASE_CLASSES + ";\n" + E0_EXPR

MU0 = {
    "x": Obj("C", ("x1", "x1")),
    "x1": Obj("B", (0,)),
    "y": Obj("B", (1,)),
}

# running E0_EXPR in MU0: five steps, two fresh references
E0_STEPS = 5
E0_RESULT = "r1"
E0_FINAL_MEM = {
    "x": Obj("C", ("y", "x1")),
    "x1": Obj("B", (0,)),
    "y": Obj("B", (1,)),
    "r0": Obj("B", (2,)),
    "r1": Obj("C", ("r0", "r0")),
}

# caps declaration fed by E0_EXPR; x and y stay lent
CAPS_E0_EXPR = "{ caps C es1 = { B z = new B(2); x.f1 = y; new C(z, z) }; es1 }"

# A/B with mix (links receiver, argument and result) and clone (fresh
# result), unannotated: link sets are inferred
MIX_CLASSES_PLAIN = """\
class B {
  int f;
  B clone() { new B(this.f) }
}
class A {
  B f;
  A mix(A a) { this.f = a.f; a }
  A clone() { new A(this.f.clone()) }
}
"""

# the same classes with declared link sets
MIX_CLASSES = """\
class B {
  int f;
  B clone [^{l}] () { new B(this.f) }
}
class A {
  B f;
  A mix [^{res}] (A ^{res} a) { this.f = a.f; a }
  A clone [^{l}] () { new A(this.f.clone()) }
}
"""

# and with modifiers: clone works on read receivers
MIX_CLASSES_MOD = """\
class B {
  int f;
  B clone [read^{l}] () { new B(this.f) }
}
class A {
  B f;
  A mix [^{res}] (A ^{res} a) { this.f = a.f; a }
  A clone [read^{l}] () { new A(this.f.clone()) }
}
"""

E1_EXPR = "{ A a2 = new A(new B(1)); a1.mix(a2).clone() }"
E2_EXPR = "{ A a2 = new A(new B(1)); a1.mix(a2).clone().mix(a2) }"
E1_ENV = {"a1": A_MUT}
E2_ENV = {"a1": A_MUT}

# a memory binding a1, for running E1/E2 dynamically
MIX_MEM = {
    "a1": Obj("A", ("b",)),
    "b": Obj("B", (0,)),
}

def _wrap_a1(body: str) -> str:
    return "{ A a1 = new A(new B(0)); " + body + " }"

CAPS_OK_EXPR = _wrap_a1("{ caps A mycaps = " + E1_EXPR + "; mycaps }")
CAPS_BAD_EXPR = _wrap_a1("{ caps A mycaps = " + E2_EXPR + "; mycaps }")
IMM_OK_EXPR = _wrap_a1("{ imm A frozen = " + E1_EXPR + "; frozen }")
IMM_BAD_EXPR = _wrap_a1("{ imm A frozen = " + E2_EXPR + "; frozen }")
READ_OK_EXPR = _wrap_a1("{ read A mycaps = " + E1_EXPR + "; mycaps }")
READ_ASSIGN_BAD_EXPR = _wrap_a1(
    "{ read A mycaps = " + E1_EXPR + "; mycaps.f.f = 3 }"
)
MUT_ASSIGN_OK_EXPR = _wrap_a1(
    "{ read A mycaps = " + E1_EXPR + "; a1.f.f = 3 }"
)
DOUBLE_USE_BAD_EXPR = _wrap_a1("{ caps A c = " + E1_EXPR + "; c.mix(c) }")

CAPS_OK_PROGRAM = MIX_CLASSES_MOD + ";\n" + CAPS_OK_EXPR
CAPS_BAD_PROGRAM = MIX_CLASSES_MOD + ";\n" + CAPS_BAD_EXPR

# nonMix copies an int across, so receiver and argument stay unlinked; a
# permissive checker accepts the caps block below, a coarser one cannot
NONMIX_CLASSES = """\
class B {
  int f;
  B clone [read^{l}] () { new B(this.f) }
}
class A {
  B f;
  A mix [^{res}] (A ^{res} a) { this.f = a.f; a }
  A clone [read^{l}] () { new A(this.f.clone()) }
  A nonMix [^{l}] (A ^{res} a) { this.f.f = a.f.f; a }
}
"""

CAPS_NONMIX_EXPR = _wrap_a1(
    "{ caps A mycaps = { A a2 = new A(new B(1)); a1.nonMix(a2) }; mycaps }"
)

# an imm field breaks the link between the stored value and the object
IMM_FIELD_CLASSES = """\
class B { int f; }
class Cimm { imm B f1; B f2; }
"""
IMM_FIELD_EXPR = "new Cimm(z1, z2).f1"
IMM_FIELD_ENV = {"z1": ClassType("B", "imm"), "z2": B_INT}

# λ demo: the argument of a discarding function is unused under
# call-by-name but evaluated under call-by-value
LAM_DISCARD = "(\\x:int. 5) y"
LAM_VAR = "x"

PROGRAMS = {
    "e0": E0_PROGRAM,
    "caps-e0": BASE_CLASSES + ";\n" + CAPS_E0_EXPR,
    "e1": MIX_CLASSES + ";\n" + E1_EXPR,
    "e2": MIX_CLASSES + ";\n" + E2_EXPR,
    "caps-ok": CAPS_OK_PROGRAM,
    "caps-bad": CAPS_BAD_PROGRAM,
    "imm-ok": MIX_CLASSES_MOD + ";\n" + IMM_OK_EXPR,
    "imm-bad": MIX_CLASSES_MOD + ";\n" + IMM_BAD_EXPR,
    "read-ok": MIX_CLASSES_MOD + ";\n" + READ_OK_EXPR,
    "read-assign-bad": MIX_CLASSES_MOD + ";\n" + READ_ASSIGN_BAD_EXPR,
    "double-use-bad": MIX_CLASSES_MOD + ";\n" + DOUBLE_USE_BAD_EXPR,
    "caps-nonmix": NONMIX_CLASSES + ";\n" + CAPS_NONMIX_EXPR,
}
