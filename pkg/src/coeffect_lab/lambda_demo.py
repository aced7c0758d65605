"""A small graded λ-calculus over any scalar semiring.

Terms are numbers, variables, annotated abstractions and applications.
Inference grades every free variable: a variable occurrence costs one, an
application scales the argument's context by the grade on the function's
arrow (joined with one under call-by-value, where the argument is evaluated
even if never used). The same inference runs over the 0/1/ω usage semiring,
the natural numbers, or any other SemiringSpec.

Concrete syntax: ``\\x:T. t``, application by juxtaposition (left
associative), arrow types ``T -g> T`` with the grade spelled inside the
arrow (``0``, ``1``, ``w``, or a decimal).
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from coeffect_lab.algebra import NAT, SemiringSpec, UsageGrade, ZOW
from coeffect_lab.lang import LangError


class LambdaError(LangError):
    pass


# ---------------------------------------------------------------------------
# terms and types


@dataclass(frozen=True)
class Num:
    value: int


@dataclass(frozen=True)
class LVar:
    name: str


@dataclass(frozen=True)
class Abs:
    var: str
    ty: "LType"
    body: "LTerm"


@dataclass(frozen=True)
class App:
    fn: "LTerm"
    arg: "LTerm"


LTerm = object


@dataclass(frozen=True)
class TInt:
    pass


@dataclass(frozen=True)
class Fun:
    dom: "LType"
    grade: object
    cod: "LType"


LType = object

INT_T = TInt()


def show_grade(g) -> str:
    if isinstance(g, UsageGrade):
        return g.value
    return str(g)


def parse_grade(text: str, spec: SemiringSpec):
    if spec is ZOW or spec.name == ZOW.name:
        table = {"0": UsageGrade.ZERO, "1": UsageGrade.ONE, "w": UsageGrade.OMEGA}
        if text not in table:
            raise LambdaError(f"bad usage grade {text!r}, expected 0, 1 or w")
        return table[text]
    if not text.isdigit():
        raise LambdaError(f"bad natural-number grade {text!r}")
    return int(text)


def show_type(t: LType) -> str:
    if isinstance(t, TInt):
        return "int"
    dom = show_type(t.dom)
    if isinstance(t.dom, Fun):
        dom = f"({dom})"
    return f"{dom} -{show_grade(t.grade)}> {show_type(t.cod)}"


def show_term(t: LTerm) -> str:
    if isinstance(t, Num):
        return str(t.value)
    if isinstance(t, LVar):
        return t.name
    if isinstance(t, Abs):
        return f"\\{t.var}:{show_type(t.ty)}. {show_term(t.body)}"
    fn = show_term(t.fn)
    if isinstance(t.fn, Abs):
        fn = f"({fn})"
    arg = show_term(t.arg)
    if isinstance(t.arg, (Abs, App)):
        arg = f"({arg})"
    return f"{fn} {arg}"


def lterm_free_vars(t: LTerm) -> set:
    if isinstance(t, Num):
        return set()
    if isinstance(t, LVar):
        return {t.name}
    if isinstance(t, Abs):
        return lterm_free_vars(t.body) - {t.var}
    return lterm_free_vars(t.fn) | lterm_free_vars(t.arg)


# ---------------------------------------------------------------------------
# parser

_TOKEN = re.compile(
    r"""\s*(?:
        (?P<lam>\\)
      | (?P<lpar>\()
      | (?P<rpar>\))
      | (?P<colon>:)
      | (?P<dot>\.)
      | -(?P<grade>[0-9]+|w)>
      | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
      | (?P<num>[0-9]+)
    )""",
    re.VERBOSE,
)


def _tokenize(src: str) -> list:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == m.start():
            rest = src[pos:].lstrip()
            if not rest:
                break
            raise LambdaError(f"cannot tokenize near {rest[:12]!r}")
        pos = m.end()
        kind = m.lastgroup
        if kind is None:
            continue
        toks.append((kind, m.group(kind)))
    toks.append(("eof", ""))
    return toks


class _LParser:
    def __init__(self, toks: list, spec: SemiringSpec):
        self.toks = toks
        self.spec = spec
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self, kind: str) -> str:
        k, text = self.toks[self.i]
        if k != kind:
            raise LambdaError(f"expected {kind}, found {text or 'end of input'!r}")
        self.i += 1
        return text

    def parse_type(self) -> LType:
        left = self.parse_type_atom()
        if self.peek()[0] == "grade":
            g = parse_grade(self.take("grade"), self.spec)
            right = self.parse_type()
            return Fun(left, g, right)
        return left

    def parse_type_atom(self) -> LType:
        k, text = self.peek()
        if k == "name" and text == "int":
            self.take("name")
            return INT_T
        if k == "lpar":
            self.take("lpar")
            t = self.parse_type()
            self.take("rpar")
            return t
        raise LambdaError(f"expected a type, found {text!r}")

    def parse_term(self) -> LTerm:
        if self.peek()[0] == "lam":
            self.take("lam")
            var = self.take("name")
            self.take("colon")
            ty = self.parse_type()
            self.take("dot")
            return Abs(var, ty, self.parse_term())
        t = self.parse_atom()
        while self.peek()[0] in ("name", "num", "lpar"):
            t = App(t, self.parse_atom())
        return t

    def parse_atom(self) -> LTerm:
        k, text = self.peek()
        if k == "num":
            self.take("num")
            return Num(int(text))
        if k == "name":
            self.take("name")
            if text == "int":
                raise LambdaError("'int' is a type, not a term")
            return LVar(text)
        if k == "lpar":
            self.take("lpar")
            t = self.parse_term()
            self.take("rpar")
            return t
        raise LambdaError(f"expected a term, found {text or 'end of input'!r}")


def parse_lterm(src: str, spec: SemiringSpec) -> LTerm:
    p = _LParser(_tokenize(src), spec)
    t = p.parse_term()
    if p.peek()[0] != "eof":
        raise LambdaError(f"trailing input: {p.peek()[1]!r}")
    return t


# ---------------------------------------------------------------------------
# inference


def _ctx_add(spec: SemiringSpec, a: dict, b: dict) -> dict:
    out = dict(a)
    for x, g in b.items():
        out[x] = spec.sum(out[x], g) if x in out else g
    return out


def _ctx_scale(spec: SemiringSpec, c, a: dict) -> dict:
    return {x: spec.mul(c, g) for x, g in a.items()}


def linfer(term: LTerm, env: dict, spec: SemiringSpec, cbv: bool = False):
    """Infer (type, graded context) for a term.

    The context maps only the variables that occur; absent means grade 0.
    """
    if isinstance(term, Num):
        return INT_T, {}
    if isinstance(term, LVar):
        if term.name not in env:
            raise LambdaError(f"unbound variable {term.name}")
        return env[term.name], {term.name: spec.one}
    if isinstance(term, Abs):
        inner = dict(env)
        inner[term.var] = term.ty
        cod, ctx = linfer(term.body, inner, spec, cbv)
        grade = ctx.pop(term.var, spec.zero)
        return Fun(term.ty, grade, cod), ctx
    if isinstance(term, App):
        fty, fctx = linfer(term.fn, env, spec, cbv)
        if not isinstance(fty, Fun):
            raise LambdaError(
                f"cannot apply a term of type {show_type(fty)}"
            )
        aty, actx = linfer(term.arg, env, spec, cbv)
        if aty != fty.dom:
            raise LambdaError(
                f"argument has type {show_type(aty)}, "
                f"function wants {show_type(fty.dom)}"
            )
        factor = fty.grade
        if cbv:
            if spec.join is None:
                raise LambdaError(
                    f"semiring {spec.name} has no join, cbv needs one"
                )
            factor = spec.join(factor, spec.one)
        return fty.cod, _ctx_add(spec, fctx, _ctx_scale(spec, factor, actx))
    raise TypeError(f"not a term: {term!r}")


def lsub(spec: SemiringSpec, inferred: dict, target: dict) -> bool:
    """May a derivation with the inferred context be used at the target
    context? Pointwise scalar order, missing entries read as zero."""
    for x in set(inferred) | set(target):
        if not spec.leq(inferred.get(x, spec.zero), target.get(x, spec.zero)):
            return False
    return True


def occurrences(term: LTerm, name: str) -> int:
    """Syntactic count of free occurrences, the grade oracle for terms
    whose applications all scale by one."""
    if isinstance(term, Num):
        return 0
    if isinstance(term, LVar):
        return 1 if term.name == name else 0
    if isinstance(term, Abs):
        return 0 if term.var == name else occurrences(term.body, name)
    return occurrences(term.fn, name) + occurrences(term.arg, name)


def demo_judgment(src: str, spec: SemiringSpec, cbv: bool = False) -> dict:
    """Parse, type with free variables defaulted to int, and report a
    JSON-friendly summary."""
    term = parse_lterm(src, spec)
    env = {x: INT_T for x in sorted(lterm_free_vars(term))}
    ty, ctx = linfer(term, env, spec, cbv)
    grades = {x: show_grade(ctx.get(x, spec.zero)) for x in env}
    return {
        "term": show_term(term),
        "semiring": spec.name,
        "cbv": cbv,
        "type": show_type(ty),
        "context": grades,
    }


__all__ = [
    "Abs",
    "App",
    "Fun",
    "INT_T",
    "LVar",
    "LambdaError",
    "Num",
    "TInt",
    "demo_judgment",
    "linfer",
    "lsub",
    "lterm_free_vars",
    "occurrences",
    "parse_grade",
    "parse_lterm",
    "show_grade",
    "show_term",
    "show_type",
    "NAT",
    "ZOW",
]
