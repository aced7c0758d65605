"""Concrete syntax and class tables for the object calculus.

The surface language is a small Java-like notation: class declarations with
fields and methods, then a semicolon, then the main expression. Methods may
carry modifier and link-set annotations on the receiver and parameters;
omitted link sets are filled in later by inference.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Optional

from coeffect_lab.algebra import Coeffect, FreshCounter, Link, RES_LABEL

MODIFIERS = ("mut", "read", "imm", "caps")
KEYWORDS = frozenset({"class", "new", "int", "res"}) | frozenset(MODIFIERS)


class LangError(Exception):
    """Base for user-facing errors; carries an optional source position."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.message = message
        self.line = line
        self.col = col

    def format(self, filename: str = "<input>") -> str:
        if self.line is None:
            return f"{filename}: {self.message}"
        return f"{filename}:{self.line}:{self.col}: {self.message}"


class ParseError(LangError):
    pass


class TableError(LangError):
    pass


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class PrimType:
    name: str = "int"

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ClassType:
    name: str
    mod: str = "mut"

    def __str__(self) -> str:
        if self.mod == "mut":
            return self.name
        return f"{self.mod} {self.name}"


Type = PrimType | ClassType

INT = PrimType()


def is_prim(t: Type) -> bool:
    return isinstance(t, PrimType)


def base_equal(a: Type, b: Type) -> bool:
    """Type equality up to modifiers (what the sharing-only checker sees)."""
    if isinstance(a, PrimType) and isinstance(b, PrimType):
        return a.name == b.name
    if isinstance(a, ClassType) and isinstance(b, ClassType):
        return a.name == b.name
    return False


def with_mod(t: Type, mod: str) -> Type:
    if isinstance(t, ClassType):
        return ClassType(t.name, mod)
    return t


# ---------------------------------------------------------------------------
# expressions


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class FieldAccess:
    target: "Expr"
    field: str


@dataclass(frozen=True)
class FieldAssign:
    target: "Expr"
    field: str
    value: "Expr"


@dataclass(frozen=True)
class New:
    cname: str
    args: tuple


@dataclass(frozen=True)
class Invoke:
    target: "Expr"
    method: str
    args: tuple


@dataclass(frozen=True)
class Block:
    """A local binding ``{T x = init; body}``.

    decl_type None marks sequencing sugar: the binder was invented by the
    parser (its name starts with ``%`` and cannot occur in source) and the
    declared type is taken to be whatever the initializer has.
    """

    decl_type: Optional[Type]
    var: str
    init: "Expr"
    body: "Expr"


Expr = Var | Const | FieldAccess | FieldAssign | New | Invoke | Block


def free_vars(e: Expr) -> frozenset:
    if isinstance(e, Var):
        return frozenset({e.name})
    if isinstance(e, Const):
        return frozenset()
    if isinstance(e, FieldAccess):
        return free_vars(e.target)
    if isinstance(e, FieldAssign):
        return free_vars(e.target) | free_vars(e.value)
    if isinstance(e, New):
        return frozenset().union(*[free_vars(a) for a in e.args]) if e.args else frozenset()
    if isinstance(e, Invoke):
        out = free_vars(e.target)
        for a in e.args:
            out |= free_vars(a)
        return out
    if isinstance(e, Block):
        return free_vars(e.init) | (free_vars(e.body) - {e.var})
    raise TypeError(f"not an expression: {e!r}")


def is_value(e: Expr) -> bool:
    return isinstance(e, (Var, Const))


# ---------------------------------------------------------------------------
# declarations


@dataclass(frozen=True)
class FieldDecl:
    type: Type
    name: str


@dataclass(frozen=True)
class Param:
    type: Type
    coeff: Optional[Coeffect]
    name: str


@dataclass(frozen=True)
class MethodDecl:
    ret: Type
    name: str
    recv_mod: str
    recv_coeff: Optional[Coeffect]
    params: tuple
    body: Expr


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: tuple
    methods: tuple


@dataclass(frozen=True)
class MethodSig:
    """What a call site needs to know: receiver modifier and link set,
    parameter types and link sets, return type."""

    recv_mod: str
    recv_coeff: Optional[Coeffect]
    params: tuple  # of (name, Type, Coeffect | None)
    ret: Type

    def coeffs(self) -> list:
        return [self.recv_coeff] + [c for _, _, c in self.params]

    def is_annotated(self) -> bool:
        return all(c is not None for c in self.coeffs())


@dataclass(frozen=True)
class Program:
    classes: tuple
    main: Expr


class ClassTable:
    """Validated class declarations with field and method lookup."""

    def __init__(self, classes: Iterable[ClassDecl]):
        self._classes: dict[str, ClassDecl] = {}
        for c in classes:
            if c.name in self._classes:
                raise TableError(f"duplicate class {c.name}")
            self._classes[c.name] = c
        self._validate()

    def _validate(self) -> None:
        for c in self._classes.values():
            seen_fields: set = set()
            for f in c.fields:
                if f.name in seen_fields:
                    raise TableError(f"duplicate field {c.name}.{f.name}")
                seen_fields.add(f.name)
                self._check_type(f.type, f"field {c.name}.{f.name}")
            seen_methods: set = set()
            for m in c.methods:
                if m.name in seen_methods:
                    raise TableError(f"duplicate method {c.name}.{m.name}")
                seen_methods.add(m.name)
                self._check_type(m.ret, f"return of {c.name}.{m.name}")
                seen_params: set = set()
                for p in m.params:
                    if p.name in seen_params or p.name == "this":
                        raise TableError(
                            f"duplicate parameter {p.name} in {c.name}.{m.name}"
                        )
                    seen_params.add(p.name)
                    self._check_type(p.type, f"parameter {p.name} of {c.name}.{m.name}")

    def _check_type(self, t: Type, where: str) -> None:
        if isinstance(t, ClassType) and t.name not in self._classes:
            raise TableError(f"unknown class {t.name} in {where}")

    def class_names(self) -> tuple:
        return tuple(self._classes)

    def has_class(self, name: str) -> bool:
        return name in self._classes

    def decl(self, name: str) -> ClassDecl:
        if name not in self._classes:
            raise TableError(f"unknown class {name}")
        return self._classes[name]

    def fields(self, cname: str) -> tuple:
        return self.decl(cname).fields

    def field(self, cname: str, fname: str) -> FieldDecl:
        for f in self.fields(cname):
            if f.name == fname:
                return f
        raise TableError(f"class {cname} has no field {fname}")

    def field_index(self, cname: str, fname: str) -> int:
        for i, f in enumerate(self.fields(cname)):
            if f.name == fname:
                return i
        raise TableError(f"class {cname} has no field {fname}")

    def methods(self, cname: str) -> tuple:
        return self.decl(cname).methods

    def method(self, cname: str, mname: str) -> MethodDecl:
        for m in self.methods(cname):
            if m.name == mname:
                return m
        raise TableError(f"class {cname} has no method {mname}")

    def mtype(self, cname: str, mname: str) -> MethodSig:
        m = self.method(cname, mname)
        return MethodSig(
            recv_mod=m.recv_mod,
            recv_coeff=m.recv_coeff,
            params=tuple((p.name, p.type, p.coeff) for p in m.params),
            ret=m.ret,
        )

    def mbody(self, cname: str, mname: str):
        m = self.method(cname, mname)
        return tuple(p.name for p in m.params), m.body

    def with_method_coeffs(self, updates: dict) -> "ClassTable":
        """A copy of the table with (class, method) -> MethodSig coeffects
        installed; used after signature inference."""
        out = []
        for c in self._classes.values():
            methods = []
            for m in c.methods:
                key = (c.name, m.name)
                if key in updates:
                    sig = updates[key]
                    params = tuple(
                        replace(p, coeff=sc)
                        for p, (_, _, sc) in zip(m.params, sig.params)
                    )
                    m = replace(m, recv_coeff=sig.recv_coeff, params=params)
                methods.append(m)
            out.append(replace(c, methods=tuple(methods)))
        return ClassTable(out)


def alpha_fresh_sig(sig: MethodSig, counter: FreshCounter) -> MethodSig:
    """Rename every non-res link in a signature to a fresh machine link,
    consistently across the receiver and all parameters."""
    mapping: dict[Link, Link] = {}

    def rename(c: Optional[Coeffect]) -> Optional[Coeffect]:
        if c is None:
            return None
        out = set()
        for lk in c.links:
            if lk.is_res():
                out.add(lk)
            else:
                if lk not in mapping:
                    mapping[lk] = counter.link()
                out.add(mapping[lk])
        return Coeffect(frozenset(out))

    return MethodSig(
        recv_mod=sig.recv_mod,
        recv_coeff=rename(sig.recv_coeff),
        params=tuple((n, t, rename(c)) for n, t, c in sig.params),
        ret=sig.ret,
    )


# ---------------------------------------------------------------------------
# lexer


_PUNCT = {".", ",", ";", "(", ")", "{", "}", "[", "]", "^", "="}


@dataclass(frozen=True)
class Token:
    kind: str  # 'id', 'int', 'kw', punct itself, 'eof'
    text: str
    line: int
    col: int


def _lex(src: str) -> list:
    toks = []
    line, col = 1, 1
    i, n = 0, len(src)
    while i < n:
        ch = src[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if src.startswith("//", i):
            while i < n and src[i] != "\n":
                i += 1
            continue
        start_col = col
        if ch.isdigit():
            j = i
            while j < n and src[j].isdigit():
                j += 1
            toks.append(Token("int", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            word = src[i:j]
            kind = "kw" if word in KEYWORDS else "id"
            toks.append(Token(kind, word, line, start_col))
            col += j - i
            i = j
            continue
        if ch in _PUNCT:
            toks.append(Token(ch, ch, line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line, col)
    toks.append(Token("eof", "", line, col))
    return toks


# ---------------------------------------------------------------------------
# parser


class _Parser:
    def __init__(self, src: str):
        self.toks = _lex(src)
        self.i = 0
        self.seq = 0  # generated binder names for sequencing sugar
        self.class_refs: list = []  # (name, line, col) to validate at the end

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def expect(self, kind: str, what: str | None = None) -> Token:
        t = self.peek()
        if t.kind != kind:
            want = what or f"'{kind}'"
            raise ParseError(f"expected {want}, found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.advance()

    def expect_kw(self, word: str) -> Token:
        t = self.peek()
        if t.kind != "kw" or t.text != word:
            raise ParseError(f"expected '{word}', found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return self.advance()

    def at_kw(self, *words: str) -> bool:
        t = self.peek()
        return t.kind == "kw" and t.text in words

    # ---- program

    def parse_program(self) -> Program:
        classes = []
        while self.at_kw("class"):
            classes.append(self.parse_class())
        if self.peek().kind == ";":
            self.advance()
        elif classes:
            t = self.peek()
            raise ParseError("expected ';' between class declarations and the "
                             "main expression", t.line, t.col)
        main = self.parse_expr()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col)
        prog = Program(tuple(classes), main)
        self._check_class_refs({c.name for c in classes})
        return prog

    def parse_expr_only(self) -> Expr:
        e = self.parse_expr()
        t = self.peek()
        if t.kind != "eof":
            raise ParseError(f"unexpected trailing input {t.text!r}", t.line, t.col)
        return e

    def _check_class_refs(self, declared: set) -> None:
        for name, line, col in self.class_refs:
            if name not in declared:
                raise ParseError(f"unknown class {name}", line, col)

    # ---- declarations

    def parse_class(self) -> ClassDecl:
        self.expect_kw("class")
        name_tok = self.expect("id", "class name")
        self.expect("{")
        fields: list = []
        methods: list = []
        while self.peek().kind != "}":
            self.parse_member(fields, methods, name_tok.text)
        self.expect("}")
        return ClassDecl(name_tok.text, tuple(fields), tuple(methods))

    def parse_member(self, fields: list, methods: list, cname: str) -> None:
        mod_tok = None
        if self.at_kw(*MODIFIERS):
            mod_tok = self.advance()
        type_ = self.parse_base_type()
        name_tok = self.expect("id", "member name")
        nxt = self.peek()
        if nxt.kind == ";":
            self.advance()
            if methods:
                raise ParseError("field declared after a method", name_tok.line,
                                 name_tok.col)
            fields.append(self._make_field(mod_tok, type_, name_tok))
        elif nxt.kind in ("[", "("):
            if mod_tok is not None:
                type_ = self._apply_mod(mod_tok, type_)
            methods.append(self.parse_method_rest(type_, name_tok))
        else:
            raise ParseError("expected ';' or a method signature after member name",
                             nxt.line, nxt.col)

    def _make_field(self, mod_tok, type_, name_tok) -> FieldDecl:
        if isinstance(type_, PrimType):
            if mod_tok is not None:
                raise ParseError("modifier on a primitive field", mod_tok.line,
                                 mod_tok.col)
            return FieldDecl(type_, name_tok.text)
        mod = mod_tok.text if mod_tok is not None else "mut"
        if mod not in ("mut", "imm"):
            raise ParseError(f"field modifier must be mut or imm, not {mod}",
                             mod_tok.line, mod_tok.col)
        return FieldDecl(ClassType(type_.name, mod), name_tok.text)

    def _apply_mod(self, mod_tok, type_) -> Type:
        if isinstance(type_, PrimType):
            raise ParseError("modifier on a primitive type", mod_tok.line, mod_tok.col)
        return ClassType(type_.name, mod_tok.text)

    def parse_method_rest(self, ret: Type, name_tok) -> MethodDecl:
        recv_mod = "mut"
        recv_coeff = None
        if self.peek().kind == "[":
            self.advance()
            if self.at_kw(*MODIFIERS):
                recv_mod = self.advance().text
            if self.peek().kind == "^":
                self.advance()
                recv_coeff = self.parse_coeff()
            self.expect("]")
        self.expect("(")
        params: list = []
        if self.peek().kind != ")":
            params.append(self.parse_param())
            while self.peek().kind == ",":
                self.advance()
                params.append(self.parse_param())
        self.expect(")")
        body_open = self.expect("{")
        body = self.parse_block_rest(body_open)
        return MethodDecl(ret, name_tok.text, recv_mod, recv_coeff, tuple(params), body)

    def parse_param(self) -> Param:
        mod_tok = None
        if self.at_kw(*MODIFIERS):
            mod_tok = self.advance()
        type_ = self.parse_base_type()
        if mod_tok is not None:
            type_ = self._apply_mod(mod_tok, type_)
        coeff = None
        if self.peek().kind == "^":
            self.advance()
            coeff = self.parse_coeff()
        name_tok = self.expect("id", "parameter name")
        return Param(type_, coeff, name_tok.text)

    def parse_base_type(self) -> Type:
        t = self.peek()
        if t.kind == "kw" and t.text == "int":
            self.advance()
            return INT
        if t.kind == "id":
            self.advance()
            self.class_refs.append((t.text, t.line, t.col))
            return ClassType(t.text)
        raise ParseError(f"expected a type, found {t.text or 'end of input'!r}",
                         t.line, t.col)

    def parse_coeff(self) -> Coeffect:
        self.expect("{")
        links: set = set()
        if self.peek().kind != "}":
            links.add(self.parse_link())
            while self.peek().kind == ",":
                self.advance()
                links.add(self.parse_link())
        self.expect("}")
        return Coeffect(frozenset(links))

    def parse_link(self) -> Link:
        t = self.peek()
        if t.kind == "kw" and t.text == "res":
            self.advance()
            return Link(RES_LABEL)
        if t.kind == "id":
            self.advance()
            return Link(t.text)
        raise ParseError(f"expected a link, found {t.text or 'end of input'!r}",
                         t.line, t.col)

    # ---- expressions

    def parse_expr(self) -> Expr:
        left = self.parse_postfix()
        if self.peek().kind == "=":
            eq = self.advance()
            if not isinstance(left, FieldAccess):
                raise ParseError("only a field access can be assigned", eq.line, eq.col)
            value = self.parse_expr()
            return FieldAssign(left.target, left.field, value)
        return left

    def parse_postfix(self) -> Expr:
        e = self.parse_primary()
        while self.peek().kind == ".":
            self.advance()
            name_tok = self.expect("id", "field or method name")
            if self.peek().kind == "(":
                self.advance()
                args = self.parse_args()
                e = Invoke(e, name_tok.text, args)
            else:
                e = FieldAccess(e, name_tok.text)
        return e

    def parse_args(self) -> tuple:
        args: list = []
        if self.peek().kind != ")":
            args.append(self.parse_expr())
            while self.peek().kind == ",":
                self.advance()
                args.append(self.parse_expr())
        self.expect(")")
        return tuple(args)

    def parse_primary(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.advance()
            return Const(int(t.text))
        if t.kind == "kw" and t.text == "new":
            self.advance()
            name_tok = self.expect("id", "class name")
            self.class_refs.append((name_tok.text, name_tok.line, name_tok.col))
            self.expect("(")
            args = self.parse_args()
            return New(name_tok.text, args)
        if t.kind == "id":
            self.advance()
            return Var(t.text)
        if t.kind == "{":
            open_tok = self.advance()
            return self.parse_block_rest(open_tok)
        raise ParseError(f"expected an expression, found {t.text or 'end of input'!r}",
                         t.line, t.col)

    def parse_block_rest(self, open_tok) -> Expr:
        """Parse items after '{', desugaring sequencing to unused binders."""
        items: list = []  # ('decl', type, name, init) | ('expr', e)
        items.append(self.parse_block_item())
        while self.peek().kind == ";":
            self.advance()
            items.append(self.parse_block_item())
        self.expect("}")
        last = items[-1]
        if last[0] != "expr":
            raise ParseError("a block must end with an expression",
                             open_tok.line, open_tok.col)
        acc = last[1]
        for item in reversed(items[:-1]):
            if item[0] == "decl":
                _, type_, name, init = item
                acc = Block(type_, name, init, acc)
            else:
                binder = f"%s{self.seq}"
                self.seq += 1
                acc = Block(None, binder, item[1], acc)
        return acc

    def parse_block_item(self):
        t = self.peek()
        if self.at_kw(*MODIFIERS) or self.at_kw("int") or (
            t.kind == "id" and self.peek(1).kind == "id"
        ):
            mod_tok = None
            if self.at_kw(*MODIFIERS):
                mod_tok = self.advance()
            type_ = self.parse_base_type()
            if mod_tok is not None:
                type_ = self._apply_mod(mod_tok, type_)
            name_tok = self.expect("id", "variable name")
            self.expect("=")
            init = self.parse_expr()
            return ("decl", type_, name_tok.text, init)
        return ("expr", self.parse_expr())


def parse(source: str) -> Program:
    """Parse a full program: class declarations, ';', main expression."""
    return _Parser(source).parse_program()


def parse_expr(source: str) -> Expr:
    """Parse a bare expression (used by tests and the lambda-free REPL paths)."""
    return _Parser(source).parse_expr_only()


def table_of(program: Program) -> ClassTable:
    return ClassTable(program.classes)


# ---------------------------------------------------------------------------
# pretty printer


def pretty_type(t: Optional[Type]) -> str:
    if t is None:
        return "<inferred>"
    return str(t)


def pretty_coeff(c: Coeffect) -> str:
    return "{" + ", ".join(c.sorted_labels()) + "}"


def pretty(e: Expr) -> str:
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return str(e.value)
    if isinstance(e, FieldAccess):
        return f"{pretty(e.target)}.{e.field}"
    if isinstance(e, FieldAssign):
        return f"{pretty(e.target)}.{e.field} = {pretty(e.value)}"
    if isinstance(e, New):
        return f"new {e.cname}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Invoke):
        return f"{pretty(e.target)}.{e.method}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Block):
        return "{" + "; ".join(_block_items(e)) + "}"
    raise TypeError(f"not an expression: {e!r}")


def _block_items(e: Expr) -> list:
    items: list = []
    while isinstance(e, Block):
        if e.decl_type is None and e.var.startswith("%"):
            items.append(pretty(e.init))
        else:
            ty = pretty_type(e.decl_type)
            items.append(f"{ty} {e.var} = {pretty(e.init)}")
        e = e.body
    items.append(pretty(e))
    return items


def pretty_method(m: MethodDecl) -> str:
    annot = ""
    if m.recv_mod != "mut" or m.recv_coeff is not None:
        inner = "" if m.recv_mod == "mut" else m.recv_mod
        if m.recv_coeff is not None:
            inner += f"^{pretty_coeff(m.recv_coeff)}"
        annot = f" [{inner}]"
    params = ", ".join(
        f"{p.type}{'^' + pretty_coeff(p.coeff) if p.coeff is not None else ''} {p.name}"
        for p in m.params
    )
    body = pretty(m.body)
    if not body.startswith("{"):
        body = "{" + body + "}"
    return f"{m.ret} {m.name}{annot} ({params}) {body}"


def pretty_class(c: ClassDecl) -> str:
    parts = [f"class {c.name} {{"]
    for f in c.fields:
        parts.append(f"  {f.type} {f.name};")
    for m in c.methods:
        parts.append(f"  {pretty_method(m)}")
    parts.append("}")
    return "\n".join(parts)


def pretty_program(p: Program) -> str:
    out = [pretty_class(c) for c in p.classes]
    out.append(";")
    out.append(pretty(p.main))
    return "\n".join(out)
