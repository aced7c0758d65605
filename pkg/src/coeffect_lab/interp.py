"""Reference small-step interpreter.

Configurations are an expression plus a memory of objects. Reduction is
deterministic: congruence descends leftmost-innermost (receiver before
arguments, arguments left to right, block initializer before body), and the
five computational rules fire at the redex. Allocation draws counter-fresh
reference names.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Mapping

from coeffect_lab.algebra import FreshCounter
from coeffect_lab.lang import (
    Block,
    ClassTable,
    Const,
    Expr,
    FieldAccess,
    FieldAssign,
    Invoke,
    New,
    TableError,
    Var,
    free_vars,
    is_value,
    pretty,
)


@dataclass(frozen=True)
class Obj:
    cname: str
    fields: tuple  # each entry an int or a reference name

    def replace_field(self, index: int, value) -> "Obj":
        out = list(self.fields)
        out[index] = value
        return Obj(self.cname, tuple(out))


Memory = dict  # reference name -> Obj


class StuckError(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass(frozen=True)
class Stepped:
    expr: Expr
    mem: Memory
    rule: str


@dataclass(frozen=True)
class Done:
    value: Expr


@dataclass(frozen=True)
class Stuck:
    reason: str


def wrap_value(v) -> Expr:
    return Var(v) if isinstance(v, str) else Const(v)


def unwrap_value(e: Expr):
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Const):
        return e.value
    raise ValueError(f"not a value: {e!r}")


def subst(e: Expr, mapping: Mapping[str, Expr], counter: FreshCounter) -> Expr:
    """Capture-avoiding substitution of values for variables."""
    if not mapping:
        return e
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Const):
        return e
    if isinstance(e, FieldAccess):
        return FieldAccess(subst(e.target, mapping, counter), e.field)
    if isinstance(e, FieldAssign):
        return FieldAssign(subst(e.target, mapping, counter), e.field,
                           subst(e.value, mapping, counter))
    if isinstance(e, New):
        return New(e.cname, tuple(subst(a, mapping, counter) for a in e.args))
    if isinstance(e, Invoke):
        return Invoke(subst(e.target, mapping, counter), e.method,
                      tuple(subst(a, mapping, counter) for a in e.args))
    if isinstance(e, Block):
        inner = {k: v for k, v in mapping.items() if k != e.var}
        var, body = e.var, e.body
        if any(var in free_vars(v) for v in inner.values()):
            var = counter.name()
            body = subst(body, {e.var: Var(var)}, counter)
        return Block(e.decl_type, var,
                     subst(e.init, mapping, counter),
                     subst(body, inner, counter))
    raise TypeError(f"not an expression: {e!r}")


def _deref(mem: Memory, e: Expr, what: str) -> str:
    if isinstance(e, Const):
        raise StuckError(f"{what} on an integer")
    assert isinstance(e, Var)
    if e.name not in mem:
        raise StuckError(f"{what} on unbound name {e.name}")
    return e.name


def _step(table: ClassTable, e: Expr, mem: Memory, counter: FreshCounter):
    if isinstance(e, FieldAccess):
        if not is_value(e.target):
            e2, mem2, rule = _step(table, e.target, mem, counter)
            return FieldAccess(e2, e.field), mem2, rule
        r = _deref(mem, e.target, "field access")
        obj = mem[r]
        try:
            idx = table.field_index(obj.cname, e.field)
        except TableError as exc:
            raise StuckError(str(exc)) from None
        return wrap_value(obj.fields[idx]), mem, "field-access"

    if isinstance(e, FieldAssign):
        if not is_value(e.target):
            e2, mem2, rule = _step(table, e.target, mem, counter)
            return FieldAssign(e2, e.field, e.value), mem2, rule
        if not is_value(e.value):
            e2, mem2, rule = _step(table, e.value, mem, counter)
            return FieldAssign(e.target, e.field, e2), mem2, rule
        r = _deref(mem, e.target, "field assignment")
        obj = mem[r]
        try:
            idx = table.field_index(obj.cname, e.field)
        except TableError as exc:
            raise StuckError(str(exc)) from None
        mem2 = dict(mem)
        mem2[r] = obj.replace_field(idx, unwrap_value(e.value))
        return e.value, mem2, "field-assign"

    if isinstance(e, New):
        for i, a in enumerate(e.args):
            if not is_value(a):
                a2, mem2, rule = _step(table, a, mem, counter)
                args = e.args[:i] + (a2,) + e.args[i + 1:]
                return New(e.cname, args), mem2, rule
        if not table.has_class(e.cname):
            raise StuckError(f"unknown class {e.cname}")
        if len(table.fields(e.cname)) != len(e.args):
            raise StuckError(f"wrong number of constructor arguments for {e.cname}")
        ref = counter.ref(taken=mem.keys())
        mem2 = dict(mem)
        mem2[ref] = Obj(e.cname, tuple(unwrap_value(a) for a in e.args))
        return Var(ref), mem2, "new"

    if isinstance(e, Invoke):
        if not is_value(e.target):
            e2, mem2, rule = _step(table, e.target, mem, counter)
            return Invoke(e2, e.method, e.args), mem2, rule
        for i, a in enumerate(e.args):
            if not is_value(a):
                a2, mem2, rule = _step(table, a, mem, counter)
                args = e.args[:i] + (a2,) + e.args[i + 1:]
                return Invoke(e.target, e.method, args), mem2, rule
        r = _deref(mem, e.target, "method call")
        obj = mem[r]
        try:
            params, body = table.mbody(obj.cname, e.method)
        except TableError as exc:
            raise StuckError(str(exc)) from None
        if len(params) != len(e.args):
            raise StuckError(f"wrong number of arguments for {obj.cname}.{e.method}")
        mapping = {"this": Var(r)}
        for p, a in zip(params, e.args):
            mapping[p] = a
        return subst(body, mapping, counter), mem, "invk"

    if isinstance(e, Block):
        if not is_value(e.init):
            e2, mem2, rule = _step(table, e.init, mem, counter)
            return Block(e.decl_type, e.var, e2, e.body), mem2, rule
        return subst(e.body, {e.var: e.init}, counter), mem, "block"

    raise TypeError(f"not reducible: {e!r}")


def step(table: ClassTable, e: Expr, mem: Memory, counter: FreshCounter):
    """One reduction step: Stepped, Done (e is a value), or Stuck."""
    if is_value(e):
        return Done(e)
    try:
        e2, mem2, rule = _step(table, e, mem, counter)
    except StuckError as exc:
        return Stuck(exc.reason)
    return Stepped(e2, mem2, rule)


@dataclass(frozen=True)
class TraceStep:
    index: int
    rule: str
    expr: str
    memory: dict

    def to_json(self) -> dict:
        return {"step": self.index, "rule": self.rule, "expr": self.expr,
                "memory": self.memory}


@dataclass
class RunResult:
    status: str  # "value" | "stuck" | "budget"
    expr: Expr
    mem: Memory
    steps: int
    reason: str | None = None
    trace: list = field(default_factory=list)


DEFAULT_BUDGET = 10**5


def reduce_star(table: ClassTable, e: Expr, mem: Memory, counter: FreshCounter,
                budget: int = DEFAULT_BUDGET, want_trace: bool = False) -> RunResult:
    """Reduce to a value, distinguishing a genuinely stuck configuration from
    an exhausted step budget."""
    steps = 0
    trace: list = []
    cur, curmem = e, dict(mem)
    while True:
        outcome = step(table, cur, curmem, counter)
        if isinstance(outcome, Done):
            return RunResult("value", cur, curmem, steps, trace=trace)
        if isinstance(outcome, Stuck):
            return RunResult("stuck", cur, curmem, steps, reason=outcome.reason,
                             trace=trace)
        steps += 1
        cur, curmem = outcome.expr, outcome.mem
        if want_trace:
            trace.append(TraceStep(steps, outcome.rule, pretty(cur),
                                   mem_to_json(curmem)))
        if steps >= budget:
            return RunResult("budget", cur, curmem, steps, trace=trace)


# ---------------------------------------------------------------------------
# heap structure


def ref_edges(mem: Memory):
    """All (holder, held) pairs where an object field stores a reference."""
    for r, obj in mem.items():
        for v in obj.fields:
            if isinstance(v, str):
                yield r, v


def reach(mem: Memory, root: str) -> frozenset:
    """References reachable from root through fields, root included."""
    seen = {root}
    frontier = [root]
    while frontier:
        r = frontier.pop()
        obj = mem.get(r)
        if obj is None:
            continue
        for v in obj.fields:
            if isinstance(v, str) and v not in seen:
                seen.add(v)
                frontier.append(v)
    return frozenset(seen)


def sharing_rel(mem: Memory) -> tuple:
    """The runtime sharing relation: connected components of the heap graph,
    ignoring edge direction. Returns a sorted tuple of frozensets."""
    parent = {r: r for r in mem}

    def find(r: str) -> str:
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    for a, b in ref_edges(mem):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    groups: dict = {}
    for r in mem:
        groups.setdefault(find(r), set()).add(r)
    return tuple(sorted((frozenset(g) for g in groups.values()),
                        key=lambda g: sorted(g)))


def related(mem: Memory, a: str, b: str) -> bool:
    for group in sharing_rel(mem):
        if a in group:
            return b in group
    return False


# ---------------------------------------------------------------------------
# memory (de)serialization


def mem_to_json(mem: Memory) -> dict:
    return {
        r: {"class": obj.cname, "fields": list(obj.fields)}
        for r, obj in sorted(mem.items())
    }


def mem_from_json(data: Mapping) -> Memory:
    mem: Memory = {}
    for r, entry in data.items():
        if not isinstance(entry, Mapping) or "class" not in entry:
            raise ValueError(f"memory entry {r} must be an object with a class")
        fields = entry.get("fields", [])
        for v in fields:
            if not isinstance(v, (str, int)) or isinstance(v, bool):
                raise ValueError(f"field value {v!r} of {r} must be an int or a reference")
        mem[r] = Obj(entry["class"], tuple(fields))
    for r, obj in mem.items():
        for v in obj.fields:
            if isinstance(v, str) and v not in mem:
                raise ValueError(f"dangling reference {v} in {r}")
    return mem


def load_memory(path: str) -> Memory:
    with open(path, "r", encoding="utf-8") as fh:
        return mem_from_json(json.load(fh))
