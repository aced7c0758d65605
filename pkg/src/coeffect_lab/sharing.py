"""Sharing inference for the object calculus.

Every expression is typed bottom-up with a context mapping each used
variable to a set of links; variables with the same closed link set may
share mutable data, and the distinguished ``res`` link marks connection to
the expression's own result. Memory and whole configurations are typed the
same way, which is what the differential harness exercises.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from coeffect_lab.algebra import (
    Coeffect,
    CoeffectCtx,
    FreshCounter,
    Link,
    canonical_partition,
    ctx_links,
    ctx_scale,
    ctx_sum,
    restrict,
)
from coeffect_lab.lang import (
    Block,
    ClassTable,
    ClassType,
    Const,
    Expr,
    FieldAccess,
    FieldAssign,
    INT,
    Invoke,
    LangError,
    MethodSig,
    New,
    Type,
    Var,
    alpha_fresh_sig,
    base_equal,
    free_vars,
    is_prim,
)


class SharingError(LangError):
    """Type error in the sharing system."""


class CoherenceError(SharingError):
    """Missing or inconsistent method coeffect annotations."""


@dataclass(frozen=True)
class Judgment:
    ctx: CoeffectCtx
    type: Type
    rule: str
    children: tuple = ()


Env = Mapping[str, Type]


def _check_env(table: ClassTable, env: Env) -> None:
    for x, t in env.items():
        if isinstance(t, ClassType) and not table.has_class(t.name):
            raise SharingError(f"environment variable {x} has unknown class {t.name}")


def infer(table: ClassTable, env: Env, e: Expr, counter: FreshCounter) -> Judgment:
    """Infer the sharing judgment of an expression.

    The method signatures in the table must already carry link sets; run
    :func:`resolve_signatures` first for sources that omit them.
    """
    _check_env(table, env)
    return _infer(table, dict(env), e, counter)


def _prim_wrap(j: Judgment, counter: FreshCounter) -> Judgment:
    """Scale by a fresh link at every node of primitive type: a primitive
    result is a copy, so it severs sharing with the result link."""
    if not is_prim(j.type):
        return j
    scaled = ctx_scale(Coeffect.of(counter.link()), j.ctx)
    return Judgment(scaled, j.type, "t-prim", (j,))


def _class_of(table: ClassTable, t: Type, what: str) -> str:
    if not isinstance(t, ClassType):
        raise SharingError(f"{what} has primitive type, expected an object")
    return t.name


def _infer(table: ClassTable, env: dict, e: Expr, counter: FreshCounter) -> Judgment:
    if isinstance(e, Var):
        if e.name not in env:
            raise SharingError(f"unbound variable {e.name}")
        j = Judgment(CoeffectCtx.single(e.name, Coeffect.res()), env[e.name], "t-var")
        return _prim_wrap(j, counter)

    if isinstance(e, Const):
        j = Judgment(CoeffectCtx.empty(), INT, "t-const")
        return _prim_wrap(j, counter)

    if isinstance(e, FieldAccess):
        jt = _infer(table, env, e.target, counter)
        cname = _class_of(table, jt.type, "field access target")
        fd = table.field(cname, e.field)
        j = Judgment(jt.ctx, fd.type, "t-field-access", (jt,))
        return _prim_wrap(j, counter)

    if isinstance(e, FieldAssign):
        jt = _infer(table, env, e.target, counter)
        cname = _class_of(table, jt.type, "assignment target")
        fd = table.field(cname, e.field)
        jv = _infer(table, env, e.value, counter)
        if not base_equal(jv.type, fd.type):
            raise SharingError(
                f"cannot assign {jv.type} to field {cname}.{e.field} of type {fd.type}"
            )
        j = Judgment(ctx_sum(jt.ctx, jv.ctx), fd.type, "t-field-assign", (jt, jv))
        return _prim_wrap(j, counter)

    if isinstance(e, New):
        fds = table.fields(e.cname)
        if len(fds) != len(e.args):
            raise SharingError(
                f"new {e.cname} expects {len(fds)} arguments, got {len(e.args)}"
            )
        ctx = CoeffectCtx.empty()
        children = []
        for fd, arg in zip(fds, e.args):
            ja = _infer(table, env, arg, counter)
            if not base_equal(ja.type, fd.type):
                raise SharingError(
                    f"argument for {e.cname}.{fd.name} has type {ja.type}, "
                    f"expected {fd.type}"
                )
            children.append(ja)
            ctx = ctx_sum(ctx, ja.ctx)
        return Judgment(ctx, ClassType(e.cname), "t-new", tuple(children))

    if isinstance(e, Invoke):
        jt = _infer(table, env, e.target, counter)
        cname = _class_of(table, jt.type, "call receiver")
        sig = table.mtype(cname, e.method)
        if not sig.is_annotated():
            raise CoherenceError(
                f"method {cname}.{e.method} needs link annotations "
                "(recursive methods are not inferred)"
            )
        sig = alpha_fresh_sig(sig, counter)
        if len(sig.params) != len(e.args):
            raise SharingError(
                f"{cname}.{e.method} expects {len(sig.params)} arguments, "
                f"got {len(e.args)}"
            )
        scalar = sig.recv_coeff.union(Coeffect.of(counter.link()))
        ctx = ctx_scale(scalar, jt.ctx)
        children = [jt]
        for (pname, ptype, pcoeff), arg in zip(sig.params, e.args):
            ja = _infer(table, env, arg, counter)
            if not base_equal(ja.type, ptype):
                raise SharingError(
                    f"argument for parameter {pname} of {cname}.{e.method} has "
                    f"type {ja.type}, expected {ptype}"
                )
            children.append(ja)
            scalar = pcoeff.union(Coeffect.of(counter.link()))
            ctx = ctx_sum(ctx, ctx_scale(scalar, ja.ctx))
        j = Judgment(ctx, sig.ret, "t-invk", tuple(children))
        return _prim_wrap(j, counter)

    if isinstance(e, Block):
        ji = _infer(table, env, e.init, counter)
        declared = e.decl_type if e.decl_type is not None else ji.type
        if not base_equal(ji.type, declared):
            raise SharingError(
                f"initializer of {e.var} has type {ji.type}, declared {declared}"
            )
        inner = dict(env)
        inner[e.var] = declared
        jb = _infer(table, inner, e.body, counter)
        binder_coeff = jb.ctx.get(e.var)
        scalar = binder_coeff.union(Coeffect.of(counter.link()))
        ctx = ctx_sum(ctx_scale(scalar, ji.ctx), jb.ctx.without(e.var))
        j = Judgment(ctx, jb.type, "t-block", (ji, jb))
        return _prim_wrap(j, counter)

    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# signature resolution and method coherence


def _called_names(e: Expr) -> set:
    out: set = set()
    stack = [e]
    while stack:
        cur = stack.pop()
        if isinstance(cur, Invoke):
            out.add(cur.method)
            stack.append(cur.target)
            stack.extend(cur.args)
        elif isinstance(cur, FieldAccess):
            stack.append(cur.target)
        elif isinstance(cur, FieldAssign):
            stack.append(cur.target)
            stack.append(cur.value)
        elif isinstance(cur, New):
            stack.extend(cur.args)
        elif isinstance(cur, Block):
            stack.append(cur.init)
            stack.append(cur.body)
    return out


def _method_env(table: ClassTable, cname: str, mname: str) -> dict:
    sig = table.mtype(cname, mname)
    env = {"this": ClassType(cname)}
    for pname, ptype, _ in sig.params:
        env[pname] = ptype
    return env


def infer_signature(table: ClassTable, cname: str, mname: str,
                    counter: FreshCounter) -> MethodSig:
    """Infer receiver/parameter link sets from the method body. Sound only
    when every method the body calls already has link sets installed."""
    sig = table.mtype(cname, mname)
    env = _method_env(table, cname, mname)
    _, body = table.mbody(cname, mname)
    j = _infer(table, env, body, counter)
    if not base_equal(j.type, sig.ret):
        raise CoherenceError(
            f"body of {cname}.{mname} has type {j.type}, declared return {sig.ret}"
        )
    return MethodSig(
        recv_mod=sig.recv_mod,
        recv_coeff=j.ctx.get("this"),
        params=tuple((n, t, j.ctx.get(n)) for n, t, _ in sig.params),
        ret=sig.ret,
    )


def resolve_signatures(table: ClassTable, counter: FreshCounter) -> ClassTable:
    """Fill in missing method link sets by inference.

    Methods are processed in topological order of an over-approximated call
    graph (dependency on every same-named method anywhere, since receivers
    are not typed yet); annotation-free cycles are rejected.
    """
    pending: set = set()
    deps: dict = {}
    for cname in table.class_names():
        for m in table.methods(cname):
            if not table.mtype(cname, m.name).is_annotated():
                pending.add((cname, m.name))
                deps[(cname, m.name)] = _called_names(m.body)

    updates: dict = {}
    current = table
    while pending:
        # a called name is usable only once no other method carrying it is
        # pending; a method blocked only by its own name proceeds (direct
        # recursion still fails later, while typing the body)
        ready = []
        for key in sorted(pending):
            others = {key2[1] for key2 in pending if key2 != key}
            if not (deps[key] & others):
                ready.append(key)
        if not ready:
            cycle = ", ".join(f"{c}.{m}" for c, m in sorted(pending))
            raise CoherenceError(
                f"methods need explicit link annotations (call cycle): {cycle}"
            )
        for key in ready:
            cname, mname = key
            updates[key] = infer_signature(current, cname, mname, counter)
            current = table.with_method_coeffs(updates)
            pending.discard(key)
    return current


@dataclass(frozen=True)
class MethodCheck:
    cname: str
    mname: str
    ok: bool
    violations: tuple
    inferred: tuple  # canonical partition of this/params context
    declared: tuple  # declared link sets, printed


@dataclass(frozen=True)
class CoherenceReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]


def check_method_coherence(table: ClassTable, counter: FreshCounter | None = None) -> CoherenceReport:
    """Verify that declared method link sets cover what the bodies do.

    For each method the body is re-typed under the declared parameter types;
    whenever two positions (receiver or parameters, including a position
    against itself) get equal non-empty inferred link sets, the declared
    ones must also be equal and non-empty.
    """
    counter = counter or FreshCounter()
    table = resolve_signatures(table, counter)
    checks = []
    for cname in sorted(table.class_names()):
        for m in table.methods(cname):
            sig = table.mtype(cname, m.name)
            violations: list = []
            names = ["this"] + [p.name for p in m.params]
            declared = sig.coeffs()
            env = _method_env(table, cname, m.name)
            try:
                j = _infer(table, env, m.body, counter)
            except SharingError as exc:
                checks.append(MethodCheck(cname, m.name, False,
                                          (str(exc),), (), ()))
                continue
            if not base_equal(j.type, sig.ret):
                violations.append(
                    f"body has type {j.type}, declared return {sig.ret}"
                )
            inferred = [j.ctx.get(n) for n in names]
            for i, xi in enumerate(inferred):
                for k, xk in enumerate(inferred):
                    if xi.is_empty() or xk.is_empty():
                        continue
                    if xi == xk:
                        di, dk = declared[i], declared[k]
                        if di.is_empty() or dk.is_empty() or di != dk:
                            violations.append(
                                f"positions {names[i]} and {names[k]} share in "
                                f"the body but are declared {di} and {dk}"
                            )
            padded = CoeffectCtx({n: c for n, c in zip(names, inferred)})
            checks.append(MethodCheck(
                cname, m.name,
                not violations,
                tuple(violations),
                canonical_partition(padded),
                tuple(str(c) for c in declared),
            ))
    return CoherenceReport(tuple(checks))


# ---------------------------------------------------------------------------
# memory and configuration typing


@dataclass(frozen=True)
class MemTyping:
    ctx: CoeffectCtx          # over exactly the references of the memory
    ref_links: dict           # reference -> its fresh link

    def link_of(self, ref: str) -> Link:
        return self.ref_links[ref]


def type_memory(table: ClassTable, mem: Mapping, counter: FreshCounter) -> MemTyping:
    """Type a memory: each reference gets a fresh link, each object makes its
    reference-valued fields share with the holder. No res link can occur."""
    ref_links = {r: counter.link() for r in sorted(mem)}
    total = CoeffectCtx({r: Coeffect.of(lk) for r, lk in ref_links.items()}, closed=False)
    for r in sorted(mem):
        obj = mem[r]
        if not table.has_class(obj.cname):
            raise SharingError(f"memory object {r} has unknown class {obj.cname}")
        fds = table.fields(obj.cname)
        if len(fds) != len(obj.fields):
            raise SharingError(f"memory object {r} has wrong field count for {obj.cname}")
        entries: dict = {}
        for fd, v in zip(fds, obj.fields):
            if isinstance(v, str):
                if v not in mem:
                    raise SharingError(f"dangling reference {v} in {r}.{fd.name}")
                if is_prim(fd.type):
                    raise SharingError(f"reference in primitive field {r}.{fd.name}")
                if mem[v].cname != fd.type.name:
                    raise SharingError(
                        f"{r}.{fd.name} holds {mem[v].cname}, declared {fd.type.name}"
                    )
                entries[v] = Coeffect.res()
            else:
                if not is_prim(fd.type):
                    raise SharingError(f"integer in object field {r}.{fd.name}")
        scaled = ctx_scale(Coeffect.of(ref_links[r]), CoeffectCtx(entries, closed=True))
        total = ctx_sum(total, scaled)
    assert not any(c.contains_res for _, c in total.items())
    return MemTyping(ctx=total, ref_links=ref_links)


@dataclass(frozen=True)
class ConfigJudgment:
    ctx: CoeffectCtx          # combined context over dom(memory)
    type: Type
    expr_judgment: Judgment
    mem_typing: MemTyping


def type_configuration(table: ClassTable, e: Expr, mem: Mapping,
                       counter: FreshCounter) -> ConfigJudgment:
    """Type a configuration: the expression under reference types drawn from
    the memory, summed (non-linearly) with the memory context."""
    fv = free_vars(e)
    missing = sorted(fv - set(mem))
    if missing:
        raise SharingError(
            f"free variables are not memory references: {', '.join(missing)}"
        )
    env = {r: ClassType(mem[r].cname) for r in mem}
    j = infer(table, env, e, counter)
    mt = type_memory(table, mem, counter)
    total = ctx_sum(j.ctx, mt.ctx)
    return ConfigJudgment(ctx=total, type=j.type, expr_judgment=j, mem_typing=mt)


# ---------------------------------------------------------------------------
# derived notions


def getCoeff(ctx: CoeffectCtx, x: str) -> Coeffect:
    return ctx.get(x)


def links_of(ctx: CoeffectCtx) -> frozenset:
    return ctx_links(ctx, include_res=True)


def restrict_to(ctx: CoeffectCtx, like: CoeffectCtx) -> CoeffectCtx:
    """Restrict ctx to the domain and links of another context."""
    return restrict(ctx, like.domain(), links_of(like))


def is_lent(ctx: CoeffectCtx, x: str) -> bool:
    return not ctx.get(x).contains_res


def is_capsule(ctx: CoeffectCtx) -> bool:
    return all(is_lent(ctx, x) for x in ctx.domain())


def ctx_json(ctx: CoeffectCtx) -> dict:
    groups = [
        {"vars": list(vs), "contains_res": res}
        for vs, res in canonical_partition(ctx)
    ]
    return {
        "groups": groups,
        "coeffects": {x: c.sorted_labels() for x, c in ctx.items()},
    }
