"""The modifier discipline layered over sharing inference.

Class types carry one of mut, read, imm, caps, or a seal created during
promotion. Local declarations and parameters demand modifiers; a mut or
read expression meets a caps or imm demand through promotion, which seals
every res-connected mut variable of its context. caps and sealed variables
are linear in expression contexts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from coeffect_lab.algebra import (
    Coeffect,
    CoeffectCtx,
    FreshCounter,
    ctx_scale,
    ctx_sum,
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
    New,
    Type,
    Var,
    alpha_fresh_sig,
    free_vars,
    is_prim,
    with_mod,
)
from coeffect_lab.sharing import resolve_signatures

E_READ_ASSIGN = "E_READ_ASSIGN"
E_LINEAR = "E_LINEAR"
E_PROMOTE = "E_PROMOTE"
E_SUBTYPE = "E_SUBTYPE"
E_COMBINE = "E_COMBINE"


class ModError(LangError):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def is_seal(mod: str) -> bool:
    return mod.startswith("seal")


def seal_name(sid: int) -> str:
    return f"seal{sid}"


def mod_leq(a: str, b: str) -> bool:
    """The modifier preorder: seals below caps (and each other), caps below
    mut and imm, everything below read."""
    if a == b or b == "read":
        return True
    if is_seal(a):
        return is_seal(b) or b in ("caps", "mut", "imm")
    if a == "caps":
        return b in ("mut", "imm")
    return False


def subtype(a: Type, b: Type) -> bool:
    if is_prim(a) or is_prim(b):
        return is_prim(a) and is_prim(b) and a.name == b.name
    return a.name == b.name and mod_leq(a.mod, b.mod)


def combine(inner: str, outer: str) -> str:
    """Modifier of a field of modifier ``inner`` seen through a receiver of
    modifier ``outer``."""
    if inner in ("imm", "caps") or is_seal(inner):
        return inner
    if inner == "mut":
        return outer
    if inner == "read":
        if outer in ("imm", "caps"):
            return "imm"
        if is_seal(outer):
            raise ModError(E_COMBINE, "read composed with a seal is undefined")
        return "read"
    raise ValueError(f"unknown modifier {inner}")


def modif(t: Type, outer: str) -> Type:
    if isinstance(t, ClassType):
        return with_mod(t, combine(t.mod, outer))
    return t


@dataclass(frozen=True)
class MJudgment:
    """A modifier-aware judgment: per-variable types (with modifiers), the
    sharing context, and the expression's type."""

    types: dict
    ctx: CoeffectCtx
    type: Type
    rule: str
    children: tuple = ()

    def mod_of(self, var: str) -> str:
        t = self.types[var]
        return t.mod if isinstance(t, ClassType) else "mut"


def _merge_types(a: dict, b: dict) -> dict:
    out = dict(a)
    for var, t in b.items():
        if var in out and out[var] != t:
            raise ModError(
                E_LINEAR,
                f"variable {var} used at incompatible types {out[var]} and {t}",
            )
        out[var] = t
    return out


def oplus(types_a: dict, ctx_a: CoeffectCtx, types_b: dict, ctx_b: CoeffectCtx):
    """Linear context sum: a caps or sealed variable may not occur on both
    sides, whatever its coeffects are."""
    both = set(ctx_a.domain()) & set(ctx_b.domain())
    for var in sorted(both):
        for tmap in (types_a, types_b):
            t = tmap.get(var)
            if isinstance(t, ClassType) and (t.mod == "caps" or is_seal(t.mod)):
                raise ModError(E_LINEAR, f"{t.mod} variable {var} is used twice")
    return _merge_types(types_a, types_b), ctx_sum(ctx_a, ctx_b)


def seal_ctx(types: dict, ctx: CoeffectCtx, sigma: str, runtime: bool) -> dict:
    """Seal a context for promotion: every variable connected to the result
    must already be unsharable (imm, caps, sealed) or, at runtime, gets the
    fresh seal if mut. read variables always block promotion."""
    out = dict(types)
    for var in sorted(ctx.domain()):
        if not ctx.get(var).contains_res:
            continue
        t = types.get(var)
        if not isinstance(t, ClassType):
            continue
        if t.mod in ("imm", "caps") or is_seal(t.mod):
            continue
        if t.mod == "mut":
            if runtime:
                out[var] = with_mod(t, sigma)
                continue
            raise ModError(
                E_PROMOTE,
                f"mut variable {var} is connected to the result and would "
                "escape into the capsule",
            )
        raise ModError(
            E_PROMOTE,
            f"read variable {var} is connected to the result",
        )
    return out


def promote(j: MJudgment, counter: FreshCounter, runtime: bool) -> MJudgment:
    """Promotion: a mut expression becomes caps, a read one becomes imm,
    provided its context can be sealed."""
    assert isinstance(j.type, ClassType) and j.type.mod in ("mut", "read")
    sigma = seal_name(counter.seal_id())
    types = seal_ctx(j.types, j.ctx, sigma, runtime)
    result = with_mod(j.type, combine(j.type.mod, "caps"))
    return MJudgment(types, j.ctx, result, "t-prom", (j,))


def coerce(j: MJudgment, target: Type, counter: FreshCounter, runtime: bool,
           position: str = "") -> MJudgment:
    """Adapt a judgment to a demanded type via subsumption, or promotion
    when a caps or imm demand meets a mut or read expression."""
    if subtype(j.type, target):
        if j.type == target:
            return j
        return MJudgment(j.types, j.ctx, target, "t-sub", (j,))
    natural = j.type
    if (isinstance(natural, ClassType) and isinstance(target, ClassType)
            and natural.name == target.name):
        nm, tm = natural.mod, target.mod
        if tm in ("caps", "imm") and nm in ("mut", "read"):
            promoted = promote(j, counter, runtime)
            if subtype(promoted.type, target):
                return MJudgment(promoted.types, promoted.ctx, target,
                                 "t-sub", (promoted,))
            raise ModError(
                E_PROMOTE,
                f"promotion yields {promoted.type}, which does not meet the "
                f"{tm} demand{_at(position)}",
            )
        if tm == "caps" or tm == "imm":
            raise ModError(
                E_PROMOTE,
                f"a {nm} expression cannot meet a {tm} demand{_at(position)}",
            )
        if tm == "mut":
            code = E_READ_ASSIGN if position == "assignment receiver" else E_SUBTYPE
            raise ModError(
                code,
                f"a {nm} expression cannot be used as mut{_at(position)}",
            )
    raise ModError(
        E_SUBTYPE,
        f"expected {target}, found {j.type}{_at(position)}",
    )


def _at(position: str) -> str:
    return f" ({position})" if position else ""


# ---------------------------------------------------------------------------
# expression typing


def _imm_wrap(j: MJudgment, counter: FreshCounter) -> MJudgment:
    """Scale by a fresh link wherever the result is a copyable or frozen
    value: primitive results and imm objects never share with the result."""
    t = j.type
    immlike = is_prim(t) or (isinstance(t, ClassType) and t.mod == "imm")
    if not immlike:
        return j
    scaled = ctx_scale(Coeffect.of(counter.link()), j.ctx)
    return MJudgment(j.types, scaled, t, "t-imm", (j,))


def _check_env_mod(table: ClassTable, env: Mapping) -> None:
    for x, t in env.items():
        if isinstance(t, ClassType):
            if not table.has_class(t.name):
                raise ModError(E_SUBTYPE, f"environment variable {x} has unknown "
                                          f"class {t.name}")
            if t.mod not in ("mut", "read", "imm", "caps") and not is_seal(t.mod):
                raise ModError(E_SUBTYPE, f"bad modifier {t.mod} on {x}")


def infer_mod(table: ClassTable, env: Mapping, e: Expr, counter: FreshCounter,
              runtime: bool = False) -> MJudgment:
    """Infer the modifier-aware judgment of an expression.

    In runtime mode promotion seals res-connected mut references instead of
    failing; source mode rejects such promotions.
    """
    _check_env_mod(table, env)
    return _infer(table, dict(env), e, counter, runtime)


def _recv_class(t: Type, what: str) -> ClassType:
    if not isinstance(t, ClassType):
        raise ModError(E_SUBTYPE, f"{what} has primitive type, expected an object")
    return t


def _infer(table: ClassTable, env: dict, e: Expr, counter: FreshCounter,
           runtime: bool) -> MJudgment:
    if isinstance(e, Var):
        if e.name not in env:
            raise ModError(E_SUBTYPE, f"unbound variable {e.name}")
        t = env[e.name]
        j = MJudgment({e.name: t}, CoeffectCtx.single(e.name, Coeffect.res()),
                      t, "t-var")
        return _imm_wrap(j, counter)

    if isinstance(e, Const):
        return _imm_wrap(MJudgment({}, CoeffectCtx.empty(), INT, "t-const"), counter)

    if isinstance(e, FieldAccess):
        jt = _infer(table, env, e.target, counter, runtime)
        recv = _recv_class(jt.type, "field access target")
        fd = table.field(recv.name, e.field)
        result = modif(fd.type, recv.mod)
        j = MJudgment(jt.types, jt.ctx, result, "t-field-access", (jt,))
        return _imm_wrap(j, counter)

    if isinstance(e, FieldAssign):
        jt = _infer(table, env, e.target, counter, runtime)
        recv = _recv_class(jt.type, "assignment target")
        jt = coerce(jt, with_mod(recv, "mut"), counter, runtime,
                    "assignment receiver")
        fd = table.field(recv.name, e.field)
        jv = _infer(table, env, e.value, counter, runtime)
        jv = coerce(jv, fd.type, counter, runtime,
                    f"value assigned to {recv.name}.{e.field}")
        types, ctx = oplus(jt.types, jt.ctx, jv.types, jv.ctx)
        j = MJudgment(types, ctx, fd.type, "t-field-assign", (jt, jv))
        return _imm_wrap(j, counter)

    if isinstance(e, New):
        fds = table.fields(e.cname)
        if len(fds) != len(e.args):
            raise ModError(
                E_SUBTYPE,
                f"new {e.cname} expects {len(fds)} arguments, got {len(e.args)}",
            )
        types: dict = {}
        ctx = CoeffectCtx.empty()
        children = []
        for fd, arg in zip(fds, e.args):
            ja = _infer(table, env, arg, counter, runtime)
            ja = coerce(ja, fd.type, counter, runtime,
                        f"argument for {e.cname}.{fd.name}")
            children.append(ja)
            types, ctx = oplus(types, ctx, ja.types, ja.ctx)
        return MJudgment(types, ctx, ClassType(e.cname, "mut"), "t-new",
                         tuple(children))

    if isinstance(e, Invoke):
        jt = _infer(table, env, e.target, counter, runtime)
        recv = _recv_class(jt.type, "call receiver")
        sig = table.mtype(recv.name, e.method)
        if not sig.is_annotated():
            raise ModError(
                E_SUBTYPE,
                f"method {recv.name}.{e.method} needs link annotations",
            )
        sig = alpha_fresh_sig(sig, counter)
        if len(sig.params) != len(e.args):
            raise ModError(
                E_SUBTYPE,
                f"{recv.name}.{e.method} expects {len(sig.params)} arguments, "
                f"got {len(e.args)}",
            )
        jt = coerce(jt, with_mod(recv, sig.recv_mod), counter, runtime,
                    f"receiver of {recv.name}.{e.method}")
        scalar = sig.recv_coeff.union(Coeffect.of(counter.link()))
        types = jt.types
        ctx = ctx_scale(scalar, jt.ctx)
        children = [jt]
        for (pname, ptype, pcoeff), arg in zip(sig.params, e.args):
            ja = _infer(table, env, arg, counter, runtime)
            ja = coerce(ja, ptype, counter, runtime,
                        f"argument for parameter {pname} of {recv.name}.{e.method}")
            children.append(ja)
            scalar = pcoeff.union(Coeffect.of(counter.link()))
            types, ctx = oplus(types, ctx, ja.types, ctx_scale(scalar, ja.ctx))
        j = MJudgment(types, ctx, sig.ret, "t-invk", tuple(children))
        return _imm_wrap(j, counter)

    if isinstance(e, Block):
        ji = _infer(table, env, e.init, counter, runtime)
        declared = e.decl_type if e.decl_type is not None else ji.type
        ji = coerce(ji, declared, counter, runtime,
                    f"initializer of {e.var}")
        inner = dict(env)
        inner[e.var] = declared
        jb = _infer(table, inner, e.body, counter, runtime)
        binder_coeff = jb.ctx.get(e.var)
        scalar = binder_coeff.union(Coeffect.of(counter.link()))
        body_types = {k: v for k, v in jb.types.items() if k != e.var}
        types, ctx = oplus(ji.types, ctx_scale(scalar, ji.ctx),
                           body_types, jb.ctx.without(e.var))
        j = MJudgment(types, ctx, jb.type, "t-block", (ji, jb))
        return _imm_wrap(j, counter)

    raise TypeError(f"not an expression: {e!r}")


def check_expr_mod(table: ClassTable, env: Mapping, e: Expr,
                   counter: FreshCounter | None = None) -> MJudgment:
    """Source-mode entry point; resolves missing signatures first."""
    counter = counter or FreshCounter()
    table = resolve_signatures(table, counter)
    return infer_mod(table, env, e, counter, runtime=False)


@dataclass(frozen=True)
class MethodModCheck:
    cname: str
    mname: str
    ok: bool
    error: str | None
    code: str | None


@dataclass(frozen=True)
class ModReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def failures(self) -> list:
        return [c for c in self.checks if not c.ok]


def check_methods_mod(table: ClassTable, counter: FreshCounter | None = None) -> ModReport:
    """Type every method body against its declared signature, modifiers
    included: the body must meet the declared return type."""
    counter = counter or FreshCounter()
    table = resolve_signatures(table, counter)
    checks = []
    for cname in sorted(table.class_names()):
        for m in table.methods(cname):
            env = {"this": ClassType(cname, m.recv_mod)}
            for p in m.params:
                env[p.name] = p.type
            try:
                j = infer_mod(table, env, m.body, counter, runtime=False)
                coerce(j, m.ret, counter, False,
                       f"return of {cname}.{m.name}")
                checks.append(MethodModCheck(cname, m.name, True, None, None))
            except ModError as exc:
                checks.append(MethodModCheck(cname, m.name, False,
                                             exc.message, exc.code))
            except LangError as exc:
                checks.append(MethodModCheck(cname, m.name, False,
                                             str(exc), None))
    return ModReport(tuple(checks))


# ---------------------------------------------------------------------------
# memory typing with modifiers


@dataclass(frozen=True)
class MemTypingM:
    ctx: CoeffectCtx
    types: dict          # reference -> ClassType with its modifier
    ref_links: dict
    assignment: dict     # reference -> modifier


def _field_edges(table: ClassTable, mem: Mapping):
    """(holder, held, field decl) for every reference-valued field."""
    for r in sorted(mem):
        obj = mem[r]
        for fd, v in zip(table.fields(obj.cname), obj.fields):
            if isinstance(v, str):
                yield r, v, fd


def type_memory_mod(table: ClassTable, mem: Mapping, assignment: Mapping,
                    counter: FreshCounter) -> MemTypingM:
    """Type a memory under a given modifier assignment.

    Object fields propagate exactly: a mut field holds a reference with the
    holder's own modifier, an imm field holds an imm reference. imm-held
    references get private links, so they do not share with their holder.
    """
    for r in sorted(mem):
        m = assignment.get(r)
        if m is None:
            raise ModError(E_SUBTYPE, f"no modifier assigned to reference {r}")
        if m in ("read", "caps"):
            raise ModError(E_SUBTYPE, f"a reference cannot be {m} in memory ({r})")
    ref_links = {r: counter.link() for r in sorted(mem)}
    total = CoeffectCtx({r: Coeffect.of(lk) for r, lk in ref_links.items()})
    for r in sorted(mem):
        obj = mem[r]
        entries: dict = {}
        for fd, v in zip(table.fields(obj.cname), obj.fields):
            if not isinstance(v, str):
                continue
            expected = modif(fd.type, assignment[r])
            actual = assignment[v]
            if actual != expected.mod:
                raise ModError(
                    E_SUBTYPE,
                    f"{r}.{fd.name} holds {v} with modifier {actual}, "
                    f"but the edge requires {expected.mod}",
                )
            if actual == "imm":
                entries[v] = Coeffect.of(counter.link())
            else:
                entries[v] = entries.get(v, Coeffect.empty()).union(Coeffect.res())
        scaled = ctx_scale(Coeffect.of(ref_links[r]), CoeffectCtx(entries, closed=True))
        total = ctx_sum(total, scaled)
    types = {r: ClassType(mem[r].cname, assignment[r]) for r in mem}
    return MemTypingM(ctx=total, types=types, ref_links=ref_links,
                      assignment=dict(assignment))


def mod_sharing(mem: Mapping, assignment: Mapping) -> tuple:
    """Sharing groups of a memory counting only edges whose two endpoints
    are below mut (imm endpoints break the chain)."""
    parent = {r: r for r in mem}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    for r in mem:
        if not mod_leq(assignment[r], "mut"):
            continue
        for v in mem[r].fields:
            if isinstance(v, str) and mod_leq(assignment[v], "mut"):
                ra, rb = find(r), find(v)
                if ra != rb:
                    parent[ra] = rb
    groups: dict = {}
    for r in mem:
        groups.setdefault(find(r), set()).add(r)
    return tuple(sorted((frozenset(g) for g in groups.values()),
                        key=lambda g: sorted(g)))


def solve_assignment(table: ClassTable, mem: Mapping, pins: Mapping,
                     sealed: Mapping) -> tuple:
    """Choose a modifier per reference.

    pins force imm (user-declared immutable roots); sealed carries the seals
    the expression typing produced. Children of imm fields and of imm
    references are forced imm; mut fields force equal modifiers, so each
    mut-field component is uniformly imm, uniformly one seal, or mut.
    Returns (assignment, seal substitution for collapsed seals).
    """
    refs = sorted(mem)
    parent = {r: r for r in refs}

    def find(r):
        while parent[r] != r:
            parent[r] = parent[parent[r]]
            r = parent[r]
        return r

    seeds = set(pins)
    for r, v, fd in _field_edges(table, mem):
        if isinstance(fd.type, ClassType) and fd.type.mod == "imm":
            seeds.add(v)
        else:
            ra, rb = find(r), find(v)
            if ra != rb:
                parent[ra] = rb
    comps: dict = {}
    for r in refs:
        comps.setdefault(find(r), []).append(r)

    assignment: dict = {}
    seal_subst: dict = {}
    for members in comps.values():
        has_imm = any(m in seeds for m in members)
        seals = sorted({sealed[m] for m in members if m in sealed},
                       key=lambda s: int(s[4:]))
        if has_imm and seals:
            raise ModError(
                E_PROMOTE,
                "a sealed reference is forced imm by the memory shape: "
                + ", ".join(sorted(members)),
            )
        if has_imm:
            mod = "imm"
        elif seals:
            mod = seals[0]
            for other in seals[1:]:
                seal_subst[other] = mod
        else:
            mod = "mut"
        for m in members:
            assignment[m] = mod
    return assignment, seal_subst


@dataclass(frozen=True)
class MConfigJudgment:
    ctx: CoeffectCtx
    types: dict            # reference -> ClassType over all of dom(memory)
    type: Type
    assignment: dict
    expr_judgment: MJudgment
    mem_typing: MemTypingM

    def get_modif(self, ref: str) -> str:
        return self.assignment[ref]


def _subst_seals(t: Type, seal_subst: Mapping) -> Type:
    if isinstance(t, ClassType) and t.mod in seal_subst:
        return with_mod(t, seal_subst[t.mod])
    return t


def type_config_mod(table: ClassTable, e: Expr, mem: Mapping,
                    counter: FreshCounter, pins: Mapping | None = None,
                    demand: Type | None = None) -> MConfigJudgment:
    """Type a configuration with modifiers.

    References start from the memory-solved assignment (mut unless forced
    imm); the expression is typed in runtime mode, so promotions seal
    res-connected references; the memory is then re-solved with those seals
    and both halves must agree on every reference's type.
    """
    pins = dict(pins or {})
    fv = free_vars(e)
    missing = sorted(fv - set(mem))
    if missing:
        raise ModError(
            E_SUBTYPE,
            f"free variables are not memory references: {', '.join(missing)}",
        )
    base, _ = solve_assignment(table, mem, pins, {})
    env = {r: ClassType(mem[r].cname, base[r]) for r in mem}
    j = infer_mod(table, env, e, counter, runtime=True)
    if demand is not None:
        j = coerce(j, demand, counter, runtime=True, position="configuration")
    sealed = {
        var: t.mod
        for var, t in j.types.items()
        if var in mem and isinstance(t, ClassType) and is_seal(t.mod)
    }
    assignment, seal_subst = solve_assignment(table, mem, pins, sealed)
    if seal_subst:
        j = MJudgment(
            {v: _subst_seals(t, seal_subst) for v, t in j.types.items()},
            j.ctx,
            _subst_seals(j.type, seal_subst),
            j.rule,
            j.children,
        )
    for r, t in j.types.items():
        if r in mem and isinstance(t, ClassType) and t.mod != assignment[r]:
            raise ModError(
                E_SUBTYPE,
                f"reference {r} is {t.mod} in the expression but "
                f"{assignment[r]} in memory",
            )
    mt = type_memory_mod(table, mem, assignment, counter)
    total = ctx_sum(j.ctx, mt.ctx)
    return MConfigJudgment(
        ctx=total,
        types=dict(mt.types),
        type=j.type,
        assignment=assignment,
        expr_judgment=j,
        mem_typing=mt,
    )
