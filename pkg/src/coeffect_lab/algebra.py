"""Graded algebra core.

Preordered semirings of usage grades, link sets with the replacement
product, modules of finitely supported contexts, and the saturation
(closure) operator that keeps sharing contexts consistent.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Mapping

from coeffect_lab._kernel import KERNEL_KIND, closure_indexed

RES_LABEL = "res"


@dataclass(frozen=True, order=True)
class Link:
    """One sharing link.

    Three disjoint namespaces inhabit this type: the distinguished result
    link ``res``, identifiers written in source annotations, and
    machine-generated links ``#0, #1, ...``. The leading ``#`` cannot be
    lexed as an identifier, so the namespaces never collide.
    """

    label: str

    def is_res(self) -> bool:
        return self.label == RES_LABEL

    def is_machine(self) -> bool:
        return self.label.startswith("#")

    def __str__(self) -> str:
        return self.label

    def __repr__(self) -> str:
        return f"Link({self.label!r})"


RES = Link(RES_LABEL)


class FreshCounter:
    """Deterministic source of fresh links, references, seals, and names.

    A counter is created per run and threaded explicitly; nothing in the
    package keeps global state, so identical runs replay identically.
    """

    def __init__(self) -> None:
        self._links = 0
        self._refs = 0
        self._seals = 0
        self._names = 0

    def link(self) -> Link:
        out = Link(f"#{self._links}")
        self._links += 1
        return out

    def ref(self, taken: Iterable[str] = ()) -> str:
        taken = set(taken)
        while True:
            out = f"r{self._refs}"
            self._refs += 1
            if out not in taken:
                return out

    def seal_id(self) -> int:
        out = self._seals
        self._seals += 1
        return out

    def name(self) -> str:
        # parser rejects '%', so generated binders cannot capture source vars
        out = f"%t{self._names}"
        self._names += 1
        return out


@dataclass(frozen=True)
class Coeffect:
    """A finite set of links; the scalar of the sharing semiring."""

    links: frozenset

    @staticmethod
    def empty() -> "Coeffect":
        return _EMPTY

    @staticmethod
    def res() -> "Coeffect":
        return _RES_ONE

    @staticmethod
    def of(*links: Link) -> "Coeffect":
        return Coeffect(frozenset(links))

    @staticmethod
    def of_labels(*labels: str) -> "Coeffect":
        return Coeffect(frozenset(Link(lb) for lb in labels))

    @property
    def contains_res(self) -> bool:
        return RES in self.links

    def is_empty(self) -> bool:
        return not self.links

    def union(self, other: "Coeffect") -> "Coeffect":
        return Coeffect(self.links | other.links)

    def intersect_links(self, keep: frozenset) -> "Coeffect":
        return Coeffect(self.links & keep)

    def drop_res(self) -> "Coeffect":
        return Coeffect(self.links - {RES})

    def subset_of(self, other: "Coeffect") -> bool:
        return self.links <= other.links

    def sorted_labels(self) -> list:
        return sorted(lk.label for lk in self.links)

    def __iter__(self):
        return iter(self.links)

    def __len__(self) -> int:
        return len(self.links)

    def __str__(self) -> str:
        return "{" + ", ".join(self.sorted_labels()) + "}"

    def __repr__(self) -> str:
        return f"Coeffect({set(self.sorted_labels())!r})" if self.links else "Coeffect({})"


_EMPTY = Coeffect(frozenset())
_RES_ONE = Coeffect(frozenset({RES}))


def link_scale(x: Coeffect, y: Coeffect) -> Coeffect:
    """The replacement product of link sets.

    Scaling by the empty set erases; otherwise the scalar is substituted
    for the result link when present, and y is untouched when it is not.
    """
    if x.is_empty():
        return _EMPTY
    if RES not in y.links:
        return y
    return Coeffect((y.links - {RES}) | x.links)


class UsageGrade(Enum):
    """How often a variable is used: not at all, exactly once, or freely."""

    ZERO = "0"
    ONE = "1"
    OMEGA = "w"

    def __str__(self) -> str:
        return self.value

    def __repr__(self) -> str:
        return f"UsageGrade.{self.name}"


_Z, _O, _W = UsageGrade.ZERO, UsageGrade.ONE, UsageGrade.OMEGA


def _zow_sum(a: UsageGrade, b: UsageGrade) -> UsageGrade:
    if a is _Z:
        return b
    if b is _Z:
        return a
    return _W


def _zow_mul(a: UsageGrade, b: UsageGrade) -> UsageGrade:
    if a is _Z or b is _Z:
        return _Z
    if a is _O:
        return b
    if b is _O:
        return a
    return _W


def _zow_leq(a: UsageGrade, b: UsageGrade) -> bool:
    # 0 and 1 are incomparable; omega is the top
    return a is b or b is _W


def _zow_join(a: UsageGrade, b: UsageGrade) -> UsageGrade:
    if a is b:
        return a
    return _W


@dataclass(frozen=True)
class SemiringSpec:
    """A preordered semiring packaged as first-class operations."""

    name: str
    zero: object
    one: object
    sum: Callable
    mul: Callable
    leq: Callable
    join: Callable | None = None
    contains: Callable = lambda v: True


ZOW = SemiringSpec(
    name="zow",
    zero=_Z,
    one=_O,
    sum=_zow_sum,
    mul=_zow_mul,
    leq=_zow_leq,
    join=_zow_join,
    contains=lambda v: isinstance(v, UsageGrade),
)

NAT = SemiringSpec(
    name="nat",
    zero=0,
    one=1,
    sum=operator.add,
    mul=operator.mul,
    leq=operator.le,
    join=max,
    contains=lambda v: isinstance(v, int) and not isinstance(v, bool) and v >= 0,
)

LINKS = SemiringSpec(
    name="links",
    zero=_EMPTY,
    one=_RES_ONE,
    sum=Coeffect.union,
    mul=link_scale,
    leq=Coeffect.subset_of,
    join=Coeffect.union,
    contains=lambda v: isinstance(v, Coeffect),
)

_SPECS = (ZOW, NAT, LINKS)


def _spec_for(value) -> SemiringSpec:
    if isinstance(value, UsageGrade):
        return ZOW
    if isinstance(value, Coeffect):
        return LINKS
    if isinstance(value, int) and not isinstance(value, bool):
        return NAT
    raise TypeError(f"no semiring carries {value!r}")


def sr_sum(a, b):
    """Semiring sum, dispatching on the carrier of the operands."""
    return _spec_for(a).sum(a, b)


def sr_mul(a, b):
    """Semiring product, dispatching on the carrier of the operands."""
    return _spec_for(a).mul(a, b)


def sr_leq(a, b) -> bool:
    """Semiring order, dispatching on the carrier of the operands."""
    return _spec_for(a).leq(a, b)


class CoeffectCtx:
    """Finitely supported map from variable names to coeffects.

    Absent variables implicitly carry the empty coeffect; entries that are
    explicitly empty are kept (the domain can matter to callers) but are
    ignored by equality. The closed flag records that the context has been
    saturated by :func:`close`.
    """

    __slots__ = ("_entries", "closed")

    def __init__(self, entries: Mapping[str, Coeffect] | Iterable = (), closed: bool = False):
        self._entries = dict(entries)
        self.closed = closed

    @staticmethod
    def single(var: str, coeff: Coeffect) -> "CoeffectCtx":
        # a one-variable context is trivially closed
        return CoeffectCtx({var: coeff}, closed=True)

    @staticmethod
    def empty() -> "CoeffectCtx":
        return CoeffectCtx({}, closed=True)

    def get(self, var: str) -> Coeffect:
        return self._entries.get(var, _EMPTY)

    def domain(self) -> tuple:
        return tuple(sorted(self._entries))

    def __contains__(self, var: str) -> bool:
        return var in self._entries

    def items(self):
        return sorted(self._entries.items())

    def mapping(self) -> dict:
        return dict(self._entries)

    def without(self, var: str) -> "CoeffectCtx":
        if var not in self._entries:
            return self
        out = dict(self._entries)
        del out[var]
        return CoeffectCtx(out, closed=self.closed)

    def normalized(self) -> dict:
        return {x: c for x, c in self._entries.items() if not c.is_empty()}

    def all_links(self) -> frozenset:
        out: set = set()
        for c in self._entries.values():
            out |= c.links
        return frozenset(out)

    def __eq__(self, other) -> bool:
        if not isinstance(other, CoeffectCtx):
            return NotImplemented
        return self.normalized() == other.normalized()

    __hash__ = None  # mutable closed flag; use canonical forms as keys instead

    def __repr__(self) -> str:
        inner = ", ".join(f"{x}:{c}" for x, c in self.items())
        tag = "closed" if self.closed else "open"
        return f"CoeffectCtx({inner} | {tag})"


def close(ctx: CoeffectCtx) -> CoeffectCtx:
    """Saturate a context: links co-occurring anywhere are merged, and each
    non-empty coeffect becomes the full class of its links."""
    if ctx.closed:
        return ctx
    index: dict = {}
    sets: list = []
    names: list = []
    for var, coeff in ctx.items():
        ids = []
        for lk in coeff.links:
            if lk not in index:
                index[lk] = len(index)
            ids.append(index[lk])
        names.append(var)
        sets.append(ids)
    if not index:
        return CoeffectCtx(dict(ctx.mapping()), closed=True)
    back = {i: lk for lk, i in index.items()}
    closed_sets = closure_indexed(sets, len(index))
    out = {}
    for var, ids in zip(names, closed_sets):
        out[var] = Coeffect(frozenset(back[i] for i in ids))
    return CoeffectCtx(out, closed=True)


def ctx_sum(a: CoeffectCtx, b: CoeffectCtx) -> CoeffectCtx:
    """Context sum: pointwise union, then saturation."""
    out = dict(a.mapping())
    for var, coeff in b.mapping().items():
        if var in out:
            out[var] = out[var].union(coeff)
        else:
            out[var] = coeff
    return close(CoeffectCtx(out))


def ctx_scale(x: Coeffect, ctx: CoeffectCtx) -> CoeffectCtx:
    """Context scaling: pointwise replacement product, then saturation."""
    out = {var: link_scale(x, coeff) for var, coeff in ctx.mapping().items()}
    return close(CoeffectCtx(out))


def ctx_links(ctx: CoeffectCtx, include_res: bool = True) -> frozenset:
    out = set(ctx.all_links())
    if include_res:
        out.add(RES)
    return frozenset(out)


def restrict(ctx: CoeffectCtx, keep_vars: Iterable[str], keep_links: frozenset) -> CoeffectCtx:
    """Keep only the given variables and intersect every coeffect with the
    given link set. The result of restricting a closed context to the links
    of a closed context is closed again; the flag is recomputed cheaply."""
    keep = set(keep_vars)
    out = {
        var: coeff.intersect_links(keep_links)
        for var, coeff in ctx.mapping().items()
        if var in keep
    }
    res = CoeffectCtx(out)
    closed = close(res)
    return closed if closed == res else res


def canonical_partition(ctx: CoeffectCtx):
    """Canonical form of a context: variables grouped by coeffect equality.

    Variables with the empty coeffect form singleton groups (they share with
    nothing), which also identifies contexts that differ only in unshared
    fresh links. Returns a sorted tuple of (vars, contains_res) pairs.
    """
    by_coeff: dict = {}
    groups = []
    for var, coeff in ctx.items():
        if coeff.is_empty():
            groups.append(((var,), False))
            continue
        by_coeff.setdefault(coeff.links, []).append(var)
    for links, members in by_coeff.items():
        if len(members) == 1 and RES not in links:
            # a lone variable is canonically indistinguishable from one
            # holding only private fresh links
            groups.append(((members[0],), False))
        else:
            groups.append((tuple(sorted(members)), RES in links))
    groups.sort()
    return tuple(groups)


def partitions_equal(a: CoeffectCtx, b: CoeffectCtx) -> bool:
    return canonical_partition(a) == canonical_partition(b)


@dataclass(frozen=True)
class ModuleSpec:
    """A module over a semiring, on finitely supported key-indexed values."""

    name: str
    semiring: SemiringSpec
    zero: Callable
    sum: Callable
    scale: Callable
    leq: Callable


def structural_module(spec: SemiringSpec, name: str | None = None) -> ModuleSpec:
    """The module of finitely supported maps into a semiring, with pointwise
    sum and scaling. Values are plain dicts; absent keys read as zero."""

    zero = spec.zero

    def norm(m: dict) -> dict:
        return {k: v for k, v in m.items() if v != zero}

    def msum(m: dict, n: dict) -> dict:
        out = dict(m)
        for k, v in n.items():
            out[k] = spec.sum(out[k], v) if k in out else v
        return norm(out)

    def mscale(r, m: dict) -> dict:
        return norm({k: spec.mul(r, v) for k, v in m.items()})

    def mleq(m: dict, n: dict) -> bool:
        keys = set(m) | set(n)
        return all(spec.leq(m.get(k, zero), n.get(k, zero)) for k in keys)

    return ModuleSpec(
        name=name or f"{spec.name}^X",
        semiring=spec,
        zero=dict,
        sum=msum,
        scale=mscale,
        leq=mleq,
    )


def fixpoint_module(module: ModuleSpec, hom: Callable, name: str | None = None) -> ModuleSpec:
    """Derive a module on the fixpoints of an idempotent lax homomorphism:
    operations are those of the base module followed by the homomorphism."""

    return ModuleSpec(
        name=name or f"{module.name}/hom",
        semiring=module.semiring,
        zero=lambda: hom(module.zero()),
        sum=lambda m, n: hom(module.sum(m, n)),
        scale=lambda r, m: hom(module.scale(r, m)),
        leq=module.leq,
    )


def closure_hom(m: dict) -> dict:
    """Saturation viewed as a homomorphism on plain link-set maps."""
    return close(CoeffectCtx(m)).normalized()


SHARING_MODULE = fixpoint_module(structural_module(LINKS), closure_hom, name="sharing-ctx")

__all__ = [
    "RES",
    "RES_LABEL",
    "Link",
    "FreshCounter",
    "Coeffect",
    "link_scale",
    "UsageGrade",
    "SemiringSpec",
    "ZOW",
    "NAT",
    "LINKS",
    "sr_sum",
    "sr_mul",
    "sr_leq",
    "CoeffectCtx",
    "close",
    "ctx_sum",
    "ctx_scale",
    "ctx_links",
    "restrict",
    "canonical_partition",
    "partitions_equal",
    "ModuleSpec",
    "structural_module",
    "fixpoint_module",
    "closure_hom",
    "SHARING_MODULE",
    "KERNEL_KIND",
]
