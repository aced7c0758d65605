"""Coeffect-based sharing analysis for a small imperative object calculus.

The package tracks, per free variable, which other variables and which parts
of the result an expression may introduce sharing with.  On top of the link
analysis sits a modifier system (mut / read / imm / caps and existential
seals) with promotion, a small-step interpreter for closed configurations,
and a harness that checks the metatheory on corpus and random programs.
"""

from coeffect_lab.algebra import (
    NAT,
    ZOW,
    Coeffect,
    CoeffectCtx,
    FreshCounter,
    SemiringSpec,
    UsageGrade,
    canonical_partition,
    close,
    ctx_scale,
    ctx_sum,
    restrict,
)
from coeffect_lab.interp import (
    Obj,
    load_memory,
    mem_from_json,
    mem_to_json,
    reach,
    reduce_star,
    related,
    sharing_rel,
    step,
)
from coeffect_lab.lambda_demo import demo_judgment, linfer, lsub, parse_lterm
from coeffect_lab.lang import (
    INT,
    ClassTable,
    ClassType,
    LangError,
    parse,
    parse_expr,
    pretty,
    pretty_program,
    table_of,
)
from coeffect_lab.modifiers import (
    ModError,
    check_expr_mod,
    check_methods_mod,
    infer_mod,
    type_config_mod,
)
from coeffect_lab.sharing import (
    check_method_coherence,
    infer,
    is_capsule,
    is_lent,
    resolve_signatures,
    type_configuration,
    type_memory,
)

__version__ = "0.1.0"

__all__ = [
    "NAT",
    "ZOW",
    "INT",
    "Coeffect",
    "CoeffectCtx",
    "ClassTable",
    "ClassType",
    "FreshCounter",
    "LangError",
    "ModError",
    "Obj",
    "SemiringSpec",
    "UsageGrade",
    "canonical_partition",
    "check_expr_mod",
    "check_method_coherence",
    "check_methods_mod",
    "close",
    "ctx_scale",
    "ctx_sum",
    "demo_judgment",
    "infer",
    "infer_mod",
    "is_capsule",
    "is_lent",
    "linfer",
    "load_memory",
    "lsub",
    "mem_from_json",
    "mem_to_json",
    "parse",
    "parse_expr",
    "parse_lterm",
    "pretty",
    "pretty_program",
    "reach",
    "reduce_star",
    "related",
    "resolve_signatures",
    "restrict",
    "sharing_rel",
    "step",
    "table_of",
    "type_config_mod",
    "type_configuration",
    "type_memory",
    "__version__",
]
