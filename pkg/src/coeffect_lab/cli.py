"""Command line front end: check, run, verify, lambda."""

from __future__ import annotations

import argparse
import json
import os
import sys

from coeffect_lab.algebra import FreshCounter
from coeffect_lab.harness import (
    junit_xml,
    reports_json,
    run_all,
    run_capsule_suite,
    run_imm_suite,
    run_memory_suite,
    run_sr_suite,
    verify_capsule,
    verify_immutability,
    verify_subject_reduction,
)
from coeffect_lab.interp import load_memory, mem_to_json, reduce_star
from coeffect_lab.lambda_demo import NAT, ZOW, demo_judgment
from coeffect_lab.lang import (
    INT,
    ClassType,
    LangError,
    MODIFIERS,
    free_vars,
    parse,
    pretty,
    pretty_type,
    table_of,
)
from coeffect_lab.modifiers import (
    ModError,
    check_methods_mod,
    infer_mod,
)
from coeffect_lab.sharing import (
    check_method_coherence,
    ctx_json,
    infer,
    is_capsule,
    is_lent,
    resolve_signatures,
)


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("COEFFECT_LAB_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            pass
    return 0


def _parse_env(text: str | None) -> dict:
    env: dict = {}
    if not text:
        return env
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"--env entry {part!r} is not name=Type")
        name, tspec = part.split("=", 1)
        name = name.strip()
        tspec = tspec.strip()
        if tspec == "int":
            env[name] = INT
            continue
        if "@" in tspec:
            cname, mod = tspec.split("@", 1)
            if mod not in MODIFIERS:
                raise ValueError(f"unknown modifier {mod!r} in --env")
            env[name] = ClassType(cname, mod)
        else:
            env[name] = ClassType(tspec)
    return env


def _load_program(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            src = fh.read()
    except OSError as exc:
        print(f"cannot read {path}: {exc}", file=sys.stderr)
        return None
    try:
        return parse(src)
    except LangError as exc:
        print(exc.format(path), file=sys.stderr)
        return None


def cmd_check(args) -> int:
    program = _load_program(args.file)
    if program is None:
        return 1
    try:
        env = _parse_env(args.env)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 2
    counter = FreshCounter()
    table = table_of(program)
    try:
        table = resolve_signatures(table, counter)
        if args.system == "sharing":
            coh = check_method_coherence(table, counter)
            if not coh.ok:
                for c in coh.failures():
                    for v in c.violations:
                        print(f"{args.file}: {c.cname}.{c.mname}: {v}",
                              file=sys.stderr)
                return 1
            j = infer(table, env, program.main, counter)
            mods = None
        else:
            modrep = check_methods_mod(table, counter)
            if not modrep.ok:
                for c in modrep.failures():
                    code = f"[{c.code}] " if c.code else ""
                    print(f"{args.file}: {c.cname}.{c.mname}: {code}{c.error}",
                          file=sys.stderr)
                return 1
            j = infer_mod(table, env, program.main, counter, runtime=False)
            mods = {
                x: (t.mod if isinstance(t, ClassType) else "imm")
                for x, t in j.types.items()
            }
    except ModError as exc:
        print(f"{args.file}: [{exc.code}] {exc.message}", file=sys.stderr)
        return 1
    except LangError as exc:
        print(exc.format(args.file), file=sys.stderr)
        return 1

    fv = sorted(free_vars(program.main))
    lent = [x for x in fv if is_lent(j.ctx, x)]
    context = ctx_json(j.ctx)
    payload = {
        "schema": "1",
        "system": args.system,
        "type": pretty_type(j.type),
        "groups": context["groups"],
        "coeffects": context["coeffects"],
        "lent": lent,
        "capsule": is_capsule(j.ctx),
    }
    if mods is not None:
        payload["modifiers"] = dict(sorted(mods.items()))
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
        return 0
    print(f"type: {payload['type']}")
    shown = " | ".join(
        "{" + ", ".join(list(g["vars"]) + (["res"] if g["contains_res"] else [])) + "}"
        for g in payload["groups"]
    )
    print(f"groups: {shown or '(empty)'}")
    for x in fv:
        c = j.ctx.get(x)
        print(f"  {x}: {{{', '.join(c.sorted_labels())}}}")
    if mods is not None:
        for x in sorted(mods):
            print(f"  {x}: {mods[x]}")
    print(f"lent: {', '.join(lent) or 'none'}")
    print(f"capsule: {str(payload['capsule']).lower()}")
    return 0


def cmd_run(args) -> int:
    program = _load_program(args.file)
    if program is None:
        return 1
    table = table_of(program)
    mem = {}
    if args.mem:
        try:
            mem = load_memory(args.mem)
        except (OSError, ValueError, LangError) as exc:
            print(f"cannot load memory {args.mem}: {exc}", file=sys.stderr)
            return 1
    missing = sorted(free_vars(program.main) - set(mem))
    if missing:
        print(
            "free variables must be bound in the initial memory: "
            + ", ".join(missing),
            file=sys.stderr,
        )
        return 1
    counter = FreshCounter()
    try:
        table = resolve_signatures(table, counter)
    except LangError as exc:
        print(exc.format(args.file), file=sys.stderr)
        return 1
    result = reduce_star(table, program.main, mem, counter,
                         budget=args.budget, want_trace=args.trace)
    if args.trace:
        for step_ in result.trace:
            print(json.dumps(step_.to_json(), sort_keys=True))
    payload = {
        "schema": "1",
        "status": result.status,
        "result": pretty(result.expr),
        "steps": result.steps,
        "memory": mem_to_json(result.mem),
    }
    if result.reason:
        payload["reason"] = result.reason
    print(json.dumps(payload, sort_keys=True, indent=2))
    return 0 if result.status == "value" else 1


def cmd_verify(args) -> int:
    seed = _seed(args)
    if args.file:
        program = _load_program(args.file)
        if program is None:
            return 1
        table = table_of(program)
        counter = FreshCounter()
        try:
            table = resolve_signatures(table, counter)
        except LangError as exc:
            print(exc.format(args.file), file=sys.stderr)
            return 1
        mem = {}
        if args.mem:
            try:
                mem = load_memory(args.mem)
            except (OSError, ValueError, LangError) as exc:
                print(f"cannot load memory {args.mem}: {exc}", file=sys.stderr)
                return 1
        main = program.main
        if args.theorem in (None, "sr"):
            reports = [
                verify_subject_reduction(table, main, mem, mode="sharing",
                                         label=args.file),
                verify_subject_reduction(table, main, mem, mode="modifiers",
                                         label=args.file),
            ]
        elif args.theorem == "capsule":
            reports = [verify_capsule(table, main, mem, label=args.file)]
        else:
            if not args.ref:
                print("--theorem imm needs --ref <reference>", file=sys.stderr)
                return 2
            reports = [verify_immutability(table, main, mem, args.ref,
                                           label=args.file)]
    else:
        count = args.count
        if args.theorem == "sr":
            reports = [run_sr_suite(n_random=count, seed=seed)]
        elif args.theorem == "capsule":
            reports = [run_capsule_suite(n_random=count, seed=seed)]
        elif args.theorem == "imm":
            reports = [run_imm_suite(n_random=count, seed=seed)]
        else:
            reports = run_all(n_random=count, seed=seed)

    payload = reports_json(reports)
    if args.junit:
        try:
            with open(args.junit, "w", encoding="utf-8") as fh:
                fh.write(junit_xml(reports))
        except OSError as exc:
            print(f"cannot write {args.junit}: {exc}", file=sys.stderr)
            return 1
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        for rep in reports:
            status = "ok" if rep.ok else "FAILED"
            passed = sum(1 for r in rep.results if r.ok)
            print(f"{rep.suite}: {status} ({passed}/{len(rep.results)})")
            for r in rep.failures():
                print(f"  FAIL {r.name}: {r.detail}")
    return 0 if payload["ok"] else 1


def cmd_lambda(args) -> int:
    try:
        with open(args.file, "r", encoding="utf-8") as fh:
            src = fh.read().strip()
    except OSError as exc:
        print(f"cannot read {args.file}: {exc}", file=sys.stderr)
        return 1
    spec = ZOW if args.semiring == "zow" else NAT
    try:
        payload = demo_judgment(src, spec, cbv=args.cbv)
    except LangError as exc:
        print(f"{args.file}: {exc}", file=sys.stderr)
        return 1
    payload["schema"] = "1"
    if args.json:
        print(json.dumps(payload, sort_keys=True, indent=2))
    else:
        print(f"term: {payload['term']}")
        print(f"type: {payload['type']}")
        mode = "cbv" if payload["cbv"] else "cbn"
        print(f"semiring: {payload['semiring']} ({mode})")
        for x in sorted(payload["context"]):
            print(f"  {x}: {payload['context'][x]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coeffect-lab",
        description="Sharing coeffects and modifiers for a small "
                    "object-oriented calculus.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="type a program and print its judgment")
    c.add_argument("file")
    c.add_argument("--system", choices=("sharing", "modifiers"),
                   default="sharing")
    c.add_argument("--env", help="free-variable types: x=C,y=B@read,n=int")
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=cmd_check)

    r = sub.add_parser("run", help="reduce a program in an initial memory")
    r.add_argument("file")
    r.add_argument("--mem", help="JSON memory file")
    r.add_argument("--trace", action="store_true",
                   help="print one JSON line per step")
    r.add_argument("--budget", type=int, default=100000)
    r.set_defaults(fn=cmd_run)

    v = sub.add_parser("verify", help="run theorem suites")
    v.add_argument("file", nargs="?",
                   help="single program to verify (default: full suites)")
    v.add_argument("--theorem", choices=("sr", "capsule", "imm"))
    v.add_argument("--mem", help="JSON memory file (with a program file)")
    v.add_argument("--ref", help="reference to pin imm (--theorem imm)")
    v.add_argument("--count", type=int, default=200,
                   help="random cases per suite")
    v.add_argument("--seed", type=int)
    v.add_argument("--json", action="store_true")
    v.add_argument("--junit", help="write a JUnit XML report here")
    v.set_defaults(fn=cmd_verify)

    l = sub.add_parser("lambda", help="grade a term of the demo calculus")
    l.add_argument("file")
    l.add_argument("--semiring", choices=("zow", "nat"), default="zow")
    l.add_argument("--cbv", action="store_true")
    l.add_argument("--json", action="store_true")
    l.set_defaults(fn=cmd_lambda)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
