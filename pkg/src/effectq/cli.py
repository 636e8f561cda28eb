"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 law failure or type
error, 3 a run that violated safety or its interpretation.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Callable, Optional

from . import instances as inst_mod
from .checker import TypingError, infer
from .effects import EffectError, ground_value, show as show_eff
from .kleene import as_effect_quantale, regular_language_ka
from .parser import ParseError, parse_program
from .quantale import (LawReport, MissingEnumerator, check_laws, check_star_laws,
                       derive_star_finite)
from .regex import RegexSyntaxError, regex_quantale
from .runtime import DEFAULT_FUEL, monitor_safety
from .systems import (FragmentError, atomicity_instantiation, history_instantiation,
                      locking_atomicity_instantiation, parse_lambda_trace, show_lambda_trace,
                      translate_lambda_trace)
from .terms import TForall, TPi, show_term, show_type

EXIT_OK, EXIT_USAGE, EXIT_FAIL, EXIT_UNSAFE = 0, 1, 2, 3

DEFAULT_ALPHABET = "a,b"


def _quantales(alphabet: tuple) -> dict:
    return {
        "atomicity": inst_mod.atomicity,
        "crit": inst_mod.crit,
        "lockset": inst_mod.lockset,
        "dl": inst_mod.deadlock,
        "regex": lambda: regex_quantale(alphabet),
        "history": lambda: regex_quantale(alphabet),
        "count": inst_mod.count,
        "product": lambda: inst_mod.product(inst_mod.atomicity(), inst_mod.crit()),
        "lift": lambda: inst_mod.lift_semilattice(inst_mod.powerset_lattice(alphabet)),
        "ka-regex": lambda: as_effect_quantale(regular_language_ka(alphabet)),
        "lockatom": lambda: inst_mod.product(inst_mod.lockset(), inst_mod.atomicity()),
    }


SYSTEMS = tuple(_quantales(("a",)))
LANGUAGES = ("lockatom", "atomicity", "history", "ka-regex")


class UsageError(Exception):
    pass


def _instantiation(system: str, alphabet: tuple):
    match system:
        case "lockatom":
            return locking_atomicity_instantiation()
        case "atomicity":
            return atomicity_instantiation()
        case "history" | "regex" | "ka-regex":
            return history_instantiation(alphabet)
    raise UsageError(f"system {system!r} has no programming language; use one of {', '.join(LANGUAGES)}")


def _emit(args, doc: dict, pretty: Callable[[], str]) -> None:
    if args.json:
        print(json.dumps(doc, ensure_ascii=False, sort_keys=True))
    else:
        print(pretty())


def _read_input(args) -> str:
    if args.expr is not None:
        return args.expr
    if args.file is None:
        raise UsageError("give an input file or -e EXPR")
    try:
        with open(args.file, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {args.file}: {e.strerror}") from None


def _render_effect(sig, e) -> str:
    g = ground_value(sig, e)
    return sig.show(g) if g is not None else show_eff(sig, e)


def innermost_latent(ty):
    """The latent effect of the last arrow reached through codomains."""
    latent = None
    while True:
        match ty:
            case TPi(_, _, eff, cod):
                latent, ty = eff, cod
            case TForall(_, _, _, body):
                ty = body
            case _:
                return latent


# --------------------------------------------------------------------------
# Commands


def cmd_laws(args) -> int:
    q = _quantales(args.alphabet)[args.system]()
    samples = args.samples
    exhaustive = True if args.exhaustive else None
    if args.exhaustive and q.elements is None:
        raise UsageError(f"{q.name} is not finite; use --samples")
    if not args.exhaustive and samples is None and q.elements is None:
        samples = 1000
    report = check_laws(q, samples=samples, seed=args.seed, exhaustive=exhaustive, strict=args.strict)
    if q.star is not None:
        star_report = check_star_laws(q, samples=None if args.exhaustive else samples, seed=args.seed)
        report.merge(star_report)
    doc = report.to_json(q.show)
    _emit(args, doc, lambda: _pretty_report(report))
    return EXIT_OK if report.passed else EXIT_FAIL


def _pretty_report(r: LawReport) -> str:
    lines = [f"{r.system} [{r.mode}]"]
    for law in r.laws.values():
        mark = "ok" if law.passed else "FAIL"
        lines.append(f"  {mark:4} {law.name} ({law.checked} checked, {law.failed} failed)")
        for c in law.failures[:3]:
            lines.append(f"       counterexample: {c.witnesses}")
    lines.append("pass" if r.passed else "fail")
    return "\n".join(lines)


def cmd_star(args) -> int:
    q = _quantales(args.alphabet)[args.system]()
    if q.elements is not None:
        table = derive_star_finite(q)
        rows = [(x, table(x)) for x in q.elements]
        doc = table.to_json(q.show)
        if q.star is not None:
            doc["matches_instance"] = all(q.star(x) == y for x, y in rows)
    elif q.star is not None:
        rng = random.Random(args.seed)
        n = args.samples or 10
        xs = list(q.interesting) + [q.sample(rng) for _ in range(n)]
        rows = [(x, q.star(x)) for x in xs]
        doc = {"system": q.name, "star": {q.show(x): None if y is None else q.show(y) for x, y in rows},
               "laxly_iterable": None}
    else:
        raise UsageError(f"{q.name} is neither finite nor equipped with an iteration")
    doc["system"] = q.name

    def pretty():
        lines = [f"{q.name}:"]
        for x, y in rows:
            lines.append(f"  {q.show(x)} ↦ {'undefined' if y is None else q.show(y)}")
        return "\n".join(lines)
    _emit(args, doc, pretty)
    return EXIT_OK


def _parse(inst, text: str):
    prims = {p: inst.lang.arity_of(p) for p in inst.lang.delta}
    return parse_program(text, inst.sig, prims)


def cmd_check(args) -> int:
    inst = _instantiation(args.system, args.alphabet)
    program = _parse(inst, _read_input(args))
    res = infer(inst.lang, program)
    sig = inst.sig
    latent = innermost_latent(res.type)
    doc = {
        "type": show_type(res.type, sig.show),
        "effect": _render_effect(sig, res.effect),
        "latent": None if latent is None else _render_effect(sig, latent),
    }

    def pretty():
        lines = [f"type:   {doc['type']}", f"effect: {doc['effect']}"]
        if latent is not None:
            lines.append(f"latent: {doc['latent']}")
        return "\n".join(lines)
    _emit(args, doc, pretty)
    return EXIT_OK


def cmd_run(args) -> int:
    inst = _instantiation(args.system, args.alphabet)
    program = _parse(inst, _read_input(args))
    m = monitor_safety(inst, program, fuel=args.fuel, audit=args.audit)
    doc = m.to_json(inst.sig.show)
    doc["value"] = show_term(m.record.term)
    doc["final_state"] = inst.show_state(m.record.final_state)
    if m.audit is not None:
        doc["audit"] = str(m.audit)
    if not m.safety.ok:
        doc["detail"] = m.safety.detail

    def pretty():
        lines = [f"status:         {doc['status']} after {doc['steps']} steps",
                 f"result:         {doc['value']}",
                 f"final state:    {doc['final_state']}",
                 f"dynamic effect: {doc['dynamic_effect']}",
                 f"static effect:  {doc['static_effect']}",
                 f"safety:         {doc['safety']}",
                 f"interpretation: {doc['interpretation']}"]
        if "audit" in doc:
            lines.append(f"audit:          {doc['audit']}")
        return "\n".join(lines)
    _emit(args, doc, pretty)
    ok = m.safety.ok and getattr(m.interpretation, "ok", True) and (m.audit is None or m.audit.ok)
    ok = ok and m.record.status in ("Value", "OutOfFuel")
    return EXIT_OK if ok else EXIT_UNSAFE


def cmd_translate(args) -> int:
    src = parse_lambda_trace(_read_input(args), args.alphabet)
    core = translate_lambda_trace(src)
    doc = {"source": show_lambda_trace(src), "core": show_term(core)}
    _emit(args, doc, lambda: doc["core"])
    return EXIT_OK


COMMANDS = {"laws": cmd_laws, "star": cmd_star, "check": cmd_check, "run": cmd_run, "translate": cmd_translate}


# --------------------------------------------------------------------------
# Argument parsing


def _alphabet(text: str) -> tuple:
    syms = tuple(s.strip() for s in text.split(",") if s.strip())
    if not syms:
        raise argparse.ArgumentTypeError("alphabet must name at least one symbol")
    return syms


def _env_seed() -> int:
    raw = os.environ.get("EQ_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"EQ_SEED must be an integer, got {raw!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser(seed_default: int = 0) -> argparse.ArgumentParser:
    p = _Parser(prog="effectq", description="Sequential effect quantales: laws, iteration, typing, execution.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, systems=SYSTEMS, default=None):
        sp.add_argument("--system", choices=systems, default=default, required=default is None)
        sp.add_argument("--alphabet", type=_alphabet, default=_alphabet(DEFAULT_ALPHABET))
        sp.add_argument("--json", action="store_true")
        sp.add_argument("--seed", type=int, default=seed_default)

    sp = sub.add_parser("laws", help="run the effect-quantale and iteration law suites")
    common(sp)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--exhaustive", action="store_true")
    sp.add_argument("--strict", action="store_true", help="require associativity of definedness")

    sp = sub.add_parser("star", help="print the derived iteration table")
    common(sp)
    sp.add_argument("--samples", type=int)

    for name, hlp in (("check", "typecheck a program"), ("run", "typecheck, execute and monitor a program")):
        sp = sub.add_parser(name, help=hlp)
        common(sp, LANGUAGES)
        sp.add_argument("file", nargs="?")
        sp.add_argument("-e", "--expr")
        if name == "run":
            sp.add_argument("--fuel", type=int, default=DEFAULT_FUEL)
            sp.add_argument("--audit", action="store_true", help="re-typecheck after every step")

    sp = sub.add_parser("translate", help="translate a λ_trace term to the core calculus")
    sp.add_argument("file", nargs="?")
    sp.add_argument("-e", "--expr")
    sp.add_argument("--alphabet", type=_alphabet, default=_alphabet("a,b,c"))
    sp.add_argument("--json", action="store_true")
    return p


def main(argv: Optional[list] = None) -> int:
    try:
        args = build_parser(_env_seed()).parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, RegexSyntaxError, FragmentError, MissingEnumerator) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except TypingError as e:
        print(f"type error: {e}", file=sys.stderr)
        for line in e.trace:
            print(f"  in {line}", file=sys.stderr)
        return EXIT_FAIL
    except EffectError as e:
        print(f"type error: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
