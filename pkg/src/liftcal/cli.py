"""Command-line frontend: analyze, reconfigure, check, bench.

Exit codes: 0 success, 1 usage or parse error, 2 semantic error,
3 property-check failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

from . import abstraction as ab
from . import featexp, lang, oracle
from .abstracted import analyze_abstracted, build_dataflow, solve_dataflow
from .errors import LiftcalError, ParseError, SemanticError
from .featexp import FeatureModel, FeatureSpace, valid_configs
from .lattice import LiftedStore, lattice_by_name, render_value
from .lifted import analyze_lifted, entry_store
from .reconfig import reconfigure, render_renames

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SEMANTIC = 2
EXIT_PROPERTY = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit2(message)


class SystemExit2(Exception):
    def __init__(self, message):
        self.message = message
        super().__init__(message)


def _load_program(path):
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return lang.parse_program(text)


def _parse_abs(text, space):
    return ab.parse_abstraction(text, space)


def _rows(configs, stores, variables):
    rows = []
    for phi, store in zip(configs.formulas, stores):
        rendered = featexp.render(phi, compact=True)
        cells = ", ".join(f"{x}={render_value(store.get(x))}" for x in variables)
        rows.append(f"{rendered}: {cells}")
    return rows


def _result_json(configs, stores, variables, renames):
    return {
        "configs": [featexp.render(phi, compact=True) for phi in configs.formulas],
        "results": [
            {
                "config": featexp.render(phi, compact=True),
                "store": {x: render_value(store.get(x)) for x in variables},
            }
            for phi, store in zip(configs.formulas, stores)
        ],
        "renames": {
            name: featexp.render(meaning, compact=True)
            for name, meaning in renames.items()
        },
    }


def cmd_analyze(args):
    program = _load_program(args.file)
    lattice = lattice_by_name(args.lattice)
    configs = valid_configs(program.feature_model)
    variables = lang.program_vars(program)
    entry = entry_store(configs, lattice, args.init)
    renames = {}
    if args.abs:
        alpha = _parse_abs(args.abs, program.feature_model.space)
        entry = ab.alpha_apply(alpha, configs, entry, lattice)
        renames = ab.abstract_configs(
            alpha, program.feature_model.space, configs
        ).renames
    if args.dataflow:
        system = build_dataflow(program.body, configs=entry.configs, lattice=lattice)
        solution = solve_dataflow(system, entry)
        if args.format == "json":
            payload = {
                "labels": {
                    str(label): {
                        "statement": type(system.statements[label]).__name__.lower(),
                        "in": _result_json(inp.configs, inp.stores, variables, renames),
                        "out": _result_json(out.configs, out.stores, variables, renames),
                    }
                    for label, (inp, out) in sorted(solution.items())
                }
            }
            print(json.dumps(payload, indent=2))
        else:
            for label in sorted(solution):
                inp, out = solution[label]
                kind = type(system.statements[label]).__name__.lower()
                print(f"label {label} ({kind})")
                for row in _rows(inp.configs, inp.stores, variables):
                    print(f"  in  {row}")
                for row in _rows(out.configs, out.stores, variables):
                    print(f"  out {row}")
        return EXIT_OK
    if args.abs:
        result = analyze_abstracted(program.body, entry)
    else:
        result = analyze_lifted(program.body, entry)
    if args.format == "json":
        print(json.dumps(_result_json(result.configs, result.stores, variables, renames), indent=2))
    else:
        for row in _rows(result.configs, result.stores, variables):
            print(row)
    return EXIT_OK


def cmd_reconfigure(args):
    program = _load_program(args.file)
    alpha = _parse_abs(args.abs, program.feature_model.space)
    rewritten, renames = reconfigure(program, alpha, simplify=args.simplify)
    text = lang.pretty(rewritten)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        print(text, end="")
    if args.renames:
        with open(args.renames, "w", encoding="utf-8") as handle:
            handle.write(render_renames(renames))
    elif renames and not args.output:
        sys.stderr.write(render_renames(renames))
    return EXIT_OK


def cmd_check(args):
    lattice = lattice_by_name(args.lattice)
    if args.file:
        if not args.abs:
            raise SystemExit2("check on a program file requires --abs")
        program = _load_program(args.file)
        alpha = _parse_abs(args.abs, program.feature_model.space)
        report = oracle.check_instance(
            program, alpha, seed=args.seed, cases=args.cases, lattice=lattice
        )
    else:
        report = oracle.check_all(args.seed, cases=args.cases, lattice=lattice)
    if args.format == "json":
        print(report.to_json())
    else:
        print(report.render_text(), end="")
    return EXIT_OK if report.passed else EXIT_PROPERTY


def _bench_program(n):
    names = tuple(f"A{i}" for i in range(1, n + 1))
    space = FeatureSpace(names if names else ("A1",))
    psi = featexp.TRUE
    stmts = [lang.Assign("x", lang.Num(0))]
    for name in names:
        stmts.append(
            lang.IfDef(
                featexp.Atom(name),
                lang.Assign("x", lang.BinOp("+", lang.Var("x"), lang.Num(1))),
            )
        )
    body = lang.relabel(lang.seq_all(stmts))
    if not names:
        # n = 0: a single configuration over a one-feature space with A1 forced off
        return lang.Program(FeatureModel(space, featexp.Not(featexp.Atom("A1"))), body)
    return lang.Program(FeatureModel(space, psi), body)


def _time(thunk):
    start = time.perf_counter()
    result = thunk()
    return result, time.perf_counter() - start


def cmd_bench(args):
    if args.features > 20:
        raise SystemExit2("bench refuses more than 20 features")
    lattice = lattice_by_name(args.lattice)
    program = _bench_program(args.features)
    configs = valid_configs(program.feature_model)
    entry = LiftedStore.top(configs, lattice)
    space = program.feature_model.space

    _, lifted_time = _time(lambda: analyze_lifted(program.body, entry))

    # entry stores are prepared outside the timed region on both sides
    join_alpha = ab.Join()
    join_entry = ab.alpha_apply(join_alpha, configs, entry, lattice)
    _, join_time = _time(lambda: analyze_abstracted(program.body, join_entry))
    half = featexp.Atom(space.features[0])
    medium_alpha = ab.Product(ab.Proj(half), ab.JoinPhi(featexp.Not(half)))
    medium_entry = ab.alpha_apply(medium_alpha, configs, entry, lattice)
    _, medium_time = _time(lambda: analyze_abstracted(program.body, medium_entry))

    def ratio(t):
        return lifted_time / t if t > 0 else float("inf")

    print(f"features: {args.features}  configurations: {len(configs)}")
    print(f"{'analysis':<22}{'time':>12}{'speedup':>10}")
    print(f"{'lifted':<22}{lifted_time * 1000:>10.2f}ms{1.0:>10.1f}")
    print(f"{'abstracted join':<22}{join_time * 1000:>10.2f}ms{ratio(join_time):>10.1f}")
    print(f"{'abstracted proj|join':<22}{medium_time * 1000:>10.2f}ms{ratio(medium_time):>10.1f}")
    return EXIT_OK


def build_parser():
    parser = _Parser(prog="liftcal", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="run the lifted or abstracted analysis")
    analyze.add_argument("file")
    analyze.add_argument("--abs", help="abstraction spec, e.g. 'proj(A) >> join'")
    analyze.add_argument("--lattice", choices=("const", "constplus"), default="const")
    analyze.add_argument("--init", choices=("top", "bot"), default="top")
    analyze.add_argument("--dataflow", action="store_true", help="solve per-label equations")
    analyze.add_argument("--format", choices=("text", "json"), default="text")
    analyze.set_defaults(func=cmd_analyze)

    reconf = sub.add_parser("reconfigure", help="rewrite a program under an abstraction")
    reconf.add_argument("file")
    reconf.add_argument("--abs", required=True)
    reconf.add_argument("--simplify", action="store_true")
    reconf.add_argument("-o", "--output")
    reconf.add_argument("--renames", help="write the fresh-name table to this file")
    reconf.set_defaults(func=cmd_reconfigure)

    check = sub.add_parser("check", help="run the property suites")
    check.add_argument("file", nargs="?")
    check.add_argument("--abs")
    check.add_argument("--cases", type=int, default=200)
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--lattice", choices=("const", "constplus"), default="const")
    check.add_argument("--format", choices=("text", "json"), default="text")
    check.set_defaults(func=cmd_check)

    bench = sub.add_parser("bench", help="time lifted vs abstracted on a synthetic family")
    bench.add_argument("--features", type=int, required=True)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--lattice", choices=("const", "constplus"), default="const")
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit2 as exc:
        print(f"error: {exc.message}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SemanticError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC
    except LiftcalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SEMANTIC


if __name__ == "__main__":
    sys.exit(main())
