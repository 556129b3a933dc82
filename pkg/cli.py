"""
cli.py
======
``graphdsl`` command-line entry point.

Subcommands
-----------
compile    DSL source -> backend sources, checked structurally; optional
           analysis report and vendor-compiler verification
run        interpret a program on an edge-list graph and print the final state
check      interpret a corpus program and compare it against its oracle
analyze    print the transfer, reduction and fixed-point analyses as YAML
gen-graph  write a seeded uniform or RMAT edge list

Exit codes: 0 success, 1 diagnostics or a failed check, 2 usage error.
Diagnostics go to stderr as ``file:line:col: severity: message``; set
``GRAPHDSL_COLOR=0|1`` to force coloring off or on.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from codegen import BackendKind, CodegenConfig, generate, load_codegen_config
from constants import DEFAULT_MAX_WEIGHT, DEFAULT_MIN_WEIGHT, RMAT_A, RMAT_B, RMAT_C, RMAT_D
from corpus import default_args, find_entry, list_corpus
from csr import degree_summary, format_edge_list, generate_graph, load_edge_list
from errors import DslError, UnknownCorpusEntry, use_color
from frontend import parse_source
from interpreter import run
from oracles import compare, run_oracle
from semantic import AnnotatedProgram, analysis_report, analyze, type_check
from structural_check import structural_check
from toolchain import compile_unit


def _log(args, message: str):
    if getattr(args, "verbose", False):
        print(f"[CLI] {message}", file=sys.stderr)


def _key_value(text: str) -> tuple[str, str]:
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got '{text}'")
    return key.strip(), value.strip()


# ── Pipeline helpers ─────────────────────────────────────────────────────────

def _load_program(args, entry: str | None = None) -> AnnotatedProgram:
    source = Path(args.program).read_text(encoding="utf-8")
    program = parse_source(source)
    annotated = type_check(program, entry=entry, debug=args.verbose)
    _log(args, f"type-checked {annotated.entry.name} from {args.program}")
    return annotated


def _load_graph(args):
    try:
        graph = load_edge_list(args.graph, directed=True if args.directed else None)
    except DslError as exc:
        exc.file = args.graph
        raise
    _log(args, f"loaded {graph!r} from {args.graph}")
    return graph


def _print_warnings(args, analyses, color: bool) -> None:
    for warning in analyses.warnings:
        warning.file = args.program
        print(warning.format(color), file=sys.stderr)


def _overrides(args) -> dict:
    return dict(args.arg or [])


def _oracle_params(annotated: AnnotatedProgram, params: dict) -> dict:
    """Node-set arguments given on the command line as "1,4,7" become lists."""
    sets = {p.name for p in annotated.params if p.kind == "node-set"}
    result = dict(params)
    for key, value in params.items():
        if key in sets and isinstance(value, str) and value != "all":
            result[key] = [int(v) for v in value.split(",") if v]
    return result


# ── Subcommands ──────────────────────────────────────────────────────────────

def cmd_compile(args) -> int:
    annotated = _load_program(args, entry=args.function)
    analyses = analyze(annotated, debug=args.verbose)
    _print_warnings(args, analyses, use_color())
    cfg = load_codegen_config(args.config) if args.config else CodegenConfig()
    if args.num_threads is not None:
        cfg = replace(cfg, num_threads=args.num_threads).validate()
    backends = list(BackendKind) if args.backend == "all" else [BackendKind.parse(args.backend)]
    out = Path(args.out)
    name = Path(args.program).stem
    status = 0
    for backend in backends:
        unit = generate(annotated, analyses, backend, cfg, name=name, debug=args.verbose)
        for path in unit.write(out):
            print(path)
        report = structural_check(unit, analyses, debug=args.verbose)
        if not report.ok:
            print(report.format(), file=sys.stderr)
            status = 1
        if args.verify:
            result = compile_unit(unit, out, debug=args.verbose)
            if result is None:
                print(f"{backend.label}: no compiler found, skipping verification",
                      file=sys.stderr)
            else:
                print(result.format(), file=sys.stderr)
                if not result.ok:
                    status = 1
    if args.emit_analysis:
        path = out / f"{name}_analysis.yml"
        path.write_text(analysis_report(analyses, file=args.program), encoding="utf-8")
        print(path)
    return status


def cmd_run(args) -> int:
    annotated = _load_program(args, entry=args.function)
    graph = _load_graph(args)
    entry = find_entry(Path(args.program))
    params = default_args(entry, graph, _overrides(args)) if entry else _overrides(args)
    store = run(annotated, graph, params, mode=args.mode, threads=args.threads,
                max_iterations=args.max_iter, debug=args.verbose)
    for line in store.as_lines():
        print(line)
    return 0


def cmd_check(args) -> int:
    annotated = _load_program(args)
    entry = find_entry(Path(args.program))
    if entry is None:
        entry = next((e for e in list_corpus() if e.function == annotated.entry.name), None)
    if entry is None:
        raise UnknownCorpusEntry(f"'{annotated.entry.name}' is not a corpus program; "
                                 f"check needs an oracle")
    graph = _load_graph(args)
    params = default_args(entry, graph, _overrides(args))
    store = run(annotated, graph, params, mode=args.mode, threads=args.threads,
                debug=args.verbose)
    if entry.output == "return":
        actual = store.return_value
    else:
        actual = store.properties[entry.output]
    expected = run_oracle(entry.oracle, graph, _oracle_params(annotated, params))
    report = compare(entry.oracle, actual, expected.values)
    if entry.output == "return":
        print(f"{entry.name}: interpreter {actual} oracle {expected.values}")
    print(report.format())
    return 0 if report.passed else 1


def cmd_analyze(args) -> int:
    annotated = _load_program(args, entry=args.function)
    analyses = analyze(annotated, debug=args.verbose)
    _print_warnings(args, analyses, use_color())
    text = analysis_report(analyses, file=args.program)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(args.out)
    else:
        sys.stdout.write(text)
    return 0


def cmd_gen_graph(args) -> int:
    graph = generate_graph(args.kind, args.nodes, args.edges, args.seed, directed=args.directed,
                           min_weight=args.min_weight, max_weight=args.max_weight,
                           a=args.a, b=args.b, c=args.c, d=args.d)
    text = format_edge_list(graph)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        _log(args, f"wrote {graph!r} to {args.out}")
    else:
        sys.stdout.write(text)
    if args.summary:
        sys.stderr.write(yaml.safe_dump(degree_summary(graph), sort_keys=False))
    return 0


# ── Parser ───────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    # -v is accepted before or after the subcommand; SUPPRESS keeps the
    # subcommand default from overwriting a global -v
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log pipeline stages to stderr")

    parser = argparse.ArgumentParser(
        prog="graphdsl", description="Compile, interpret and check graph DSL programs.")
    parser.add_argument("-v", "--verbose", action="store_true",
                        help="log pipeline stages to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("compile", parents=[common], help="generate backend sources")
    p.add_argument("program")
    p.add_argument("--backend", required=True,
                   choices=[b.value for b in BackendKind] + ["all"])
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit-analysis", action="store_true",
                   help="also write <program>_analysis.yml")
    p.add_argument("--num-threads", type=int, default=None)
    p.add_argument("--config", help="YAML file of codegen options")
    p.add_argument("--function", help="entry function (default: the first)")
    p.add_argument("--verify", action="store_true",
                   help="compile the output when a vendor compiler is installed")
    p.set_defaults(handler=cmd_compile)

    def graph_options(p: argparse.ArgumentParser):
        p.add_argument("program")
        p.add_argument("--graph", required=True, help="edge-list file")
        p.add_argument("--arg", action="append", type=_key_value, metavar="NAME=VALUE",
                       help="program argument; repeatable")
        p.add_argument("--mode", choices=["seq", "par"], default="seq")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads in par mode (default: physical cores)")
        p.add_argument("--directed", action="store_true",
                       help="load the graph as directed regardless of its header")

    p = sub.add_parser("run", parents=[common], help="interpret a program")
    graph_options(p)
    p.add_argument("--function", help="entry function (default: the first)")
    p.add_argument("--max-iter", type=int, default=None,
                   help="fixedPoint iteration cap (default: 10 * V + 100)")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("check", parents=[common], help="compare a corpus program with its oracle")
    graph_options(p)
    p.set_defaults(handler=cmd_check)

    p = sub.add_parser("analyze", parents=[common], help="print the static analyses")
    p.add_argument("program")
    p.add_argument("--function", help="entry function (default: the first)")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.set_defaults(handler=cmd_analyze)

    p = sub.add_parser("gen-graph", parents=[common], help="write a synthetic edge list")
    p.add_argument("--kind", choices=["uniform", "rmat"], required=True)
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--edges", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--a", type=float, default=RMAT_A)
    p.add_argument("--b", type=float, default=RMAT_B)
    p.add_argument("--c", type=float, default=RMAT_C)
    p.add_argument("--d", type=float, default=RMAT_D)
    p.add_argument("--directed", action="store_true")
    p.add_argument("--min-weight", type=int, default=DEFAULT_MIN_WEIGHT)
    p.add_argument("--max-weight", type=int, default=DEFAULT_MAX_WEIGHT)
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--summary", action="store_true",
                   help="print node/edge/degree statistics to stderr")
    p.set_defaults(handler=cmd_gen_graph)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    color = use_color()
    try:
        return args.handler(args)
    except DslError as exc:
        label = getattr(exc, "file", None) or getattr(args, "program", None) or "graphdsl"
        print(exc.to_diagnostic(label).format(color), file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"graphdsl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
