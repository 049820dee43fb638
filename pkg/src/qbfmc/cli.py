"""Command-line entry point.

Exit codes: 0 the property holds, 1 it fails, 2 usage or input error,
3 timeout or unknown (including non-exact bounded checks).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import benchgen, corpus, oracle, report, sml, solverio
from . import qctl as q
from .kripke import KriParseError, KripkeError, parse_kripke
from .qbf import QbfCircuit, emit_qcir, emit_smt
from .reduction import (STRATEGIES, ReductionConfig, ShapeError,
                        UNIQ_BITVEC, UNIQ_DISJ, UNIQ_QCTL, reduce_to_qbf)

_UNIQ_CLI = {"qctl": UNIQ_QCTL, "disj": UNIQ_DISJ, "bitvec": UNIQ_BITVEC}

EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


class CliError(Exception):
    pass


def _load_structure(path: str):
    try:
        return parse_kripke(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise CliError(f"cannot read structure: {exc}")
    except (KriParseError, KripkeError) as exc:
        raise CliError(f"{path}: {exc}")


def _load_formula(args) -> q.Formula:
    if args.formula and args.formula_file:
        raise CliError("give either -f or --formula-file, not both")
    if args.formula:
        text = args.formula
    elif args.formula_file:
        try:
            text = Path(args.formula_file).read_text(encoding="utf-8")
        except OSError as exc:
            raise CliError(f"cannot read formula: {exc}")
    else:
        raise CliError("a formula is required (-f or --formula-file)")
    try:
        return q.parse_qctl(text)
    except q.QctlParseError as exc:
        raise CliError(f"formula: {exc}")


def _solver(args) -> solverio.SolverSpec:
    name = args.solver
    specs = {"naive": solverio.NAIVE}
    cfg = getattr(args, "solvers_config", None)
    if cfg:
        try:
            specs = solverio.load_solver_config(cfg)
        except OSError as exc:
            raise CliError(f"cannot read solver config: {exc}")
    if name not in specs:
        raise CliError(f"unknown solver {name!r}; configured: {sorted(specs)}")
    return specs[name]


def _config(args, strategy: str) -> ReductionConfig:
    return ReductionConfig(strategy=strategy,
                           uniq_encoding=_UNIQ_CLI[args.uniq],
                           fbv_bound=args.fbv_bound)


def _check_one(struct, x, phi, strategy, args, spec) -> dict:
    t0 = time.monotonic()
    circuit = reduce_to_qbf(struct, x, phi, _config(args, strategy))
    translate_s = time.monotonic() - t0
    if spec.is_builtin:
        t1 = time.monotonic()
        try:
            ok = oracle.eval_qbf(circuit, var_cap=spec.naive_var_cap,
                                 timeout=args.timeout)
            verdict = "valid" if ok else "invalid"
        except oracle.OracleTimeout:
            verdict = "timeout"
        except oracle.BudgetExceeded as exc:
            raise CliError(str(exc))
        solve_s = time.monotonic() - t1
    else:
        outdir = Path(args.output or ".")
        outdir.mkdir(parents=True, exist_ok=True)
        ext = "smt2" if spec.input_format == "smt" else "qcir"
        path = outdir / f"{args.name}__{strategy}.{ext}"
        path.write_text(emit_smt(circuit) if ext == "smt2" else emit_qcir(circuit),
                        encoding="utf-8")
        res = solverio.run_solver(spec, path, args.timeout, prenex=circuit.prenex)
        verdict, solve_s = res.verdict, res.solve_time
    if not circuit.meta.get("exact", True) and verdict == "invalid":
        verdict = "unknown"
    return {
        "instance": args.name,
        "strategy": strategy,
        "verdict": verdict,
        "translate_s": round(translate_s, 4),
        "solve_s": round(solve_s, 4),
        "qbf_vars": circuit.var_count(),
        "qbf_gates": circuit.gate_count(),
    }


def _verdict_exit(verdict: str) -> int:
    return {"valid": EXIT_HOLDS, "invalid": EXIT_FAILS}.get(verdict, EXIT_UNKNOWN)


def cmd_check(args) -> int:
    struct = _load_structure(args.kripke)
    phi = _load_formula(args)
    return _run_check(struct, phi, args)


def _run_check(struct, phi, args) -> int:
    spec = _solver(args)
    x = args.state or struct.initial
    strategies = list(STRATEGIES) if args.strategy == "all" else [args.strategy]
    results = []
    for strat in strategies:
        try:
            results.append(_check_one(struct, x, phi, strat, args, spec))
        except q.NotPrenexable:
            if args.strategy == "all":
                continue  # the flat strategies simply do not apply
            raise
    if not results:
        raise CliError("no applicable strategy produced a result")
    verdicts = {r["verdict"] for r in results if r["verdict"] != "timeout"}
    if args.strategy == "all" and len(verdicts - {"unknown"}) > 1:
        print(json.dumps(results, indent=2), file=sys.stderr)
        raise CliError("strategies disagree; this is a reduction bug")
    out = results if args.strategy == "all" else results[0]
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for r in results:
            print(f"{r['strategy']}: {r['verdict']} "
                  f"({r['translate_s']}s + {r['solve_s']}s, "
                  f"{r['qbf_vars']} vars, {r['qbf_gates']} gates)")
    main_verdict = next((v for v in ("invalid", "valid")
                         if v in verdicts), "unknown")
    return _verdict_exit(main_verdict)


def cmd_translate(args) -> int:
    struct = _load_structure(args.kripke)
    phi = _load_formula(args)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    strategies = list(STRATEGIES) if args.strategy == "all" else [args.strategy]
    written = []
    for strat in strategies:
        circuit = reduce_to_qbf(struct, args.state or struct.initial, phi,
                                _config(args, strat))
        if args.format in ("qcir", "both"):
            p = outdir / f"{args.name}__{strat}.qcir"
            p.write_text(emit_qcir(circuit), encoding="utf-8")
            written.append(str(p))
        if args.format in ("smt", "both"):
            p = outdir / f"{args.name}__{strat}.smt2"
            p.write_text(emit_smt(circuit), encoding="utf-8")
            written.append(str(p))
    for w in written:
        print(w)
    return EXIT_HOLDS


def cmd_oracle(args) -> int:
    struct = _load_structure(args.kripke)
    x = args.state or struct.initial
    if args.sml:
        if not args.formula:
            raise CliError("--sml needs an inline formula (-f)")
        try:
            phi = sml.parse_sml(args.formula)
        except sml.SmlParseError as exc:
            raise CliError(f"formula: {exc}")
        ok = oracle.mc_sml(struct, x, phi)
    else:
        phi = _load_formula(args)
        try:
            ok = oracle.holds(struct, x, phi, budget=args.budget)
        except oracle.BudgetExceeded as exc:
            raise CliError(str(exc))
    verdict = "valid" if ok else "invalid"
    if args.json:
        print(json.dumps({"instance": args.name, "state": x, "verdict": verdict}))
    else:
        print(verdict)
    return EXIT_HOLDS if ok else EXIT_FAILS


def _gen_instances(args) -> list[benchgen.BenchInstance]:
    fam = args.family
    if fam == "reset":
        return [benchgen.gen_reset(args.n, args.k, args.m)]
    if fam == "kconn":
        variants = ["psi", "phi"] if args.variant == "both" else [args.variant]
        return [benchgen.gen_kconn(args.n, args.m, args.k, v) for v in variants]
    if fam == "nim":
        heaps = [int(h) for h in args.heaps.split(",") if h]
        return [benchgen.gen_nim(heaps, args.player)]
    if fam == "resources":
        return [benchgen.gen_resources(args.n, args.m, args.k, args.d)]
    raise CliError(f"unknown family {fam!r}")


def cmd_gen(args) -> int:
    if args.family == "corpus":
        rng_instances = corpus.random_instances(args.seed, args.count,
                                                prenex=not args.free_shape)
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        for i, (struct, phi) in enumerate(rng_instances):
            try:
                expected = oracle.holds(struct, struct.initial, phi)
            except oracle.BudgetExceeded:
                expected = None
            inst = benchgen.BenchInstance(
                name=f"corpus_{args.seed}_{i:04d}", structure=struct,
                formula=phi, expected=expected,
                provenance=f"semantic oracle (seed {args.seed})",
                params={"seed": args.seed, "index": i})
            for path in benchgen.write_instance(inst, outdir):
                print(path)
        return EXIT_HOLDS
    try:
        instances = _gen_instances(args)
    except benchgen.GeneratorError as exc:
        raise CliError(str(exc))
    for inst in instances:
        for path in benchgen.write_instance(inst, args.output):
            print(path)
    return EXIT_HOLDS


def cmd_bench(args) -> int:
    stems = []
    for d in args.instances:
        base = Path(d)
        if base.is_dir():
            stems += sorted(base.glob("*.expected.json"))
        else:
            raise CliError(f"not a directory: {d}")
    if not stems:
        raise CliError("no instances found (need *.expected.json triads)")
    loaded = []
    for meta_path in stems:
        stem = str(meta_path)[: -len(".expected.json")]
        struct, phi, meta = benchgen.read_instance(stem)
        loaded.append((meta["name"], struct, phi, meta["expected"]))
    spec = _solver(args)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    for s in strategies:
        if s not in STRATEGIES:
            raise CliError(f"unknown strategy {s!r}")
    outdir = Path(args.output)
    try:
        rows = solverio.bench_run(loaded, strategies, spec, outdir,
                                  timeout=args.timeout, jobs=args.jobs,
                                  check_expected=not args.no_check)
    except solverio.SolverError as exc:
        raise CliError(str(exc))
    table = solverio.format_report(rows)
    (outdir / "report.txt").write_text(table, encoding="utf-8")
    (outdir / "report.csv").write_text(solverio.report_csv(rows),
                                       encoding="utf-8")
    print(table, end="")
    if not args.no_figure:
        fig = report.render_bench_figure(rows, outdir / "report.png")
        print(f"figure: {fig}")
    return EXIT_HOLDS


def cmd_sml_check(args) -> int:
    struct = _load_structure(args.kripke)
    try:
        phi_sml = sml.parse_sml(args.formula)
    except sml.SmlParseError as exc:
        raise CliError(f"formula: {exc}")
    expanded = sml.expand_structure(struct)
    phi = sml.translate_sml(phi_sml, 0)
    args.state = args.state or struct.initial
    return _run_check(expanded, phi, args)


def _add_common(p, with_solver=True):
    p.add_argument("-k", "--kripke", required=True, help="structure file (.kri)")
    p.add_argument("-f", "--formula", help="inline formula text")
    p.add_argument("--formula-file", help="formula file")
    p.add_argument("--state", help="evaluation state (default: initial)")
    p.add_argument("--name", default="instance", help="instance name for outputs")
    p.add_argument("--json", action="store_true", help="machine-readable result")
    if with_solver:
        p.add_argument("--strategy", default="pnf",
                       choices=list(STRATEGIES) + ["all"])
        p.add_argument("--uniq", default="bitvec", choices=sorted(_UNIQ_CLI),
                       help="encoding of the uniq quantifiers")
        p.add_argument("--fbv-bound", type=int, default=None,
                       help="distance bound for fbv (default |V|; smaller is "
                            "a one-sided bounded check)")
        p.add_argument("--solver", default="naive")
        p.add_argument("--solvers-config", help="TOML file describing solvers")
        p.add_argument("--timeout", type=float, default=600.0)
        p.add_argument("-o", "--output", help="directory for emitted files")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="qbfmc",
        description="QCTL model checking over Kripke structures via QBF")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide K, x |= phi with one strategy")
    _add_common(p)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("translate", help="emit solver-ready QCIR/SMT files")
    _add_common(p)
    p.add_argument("--format", default="qcir", choices=["qcir", "smt", "both"])
    p.set_defaults(fn=cmd_translate)
    p.set_defaults(output_required=True)

    p = sub.add_parser("oracle", help="decide by direct semantic enumeration")
    _add_common(p, with_solver=False)
    p.add_argument("--budget", type=int, default=2_000_000)
    p.add_argument("--sml", action="store_true",
                   help="treat the formula as sabotage modal logic")
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("gen", help="generate benchmark instances")
    gsub = p.add_subparsers(dest="family", required=True)
    g = gsub.add_parser("reset")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g = gsub.add_parser("kconn")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--variant", default="both", choices=["psi", "phi", "both"])
    g = gsub.add_parser("nim")
    g.add_argument("--heaps", required=True, help="comma-separated counts")
    g.add_argument("--player", type=int, default=1, choices=[1, 2])
    g = gsub.add_parser("resources")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--k", type=int, required=True)
    g.add_argument("--d", type=int, required=True)
    g = gsub.add_parser("corpus")
    g.add_argument("--count", type=int, default=50)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--free-shape", action="store_true",
                   help="allow quantifiers below the top Boolean level")
    for g in gsub.choices.values():
        g.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("bench", help="run instances x strategies, write report")
    p.add_argument("-i", "--instances", nargs="+", required=True,
                   help="directories of generated instances")
    p.add_argument("--strategies", default="pnf")
    p.add_argument("--solver", default="naive")
    p.add_argument("--solvers-config")
    p.add_argument("--timeout", type=float, default=600.0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-check", action="store_true",
                   help="do not fail on expected-verdict mismatches")
    p.add_argument("--no-figure", action="store_true")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("sml-check", help="sabotage logic via expansion + reduction")
    _add_common(p)
    p.set_defaults(fn=cmd_sml_check)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "output_required", False) and not args.output:
        print("error: -o/--output is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (q.NotPrenexable, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except oracle.OracleTimeout:
        print("timeout", file=sys.stderr)
        return EXIT_UNKNOWN


if __name__ == "__main__":
    sys.exit(main())
