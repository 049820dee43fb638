"""External QBF solver orchestration and result collection.

Solvers are external executables described in a TOML config file (see
README).  The naive circuit evaluator is registered as the built-in solver
"naive" so the whole pipeline runs with zero external dependencies at desk
scale.  Child processes run in their own session and the whole group is
killed on deadline, so timeouts leave no orphans.
"""

from __future__ import annotations

import os
import re
import signal
import subprocess
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib  # py311+
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .oracle import BudgetExceeded, OracleTimeout, eval_qbf
from .qbf import QbfCircuit, parse_qcir

__all__ = [
    "SolverSpec", "SolverResult", "SolverError", "BenchRow",
    "NAIVE", "load_solver_config", "run_solver", "bench_run",
    "format_report", "report_csv",
]


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverSpec:
    name: str
    executable: str = ""  # empty for the built-in evaluator
    input_format: str = "qcir"  # "qcir" | "smt"
    prenex_required: bool = False
    timeout: float = 600.0
    sat_pattern: str = r"^s?\s*(SATISFIABLE|SAT|sat)\b|^r\s+SAT"
    unsat_pattern: str = r"^s?\s*(UNSATISFIABLE|UNSAT|unsat)\b|^r\s+UNSAT"
    sat_exit_codes: tuple[int, ...] = ()
    unsat_exit_codes: tuple[int, ...] = ()
    extra_args: tuple[str, ...] = ()
    naive_var_cap: int = 64

    @property
    def is_builtin(self) -> bool:
        return self.name == "naive"


NAIVE = SolverSpec(name="naive")


@dataclass
class SolverResult:
    verdict: str  # valid | invalid | timeout | error | unknown
    translate_time: float = 0.0
    solve_time: float = 0.0
    raw: str = ""

    def __post_init__(self):
        if self.verdict not in ("valid", "invalid", "timeout", "error", "unknown"):
            raise ValueError(f"bad verdict {self.verdict!r}")
        if self.translate_time < 0 or self.solve_time < 0:
            raise ValueError("negative timing")


def load_solver_config(path) -> dict[str, SolverSpec]:
    """Read solver specs from TOML.  Executable paths can be overridden per
    solver with QBFMC_SOLVER_<NAME> environment variables."""
    with open(path, "rb") as fh:
        data = tomllib.load(fh)
    specs: dict[str, SolverSpec] = {"naive": NAIVE}
    for name, body in data.get("solver", {}).items():
        exe = os.environ.get(f"QBFMC_SOLVER_{name.upper()}",
                             body.get("executable", name))
        specs[name] = SolverSpec(
            name=name,
            executable=exe,
            input_format=body.get("format", "qcir"),
            prenex_required=bool(body.get("prenex_required", False)),
            timeout=float(body.get("timeout", 600.0)),
            sat_pattern=body.get("sat_pattern", SolverSpec.sat_pattern),
            unsat_pattern=body.get("unsat_pattern", SolverSpec.unsat_pattern),
            sat_exit_codes=tuple(body.get("sat_exit_codes", ())),
            unsat_exit_codes=tuple(body.get("unsat_exit_codes", ())),
            extra_args=tuple(body.get("args", ())),
        )
    return specs


def _run_naive(spec: SolverSpec, path: Path, timeout: float) -> SolverResult:
    start = time.monotonic()
    try:
        circuit = parse_qcir(path.read_text(encoding="utf-8"))
        verdict = "valid" if eval_qbf(circuit, var_cap=spec.naive_var_cap,
                                      timeout=timeout) else "invalid"
        return SolverResult(verdict, 0.0, time.monotonic() - start)
    except OracleTimeout:
        return SolverResult("timeout", 0.0, time.monotonic() - start)
    except BudgetExceeded as exc:
        return SolverResult("error", 0.0, time.monotonic() - start, str(exc))


def run_solver(spec: SolverSpec, circuit_file, timeout: float | None = None,
               prenex: bool | None = None) -> SolverResult:
    """Run one solver on one emitted file; never leaves a child behind."""
    path = Path(circuit_file)
    if not path.exists():
        raise SolverError(f"no such file: {path}")
    limit = timeout if timeout is not None else spec.timeout
    fmt = "smt" if path.suffix == ".smt2" else "qcir"
    if fmt != spec.input_format:
        raise SolverError(
            f"{spec.name} wants {spec.input_format}, got a {fmt} file")
    if spec.prenex_required and prenex is False:
        raise SolverError(f"{spec.name} requires prenex input")
    if spec.is_builtin:
        return _run_naive(spec, path, limit)

    start = time.monotonic()
    try:
        proc = subprocess.Popen(
            [spec.executable, *spec.extra_args, str(path)],
            stdout=subprocess.PIPE, stderr=subprocess.STDOUT,
            text=True, start_new_session=True)
    except OSError as exc:
        return SolverResult("error", 0.0, 0.0, f"spawn failed: {exc}")
    try:
        out, _ = proc.communicate(timeout=limit)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        proc.wait()
        return SolverResult("timeout", 0.0, time.monotonic() - start)
    elapsed = time.monotonic() - start
    out = out or ""
    if proc.returncode in spec.sat_exit_codes:
        return SolverResult("valid", 0.0, elapsed, out)
    if proc.returncode in spec.unsat_exit_codes:
        return SolverResult("invalid", 0.0, elapsed, out)
    for line in out.splitlines():
        if re.search(spec.unsat_pattern, line):
            return SolverResult("invalid", 0.0, elapsed, out)
        if re.search(spec.sat_pattern, line):
            return SolverResult("valid", 0.0, elapsed, out)
    return SolverResult("error", 0.0, elapsed,
                        f"unparseable output (exit {proc.returncode}):\n{out}")


# -- benchmark runs -------------------------------------------------------------


@dataclass
class BenchRow:
    instance: str
    strategy: str
    solver: str
    expected: str
    result: SolverResult

    @property
    def cell(self) -> str:
        """Table cell in translate+solve seconds, X for a timeout."""
        r = self.result
        if r.verdict == "timeout":
            return f"{_fmt_s(r.translate_time)}+X" if r.translate_time else "X"
        if r.verdict == "error":
            return "err"
        return f"{_fmt_s(r.translate_time)}+{_fmt_s(r.solve_time)}"


def _fmt_s(sec: float) -> str:
    return f"{sec:.1f}" if sec < 10 else f"{sec:.0f}"


def bench_run(instances, strategies, spec: SolverSpec, outdir,
              timeout: float | None = None, jobs: int = 1,
              check_expected: bool = True) -> list[BenchRow]:
    """Translate and solve every instance under every strategy.

    instances: iterable of (name, structure, formula, expected_verdict).
    Files go to outdir as <instance>__<strategy>.<ext>.  A verdict that
    contradicts the instance's expected field raises SolverError: that is a
    reduction bug, not a measurement.
    """
    from .qbf import emit_qcir, emit_smt
    from .reduction import ReductionConfig, reduce_to_qbf

    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = max(1, jobs)
    tasks = []
    for name, struct, phi, expected in instances:
        for strat in strategies:
            tasks.append((name, struct, phi, expected, strat))

    def run_one(task) -> BenchRow:
        name, struct, phi, expected, strat = task
        t0 = time.monotonic()
        try:
            circuit = reduce_to_qbf(struct, struct.initial, phi,
                                    ReductionConfig(strategy=strat))
            ext = "smt2" if spec.input_format == "smt" else "qcir"
            path = out / f"{name}__{strat}.{ext}"
            text = emit_smt(circuit) if ext == "smt2" else emit_qcir(circuit)
            path.write_text(text, encoding="utf-8")
        except Exception as exc:  # translation failure is a result, not a crash
            return BenchRow(name, strat, spec.name, expected,
                            SolverResult("error", time.monotonic() - t0, 0.0,
                                         f"translation failed: {exc}"))
        t_translate = time.monotonic() - t0
        res = run_solver(spec, path, timeout, prenex=circuit.prenex)
        res.translate_time = t_translate
        if not circuit.meta.get("exact", True) and res.verdict == "invalid":
            res.verdict = "unknown"
        return BenchRow(name, strat, spec.name, expected, res)

    if jobs == 1:
        rows = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_one, tasks))
    if check_expected:
        for row in rows:
            if row.expected in ("valid", "invalid") and \
                    row.result.verdict in ("valid", "invalid") and \
                    row.result.verdict != row.expected:
                raise SolverError(
                    f"{row.instance} [{row.strategy}/{row.solver}]: got "
                    f"{row.result.verdict}, expected {row.expected} "
                    "(reduction bug)")
    return rows


def format_report(rows: list[BenchRow]) -> str:
    """Aligned text table, one row per instance, one column per strategy."""
    strategies = sorted({r.strategy for r in rows})
    names = list(dict.fromkeys(r.instance for r in rows))
    cells = {(r.instance, r.strategy): r for r in rows}
    headers = ["instance", "expected"] + strategies
    table = []
    for name in names:
        expected = next(r.expected for r in rows if r.instance == name)
        line = [name, expected]
        for s in strategies:
            row = cells.get((name, s))
            line.append(row.cell if row else "-")
        table.append(line)
    widths = [max(len(r[i]) for r in [headers] + table) for i in range(len(headers))]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    lines = [fmt.format(*headers), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*r) for r in table]
    return "\n".join(lines) + "\n"


def report_csv(rows: list[BenchRow]) -> str:
    import csv
    import io

    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["instance", "strategy", "solver", "expected", "verdict",
                "translate_s", "solve_s"])
    for r in rows:
        w.writerow([r.instance, r.strategy, r.solver, r.expected,
                    r.result.verdict, f"{r.result.translate_time:.3f}",
                    f"{r.result.solve_time:.3f}"])
    return buf.getvalue()
