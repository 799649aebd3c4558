"""Command-line front end.

    lossyvl gval --instance inst.json
    lossyvl sweep-n --instance inst.json --max-n 12 --out sweep.csv

Exit codes: 0 ok, 1 audit failure, 2 schema violation, 3 infeasible
instance, 4 alphabet budget exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .asymptotics import d_bounds, gaussian_approx, rate_distortion
from .blocklength import SWEEP_COLUMNS, BudgetExceeded, g_rate, sweep
from .dball import (
    CodeTable,
    build_deterministic_code,
    build_stochastic_code,
    greedy_cover,
)
from .evaluator import (
    converse_audit,
    empirical_csv,
    evaluate_code,
    majorization_audit,
    random_code,
    simulate,
    tightest_rate,
)
from .model import (
    Feasibility,
    InfeasibleError,
    SchemaError,
    check_feasible,
    load_instance,
    uncoverable_mass,
)
from .smooth_entropy import smooth_max_entropy

COMMANDS = ("entropy", "gval", "build-code", "eval-code", "audit", "sweep-n",
            "rd-curve", "gaussian-compare", "simulate")

EXIT_OK, EXIT_AUDIT, EXIT_SCHEMA, EXIT_INFEASIBLE, EXIT_BUDGET = 0, 1, 2, 3, 4


@dataclass
class RunConfig:
    command: str
    instance_path: str | None = None
    output_path: str | None = None
    flags: dict = field(default_factory=dict)


def _num(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def _csv(columns, rows, seed, inst) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_num(v) for v in row])
    buf.write(f"# lossyvl {__version__} seed={seed} instance={inst.digest()}\n")
    return buf.getvalue()


def _require_feasible(inst):
    if check_feasible(inst) is Feasibility.INFEASIBLE:
        raise InfeasibleError(
            f"infeasible: Pr{{min_y d(X,y) > D}} = {float(uncoverable_mass(inst)):.6f} "
            f"> epsilon = {float(inst.epsilon):.6f}"
        )


def _cmd_entropy(inst, f):
    delta = inst.delta if f["delta"] is None else f["delta"]
    h = smooth_max_entropy(inst.probs, delta)
    return f"H^{float(delta):g} = {h:.6f} bits\n"


def _cmd_gval(inst, f):
    _require_feasible(inst)
    c = greedy_cover(inst)
    return (f"G = {c.g_bits:.6f} bits, i*={c.i_star}, k*={c.k_star}\n"
            f"j*={c.j_star}, alpha={float(c.alpha):.6f}, beta={float(c.beta):.6f}, "
            f"gamma={float(c.gamma):.6f}\n")


def _build(inst, f) -> CodeTable:
    _require_feasible(inst)
    if f["deterministic"]:
        return build_deterministic_code(inst)
    return build_stochastic_code(inst)


def _cmd_build_code(inst, f):
    return _build(inst, f).dumps(inst) + "\n"


def _cmd_eval_code(inst, f):
    if f["code"]:
        with open(f["code"]) as fh:
            code = CodeTable.from_json(json.load(fh), inst)
    else:
        code = _build(inst, f)
    report = evaluate_code(inst, code)
    out = report.to_json()
    if f["rate"] is not None:
        out["rate"] = f["rate"]
        out["overflow_prob"] = float(report.overflow_prob(f["rate"]))
        out["is_code"] = report.is_code_at(f["rate"])
    return json.dumps(out, indent=2) + "\n"


def run_audits(inst, trials: int, seed: int) -> list[tuple[str, bool, str]]:
    """Converse, majorization and epsilon+delta invariance audits."""
    _require_feasible(inst)
    rng = np.random.default_rng(seed)
    results = []

    cover = greedy_cover(inst)
    ok, checked = True, 0
    for code in (build_stochastic_code(inst, cover), build_deterministic_code(inst, cover)):
        ok &= converse_audit(inst, code, code.rate)
        checked += 1
    for _ in range(trials):
        code = random_code(inst, rng)
        report = evaluate_code(inst, code)
        if report.excess_prob > inst.epsilon + (0 if inst.exact else 1e-9):
            continue
        ok &= converse_audit(inst, code, tightest_rate(report))
        checked += 1
    results.append(("converse", bool(ok), f"{checked} valid codes"))

    maj = majorization_audit(inst, trials, seed)
    results.append(("majorization", maj.passed, f"{len(maj.failures)} of {trials} laws not majorized"))

    total = inst.epsilon + inst.delta
    stars = set()
    for t in range(21):
        eps = total * Fraction(t, 20) if inst.exact else float(total) * t / 20
        split = inst.replace(epsilon=eps, delta=total - eps)
        if check_feasible(split) is Feasibility.FEASIBLE:
            stars.add(greedy_cover(split).i_star)
    results.append(("invariance", len(stars) <= 1, f"i* over feasible splits: {sorted(stars)}"))
    return results


def _cmd_audit(inst, f):
    results = run_audits(inst, f["trials"], f["seed"])
    lines = [f"{name}: {'PASS' if ok else 'FAIL'} ({detail})" for name, ok, detail in results]
    status = EXIT_OK if all(ok for _, ok, _ in results) else EXIT_AUDIT
    return "\n".join(lines) + "\n", status


def _cmd_sweep(inst, f):
    rows = [s.row() for s in sweep(inst, f["max_n"], f["budget"])]
    return _csv(SWEEP_COLUMNS, rows, f["seed"], inst)


def _parse_grid(text: str) -> np.ndarray:
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise SchemaError(f"--d-grid expects lo:hi:step, got {text!r}") from exc
    if step <= 0 or hi < lo:
        raise SchemaError("--d-grid needs step > 0 and hi >= lo")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(count)


def _cmd_rd_curve(inst, f):
    grid = _parse_grid(f["d_grid"]) if f["d_grid"] else None
    d = inst.distortion.matrix
    d_min, d_max = d_bounds(inst.probs, d)
    if grid is None:
        grid = np.linspace(d_min, d_max, 22)[1:-1]
    rows = []
    for level in grid:
        if level <= d_min:
            print(f"skipping D = {level:g} <= D_min = {d_min:g}", file=sys.stderr)
            continue
        sol = rate_distortion(inst.probs, d, float(level))
        rows.append([float(level), sol.rate, sol.slope, sol.dispersion])
    return _csv(["D", "rate_bits", "lambda_star", "dispersion"], rows, f["seed"], inst)


def _cmd_gaussian(inst, f):
    try:
        sol = rate_distortion(inst.probs, inst.distortion.matrix, inst.level)
        gaussian_approx(inst, 1, sol)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc

    def row(n):
        g = g_rate(inst, n, f["budget"])
        approx = gaussian_approx(inst, n, sol)
        gap = g - approx
        scaled = n * gap / math.log2(n) if n > 1 else math.nan
        return [n, g, approx, gap, scaled]

    with ThreadPoolExecutor(max_workers=os.cpu_count() or 1) as pool:
        rows = list(pool.map(row, range(1, f["max_n"] + 1)))
    return _csv(["n", "g_rate", "gaussian_approx", "gap", "n_gap_over_log2n"], rows,
                f["seed"], inst)


def _cmd_simulate(inst, f):
    code = _build(inst, f)
    rep = simulate(inst, code, f["samples"], f["seed"], f["rate"])
    body = empirical_csv([rep])
    return body + f"# lossyvl {__version__} seed={f['seed']} instance={inst.digest()}\n"


HANDLERS = {
    "entropy": _cmd_entropy,
    "gval": _cmd_gval,
    "build-code": _cmd_build_code,
    "eval-code": _cmd_eval_code,
    "audit": _cmd_audit,
    "sweep-n": _cmd_sweep,
    "rd-curve": _cmd_rd_curve,
    "gaussian-compare": _cmd_gaussian,
    "simulate": _cmd_simulate,
}


def run(config: RunConfig, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    f = config.flags
    try:
        if config.command not in HANDLERS:
            raise SchemaError(f"unknown command {config.command!r}")
        if not config.instance_path:
            raise SchemaError("--instance is required")
        inst = load_instance(config.instance_path, exact=True if f.get("exact") else None)
        result = HANDLERS[config.command](inst, f)
    except SchemaError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_SCHEMA
    except InfeasibleError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_INFEASIBLE
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_BUDGET
    except OSError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_SCHEMA
    text, status = result if isinstance(result, tuple) else (result, EXIT_OK)
    if config.output_path:
        with open(config.output_path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lossyvl", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"lossyvl {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", metavar="PATH")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--delta", type=float)
    kind = common.add_mutually_exclusive_group()
    kind.add_argument("--stochastic", action="store_true")
    kind.add_argument("--deterministic", action="store_true")
    common.add_argument("--rate", type=float, metavar="R")
    common.add_argument("--code", metavar="PATH", help="code JSON for eval-code")
    common.add_argument("--max-n", type=int, default=8, metavar="N")
    common.add_argument("--budget", type=int, metavar="B")
    common.add_argument("--trials", type=int, default=200, metavar="T")
    common.add_argument("--seed", type=int, default=0, metavar="S")
    common.add_argument("--samples", type=int, default=100_000, metavar="M")
    common.add_argument("--exact", action="store_true", help="rational arithmetic")
    common.add_argument("--d-grid", metavar="lo:hi:step")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "instance", "out")}
    return run(RunConfig(args.command, args.instance, args.out, flags))


if __name__ == "__main__":
    sys.exit(main())
