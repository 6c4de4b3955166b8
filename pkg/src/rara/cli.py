"""Experiment runner: theory grids, Monte-Carlo sweeps, theory-vs-simulation
comparisons, and PHY detector error rates, written as CSV or JSON tables.

Subcommands: ``theory | sim | compare | phy``.  Grids are given as comma
lists (``0.4,0.8``) or inclusive ranges (``start:stop:step``).  A flat JSON
config file can supply any flag; command-line flags take precedence.

Exit codes: 0 success, 2 validation error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass

from . import analytic, mpr, sim

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3

MODES = ("theory", "sim", "compare", "phy")

THEORY_COLUMNS = [
    "lambda", "m", "epsilon",
    "throughput_exact", "throughput_approx",
    "outage_exact", "outage_approx",
    "asymptotic_throughput",
    "pi_0", "pi_1", "pi_S", "pi_U",
    "mean_session_length",
    "u_discontinuity",
]
SIM_COLUMNS = ["throughput_hat", "stderr", "outage_hat", "sessions", "seed"]
ERROR_COLUMNS = ["abs_err_throughput", "abs_err_outage"]
PHY_COLUMNS = ["k", "m", "snr_db", "ser", "trials"]


class SpecValidationError(ValueError):
    """All validation failures of an experiment spec, reported at once."""

    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass(frozen=True)
class ExperimentSpec:
    mode: str
    lambda_grid: tuple[float, ...]
    m_grid: tuple[int, ...]
    epsilon: float
    n_sessions: int
    seed: int
    snr_db: float | None
    output_path: str
    format: str


def parse_grid(text: str, kind=float) -> tuple:
    """Parse ``a,b,c`` or an inclusive ``start:stop:step`` range."""
    text = str(text).strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ValueError(f"range step must be > 0, got {step}")
        vals = []
        v = start
        while v <= stop + step * 1e-9:
            vals.append(kind(round(v, 12)))
            v += step
        return tuple(vals)
    return tuple(kind(float(p)) for p in text.split(",") if p.strip())


def validate_spec(raw: dict) -> ExperimentSpec:
    """Fill defaults and check every field, collecting all failures."""
    problems: list[str] = []

    mode = raw.get("mode")
    if mode not in MODES:
        problems.append(f"mode: must be one of {'/'.join(MODES)}, got {mode!r}")

    def grid(name, kind, minimum):
        value = raw.get(name)
        if value in (None, "", (), []):
            problems.append(f"{name}: grid must be non-empty")
            return ()
        try:
            vals = parse_grid(value, kind) if isinstance(value, str) \
                else tuple(kind(v) for v in value)
        except (ValueError, TypeError) as exc:
            problems.append(f"{name}: {exc}")
            return ()
        if not vals:
            problems.append(f"{name}: grid must be non-empty")
        for v in vals:
            if v < minimum:
                problems.append(f"{name}: values must be >= {minimum}, got {v}")
                break
        return vals

    # phy mode sweeps k = 1..M+1 per relay count; no traffic grid involved
    lambda_grid = () if mode == "phy" and not raw.get("lambda_grid") \
        else grid("lambda_grid", float, 0.0)
    m_grid = grid("m_grid", int, 1)

    epsilon = float(raw.get("epsilon", analytic.DEFAULT_EPSILON))
    if not (0 < epsilon <= 1):
        problems.append(f"epsilon: must be in (0, 1], got {epsilon}")

    n_sessions = int(raw.get("n_sessions", 10**6))
    if mode in ("sim", "compare", "phy") and n_sessions < 1:
        problems.append(f"n_sessions: must be >= 1, got {n_sessions}")

    seed = int(raw.get("seed", 0))

    snr_db = raw.get("snr_db")
    if snr_db is not None:
        snr_db = float(snr_db)
    elif mode == "phy":
        problems.append("snr_db: required for phy mode")

    output_path = raw.get("output_path") or ""
    if not output_path:
        problems.append("output_path: required")

    fmt = raw.get("format", "csv")
    if fmt not in ("csv", "json"):
        problems.append(f"format: must be csv or json, got {fmt!r}")

    if problems:
        raise SpecValidationError(problems)
    return ExperimentSpec(mode=mode, lambda_grid=lambda_grid, m_grid=m_grid,
                          epsilon=epsilon, n_sessions=n_sessions, seed=seed,
                          snr_db=snr_db, output_path=output_path, format=fmt)


def _theory_row(lam: float, m: int, epsilon: float) -> dict:
    params = analytic.SystemParams(lam, m, epsilon)
    pi = analytic.stationary_closed_form(params)
    metrics = analytic.throughput_exact(params)
    if lam > 0:
        thr_approx = analytic.throughput_approx(params)
        out_approx = analytic.outage_approx(params)
    else:
        # lambda -> 0 limits of the Gaussian approximation
        thr_approx = 0.0
        out_approx = 0.0
    return {
        "lambda": lam,
        "m": m,
        "epsilon": epsilon,
        "throughput_exact": metrics.throughput,
        "throughput_approx": thr_approx,
        "outage_exact": metrics.outage,
        "outage_approx": out_approx,
        "asymptotic_throughput": analytic.asymptotic_throughput(lam),
        "pi_0": pi.pi[0],
        "pi_1": pi.pi[1],
        "pi_S": pi.pi[2],
        "pi_U": pi.pi[3],
        "mean_session_length": metrics.mean_session_length,
        "u_discontinuity": int(lam == 1.0),
    }


def build_rows(spec: ExperimentSpec) -> tuple[list[str], list[dict]]:
    """Evaluate the experiment grid; rows follow grid order (lambda outer)."""
    if spec.mode == "phy":
        rows = []
        for m in spec.m_grid:
            for k in range(1, m + 2):
                ser = mpr.symbol_error_rate(k, m, spec.snr_db,
                                            spec.n_sessions, spec.seed)
                rows.append({"k": k, "m": m, "snr_db": spec.snr_db,
                             "ser": ser, "trials": spec.n_sessions})
        return PHY_COLUMNS, rows

    grid = [(lam, m) for lam in spec.lambda_grid for m in spec.m_grid]
    rows = [_theory_row(lam, m, spec.epsilon) for lam, m in grid]
    columns = list(THEORY_COLUMNS)

    if spec.mode in ("sim", "compare"):
        columns += SIM_COLUMNS
        seeds = sim.derive_seeds(spec.seed, len(grid))
        for row, (lam, m), run_seed in zip(rows, grid, seeds):
            cfg = sim.SimConfig(
                params=analytic.SystemParams(lam, m, spec.epsilon),
                arrivals=sim.PoissonProcess(lam),
                n_sessions=spec.n_sessions,
                seed=run_seed,
            )
            rep = sim.run(cfg)
            row.update({
                "throughput_hat": rep.throughput_hat,
                "stderr": rep.stderr_throughput,
                "outage_hat": rep.outage_hat,
                "sessions": spec.n_sessions,
                "seed": run_seed,
            })

    if spec.mode == "compare":
        columns += ERROR_COLUMNS
        for row in rows:
            row["abs_err_throughput"] = abs(row["throughput_hat"] - row["throughput_exact"])
            row["abs_err_outage"] = abs(row["outage_hat"] - row["outage_exact"])

    return columns, rows


def _norm_cell(value):
    # numpy scalars come out of the numeric layers; strip them down
    if isinstance(value, float):
        return float(value)
    if isinstance(value, int):
        return int(value)
    return value


def render(columns: list[str], rows: list[dict], fmt: str) -> str:
    rows = [{c: _norm_cell(row[c]) for c in columns} for row in rows]
    if fmt == "json":
        return json.dumps({"columns": columns, "rows": rows}, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        # repr round-trips doubles exactly
        writer.writerow([repr(v) if isinstance(v, float) else v
                         for v in row.values()])
    return buf.getvalue()


def write_output(text: str, path: str) -> None:
    """Atomic write: the target either appears complete or not at all."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".rara-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def run_experiment(spec: ExperimentSpec) -> int:
    columns, rows = build_rows(spec)
    text = render(columns, rows, spec.format)
    try:
        write_output(text, spec.output_path)
    except OSError as exc:
        print(f"error: cannot write {spec.output_path}: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rara",
        description="Relay-aided random access experiments (theory, "
                    "simulation, comparison, PHY detector).")
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in MODES:
        p = sub.add_parser(mode)
        p.add_argument("--lambda", dest="lambda_grid", metavar="GRID",
                       help="traffic intensities: comma list or start:stop:step")
        p.add_argument("--m", dest="m_grid", metavar="GRID",
                       help="relay counts: comma list or start:stop:step")
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--sessions", dest="n_sessions", type=int, default=None,
                       help="sessions per simulation run (phy: trials)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--snr-db", dest="snr_db", type=float, default=None)
        p.add_argument("--out", dest="output_path", default=None)
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--config", default=None,
                       help="flat JSON file with any of the above keys")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    raw = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw.update(json.load(fh))
        except OSError as exc:
            print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
            return EXIT_IO
        except json.JSONDecodeError as exc:
            print(f"error: bad config {args.config}: {exc}", file=sys.stderr)
            return EXIT_VALIDATION
    raw["mode"] = args.mode
    for key in ("lambda_grid", "m_grid", "epsilon", "n_sessions",
                "seed", "snr_db", "output_path", "format"):
        value = getattr(args, key)
        if value is not None:
            raw[key] = value
    try:
        spec = validate_spec(raw)
    except SpecValidationError as exc:
        for problem in exc.problems:
            print(f"error: {problem}", file=sys.stderr)
        return EXIT_VALIDATION
    return run_experiment(spec)


if __name__ == "__main__":
    sys.exit(main())
