"""Experiment runner: preset sweeps to CSV files, plus scaling-law fits.

Each preset is one key = value config file; a run turns it into the CSV
panels (strain profiles, error vs step count, gate counts vs grid or case
count) that a plotting script can consume. Runs are deterministic: the same
config and seed regenerate byte-identical files.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import oracle
from .ensemble import ensemble_layout, load_set, report_csv_lines, solve_ensemble
from .problem import IterationPlan, bench_1d, bench_2d, grid
from .rve import (
    EXECUTE_QUBIT_CAP,
    QubitBudgetError,
    SolverConfig,
    build_layout,
    solve,
)

PRESET_DIR = Path(__file__).parent / "presets"


def preset_names() -> list[str]:
    return sorted(p.stem for p in PRESET_DIR.glob("*.ini"))


def load_config(path) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    read = cfg.read(path)
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    if "experiment" not in cfg:
        raise ValueError(f"{path}: missing [experiment] section")
    return cfg


def preset_config(name: str) -> configparser.ConfigParser:
    path = PRESET_DIR / f"{name}.ini"
    if not path.exists():
        known = ", ".join(preset_names())
        raise FileNotFoundError(f"unknown preset {name!r}; available: {known}")
    return load_config(path)


def _ints(text: str) -> list[int]:
    return [int(tok) for tok in text.split()]


def _floats(text: str) -> list[float]:
    return [float(tok) for tok in text.split()]


def _benchmark(cfg: configparser.ConfigParser):
    """Benchmark factory: size -> (spec, analytic benchmark)."""
    exp = cfg["experiment"]
    name = exp.get("benchmark", "bench-1d")
    gbar = _floats(exp.get("gammabar", "0.01"))
    if name == "bench-1d":
        if len(gbar) != 1:
            raise ValueError("bench-1d takes one gammabar component")
        return 1, tuple(gbar), lambda n: bench_1d(n, gbar[0])
    if name == "bench-2d":
        if len(gbar) != 2:
            raise ValueError("bench-2d takes two gammabar components")
        return 2, tuple(gbar), lambda n: bench_2d(n, tuple(gbar))
    raise ValueError(f"unknown benchmark {name!r}")


def _solver_config(section, dims: int) -> SolverConfig:
    encoding = section.get("encoding", "lookup")
    if encoding == "lookup":
        return SolverConfig()
    degree = section.getint("degree", 8)
    degrees = (degree,) if dims == 1 else (degree, degree)
    gamma = section.getint("gamma_degree", 0)
    gamma_degrees = (gamma, gamma) if (gamma and dims == 2) else None
    return SolverConfig(encoding=encoding, mu_degrees=degrees, gamma_degrees=gamma_degrees)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_csv(path: Path, header: tuple, rows: list) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def _check_budget(num_qubits: int, cap: int) -> None:
    if num_qubits > cap:
        raise QubitBudgetError(num_qubits, cap)


def _strain_rows(field, size: int, length: float, step: int, slice_mid: bool) -> list:
    """Rows of the strain CSV: x[,y],component,s,value."""
    xs = grid(size, length)
    comps = np.asarray(field.components)
    rows = []
    if comps.ndim == 2:
        for c in range(comps.shape[0]):
            for i in range(size):
                rows.append((xs[i], c, step, comps[c, i]))
        return rows
    j = size // 2
    if not slice_mid:
        raise ValueError("2D strain output supports the x1 midline slice only")
    for c in range(comps.shape[0]):
        for i in range(size):
            rows.append((xs[i], xs[j], c, step, comps[c, i, j]))
    return rows


def _run_strain_panel(cfg, make_bench, dims, gbar, out_dir, cap) -> Path | None:
    sec = cfg["strain"]
    size = sec.getint("size")
    steps = _ints(sec.get("steps"))
    slice_mid = sec.get("slice", "none") == "x1-mid"
    solver = _solver_config(sec, dims)
    spec, _ = make_bench(size)
    rows = []
    for s in steps:
        plan = IterationPlan(steps=s)
        _check_budget(build_layout(spec, plan, extended=solver.extended).num_qubits, cap)
        rep = solve(spec, gbar, plan, solver)
        rows.extend(_strain_rows(rep.strain, size, spec.length, s, slice_mid))
    header = ("x", "component", "s", "value") if dims == 1 else ("x", "y", "component", "s", "value")
    return write_csv(out_dir / sec.get("file", "strain.csv"), header, rows)


def _run_error_panel(cfg, make_bench, dims, gbar, out_dir, cap, mode) -> Path | None:
    sec = cfg["error"]
    sizes = _ints(sec.get("sizes"))
    steps = _ints(sec.get("steps"))
    source = sec.get("source", "circuit")
    solver = _solver_config(sec, dims)
    rows = []
    for size in sizes:
        spec, bench = make_bench(size)
        reference = bench.sample_strain(size)
        if source == "oracle":
            fields = oracle.fft_fixed_point(spec, gbar, max(steps))
            for s in steps:
                rows.append((size, s, oracle.relative_error(fields[s].components, reference)))
        elif source == "circuit":
            if mode == "count":
                return None
            for s in steps:
                plan = IterationPlan(steps=s)
                _check_budget(build_layout(spec, plan, extended=solver.extended).num_qubits, cap)
                rep = solve(spec, gbar, plan, solver)
                rows.append((size, s, oracle.relative_error(rep.strain.components, reference)))
        else:
            raise ValueError(f"unknown error source {source!r}")
    return write_csv(out_dir / sec.get("file", "error.csv"), ("N", "s", "rel_l2"), rows)


def _run_counts_panel(cfg, make_bench, dims, gbar, out_dir) -> Path:
    sec = cfg["counts"]
    sizes = _ints(sec.get("sizes"))
    steps = sec.getint("steps", 1)
    solver = _solver_config(sec, dims)
    plan = IterationPlan(steps=steps)

    def point(size: int):
        spec, _ = make_bench(size)
        return solve(spec, gbar, plan, solver, mode="count").counts

    with ThreadPoolExecutor(max_workers=4) as pool:
        counts = list(pool.map(point, sizes))
    rows = [rep.row(size) for size, rep in zip(sizes, counts)]
    return write_csv(out_dir / sec.get("file", "counts.csv"),
                     ("index", "cnot", "u3", "total", "depth"), rows)


def _ensemble_loads(gbar, cases: int) -> list[tuple]:
    """Distinct macroscopic loads: the base load scaled by 1..M."""
    return [tuple((j + 1) * g for g in gbar) for j in range(cases)]


def _run_ensemble_panel(cfg, make_bench, dims, gbar, out_dir, cap, mode, seed) -> list[Path]:
    sec = cfg["ensemble"]
    size = sec.getint("size")
    steps = sec.getint("steps", 3)
    case_sweep = _ints(sec.get("cases"))
    executed = _ints(sec.get("executed_cases", ""))
    count_sizes = _ints(sec.get("count_sizes", str(size)))
    shots = sec.getint("shots", 0)
    solver = _solver_config(sec, dims)
    plan = IterationPlan(steps=steps)
    written = []

    if mode == "execute":
        spec, _ = make_bench(size)
        for m in executed:
            loads = load_set(_ensemble_loads(gbar, m))
            _check_budget(ensemble_layout(spec, plan, loads, solver).num_qubits, cap)
            rep = solve_ensemble(spec, loads, plan, solver,
                                 shots=shots or None, seed=seed)
            path = out_dir / f"stress_m{m}.csv"
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text("\n".join(report_csv_lines(rep)) + "\n")
            written.append(path)

    def point(args):
        n, m = args
        spec, _ = make_bench(n)
        loads = load_set(_ensemble_loads(gbar, m))
        return solve_ensemble(spec, loads, plan, solver, mode="count").counts

    for n in count_sizes:
        with ThreadPoolExecutor(max_workers=4) as pool:
            counts = list(pool.map(point, [(n, m) for m in case_sweep]))
        rows = [rep.row(m) for m, rep in zip(case_sweep, counts)]
        written.append(write_csv(out_dir / f"counts_m_n{n}.csv",
                                 ("index", "cnot", "u3", "total", "depth"), rows))
    return written


def _run_oracle_panel(cfg, make_bench, dims, gbar, out_dir) -> Path:
    sec = cfg["oracle"]
    size = sec.getint("size")
    steps = _ints(sec.get("steps"))
    slice_mid = sec.get("slice", "none") == "x1-mid"
    spec, _ = make_bench(size)
    fields = oracle.fft_fixed_point(spec, gbar, max(steps))
    rows = []
    for s in steps:
        rows.extend(_strain_rows(fields[s], size, spec.length, s, slice_mid))
    header = ("x", "component", "s", "value") if dims == 1 else ("x", "y", "component", "s", "value")
    return write_csv(out_dir / sec.get("file", "oracle_strain.csv"), header, rows)


def run_experiment(cfg: configparser.ConfigParser, out_dir, mode: str = "execute",
                   seed: int | None = None) -> list[Path]:
    """Produce every CSV panel the config declares; returns the written paths."""
    if mode not in ("execute", "count"):
        raise ValueError(f"unknown mode {mode!r}")
    out_dir = Path(out_dir)
    dims, gbar, make_bench = _benchmark(cfg)
    cap = cfg["experiment"].getint("qubit_cap", EXECUTE_QUBIT_CAP)
    if seed is None:
        seed = cfg["experiment"].getint("seed", 0)
    written = []
    if "strain" in cfg and mode == "execute":
        written.append(_run_strain_panel(cfg, make_bench, dims, gbar, out_dir, cap))
    if "error" in cfg:
        path = _run_error_panel(cfg, make_bench, dims, gbar, out_dir, cap, mode)
        if path is not None:
            written.append(path)
    if "counts" in cfg:
        written.append(_run_counts_panel(cfg, make_bench, dims, gbar, out_dir))
    if "ensemble" in cfg:
        written.extend(_run_ensemble_panel(cfg, make_bench, dims, gbar, out_dir, cap, mode, seed))
    if "oracle" in cfg:
        written.append(_run_oracle_panel(cfg, make_bench, dims, gbar, out_dir))
    return written


def run_oracle(cfg: configparser.ConfigParser, out_dir) -> tuple[list[Path], np.ndarray]:
    """Classical-only solve: oracle panels plus the converged homogenised stress."""
    out_dir = Path(out_dir)
    dims, gbar, make_bench = _benchmark(cfg)
    written = []
    if "oracle" in cfg:
        written.append(_run_oracle_panel(cfg, make_bench, dims, gbar, out_dir))
    if "error" in cfg and cfg["error"].get("source", "circuit") == "oracle":
        written.append(_run_error_panel(cfg, make_bench, dims, gbar, out_dir, 0, "count"))
    size = cfg["oracle"].getint("size") if "oracle" in cfg else _ints(cfg["error"].get("sizes"))[0]
    spec, _ = make_bench(size)
    field = oracle.fft_fixed_point(spec, gbar, 20)[-1]
    sigma = oracle.homogenised_stress(spec, field)
    return written, sigma


@dataclass(frozen=True)
class FitReport:
    """Least-squares scaling fit; R2 is measured on the raw counts."""

    kind: str
    a: float
    b: float
    c: float
    r_squared: float
    points: int


def _r_squared(y: np.ndarray, predicted: np.ndarray) -> float:
    ss_res = float(((y - predicted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def fit_power(sizes, counts) -> FitReport:
    """Fit count = a * (log2 N)^c by scanning c and solving a in closed form."""
    sizes = np.asarray(sizes, dtype=float)
    y = np.asarray(counts, dtype=float)
    if len(y) < 4:
        raise ValueError("scaling fit needs at least 4 points")
    x = np.log2(sizes)
    best = None
    for c in np.arange(0.0, 8.0005, 0.001):
        basis = x ** c
        a = float(basis @ y / (basis @ basis))
        ss = float(((y - a * basis) ** 2).sum())
        if best is None or ss < best[0]:
            best = (ss, a, c)
    _, a, c = best
    return FitReport("single", a, 0.0, c, _r_squared(y, a * x ** c), len(y))


def fit_case_scaling(cases, counts) -> FitReport:
    """Fit count = a * M * (log2 M)^c + b over the ensemble case sweep."""
    m = np.asarray(cases, dtype=float)
    y = np.asarray(counts, dtype=float)
    if len(y) < 4:
        raise ValueError("scaling fit needs at least 4 points")
    best = None
    for c in np.arange(0.0, 4.0005, 0.001):
        basis = m * np.log2(m) ** c
        design = np.vstack([basis, np.ones_like(m)]).T
        sol, *_ = np.linalg.lstsq(design, y, rcond=None)
        ss = float(((y - design @ sol) ** 2).sum())
        if best is None or ss < best[0]:
            best = (ss, sol[0], sol[1], c)
    _, a, b, c = best
    predicted = a * m * np.log2(m) ** c + b
    return FitReport("ensemble", a, b, c, _r_squared(y, predicted), len(y))


def sublinear_from(sizes, counts, threshold: int = 16) -> bool:
    """count(2N) < 2 count(N) for every consecutive pair with N >= threshold."""
    pairs = zip(sizes[:-1], counts[:-1], counts[1:])
    return all(c2 < 2 * c1 for n, c1, c2 in pairs if n >= threshold)


def read_counts_csv(path) -> tuple[np.ndarray, dict]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader])
    if data.size == 0:
        raise ValueError(f"{path}: no data rows")
    return data[:, 0], {name: data[:, i] for i, name in enumerate(header)}


def fit_from_csv(path, kind: str = "single", column: str = "total") -> FitReport:
    index, columns = read_counts_csv(path)
    if column not in columns:
        raise ValueError(f"{path}: no column {column!r}")
    y = columns[column]
    if kind == "single":
        return fit_power(index, y)
    if kind == "ensemble":
        return fit_case_scaling(index, y)
    raise ValueError(f"unknown fit kind {kind!r}")


def _config_from_args(args) -> configparser.ConfigParser:
    if args.config:
        return load_config(args.config)
    if args.preset:
        return preset_config(args.preset)
    raise SystemExit("one of --preset or --config is required")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="qhom", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment preset or config to CSV files")
    run_p.add_argument("--preset", choices=preset_names(), help="named config shipped with the package")
    run_p.add_argument("--config", help="path to a key = value config file")
    run_p.add_argument("--out-dir", default="out", help="directory for the CSV outputs")
    run_p.add_argument("--mode", choices=("execute", "count"), default="execute",
                       help="count skips the statevector and emits gate counts only")
    run_p.add_argument("--seed", type=int, default=None, help="sampling seed override")

    fit_p = sub.add_parser("fit", help="fit a scaling law to a gate-count CSV")
    fit_p.add_argument("--csv", required=True, help="counts CSV (index,cnot,u3,total,depth)")
    fit_p.add_argument("--kind", choices=("single", "ensemble"), default="single")
    fit_p.add_argument("--column", default="total")

    oracle_p = sub.add_parser("oracle", help="classical-only solve of a preset's benchmark")
    oracle_p.add_argument("--preset", choices=preset_names())
    oracle_p.add_argument("--config")
    oracle_p.add_argument("--out-dir", default="out")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            cfg = _config_from_args(args)
            written = run_experiment(cfg, args.out_dir, mode=args.mode, seed=args.seed)
            for path in written:
                print(f"wrote {path}")
            return 0
        if args.command == "fit":
            report = fit_from_csv(args.csv, kind=args.kind, column=args.column)
            print(f"fit kind={report.kind} points={report.points} column={args.column}")
            if report.kind == "single":
                print(f"count = {report.a:.6g} * (log2 N)^{report.c:.3f}")
                index, columns = read_counts_csv(args.csv)
                ok = sublinear_from(index, columns[args.column])
                print(f"sub-linear count(2N) < 2 count(N) for N >= 16: {'yes' if ok else 'NO'}")
            else:
                print(f"count = {report.a:.6g} * M * (log2 M)^{report.c:.3f} + {report.b:.6g}")
            print(f"R2 = {report.r_squared:.6f}")
            return 0
        if args.command == "oracle":
            cfg = _config_from_args(args)
            written, sigma = run_oracle(cfg, args.out_dir)
            for path in written:
                print(f"wrote {path}")
            print("sigma_bar = " + " ".join(_fmt(v) for v in sigma))
            return 0
    except QubitBudgetError as err:
        print(f"refused: {err}", file=sys.stderr)
        return 2
    except (FileNotFoundError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
