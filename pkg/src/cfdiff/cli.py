"""Command-line front end: dispatch studies and single solves, write reports.

Precedence for every parameter: explicit flag > config-file entry >
built-in default (defaults replicate the benchmark-table settings, so
``cfdiff temporal-study`` with no flags reproduces the reference ladder).
Config files are flat ``key = value`` text with ``#`` comments.  The
``CFDIFF_OUTPUT_DIR`` environment variable overrides the output directory.

Exit status: 0 success, 1 numerical failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bench
from .bench import ConvergenceReport, StudyConfig
from .cf_core import DomainError, OracleConvergenceError
from .pde_solver import CGConvergenceError, CompatibilityError, ProblemSpec, solve
from .spectral import IterationFailure, error_norms
from .timestep import MultiTermOperator

NUMERICAL_ERRORS = (CGConvergenceError, OracleConvergenceError, IterationFailure)
CONFIG_ERRORS = (DomainError, CompatibilityError, ValueError, OSError)


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def read_config_file(path: str | Path) -> dict[str, str]:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DomainError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        entries[key.strip().replace("-", "_")] = value.strip()
    return entries


_CONVERTERS = {
    "signal": str,
    "alpha": float,
    "alphas": _float_list,
    "weights": _float_list,
    "case": int,
    "horizon": float,
    "nt_list": _int_list,
    "n_list": _int_list,
    "degree": int,
    "steps": int,
    "dt": float,
    "t_end": float,
    "repeats": int,
    "tol": float,
    "domain_length": float,
    "output": str,
    "figure": lambda v: v.lower() not in ("0", "false", "no"),
    "homogeneous": lambda v: v.lower() not in ("0", "false", "no"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cfdiff",
        description="Fast solver and benchmark suite for multi-term "
        "Caputo-Fabrizio time-fractional diffusion",
    )
    parser.add_argument("--config", type=Path, help="flat key = value config file")
    parser.add_argument("--output", help="report file path")
    parser.add_argument("--no-figure", dest="figure", action="store_false", default=None,
                        help="skip rendering the companion PNG figure")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derivative-bench", help="direct vs recurrence operator ladder")
    p.add_argument("--signal", choices=sorted(bench.ANALYTIC_SIGNALS))
    p.add_argument("--alpha", type=float)
    p.add_argument("--horizon", type=float)
    p.add_argument("--nt-list", dest="nt_list", type=_int_list,
                   help="comma-separated step counts, doubling")
    p.add_argument("--repeats", type=int)

    p = sub.add_parser("temporal-study", help="solver error ladder in dt")
    p.add_argument("--case", type=int, choices=sorted(bench.CASES))
    p.add_argument("--alphas", type=_float_list)
    p.add_argument("--weights", type=_float_list)
    p.add_argument("--degree", type=int)
    p.add_argument("--nt-list", dest="nt_list", type=_int_list)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("spatial-study", help="solver error ladder in polynomial degree")
    p.add_argument("--case", type=int, choices=sorted(bench.CASES))
    p.add_argument("--alphas", type=_float_list)
    p.add_argument("--weights", type=_float_list)
    p.add_argument("--n-list", dest="n_list", type=_int_list)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--tol", type=float)

    p = sub.add_parser("solve", help="single solve of the manufactured problem")
    p.add_argument("--case", type=int, choices=sorted(bench.CASES))
    p.add_argument("--alphas", type=_float_list)
    p.add_argument("--weights", type=_float_list)
    p.add_argument("--degree", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--horizon", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--homogeneous", action="store_true", default=None,
                   help="zero data problem (reports error against the zero solution)")
    return parser


DEFAULTS: dict[str, dict] = {
    "derivative-bench": dict(signal="power4", alpha=0.5, horizon=2.0,
                             nt_list=(5000, 10000, 20000, 40000, 80000), repeats=1),
    "temporal-study": dict(case=1, alphas=None, weights=bench.DEFAULT_WEIGHTS, degree=20,
                           nt_list=(160, 320, 640, 1280, 2560), tol=1e-12),
    "spatial-study": dict(case=1, alphas=None, weights=bench.DEFAULT_WEIGHTS,
                          n_list=(4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24),
                          dt=1e-6, t_end=0.01, tol=1e-12),
    "solve": dict(case=1, alphas=None, weights=bench.DEFAULT_WEIGHTS, degree=20,
                  steps=160, horizon=1.0, tol=1e-12, homogeneous=False),
}
COMMON_DEFAULTS = dict(output=None, figure=True)


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults, config-file entries and explicit flags."""
    merged = dict(COMMON_DEFAULTS)
    merged.update(DEFAULTS[args.command])
    if args.config is not None:
        for key, raw in read_config_file(args.config).items():
            if key not in merged and key not in _CONVERTERS:
                raise DomainError(f"unknown config key {key!r} in {args.config}")
            if key in merged:
                merged[key] = _CONVERTERS[key](raw)
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        merged[key] = value
    return merged


def _output_path(config: dict, default_name: str) -> Path:
    out_dir = Path(os.environ.get("CFDIFF_OUTPUT_DIR", "."))
    if config["output"]:
        path = Path(config["output"])
        return path if path.is_absolute() else out_dir / path
    return out_dir / default_name


def _emit(report: ConvergenceReport, path: Path, fmt: str, figure: bool) -> None:
    bench.emit_report(report, path, fmt=fmt)
    if fmt == "plot-data":
        bench.emit_report(report, path.with_suffix(".csv"), fmt="csv")
    if figure:
        bench.render_figure(report, path.with_suffix(".png"))


def _summary(report: ConvergenceReport) -> str:
    last = report.rows[-1]
    err_col = next(c for c in report.columns if c.startswith("err_"))
    rate = last.get(f"rate_{err_col}")
    rate_text = f", observed rate {rate:.4f}" if rate is not None else ""
    return (
        f"{report.kind} study: final {err_col} = {last[err_col]:.4e} "
        f"at {report.resolution_name} = {last['resolution']:g}{rate_text}"
    )


def run(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    if args.command == "derivative-bench":
        study = StudyConfig(kind="scalar", signal=config["signal"], alpha=config["alpha"],
                            horizon=config["horizon"], nt_list=config["nt_list"],
                            repeats=config["repeats"])
        report = bench.scalar_study(study)
        path = _output_path(config, f"derivative_bench_{config['signal']}.csv")
        _emit(report, path, "csv", config["figure"])
    elif args.command == "temporal-study":
        study = StudyConfig(kind="temporal", case=config["case"], alphas=config["alphas"],
                            weights=config["weights"], degree=config["degree"],
                            nt_list=config["nt_list"], solver_tol=config["tol"])
        report = bench.temporal_study(study)
        path = _output_path(config, f"temporal_study_case{config['case']}.csv")
        _emit(report, path, "csv", config["figure"])
    elif args.command == "spatial-study":
        study = StudyConfig(kind="spatial", case=config["case"], alphas=config["alphas"],
                            weights=config["weights"], n_list=config["n_list"],
                            dt=config["dt"], t_end=config["t_end"], solver_tol=config["tol"])
        report = bench.spatial_study(study)
        path = _output_path(config, f"spatial_study_case{config['case']}.dat")
        _emit(report, path, "plot-data", config["figure"])
    else:  # solve
        if config["homogeneous"]:
            alphas = config["alphas"] or bench.CASES[config["case"]]
            problem = ProblemSpec(
                domain_length=math.pi,
                horizon=config["horizon"],
                operator=MultiTermOperator.from_lists(config["weights"], alphas),
                initial=lambda x: np.zeros_like(x),
                forcing=lambda x, t: np.zeros_like(x),
                exact_solution=lambda x, t: np.zeros_like(x),
            )
        else:
            alphas = config["alphas"] or bench.CASES[config["case"]]
            problem = bench.example4_problem(alphas, config["weights"], config["horizon"])
        result = solve(problem, config["degree"], config["steps"], tol=config["tol"])
        exact = lambda x: problem.exact_solution(x, problem.horizon)
        sup_e, l2_e, h1_e = error_norms(exact, result.solution, kappa=1.0)
        print(
            f"solve: degree {config['degree']}, {config['steps']} steps to "
            f"t = {problem.horizon:g}; errors sup = {sup_e:.4e}, "
            f"l2 = {l2_e:.4e}, h1 = {h1_e:.4e}"
        )
        return 0
    print(f"{_summary(report)} -> {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return run(args)
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except CONFIG_ERRORS as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
