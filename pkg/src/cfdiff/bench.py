"""Convergence and timing studies with CSV / plot-data / figure emission.

Three study kinds are supported:

* ``scalar`` - direct vs recurrence operator on an analytic signal over
  [0,2]: final-node errors, observed orders, and wall-clock sweep times.
* ``temporal`` - full solver on the manufactured three-term problem
  (exact solution (1+t^2) sin x on (0,pi)), fixed degree, refining dt.
* ``spatial`` - same problem at a tiny fixed dt, sweeping the degree to
  expose spectral error decay.
"""

from __future__ import annotations

import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .cf_core import (
    ANALYTIC_SIGNALS,
    DomainError,
    FractionalOrder,
    TimeGrid,
    fast_sweep,
    l1_direct_sweep,
)
from .pde_solver import ProblemSpec, solve
from .spectral import error_norms
from .timestep import MultiTermOperator

#: alpha triples of the manufactured-problem parameter cases
CASES: dict[int, tuple[float, float, float]] = {
    1: (0.5, 0.5, 0.5),
    2: (0.3, 0.5, 0.7),
    3: (0.2, 0.3, 0.4),
    4: (0.6, 0.7, 0.8),
}
DEFAULT_WEIGHTS = (1.0, 2.0, 3.0)


@dataclass
class StudyConfig:
    kind: str                                   # scalar | temporal | spatial
    signal: str = "power4"                      # scalar studies
    case: int = 1                               # temporal/spatial studies
    alpha: float = 0.5
    alphas: tuple[float, ...] | None = None
    weights: tuple[float, ...] = DEFAULT_WEIGHTS
    horizon: float = 2.0
    nt_list: tuple[int, ...] = (5000, 10000, 20000, 40000, 80000)
    degree: int = 20
    n_list: tuple[int, ...] = (4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24)
    dt: float = 1e-6
    t_end: float = 0.01
    repeats: int = 1
    solver_tol: float = 1e-12
    output: Path | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("scalar", "temporal", "spatial"):
            raise DomainError(f"unknown study kind {self.kind!r}")
        if self.kind in ("scalar", "temporal"):
            if any(b != 2 * a for a, b in zip(self.nt_list, self.nt_list[1:])):
                raise DomainError("step ladder must double at each refinement")
        if self.kind == "spatial":
            if any(b <= a for a, b in zip(self.n_list, self.n_list[1:])):
                raise DomainError("degree ladder must be strictly increasing")
        if self.kind == "scalar" and self.signal not in ANALYTIC_SIGNALS:
            raise DomainError(f"unknown signal {self.signal!r}")
        if self.kind in ("temporal", "spatial") and self.alphas is None:
            if self.case not in CASES:
                raise DomainError(f"unknown case {self.case}; choose from {sorted(CASES)}")
            self.alphas = CASES[self.case]


@dataclass
class ConvergenceReport:
    """Ladder of resolutions with error, rate and timing columns.

    ``rows`` maps each column name to a float or None (rates are undefined
    on the first row).  Error rates are log2(E(2dt)/E(dt)); cpu rates are
    log2 of the time growth per doubling.
    """

    kind: str
    resolution_name: str
    columns: list[str]
    rows: list[dict[str, float | None]]
    metadata: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> list[float | None]:
        return [row.get(name) for row in self.rows]


def _add_rates(rows: list[dict], error_cols: Sequence[str], cpu_cols: Sequence[str] = ()) -> None:
    for i, row in enumerate(rows):
        for col in error_cols:
            row[f"rate_{col}"] = (
                None if i == 0 else math.log2(rows[i - 1][col] / row[col])
            )
        for col in cpu_cols:
            row[f"rate_{col}"] = (
                None if i == 0 else math.log2(row[col] / rows[i - 1][col])
            )


def _timed(fn: Callable[[], object], repeats: int) -> float:
    """Median wall time over ``repeats`` runs, after one discarded warm-up."""
    fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def scalar_study(config: StudyConfig) -> ConvergenceReport:
    """Direct vs recurrence operator: errors at the final node plus sweep times."""
    sig = ANALYTIC_SIGNALS[config.signal]
    order = FractionalOrder(config.alpha)
    exact = sig["exact"](order, config.horizon)
    rows: list[dict] = []
    for nt in config.nt_list:
        grid = TimeGrid(config.horizon, nt)
        values = np.asarray(sig["h"](grid.nodes()), dtype=float)
        dt = grid.dt
        direct_vals = l1_direct_sweep(values, order, dt)
        fast_vals = fast_sweep(values, order, dt)
        cpu_direct = _timed(lambda: l1_direct_sweep(values, order, dt), config.repeats)
        cpu_fast = _timed(lambda: fast_sweep(values, order, dt), config.repeats)
        rows.append(
            {
                "resolution": dt,
                "err_direct": abs(exact - direct_vals[-1]),
                "cpu_direct": cpu_direct,
                "err_fast": abs(exact - fast_vals[-1]),
                "cpu_fast": cpu_fast,
            }
        )
    _add_rates(rows, ["err_direct", "err_fast"], ["cpu_direct", "cpu_fast"])
    return ConvergenceReport(
        kind="scalar",
        resolution_name="dt",
        columns=[
            "err_direct", "rate_err_direct", "cpu_direct", "rate_cpu_direct",
            "err_fast", "rate_err_fast", "cpu_fast", "rate_cpu_fast",
        ],
        rows=rows,
        metadata={"signal": config.signal, "alpha": str(config.alpha), "horizon": str(config.horizon)},
    )


def forcing_example4(mt: MultiTermOperator, x: np.ndarray, t: float) -> np.ndarray:
    """Manufactured forcing whose exact solution is (1 + t^2) sin x."""
    bracket = 1.0 + t * t
    for d, order in mt.terms:
        beta = order.beta
        bracket += d / (1.0 - order.alpha) * (
            2.0 * t / beta - 2.0 / beta**2 + math.exp(-beta * t) * 2.0 / beta**2
        )
    return np.sin(x) * bracket


def example4_problem(
    alphas: Sequence[float],
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    horizon: float = 1.0,
) -> ProblemSpec:
    """Three-term manufactured problem on (0, pi) with exact (1+t^2) sin x."""
    mt = MultiTermOperator.from_lists(weights, alphas)
    return ProblemSpec(
        domain_length=math.pi,
        horizon=horizon,
        operator=mt,
        initial=np.sin,
        forcing=lambda x, t: forcing_example4(mt, x, t),
        exact_solution=lambda x, t: (1.0 + t * t) * np.sin(x),
    )


def _solve_errors(
    problem: ProblemSpec, degree: int, steps: int, tol: float
) -> tuple[float, float, float]:
    result = solve(problem, degree, steps, tol=tol)
    t_end = problem.horizon
    exact = lambda x: problem.exact_solution(x, t_end)
    # kappa = 1: the reported H1 error uses the standard (unweighted) norm
    return error_norms(exact, result.solution, kappa=1.0)


def temporal_study(config: StudyConfig) -> ConvergenceReport:
    """Error norms of the full solver at t = horizon over a refining dt ladder."""
    problem = example4_problem(config.alphas, config.weights, horizon=1.0)
    rows: list[dict] = []
    for nt in config.nt_list:
        sup_e, l2_e, h1_e = _solve_errors(problem, config.degree, nt, config.solver_tol)
        rows.append(
            {"resolution": 1.0 / nt, "err_sup": sup_e, "err_l2": l2_e, "err_h1": h1_e}
        )
    _add_rates(rows, ["err_sup", "err_l2", "err_h1"])
    return ConvergenceReport(
        kind="temporal",
        resolution_name="dt",
        columns=[
            "err_sup", "rate_err_sup", "err_l2", "rate_err_l2", "err_h1", "rate_err_h1",
        ],
        rows=rows,
        metadata={
            "alphas": ",".join(str(a) for a in config.alphas),
            "weights": ",".join(str(w) for w in config.weights),
            "degree": str(config.degree),
        },
    )


def spatial_study(config: StudyConfig) -> ConvergenceReport:
    """Error norms versus polynomial degree at a temporally-converged dt."""
    steps = round(config.t_end / config.dt)
    problem = example4_problem(config.alphas, config.weights, horizon=config.t_end)
    rows: list[dict] = []
    for degree in config.n_list:
        sup_e, l2_e, h1_e = _solve_errors(problem, degree, steps, config.solver_tol)
        rows.append(
            {"resolution": float(degree), "err_sup": sup_e, "err_l2": l2_e, "err_h1": h1_e}
        )
    return ConvergenceReport(
        kind="spatial",
        resolution_name="N",
        columns=["err_sup", "err_l2", "err_h1"],
        rows=rows,
        metadata={
            "alphas": ",".join(str(a) for a in config.alphas),
            "weights": ",".join(str(w) for w in config.weights),
            "dt": str(config.dt),
            "t_end": str(config.t_end),
        },
    )


def _fmt(value: float | None) -> str:
    if value is None:
        return ""
    return np.format_float_scientific(value, unique=True)


def emit_report(report: ConvergenceReport, path: str | Path, fmt: str = "csv") -> Path:
    """Write a report as CSV or as blank-line-separated plot-data blocks."""
    if not report.rows:
        raise DomainError("refusing to emit an empty report")
    path = Path(path)
    try:
        if fmt == "csv":
            lines = [f"# {k} = {v}" for k, v in report.metadata.items()]
            lines.append(f"# kind = {report.kind}")
            lines.append(f"# resolution = {report.resolution_name}")
            lines.append(",".join(["resolution"] + report.columns))
            for row in report.rows:
                cells = [_fmt(row["resolution"])] + [_fmt(row.get(c)) for c in report.columns]
                lines.append(",".join(cells))
        elif fmt == "plot-data":
            error_cols = [c for c in report.columns if c.startswith("err_")]
            lines = []
            for col in error_cols:
                lines.append(f"# {col}")
                for row in report.rows:
                    lines.append(f"{_fmt(row['resolution'])} {math.log10(row[col])}")
                lines.append("")
        else:
            raise DomainError(f"unknown report format {fmt!r}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {path}: {exc}") from exc
    return path


def parse_report(path: str | Path) -> ConvergenceReport:
    """Read back a CSV report written by :func:`emit_report`."""
    metadata: dict[str, str] = {}
    header: list[str] | None = None
    rows: list[dict] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            metadata[key.strip()] = value.strip()
            continue
        cells = line.split(",")
        if header is None:
            header = cells
            continue
        rows.append(
            {
                name: (float(cell) if cell else None)
                for name, cell in zip(header, cells)
            }
        )
    if header is None:
        raise DomainError(f"no table found in {path}")
    kind = metadata.pop("kind", "scalar")
    resolution_name = metadata.pop("resolution", "dt")
    return ConvergenceReport(
        kind=kind,
        resolution_name=resolution_name,
        columns=header[1:],
        rows=rows,
        metadata=metadata,
    )


def render_figure(report: ConvergenceReport, path: str | Path) -> Path:
    """Render the report's error columns as a convergence figure (PNG)."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    error_cols = [c for c in report.columns if c.startswith("err_")]
    resolutions = [row["resolution"] for row in report.rows]
    fig, ax = plt.subplots(figsize=(5.0, 3.8))
    for col in error_cols:
        values = [row[col] for row in report.rows]
        if report.kind == "spatial":
            ax.semilogy(resolutions, values, "o-", label=col)
        else:
            ax.loglog(resolutions, values, "o-", label=col)
    ax.set_xlabel(report.resolution_name)
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend()
    title = report.metadata.get("signal") or report.metadata.get("alphas") or report.kind
    ax.set_title(f"{report.kind} study ({title})")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
