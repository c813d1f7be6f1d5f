"""Full discretization: collocation matrices, time march and linear solves.

Each implicit step solves (R + kappa G) C^k = Q^k for the interior nodal
values, where R is the diagonal quadrature mass matrix and G the discrete
stiffness matrix.  The right-hand side carries the decayed per-term
recurrence states of the previous solution (the default "fast" march) or,
for verification, the full weighted history of stored solutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .cf_core import DomainError, FastCFState, fast_init, fast_step
from .spectral import GridFunction, ShiftedBasis, discrete_inner, interpolate
from .timestep import (
    MultiTermOperator,
    StateSyncError,
    StepCoefficients,
    history_weights,
    step_coefficients,
)

BOUNDARY_TOL = 1e-12


class CGConvergenceError(RuntimeError):
    """Conjugate gradient failed to reach the residual tolerance in budget."""


class CompatibilityError(ValueError):
    """Initial data does not satisfy the homogeneous boundary condition."""


@dataclass(frozen=True)
class ProblemSpec:
    """Diffusion problem on (0, domain_length) x (0, horizon]."""

    domain_length: float
    horizon: float
    operator: MultiTermOperator
    initial: Callable[[np.ndarray], np.ndarray]
    forcing: Callable[[np.ndarray, float], np.ndarray]
    exact_solution: Callable[[np.ndarray, float], np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.domain_length <= 0.0 or self.horizon <= 0.0:
            raise DomainError("domain length and horizon must be positive")
        for x in (0.0, self.domain_length):
            if abs(float(np.asarray(self.initial(np.array([x])))[0])) > BOUNDARY_TOL:
                raise CompatibilityError(
                    f"initial data is nonzero at the boundary x = {x}"
                )


@dataclass(frozen=True)
class AssembledOperator:
    """Interior system matrix A = R + kappa G and its solver data."""

    basis: ShiftedBasis
    kappa: float
    r_diag: np.ndarray
    stiffness: np.ndarray
    matrix: np.ndarray

    def interior(self, full_values: np.ndarray) -> np.ndarray:
        return full_values[1:-1]


def assemble(basis: ShiftedBasis, kappa: float) -> AssembledOperator:
    """Mass and stiffness matrices over the interior Lagrange basis.

    r_ij = delta_ij w_i; g_ij = sum_p h_i'(x_p) h_j'(x_p) w_p, formed from
    interior columns of the differentiation matrix.
    """
    if basis.degree < 2:
        raise DomainError("need polynomial degree >= 2 for interior unknowns")
    d_int = basis.diff_matrix[:, 1:-1]
    g = d_int.T @ (basis.weights[:, None] * d_int)
    r = basis.weights[1:-1]
    a = np.diag(r) + kappa * g
    return AssembledOperator(basis=basis, kappa=kappa, r_diag=r, stiffness=g, matrix=a)


def initial_field(spec: ProblemSpec, basis: ShiftedBasis) -> GridFunction:
    """Nodal interpolant of the initial data with boundary entries forced to 0."""
    values = np.asarray(spec.initial(basis.nodes), dtype=float)
    if abs(values[0]) > BOUNDARY_TOL or abs(values[-1]) > BOUNDARY_TOL:
        raise CompatibilityError("initial data is incompatible with zero boundaries")
    values = values.copy()
    values[0] = 0.0
    values[-1] = 0.0
    return GridFunction(basis, values)


@dataclass
class MarchState:
    """Time-march state: interior unknowns plus per-term recurrence fields."""

    step: int
    current: np.ndarray             # C^k, interior values
    previous: np.ndarray | None     # C^(k-1)
    fast_states: list[FastCFState]  # one vector-valued state per operator term
    coeffs: StepCoefficients


def rhs(k: int, state: MarchState, spec: ProblemSpec, op: AssembledOperator) -> np.ndarray:
    """Interior right-hand side Q^k of the step-k collocation system."""
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    nodes = op.basis.nodes[1:-1]
    weights = op.r_diag
    kappa = op.kappa
    f_k = np.asarray(spec.forcing(nodes, k * state.coeffs.dt), dtype=float)
    if k == 1:
        return weights * (state.current + kappa * f_k)
    if any(s.step_index != k - 1 for s in state.fast_states):
        raise StateSyncError(f"recurrence states not synchronized at step {k - 1}")
    mt = spec.operator
    memory = np.zeros_like(state.current)
    for (d, _), s in zip(mt.terms, state.fast_states):
        memory += d * s.decay * s.current
    return weights * (state.current - kappa * memory + kappa * f_k)


def cg_solve(
    op: AssembledOperator,
    b: np.ndarray,
    tol: float = 1e-12,
    x0: np.ndarray | None = None,
    max_iter: int | None = None,
) -> np.ndarray:
    """Conjugate gradient on A x = b to a relative residual tolerance."""
    a = op.matrix
    n = len(b)
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n)
    if max_iter is None:
        max_iter = 10 * n
    x = np.zeros(n) if x0 is None else x0.astype(float).copy()
    r = b - a @ x
    p = r.copy()
    rs = float(r.dot(r))
    if math.sqrt(rs) <= tol * b_norm:
        return x
    for _ in range(max_iter):
        ap = a @ p
        alpha = rs / float(p.dot(ap))
        x += alpha * p
        r -= alpha * ap
        rs_new = float(r.dot(r))
        if math.sqrt(rs_new) <= tol * b_norm:
            return x
        p = r + (rs_new / rs) * p
        rs = rs_new
    raise CGConvergenceError(
        f"no convergence to {tol} within {max_iter} iterations "
        f"(residual {math.sqrt(rs) / b_norm:.3e})"
    )


def advance(
    state: MarchState,
    spec: ProblemSpec,
    op: AssembledOperator,
    tol: float = 1e-12,
    cholesky: tuple | None = None,
) -> MarchState:
    """One implicit step: build Q^k, solve, then update the recurrence fields."""
    k = state.step + 1
    q = rhs(k, state, spec, op)
    if cholesky is not None:
        c_new = cho_solve(cholesky, q)
    else:
        c_new = cg_solve(op, q, tol=tol, x0=state.current)
    if k == 1:
        fast_states = [
            fast_init(order, state.coeffs.dt, state.current, c_new)
            for _, order in spec.operator.terms
        ]
    else:
        fast_states = [fast_step(s, c_new) for s in state.fast_states]
    return MarchState(
        step=k,
        current=c_new,
        previous=state.current,
        fast_states=fast_states,
        coeffs=state.coeffs,
    )


@dataclass
class SolveResult:
    solution: GridFunction
    norm_trace: list[float] | None = None
    initial_l2: float | None = None


def _attach_boundaries(basis: ShiftedBasis, interior: np.ndarray) -> GridFunction:
    full = np.zeros(len(basis.nodes))
    full[1:-1] = interior
    return GridFunction(basis, full)


def solve(
    spec: ProblemSpec,
    degree: int,
    steps: int,
    tol: float = 1e-12,
    method: str = "cg",
    record_norms: bool = False,
) -> SolveResult:
    """March the collocation solution from t = 0 to the horizon.

    ``method`` selects the per-step linear solver: "cg" (warm-started from
    the previous step) or "cholesky" (one factorization of the constant
    matrix, same solve contract).
    """
    from .spectral import discrete_h1_norm, lgl_basis, shift_basis

    if method not in ("cg", "cholesky"):
        raise DomainError(f"unknown solver method {method!r}")
    basis = shift_basis(lgl_basis(degree), spec.domain_length)
    dt = spec.horizon / steps
    coeffs = step_coefficients(spec.operator, dt)
    op = assemble(basis, coeffs.kappa)
    factor = cho_factor(op.matrix) if method == "cholesky" else None

    u0 = initial_field(spec, basis)
    state = MarchState(
        step=0,
        current=u0.values[1:-1].copy(),
        previous=None,
        fast_states=[],
        coeffs=coeffs,
    )
    trace: list[float] | None = [] if record_norms else None
    initial_l2 = math.sqrt(max(discrete_inner(u0, u0), 0.0)) if record_norms else None
    for _ in range(steps):
        state = advance(state, spec, op, tol=tol, cholesky=factor)
        if trace is not None:
            gf = _attach_boundaries(basis, state.current)
            trace.append(discrete_h1_norm(gf, coeffs.kappa))
    return SolveResult(
        solution=_attach_boundaries(basis, state.current),
        norm_trace=trace,
        initial_l2=initial_l2,
    )


def solve_history_form(
    spec: ProblemSpec,
    degree: int,
    steps: int,
    tol: float = 1e-12,
) -> SolveResult:
    """Zeta-form march storing all previous fields; verification baseline.

    Algebraically equivalent to ``solve``; costs O(k) history per step.
    """
    from .spectral import lgl_basis, shift_basis

    basis = shift_basis(lgl_basis(degree), spec.domain_length)
    dt = spec.horizon / steps
    coeffs = step_coefficients(spec.operator, dt)
    op = assemble(basis, coeffs.kappa)
    nodes = basis.nodes[1:-1]
    kappa = coeffs.kappa

    u0 = initial_field(spec, basis)
    fields = [u0.values[1:-1].copy()]
    for k in range(1, steps + 1):
        f_k = np.asarray(spec.forcing(nodes, k * dt), dtype=float)
        if k == 1:
            combo = fields[0]
        else:
            w = history_weights(spec.operator, k, dt)
            combo = np.zeros_like(fields[0])
            for weight, field_vals in zip(w, fields):
                combo += weight * field_vals
        q = op.r_diag * (combo + kappa * f_k)
        fields.append(cg_solve(op, q, tol=tol, x0=fields[-1]))
    return SolveResult(solution=_attach_boundaries(basis, fields[-1]))
