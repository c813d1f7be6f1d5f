"""Legendre-Gauss-Lobatto machinery on [-1,1] and on a shifted interval [0,S].

Provides node/weight construction, the Lagrange differentiation matrix,
discrete (quadrature) inner products and norms, nodal interpolation,
stable off-node evaluation by barycentric interpolation, and error-norm
measurement of a nodal polynomial against a reference function.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cf_core import DomainError


class BasisMismatchError(ValueError):
    """Two grid functions do not share the same basis."""


class IterationFailure(RuntimeError):
    """A Newton solve did not converge within its iteration budget."""


def legendre_eval(n: int, x: float | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Legendre polynomial L_n and derivative L_n' at x in [-1,1].

    Uses the stable three-term recurrence for L_n and the identity
    (x^2 - 1) L_n' = n (x L_n - L_{n-1}), with the endpoint limit
    L_n'(+-1) = (+-1)^(n+1) n(n+1)/2.
    """
    if n < 0:
        raise DomainError(f"degree must be non-negative, got {n}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if n == 0:
        val, der = np.ones_like(x), np.zeros_like(x)
    elif n == 1:
        val, der = x.copy(), np.ones_like(x)
    else:
        p_prev = np.ones_like(x)
        p = x.copy()
        for k in range(1, n):
            p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        der = np.empty_like(x)
        interior = np.abs(x) < 1.0
        der[interior] = (
            n * (x[interior] * p[interior] - p_prev[interior]) / (x[interior] ** 2 - 1.0)
        )
        endpoint = ~interior
        der[endpoint] = np.sign(x[endpoint]) ** (n + 1) * n * (n + 1) / 2.0
        val = p
    if scalar:
        return val[0], der[0]
    return val, der


@dataclass(frozen=True)
class LegendreBasis:
    """LGL nodes, weights and endpoint polynomial values on [-1,1]."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    leg_values: np.ndarray  # L_N at each node


def lgl_basis(degree: int, tol: float = 1e-14, max_iter: int = 100) -> LegendreBasis:
    """Nodes and weights of the (degree+1)-point Lobatto rule.

    Interior nodes are the roots of L_N', found by Newton iteration on L_N'
    from Chebyshev-Lobatto starting guesses; the node set is symmetrized to
    kill residual round-off asymmetry.  Weights are 2/(N(N+1) L_N(x)^2).
    """
    n = degree
    if n < 1:
        raise DomainError(f"degree must be >= 1, got {n}")
    nodes = -np.cos(np.pi * np.arange(n + 1) / n)
    if n >= 2:
        x = nodes[1:-1].copy()
        converged = False
        for _ in range(max_iter):
            val, der = legendre_eval(n, x)
            # L_N'' from the Legendre ODE: (1-x^2) L'' = 2x L' - N(N+1) L
            second = (2.0 * x * der - n * (n + 1) * val) / (1.0 - x**2)
            dx = der / second
            x -= dx
            if np.max(np.abs(dx)) < tol:
                converged = True
                break
        if not converged:
            raise IterationFailure(f"LGL node search stalled at degree {n}")
        nodes[1:-1] = x
        nodes = 0.5 * (nodes - nodes[::-1])
    val, _ = legendre_eval(n, nodes)
    weights = 2.0 / (n * (n + 1) * val**2)
    return LegendreBasis(degree=n, nodes=nodes, weights=weights, leg_values=val)


def _reference_diff_matrix(base: LegendreBasis) -> np.ndarray:
    """Lagrange differentiation matrix at the LGL nodes of [-1,1].

    Off-diagonal entries (L_N(x_p)/L_N(x_i)) / (x_p - x_i); diagonals by the
    negative-sum trick so each row annihilates constants exactly.
    """
    n = base.degree
    x = base.nodes
    lv = base.leg_values
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    d = (lv[:, None] / lv[None, :]) / diff
    np.fill_diagonal(d, 0.0)
    np.fill_diagonal(d, -d.sum(axis=1))
    return d


@dataclass(frozen=True)
class ShiftedBasis:
    """Affine image of an LGL basis on [0, domain_length]."""

    base: LegendreBasis
    domain_length: float
    nodes: np.ndarray
    weights: np.ndarray
    diff_matrix: np.ndarray
    bary_weights: np.ndarray

    @property
    def degree(self) -> int:
        return self.base.degree


def shift_basis(base: LegendreBasis, domain_length: float) -> ShiftedBasis:
    """Map nodes/weights to [0,S] and scale the differentiation matrix by 2/S.

    Barycentric weights for Lobatto nodes are (-1)^j sqrt(omega_j) up to a
    common factor that cancels in the interpolation formula; the affine map
    leaves them unchanged.
    """
    if domain_length <= 0.0:
        raise DomainError(f"domain length must be positive, got {domain_length}")
    s = domain_length
    nodes = 0.5 * s * (base.nodes + 1.0)
    weights = 0.5 * s * base.weights
    diff = (2.0 / s) * _reference_diff_matrix(base)
    bary = (-1.0) ** np.arange(base.degree + 1) * np.sqrt(base.weights)
    return ShiftedBasis(
        base=base,
        domain_length=s,
        nodes=nodes,
        weights=weights,
        diff_matrix=diff,
        bary_weights=bary,
    )


@dataclass(frozen=True)
class GridFunction:
    """Polynomial of degree <= N represented by its values at the shifted nodes."""

    basis: ShiftedBasis
    values: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", values)
        if values.shape != self.basis.nodes.shape:
            raise BasisMismatchError(
                f"{len(values)} values for a basis with {len(self.basis.nodes)} nodes"
            )

    def __call__(self, x: float | np.ndarray) -> float | np.ndarray:
        return barycentric_eval(self.basis, self.values, x)

    def derivative(self) -> "GridFunction":
        return GridFunction(self.basis, self.basis.diff_matrix @ self.values)


def barycentric_eval(
    basis: ShiftedBasis, values: np.ndarray, x: float | np.ndarray
) -> float | np.ndarray:
    """Evaluate the nodal interpolant at arbitrary points, exact at nodes."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x)
    diff = xv[:, None] - basis.nodes[None, :]
    exact = np.isclose(diff, 0.0, rtol=0.0, atol=1e-15 * basis.domain_length)
    hit = exact.any(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        w = basis.bary_weights / diff
        out = (w @ values) / w.sum(axis=1)
    if hit.any():
        idx = exact[hit].argmax(axis=1)
        out[hit] = values[idx]
    if scalar:
        return float(out[0])
    return out


def interpolate(f: Callable[[np.ndarray], np.ndarray], basis: ShiftedBasis) -> GridFunction:
    """Nodal interpolant of f: samples f at the shifted nodes."""
    return GridFunction(basis, np.asarray(f(basis.nodes), dtype=float))


def discrete_inner(u: GridFunction, v: GridFunction) -> float:
    """Quadrature inner product sum_p u(x_p) v(x_p) w_p."""
    if u.basis is not v.basis:
        raise BasisMismatchError("grid functions must share one basis object")
    return float(np.sum(u.values * v.values * u.basis.weights))


def discrete_norm(u: GridFunction) -> float:
    return math.sqrt(max(discrete_inner(u, u), 0.0))


def discrete_h1_norm(u: GridFunction, kappa: float) -> float:
    """Weighted norm (||u||^2 + kappa ||u'||^2)^(1/2) in discrete inner products."""
    du = u.derivative()
    return math.sqrt(max(discrete_inner(u, u) + kappa * discrete_inner(du, du), 0.0))


def error_norms(
    exact: Callable[[np.ndarray], np.ndarray],
    approx: GridFunction,
    kappa: float,
    sup_samples: int = 1000,
) -> tuple[float, float, float]:
    """(sup, L2, weighted-H1) error of a nodal polynomial against a function.

    The sup norm is sampled on ``sup_samples`` uniform points plus the nodes.
    L2 and H1 integrals use an over-refined Lobatto rule of degree 2N (the
    integrand is not polynomial, so this is approximation by overkill
    quadrature); the polynomial and its derivative are carried to the
    refined nodes by barycentric interpolation, while the reference
    derivative is that of the degree-2N interpolant of ``exact``.
    """
    basis = approx.basis
    s = basis.domain_length
    xs = np.union1d(np.linspace(0.0, s, sup_samples), basis.nodes)
    sup_err = float(np.max(np.abs(np.asarray(exact(xs)) - approx(xs))))

    fine = shift_basis(lgl_basis(2 * basis.degree), s)
    exact_fine = np.asarray(exact(fine.nodes), dtype=float)
    approx_fine = approx(fine.nodes)
    err_fine = exact_fine - approx_fine
    l2_err = math.sqrt(max(float(np.sum(err_fine**2 * fine.weights)), 0.0))

    dexact_fine = fine.diff_matrix @ exact_fine
    dapprox = approx.derivative()
    derr_fine = dexact_fine - dapprox(fine.nodes)
    h1_sq = l2_err**2 + kappa * float(np.sum(derr_fine**2 * fine.weights))
    return sup_err, l2_err, math.sqrt(max(h1_sq, 0.0))
