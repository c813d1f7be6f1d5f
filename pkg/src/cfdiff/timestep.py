"""Multi-term coefficient algebra and the two semi-discrete stepping forms.

A multi-term operator is a weighted sum of exponential-kernel fractional
derivatives of orders alpha_1 <= ... <= alpha_n.  Each implicit time step
divides through by the (step-independent) diagonal coefficient eta(k,k),
whose reciprocal kappa is the effective implicit diffusion weight.  The
recurrence ("fast") form carries one O(1) state per term; the normalized
history ("zeta") form rewrites the same step as a positively-weighted sum
over all previous solution values and exists as a verification baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cf_core import DomainError, FastCFState, FractionalOrder, b_coeff


class StateSyncError(RuntimeError):
    """Per-term recurrence states are not at the same step index."""


@dataclass(frozen=True)
class MultiTermOperator:
    """Weighted sum of fractional derivative terms, sorted by order."""

    terms: tuple[tuple[float, FractionalOrder], ...]

    def __post_init__(self) -> None:
        if len(self.terms) < 1:
            raise DomainError("need at least one term")
        sorted_terms = tuple(sorted(self.terms, key=lambda t: t[1].alpha))
        object.__setattr__(self, "terms", sorted_terms)
        if any(d < 0.0 for d, _ in sorted_terms):
            raise DomainError("term weights must be non-negative")
        if not any(d > 0.0 for d, _ in sorted_terms):
            raise DomainError("at least one term weight must be positive")

    @classmethod
    def from_lists(cls, weights: Sequence[float], alphas: Sequence[float]) -> "MultiTermOperator":
        if len(weights) != len(alphas):
            raise DomainError("weights and alphas must have equal length")
        return cls(tuple((float(d), FractionalOrder(float(a))) for d, a in zip(weights, alphas)))

    @property
    def count(self) -> int:
        return len(self.terms)

    @property
    def weights(self) -> np.ndarray:
        return np.array([d for d, _ in self.terms])

    @property
    def alphas(self) -> np.ndarray:
        return np.array([o.alpha for _, o in self.terms])

    @property
    def betas(self) -> np.ndarray:
        return np.array([o.beta for _, o in self.terms])


@dataclass(frozen=True)
class StepCoefficients:
    """Per-step constants of a fixed (operator, dt) pair.

    eta_diag is the diagonal coefficient eta(k,k), identical for every k;
    kappa = 1/eta_diag.  decay and local hold the per-term recurrence
    factors exp(-beta_i dt) and b(k,k)/(alpha_i dt).
    """

    dt: float
    eta_diag: float
    kappa: float
    decay: np.ndarray
    local: np.ndarray


def eta(mt: MultiTermOperator, j: int, k: int, dt: float) -> float:
    """Combined weight sum_i d_i/(alpha_i dt) b_i(j,k); positive."""
    if j < 1 or j > k:
        raise DomainError(f"need 1 <= j <= k, got j={j}, k={k}")
    return sum(d / (o.alpha * dt) * b_coeff(o, j, k, dt) for d, o in mt.terms)


def zeta(mt: MultiTermOperator, j: int, k: int, dt: float) -> float:
    """Normalized history coefficient eta(j,k)/eta(k,k), in (0,1]."""
    if j == k:
        return 1.0
    return eta(mt, j, k, dt) / eta(mt, k, k, dt)


def step_coefficients(mt: MultiTermOperator, dt: float) -> StepCoefficients:
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    decay = np.exp(-mt.betas * dt)
    local = (1.0 - decay) / (mt.alphas * dt)
    eta_diag = float(mt.weights.dot(local))
    return StepCoefficients(dt=dt, eta_diag=eta_diag, kappa=1.0 / eta_diag, decay=decay, local=local)


def multiterm_fast_combination(
    states: Sequence[FastCFState], mt: MultiTermOperator, kappa: float
) -> float | np.ndarray:
    """Decayed weighted sum kappa * sum_i d_i exp(-beta_i dt) F_i of per-term states."""
    if len(states) != mt.count:
        raise StateSyncError(f"expected {mt.count} states, got {len(states)}")
    indices = {s.step_index for s in states}
    if len(indices) != 1:
        raise StateSyncError(f"states at differing step indices {sorted(indices)}")
    acc = None
    for (d, _), state in zip(mt.terms, states):
        contrib = d * state.decay * state.current
        acc = contrib if acc is None else acc + contrib
    return kappa * acc


def history_weights(mt: MultiTermOperator, k: int, dt: float) -> np.ndarray:
    """Weights on u^0..u^(k-1) in the zeta-form step; positive, summing to 1.

    Entry 0 is zeta(1,k); entry j >= 1 is zeta(j+1,k) - zeta(j,k).
    Recomputed per step (O(k n) exponentials): this form is a verification
    baseline and deliberately carries no cached tables.
    """
    if k < 1:
        raise DomainError(f"need k >= 1, got {k}")
    j = np.arange(1, k + 1)
    eta_jk = np.zeros(k)
    for d, o in mt.terms:
        sig = np.exp(-o.beta * (k - j) * dt)
        sig_prev = np.exp(-o.beta * (k - j + 1) * dt)
        eta_jk += d / (o.alpha * dt) * (sig - sig_prev)
    zeta_jk = eta_jk / eta_jk[-1]
    out = np.empty(k)
    out[0] = zeta_jk[0]
    out[1:] = np.diff(zeta_jk)
    return out
