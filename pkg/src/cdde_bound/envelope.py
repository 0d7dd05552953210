"""Optimized exponential componentwise envelopes for x' = A x.

For a Metzler-Hurwitz ``A``, a decay rate ``alpha`` with ``A + alpha I``
still Hurwitz and an initial box ``0 <= u(0) <= theta_bar``, each component
admits a bound ``u_i(t) <= gamma_i * exp(-alpha t)``.  The tightest factor
for a fixed rate is the infimum of a degree-0 homogeneous rational function
over the positive orthant, which collapses to a finite minimum of ratios:

    gamma_i = min over {j : b_j > 0} of a_j / b_j,

with ``a = -inv(A + alpha I) @ theta_bar`` and ``b`` the i-th column of
``-inv(A + alpha I)``.  Sweeping alpha over a grid and inverting the bound
gives, per component, the earliest certified entry time into a target box,
and the slowest component sets the overall convergence time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .linalg import SingularMatrix, as_matrix, as_vector, inverse
from .model import NONNEG_TOL
from .stability import NotStable, _require_metzler, alpha_max

# entries of b above this threshold participate in the ratio minimum
INDEX_TOL = 1e-12


class DecayRateTooLarge(ValueError):
    """A + alpha I is not Hurwitz for the requested alpha."""


class EmptyIndexSet(RuntimeError):
    """No positive denominator coefficient; unreachable for valid inputs."""


class NonpositiveThreshold(ValueError):
    """Target box has a nonpositive component."""


@dataclass(frozen=True, eq=False)
class ExponentialEstimate:
    """Componentwise bound u_i(t) <= gamma[i] * exp(-alpha * t)."""

    alpha: float
    gamma: np.ndarray


@dataclass(frozen=True, eq=False)
class ConvergenceResult:
    """Certified entry times into the target box, per component and overall."""

    T: float
    per_component_T: np.ndarray
    per_component_alpha: np.ndarray


def _neg_shifted_inverse(A: np.ndarray, alpha: float) -> np.ndarray:
    """-inv(A + alpha I), raising DecayRateTooLarge unless it is >= 0."""
    M = A + alpha * np.eye(A.shape[0])
    try:
        Minv = inverse(M)
    except SingularMatrix as exc:
        raise DecayRateTooLarge(f"alpha={alpha}: shifted matrix singular") from exc
    if not (Minv <= 1e-12).all():
        raise DecayRateTooLarge(f"alpha={alpha}: shifted matrix not Hurwitz")
    return -Minv


def _gamma_from_inverse(neg_inv: np.ndarray, theta_bar: np.ndarray, i: int) -> float:
    a = neg_inv @ theta_bar
    b = neg_inv[:, i]
    mask = b > INDEX_TOL
    if not mask.any():
        raise EmptyIndexSet(f"column {i} of the shifted inverse has no positive entry")
    return float((a[mask] / b[mask]).min())


def gamma_component(A, alpha: float, theta_bar, i: int) -> float:
    """Optimal envelope factor for component ``i`` at decay rate ``alpha``."""
    M = as_matrix(A, "A")
    _require_metzler(M)
    theta = as_vector(theta_bar, "theta_bar")
    if theta.min() < -NONNEG_TOL:
        raise ValueError("theta_bar must be nonnegative")
    if not 0 <= i < M.shape[0]:
        raise IndexError(f"component index {i} out of range for dimension {M.shape[0]}")
    return _gamma_from_inverse(_neg_shifted_inverse(M, alpha), theta, i)


def exponential_estimate(A, alpha: float, theta_bar) -> ExponentialEstimate:
    """All componentwise factors at rate ``alpha``, sharing one inversion."""
    if alpha <= 0.0:
        raise ValueError(f"decay rate must be positive, got {alpha}")
    M = as_matrix(A, "A")
    _require_metzler(M)
    theta = as_vector(theta_bar, "theta_bar")
    neg_inv = _neg_shifted_inverse(M, alpha)
    gamma = np.array([_gamma_from_inverse(neg_inv, theta, i)
                      for i in range(M.shape[0])])
    return ExponentialEstimate(alpha=alpha, gamma=gamma)


def time_to_threshold(gamma_i: float, delta_i: float, alpha: float) -> float:
    """Smallest t >= 0 with gamma_i * exp(-alpha t) <= delta_i."""
    if delta_i <= 0.0:
        raise NonpositiveThreshold(f"threshold must be positive, got {delta_i}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if gamma_i < 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma_i}")
    if gamma_i <= delta_i:
        return 0.0
    return math.log(gamma_i / delta_i) / alpha


def finite_time(A, theta_bar, delta, alpha_step: float) -> ConvergenceResult:
    """Certified time after which every solution sits inside the target box.

    Sweeps the decay-rate grid ``alpha_step, 2*alpha_step, ...`` up to the
    largest admissible rate, takes per component the best (smallest) entry
    time over the grid, and returns the maximum over components.  Every
    solution of x' = A x with 0 <= x(0) <= theta_bar satisfies
    x(t) <= delta for all t >= T.
    """
    M = as_matrix(A, "A")
    theta = as_vector(theta_bar, "theta_bar")
    dlt = as_vector(delta, "delta")
    if theta.shape[0] != M.shape[0] or dlt.shape[0] != M.shape[0]:
        raise ValueError("theta_bar and delta must match the dimension of A")
    if dlt.min() <= 0.0:
        raise NonpositiveThreshold(f"delta must be strictly positive, got {dlt}")
    if theta.min() < -NONNEG_TOL:
        raise ValueError("theta_bar must be nonnegative")

    a_max = alpha_max(M, alpha_step)
    grid = [k * alpha_step for k in range(1, int(round(a_max / alpha_step)) + 1)]
    if not grid:
        # Hurwitz margin smaller than the grid step: halve until admissible.
        a = alpha_step
        for _ in range(60):
            a /= 2.0
            try:
                _neg_shifted_inverse(M, a)
            except DecayRateTooLarge:
                continue
            grid = [a]
            break
        if not grid:
            raise NotStable("no admissible decay rate found")

    dim = M.shape[0]
    best_t = np.full(dim, np.inf)
    best_alpha = np.zeros(dim)
    for alpha in grid:
        neg_inv = _neg_shifted_inverse(M, alpha)
        a_vec = neg_inv @ theta
        for i in range(dim):
            b = neg_inv[:, i]
            mask = b > INDEX_TOL
            if not mask.any():
                raise EmptyIndexSet(f"column {i} has no positive entry")
            gamma_i = (a_vec[mask] / b[mask]).min()
            t_i = time_to_threshold(float(gamma_i), float(dlt[i]), alpha)
            if t_i < best_t[i]:
                best_t[i] = t_i
                best_alpha[i] = alpha
    return ConvergenceResult(T=float(best_t.max()),
                             per_component_T=best_t,
                             per_component_alpha=best_alpha)
