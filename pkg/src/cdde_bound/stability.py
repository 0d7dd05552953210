"""Stability tests for the positive-system class.

All decisions go through sign-of-inverse characterizations, which are exact
for Metzler/nonnegative matrices:

* a Metzler matrix is Hurwitz iff it is nonsingular with ``inv(M) <= 0``,
* a nonnegative matrix is Schur iff ``I - M`` is nonsingular with
  ``inv(I - M) >= 0``.

No eigenvalue computation is used anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SingularMatrix, as_matrix, as_vector, inverse, solve
from .model import SystemSpec

METZLER_TOL = 1e-12
# strict positivity threshold for witness vectors
WITNESS_TOL = 1e-12


class NotMetzler(ValueError):
    """Matrix has an off-diagonal entry below the Metzler tolerance."""


class NotNonnegative(ValueError):
    """Matrix has a negative entry."""


class NotStable(ValueError):
    """Matrix fails the Hurwitz test where stability is required."""


@dataclass(frozen=True, eq=False)
class StabilityReport:
    a_is_metzler: bool
    bcd_nonnegative: bool
    d_is_schur: bool
    joint_condition_holds: bool
    witness_p: np.ndarray | None = None
    witness_q: np.ndarray | None = None
    diagnostic: str | None = None


def _require_metzler(A: np.ndarray) -> None:
    off = A[~np.eye(A.shape[0], dtype=bool)]
    if off.size and off.min() < -METZLER_TOL:
        raise NotMetzler(f"off-diagonal entry {off.min()} below -{METZLER_TOL}")


def is_metzler_hurwitz(A) -> bool:
    """Hurwitz test for a Metzler matrix via the sign of its inverse."""
    M = as_matrix(A, "A")
    if M.shape[0] != M.shape[1]:
        raise NotMetzler(f"matrix must be square, got {M.shape}")
    _require_metzler(M)
    try:
        Minv = inverse(M)
    except SingularMatrix:
        return False
    return bool((Minv <= 1e-12).all())


def is_schur_nonneg(D) -> bool:
    """Schur test for a nonnegative matrix via the sign of inv(I - D)."""
    M = as_matrix(D, "D")
    if M.shape[0] != M.shape[1]:
        raise NotNonnegative(f"matrix must be square, got {M.shape}")
    if M.min() < -METZLER_TOL:
        raise NotNonnegative(f"entry {M.min()} below -{METZLER_TOL}")
    try:
        R = inverse(np.eye(M.shape[0]) - M)
    except SingularMatrix:
        return False
    return bool((R >= -1e-12).all())


def coupling_matrix(spec: SystemSpec) -> np.ndarray:
    """The block matrix [[A, B], [C, D - I]] coupling both state parts."""
    return np.block([[spec.A, spec.B],
                     [spec.C, spec.D - np.eye(spec.m)]])


def check_joint_condition(spec: SystemSpec, xi=None) -> StabilityReport:
    """Joint positivity-stability check with an explicit witness pair.

    Solves ``[[A, B], [C, D - I]] v = -xi`` and accepts iff the solution is
    strictly positive; the two halves of ``v`` then witness the strict
    inequalities ``A p + B q < 0`` and ``C p + (D - I) q < 0``.
    """
    n, m = spec.n, spec.m
    offA = spec.A[~np.eye(n, dtype=bool)]
    a_is_metzler = bool(offA.size == 0 or offA.min() >= -METZLER_TOL)
    bcd_nonnegative = bool(
        spec.B.min(initial=0.0) >= -METZLER_TOL
        and spec.C.min(initial=0.0) >= -METZLER_TOL
        and spec.D.min(initial=0.0) >= -METZLER_TOL
    )
    d_is_schur = bcd_nonnegative and is_schur_nonneg(spec.D)
    if not (a_is_metzler and bcd_nonnegative):
        return StabilityReport(a_is_metzler, bcd_nonnegative, d_is_schur, False,
                               diagnostic="structural requirements violated")
    if xi is None:
        xi_vec = np.ones(n + m)
    else:
        xi_vec = as_vector(xi, "xi")
        if xi_vec.shape[0] != n + m:
            raise ValueError(f"xi must have length {n + m}, got {xi_vec.shape[0]}")
        if xi_vec.min() <= 0.0:
            raise ValueError("xi must be strictly positive")
    try:
        v = solve(coupling_matrix(spec), -xi_vec)
    except SingularMatrix as exc:
        return StabilityReport(a_is_metzler, bcd_nonnegative, d_is_schur, False,
                               diagnostic=f"coupling matrix singular: {exc}")
    p, q = v[:n], v[n:]
    if p.min() > WITNESS_TOL and q.min() > WITNESS_TOL:
        return StabilityReport(a_is_metzler, bcd_nonnegative, d_is_schur, True,
                               witness_p=p, witness_q=q)
    return StabilityReport(a_is_metzler, bcd_nonnegative, d_is_schur, False,
                           diagnostic="witness vector not strictly positive")


def alpha_max(A, step: float) -> float:
    """Largest grid multiple of ``step`` keeping ``A + alpha I`` Hurwitz.

    The spectral abscissa of ``A + alpha I`` is strictly increasing in
    ``alpha``, so the scan terminates.
    """
    if step <= 0.0:
        raise ValueError(f"step must be positive, got {step}")
    M = as_matrix(A, "A")
    if not is_metzler_hurwitz(M):
        raise NotStable("matrix is not Hurwitz, no positive decay rate exists")
    eye = np.eye(M.shape[0])
    k = 1
    while is_metzler_hurwitz(M + (k * step) * eye):
        k += 1
    return (k - 1) * step
