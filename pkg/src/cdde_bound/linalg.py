"""Dense real linear algebra for small systems.

Everything here operates on plain numpy float64 arrays.  The solver is a
partially pivoted LU factorization written out explicitly so that the
singularity threshold is under our control: the coupling matrices handled
by this package are provably nonsingular when the modelling hypotheses
hold, so a near-zero pivot signals a modelling error and must surface as
:class:`SingularMatrix` rather than as solver-dependent noise.
"""

from __future__ import annotations

import numpy as np

# Pivot magnitudes below PIVOT_RTOL times the largest entry of the input
# matrix declare the matrix singular.
PIVOT_RTOL = 1e-12


class SingularMatrix(ValueError):
    """Matrix is singular to working precision."""


class DimensionMismatch(ValueError):
    """Operands have inconsistent dimensions."""


def as_matrix(data, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float64 array and require finite entries."""
    a = np.array(data, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def as_vector(data, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float64 array and require finite entries."""
    a = np.array(data, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def lu_factor(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Partially pivoted LU factorization.

    Returns ``(lu, perm)`` where ``lu`` packs the unit-lower and upper
    triangular factors and ``perm`` maps factored rows to input rows.
    Raises :class:`SingularMatrix` when a pivot falls below the relative
    threshold.
    """
    a = as_matrix(matrix)
    nrows, ncols = a.shape
    if nrows != ncols:
        raise DimensionMismatch(f"matrix must be square, got {nrows}x{ncols}")
    scale = np.abs(a).max()
    if scale == 0.0:
        raise SingularMatrix("zero matrix")
    tol = PIVOT_RTOL * scale
    lu = a.copy()
    perm = np.arange(nrows)
    for k in range(nrows):
        p = k + int(np.argmax(np.abs(lu[k:, k])))
        if abs(lu[p, k]) < tol:
            raise SingularMatrix(
                f"pivot {lu[p, k]:.3e} below threshold {tol:.3e} at column {k}"
            )
        if p != k:
            lu[[k, p]] = lu[[p, k]]
            perm[[k, p]] = perm[[p, k]]
        lu[k + 1:, k] /= lu[k, k]
        lu[k + 1:, k + 1:] -= np.outer(lu[k + 1:, k], lu[k, k + 1:])
    return lu, perm


def lu_solve(lu: np.ndarray, perm: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    n = lu.shape[0]
    x = rhs[perm].astype(float, copy=True)
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        x[i] = (x[i] - lu[i, i + 1:] @ x[i + 1:]) / lu[i, i]
    return x


def solve(matrix, rhs) -> np.ndarray:
    """Solve ``matrix @ x = rhs`` by LU with partial pivoting."""
    b = as_vector(rhs, "rhs")
    lu, perm = lu_factor(matrix)
    if lu.shape[0] != b.shape[0]:
        raise DimensionMismatch(
            f"rhs length {b.shape[0]} does not match matrix order {lu.shape[0]}"
        )
    return lu_solve(lu, perm, b)


def inverse(matrix) -> np.ndarray:
    """Invert via one factorization and n unit-vector solves."""
    lu, perm = lu_factor(matrix)
    n = lu.shape[0]
    out = np.empty((n, n))
    e = np.zeros(n)
    for i in range(n):
        e[i] = 1.0
        out[:, i] = lu_solve(lu, perm, e)
        e[i] = 0.0
    return out


def cmp_leq(u, v, slack: float = 0.0) -> bool:
    """Componentwise order test: ``u[i] <= v[i] + slack`` for all i."""
    if slack < 0.0:
        raise ValueError(f"slack must be nonnegative, got {slack}")
    ua = as_vector(u, "u")
    va = as_vector(v, "v")
    if ua.shape != va.shape:
        raise DimensionMismatch(f"dimension mismatch: {ua.shape[0]} vs {va.shape[0]}")
    return bool((ua <= va + slack).all())
