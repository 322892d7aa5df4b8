"""Dense preconditioners and the geometry they induce.

A preconditioner here is a symmetric positive-semidefinite matrix M together
with its spectral data, classified as positive-definite or degenerate at
construction time.  Everything downstream measures lengths and angles with
``<x, y>_M = x^T M y``, so this module also carries the shifted solves and
pseudo-inverse actions the rest of the package leans on.
"""

from __future__ import annotations

import numpy as np

from .errors import (
    DegenerateUnsupportedError,
    DimensionMismatchError,
    PreconditionerAdmissionError,
    SingularSystemError,
)

SYMMETRY_RTOL = 1e-12
PSD_RTOL = 1e-10
TIER_GAP_RTOL = 1e-10
RCOND_FLOOR = 1e-12

POSITIVE_DEFINITE = "positive-definite"
DEGENERATE = "degenerate"


def as_vector(x, dim=None):
    """Coerce to a finite 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionMismatchError(f"expected a vector, got array of shape {v.shape}")
    if dim is not None and v.shape[0] != dim:
        raise DimensionMismatchError(f"expected dimension {dim}, got {v.shape[0]}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


class Preconditioner:
    """Symmetric PSD matrix with cached spectral factorization and tier flag.

    Instances are immutable and safe to share across concurrent evaluations.
    Construction rejects asymmetric or indefinite input loudly instead of
    repairing it.
    """

    def __init__(self, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise PreconditionerAdmissionError(f"matrix must be square, got shape {m.shape}")
        scale = np.linalg.norm(m, 2) if m.size else 0.0
        asym = np.linalg.norm(m - m.T, 2)
        if asym > SYMMETRY_RTOL * max(scale, 1e-300):
            raise PreconditionerAdmissionError(
                f"matrix is not symmetric: ||M - M^T|| = {asym:.3e} vs scale {scale:.3e}"
            )
        m = 0.5 * (m + m.T)
        evals, evecs = np.linalg.eigh(m)
        beta = float(evals[-1])
        alpha = float(evals[0])
        if alpha < -PSD_RTOL * max(beta, 0.0):
            raise PreconditionerAdmissionError(
                f"matrix is not positive semidefinite: min eigenvalue {alpha:.3e}"
            )
        self.matrix = m
        self.dim = m.shape[0]
        self._evals = np.maximum(evals, 0.0)
        self._evecs = evecs
        self.alpha_min = max(alpha, 0.0)
        self.beta_max = max(beta, 0.0)
        self.tier = POSITIVE_DEFINITE if alpha > TIER_GAP_RTOL * max(beta, 0.0) else DEGENERATE
        self.matrix.flags.writeable = False
        self._evals.flags.writeable = False
        self._evecs.flags.writeable = False

    @property
    def is_positive_definite(self):
        return self.tier == POSITIVE_DEFINITE

    @property
    def spectral_bounds(self):
        """(smallest, largest) eigenvalue."""
        return (self.alpha_min, self.beta_max)

    def apply(self, x):
        x = as_vector(x, self.dim)
        return self.matrix @ x

    def inv_apply(self, x):
        """Exact inverse action; refuses the degenerate tier."""
        if not self.is_positive_definite:
            raise DegenerateUnsupportedError(
                "inverse preconditioner action requested on the degenerate tier"
            )
        x = as_vector(x, self.dim)
        w = self._evecs.T @ x
        return self._evecs @ (w / self._evals)

    def pinv_apply(self, x):
        """Moore-Penrose action M^+ x via the cached eigendecomposition."""
        x = as_vector(x, self.dim)
        w = self._evecs.T @ x
        cutoff = TIER_GAP_RTOL * max(self.beta_max, 1e-300)
        inv = np.where(self._evals > cutoff, 1.0 / np.where(self._evals > cutoff, self._evals, 1.0), 0.0)
        return self._evecs @ (w * inv)

    def inverse(self):
        """Preconditioner representing M^{-1} (positive-definite tier only)."""
        if not self.is_positive_definite:
            raise DegenerateUnsupportedError("cannot invert a degenerate preconditioner")
        inv = self._evecs @ np.diag(1.0 / self._evals) @ self._evecs.T
        return Preconditioner(0.5 * (inv + inv.T))

    def scaled(self, factor):
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return Preconditioner(factor * self.matrix)

    def __repr__(self):
        return f"Preconditioner(dim={self.dim}, tier={self.tier!r})"


def identity(n):
    return Preconditioner(np.eye(n))


def diagonal(values):
    values = as_vector(values)
    return Preconditioner(np.diag(values))


def dr_block(n):
    """The 2n-dimensional block [[I, -I], [-I, I]]; degenerate by construction."""
    eye = np.eye(n)
    top = np.hstack([eye, -eye])
    bot = np.hstack([-eye, eye])
    return Preconditioner(np.vstack([top, bot]))


def m_inner(M, x, y):
    """Inner product <x, y>_M = x^T M y."""
    x = as_vector(x, M.dim)
    y = as_vector(y, M.dim)
    return float(x @ (M.matrix @ y))


def m_norm(M, x):
    """Seminorm ||x||_M; clamps the tiny negative values rounding can produce."""
    return float(np.sqrt(max(m_inner(M, x, x), 0.0)))


def solve_shifted(M, C, gamma, b):
    """Solve (M + gamma*C) y = b for the dense square matrix C.

    Raises SingularSystemError, carrying the reciprocal condition estimate,
    when the shifted matrix is singular or nearly so.
    """
    C = np.asarray(C, dtype=float)
    if C.shape != (M.dim, M.dim):
        raise DimensionMismatchError(f"expected shape {(M.dim, M.dim)}, got {C.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    b = as_vector(b, M.dim)
    S = M.matrix + gamma * C
    svals = np.linalg.svd(S, compute_uv=False)
    rcond = float(svals[-1] / svals[0]) if svals[0] > 0 else 0.0
    if rcond <= RCOND_FLOOR:
        raise SingularSystemError(rcond)
    return np.linalg.solve(S, b)


def pinv_apply(M, x):
    return M.pinv_apply(x)
