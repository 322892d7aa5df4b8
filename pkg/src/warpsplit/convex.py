"""Closed registry of convex functions with exact proximal maps and graphs.

Every function kind carries, besides its value and proximal map, a residual
``subgradient_distance(y, p)`` that vanishes exactly when ``p`` is a
subgradient at ``y``.  For the separable kinds the residual is the Euclidean
distance from ``(y_i, p_i)`` to the coordinatewise subdifferential graph,
which keeps membership checks stable for points produced by inner loops.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .errors import DimensionMismatchError, SingularSystemError
from .linalg import as_vector

_BOUNDARY_WINDOW = 1e-9


class ConvexFunction:
    """Base class; subclasses are immutable value/prox/graph bundles."""

    dim = None
    separable = False
    is_indicator = False

    def value(self, x):
        raise NotImplementedError

    def prox(self, tau, v):
        """argmin_z f(z) + ||z - v||^2 / (2 tau)."""
        raise NotImplementedError

    def subgradient_distance(self, y, p):
        raise NotImplementedError

    def sample_point(self, rng, radius):
        """A point of the effective domain near the origin."""
        return self.prox(1.0, rng.normal(0.0, radius, self.dim))

    def sample_subgradient(self, rng, y):
        """Some element of the subdifferential at the domain point y."""
        raise NotImplementedError


class ZeroFunction(ConvexFunction):
    """f = 0."""

    separable = True

    def __init__(self, dim):
        self.dim = dim

    def value(self, x):
        as_vector(x, self.dim)
        return 0.0

    def prox(self, tau, v):
        return as_vector(v, self.dim).copy()

    def subgradient_distance(self, y, p):
        as_vector(y, self.dim)
        return float(np.linalg.norm(as_vector(p, self.dim)))

    def sample_subgradient(self, rng, y):
        return np.zeros(self.dim)


class Quadratic(ConvexFunction):
    """f(x) = x^T Q x / 2 + b^T x + c with symmetric PSD Q."""

    def __init__(self, Q, b=None, c=0.0):
        Q = np.asarray(Q, dtype=float)
        if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
            raise DimensionMismatchError("Q must be square")
        if np.linalg.norm(Q - Q.T, 2) > 1e-12 * max(np.linalg.norm(Q, 2), 1e-300):
            raise ValueError("Q must be symmetric")
        Q = 0.5 * (Q + Q.T)
        evals = np.linalg.eigvalsh(Q)
        if evals[0] < -1e-10 * max(evals[-1], 0.0):
            raise ValueError("Q must be positive semidefinite")
        self.Q = Q
        self.dim = Q.shape[0]
        self.b = np.zeros(self.dim) if b is None else as_vector(b, self.dim)
        self.c = float(c)

    def value(self, x):
        x = as_vector(x, self.dim)
        return float(0.5 * x @ (self.Q @ x) + self.b @ x + self.c)

    def gradient(self, x):
        x = as_vector(x, self.dim)
        return self.Q @ x + self.b

    def prox(self, tau, v):
        v = as_vector(v, self.dim)
        return np.linalg.solve(np.eye(self.dim) + tau * self.Q, v - tau * self.b)

    def subgradient_distance(self, y, p):
        return float(np.linalg.norm(as_vector(p, self.dim) - self.gradient(y)))

    def sample_subgradient(self, rng, y):
        return self.gradient(y)


class L1Norm(ConvexFunction):
    """f(x) = weight * sum_i |x_i|."""

    separable = True

    def __init__(self, weight, dim):
        if weight <= 0:
            raise ValueError("weight must be positive")
        self.weight = float(weight)
        self.dim = dim

    def value(self, x):
        return self.weight * float(np.abs(as_vector(x, self.dim)).sum())

    def prox(self, tau, v):
        v = as_vector(v, self.dim)
        thresh = tau * self.weight
        return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)

    def prox_coordinate(self, i, tau, vi):
        thresh = tau * self.weight
        return np.sign(vi) * max(abs(vi) - thresh, 0.0)

    def subgradient_distance(self, y, p):
        y = as_vector(y, self.dim)
        p = as_vector(p, self.dim)
        w = self.weight
        d_pos = np.sqrt(np.maximum(-y, 0.0) ** 2 + (p - w) ** 2)
        d_neg = np.sqrt(np.maximum(y, 0.0) ** 2 + (p + w) ** 2)
        d_zero = np.sqrt(y ** 2 + np.maximum(np.abs(p) - w, 0.0) ** 2)
        return float(np.linalg.norm(np.minimum(np.minimum(d_pos, d_neg), d_zero)))

    def sample_subgradient(self, rng, y):
        y = as_vector(y, self.dim)
        g = self.weight * np.sign(y)
        at_zero = y == 0.0
        g[at_zero] = self.weight * rng.uniform(-1.0, 1.0, int(at_zero.sum()))
        return g


class BoxIndicator(ConvexFunction):
    """Indicator of the box [lo, hi] (entries may be +-inf)."""

    separable = True
    is_indicator = True

    def __init__(self, lo, hi):
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatchError("lo and hi must be vectors of equal length")
        if np.any(lo > hi):
            raise ValueError("need lo <= hi componentwise")
        self.lo = lo
        self.hi = hi
        self.dim = lo.shape[0]

    def value(self, x):
        x = as_vector(x, self.dim)
        inside = np.all(x >= self.lo) and np.all(x <= self.hi)
        return 0.0 if inside else np.inf

    def prox(self, tau, v):
        return np.clip(as_vector(v, self.dim), self.lo, self.hi)

    def prox_coordinate(self, i, tau, vi):
        return min(max(vi, self.lo[i]), self.hi[i])

    def subgradient_distance(self, y, p):
        y = as_vector(y, self.dim)
        p = as_vector(p, self.dim)
        d_int = np.sqrt((y - np.clip(y, self.lo, self.hi)) ** 2 + p ** 2)
        with np.errstate(invalid="ignore"):
            d_lo = np.where(
                np.isfinite(self.lo),
                np.sqrt((y - self.lo) ** 2 + np.maximum(p, 0.0) ** 2),
                np.inf,
            )
            d_hi = np.where(
                np.isfinite(self.hi),
                np.sqrt((y - self.hi) ** 2 + np.minimum(p, 0.0) ** 2),
                np.inf,
            )
        return float(np.linalg.norm(np.minimum(d_int, np.minimum(d_lo, d_hi))))

    def sample_subgradient(self, rng, y):
        y = as_vector(y, self.dim)
        g = np.zeros(self.dim)
        at_lo = np.isfinite(self.lo) & (np.abs(y - self.lo) <= 1e-12)
        at_hi = np.isfinite(self.hi) & (np.abs(y - self.hi) <= 1e-12)
        g[at_lo] = -np.abs(rng.normal(0.0, 1.0, int(at_lo.sum())))
        g[at_hi] = np.abs(rng.normal(0.0, 1.0, int(at_hi.sum())))
        return g

    def project_m(self, M, x):
        x = as_vector(x, self.dim)
        diag = np.diag(np.diag(M.matrix))
        if not np.allclose(M.matrix, diag, atol=1e-14 * max(M.beta_max, 1.0)):
            raise NotImplementedError("box projection implemented for diagonal preconditioners")
        return np.clip(x, self.lo, self.hi)


class AffineSetIndicator(ConvexFunction):
    """Indicator of {x: E x = d}."""

    is_indicator = True

    def __init__(self, E, d):
        E = np.asarray(E, dtype=float)
        if E.ndim != 2:
            raise DimensionMismatchError("E must be a matrix")
        self.E = E
        self.d = as_vector(d, E.shape[0])
        self.dim = E.shape[1]

    def value(self, x):
        x = as_vector(x, self.dim)
        feas = np.linalg.norm(self.E @ x - self.d)
        return 0.0 if feas <= 1e-9 * (1.0 + np.linalg.norm(self.d)) else np.inf

    def prox(self, tau, v):
        v = as_vector(v, self.dim)
        gram = self.E @ self.E.T
        mult = np.linalg.solve(gram, self.E @ v - self.d)
        return v - self.E.T @ mult

    def subgradient_distance(self, y, p):
        y = as_vector(y, self.dim)
        p = as_vector(p, self.dim)
        feas = np.linalg.norm(self.E @ y - self.d)
        coef, *_ = np.linalg.lstsq(self.E.T, p, rcond=None)
        range_res = np.linalg.norm(p - self.E.T @ coef)
        return float(np.hypot(feas, range_res))

    def sample_subgradient(self, rng, y):
        return self.E.T @ rng.normal(0.0, 1.0, self.E.shape[0])

    def project_m(self, M, x):
        x = as_vector(x, self.dim)
        k = self.E.shape[0]
        kkt = np.block([[M.matrix, self.E.T], [self.E, np.zeros((k, k))]])
        rhs = np.concatenate([M.matrix @ x, self.d])
        svals = np.linalg.svd(kkt, compute_uv=False)
        rcond = float(svals[-1] / svals[0]) if svals[0] > 0 else 0.0
        if rcond <= 1e-12:
            raise SingularSystemError(rcond, "affine-set projection KKT system is singular")
        sol = np.linalg.solve(kkt, rhs)
        return sol[: self.dim]


class HalfspaceIndicator(ConvexFunction):
    """Indicator of {x: <a, x> <= beta}."""

    is_indicator = True

    def __init__(self, a, beta):
        self.a = as_vector(a)
        if np.linalg.norm(self.a) == 0:
            raise ValueError("normal vector must be nonzero")
        self.beta = float(beta)
        self.dim = self.a.shape[0]

    def value(self, x):
        x = as_vector(x, self.dim)
        slack = self.a @ x - self.beta
        return 0.0 if slack <= 1e-9 * (1.0 + abs(self.beta)) else np.inf

    def prox(self, tau, v):
        v = as_vector(v, self.dim)
        viol = max(self.a @ v - self.beta, 0.0)
        return v - (viol / (self.a @ self.a)) * self.a

    def subgradient_distance(self, y, p):
        y = as_vector(y, self.dim)
        p = as_vector(p, self.dim)
        anorm = np.linalg.norm(self.a)
        slack = (self.a @ y - self.beta) / anorm
        d_int = np.hypot(max(slack, 0.0), np.linalg.norm(p))
        coef = max(p @ self.a, 0.0) / (anorm * anorm)
        d_bnd = np.hypot(slack, np.linalg.norm(p - coef * self.a))
        return float(min(d_int, d_bnd))

    def sample_subgradient(self, rng, y):
        y = as_vector(y, self.dim)
        slack = self.a @ y - self.beta
        if abs(slack) <= 1e-9 * (1.0 + abs(self.beta)):
            return abs(rng.normal(0.0, 1.0)) * self.a
        return np.zeros(self.dim)

    def project_m(self, M, x):
        x = as_vector(x, self.dim)
        viol = max(self.a @ x - self.beta, 0.0)
        if viol == 0.0:
            return x.copy()
        minv_a = M.inv_apply(self.a)
        return x - (viol / (self.a @ minv_a)) * minv_a


class HyperbolaEpigraphIndicator(ConvexFunction):
    """Indicator of {(s, t): s > 0, t >= 1/s}, a closed convex set in the plane."""

    is_indicator = True

    def __init__(self):
        self.dim = 2

    def value(self, x):
        s, t = as_vector(x, 2)
        return 0.0 if (s > 0.0 and s * t >= 1.0 - 1e-12) else np.inf

    def prox(self, tau, v):
        s, t = as_vector(v, 2)
        return np.array(_kernels.hyperbola_project(s, t, 1.0, 1.0))

    def subgradient_distance(self, y, p):
        s, t = as_vector(y, 2)
        p = as_vector(p, 2)
        if not (s > 0.0 and s * t >= 1.0 - _BOUNDARY_WINDOW * (1.0 + abs(s * t))):
            proj = self.prox(1.0, y)
            return float(np.linalg.norm(np.asarray(y) - proj) + np.linalg.norm(p))
        if s * t > 1.0 + _BOUNDARY_WINDOW * (1.0 + abs(s * t)):
            return float(np.linalg.norm(p))
        ray = np.array([-1.0 / (s * s), -1.0])
        coef = max(p @ ray, 0.0) / (ray @ ray)
        return float(np.linalg.norm(p - coef * ray))

    def sample_point(self, rng, radius):
        sig = abs(rng.normal(0.0, radius)) + 0.2
        lift = abs(rng.normal(0.0, radius))
        return np.array([sig, 1.0 / sig + (lift if rng.uniform() < 0.5 else 0.0)])

    def sample_subgradient(self, rng, y):
        s, t = as_vector(y, 2)
        if s * t > 1.0 + _BOUNDARY_WINDOW * (1.0 + abs(s * t)):
            return np.zeros(2)
        return abs(rng.normal(0.0, 1.0)) * np.array([-1.0 / (s * s), -1.0])

    def project_m(self, M, x):
        diag = np.diag(M.matrix)
        if not np.allclose(M.matrix, np.diag(diag), atol=1e-14 * max(M.beta_max, 1.0)):
            raise NotImplementedError(
                "hyperbola projection implemented for diagonal preconditioners"
            )
        s, t = as_vector(x, 2)
        return np.array(_kernels.hyperbola_project(s, t, diag[0], diag[1]))


def standard_prox(f, tau, v):
    """Proximal map of f at v with step tau (Euclidean geometry)."""
    if tau <= 0:
        raise ValueError("tau must be positive")
    return f.prox(tau, v)
