"""Maximal monotone operator handles and their calculus.

Handles form a closed registry of analytically tractable kinds, so every
claim made about them downstream can be checked against an explicit graph
description.  All handles are immutable and evaluations are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .convex import ConvexFunction, Quadratic
from .errors import DimensionMismatchError
from .linalg import Preconditioner, as_vector, dr_block

MONOTONE_ADMISSION_RTOL = 1e-10


class MonotoneOperator:
    """Base handle.  Capabilities are advertised via the three flags below."""

    dim = None
    has_resolvent = False
    has_graph = False
    single_valued = False

    def resolvent(self, gamma, x):
        """Euclidean resolvent (I + gamma T)^{-1} x."""
        raise NotImplementedError(f"{type(self).__name__} has no closed resolvent")

    def graph_distance(self, y, p):
        """Residual vanishing exactly when p is an output of the operator at y."""
        raise NotImplementedError(f"{type(self).__name__} has no graph check")

    def apply(self, y):
        raise NotImplementedError(f"{type(self).__name__} is not single-valued")

    def sample_graph_pair(self, rng, radius=2.0):
        raise NotImplementedError(f"{type(self).__name__} does not support graph sampling")

    def invert(self):
        return InverseOperator(self)

    def affine_parts(self):
        """(C, d) with T(y) = C y + d when the handle is single-valued affine, else None."""
        return None

    def domain_project(self, x):
        """Euclidean projection onto the closure of the domain, when known."""
        raise NotImplementedError

    def domain_project_m(self, M, x):
        """M-projection onto the closure of the domain, when known."""
        raise NotImplementedError


def graph_contains(T, y, p, tol):
    """True iff the pair (y, p) lies in the operator graph up to tol."""
    return T.graph_distance(y, p) <= tol


class ZeroOperator(MonotoneOperator):
    has_resolvent = True
    has_graph = True
    single_valued = True

    def __init__(self, dim):
        self.dim = dim

    def resolvent(self, gamma, x):
        return as_vector(x, self.dim).copy()

    def graph_distance(self, y, p):
        as_vector(y, self.dim)
        return float(np.linalg.norm(as_vector(p, self.dim)))

    def apply(self, y):
        as_vector(y, self.dim)
        return np.zeros(self.dim)

    def sample_graph_pair(self, rng, radius=2.0):
        return rng.normal(0.0, radius, self.dim), np.zeros(self.dim)

    def affine_parts(self):
        return np.zeros((self.dim, self.dim)), np.zeros(self.dim)

    def domain_project(self, x):
        return as_vector(x, self.dim).copy()

    def domain_project_m(self, M, x):
        return as_vector(x, self.dim).copy()


class LinearOperator(MonotoneOperator):
    """T(y) = C y with C + C^T positive semidefinite up to admission tolerance."""

    has_resolvent = True
    has_graph = True
    single_valued = True

    def __init__(self, C, unchecked=False):
        C = np.asarray(C, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise DimensionMismatchError("C must be square")
        if not unchecked:
            scale = np.linalg.norm(C, 2)
            min_eig = np.linalg.eigvalsh(0.5 * (C + C.T))[0]
            if min_eig < -MONOTONE_ADMISSION_RTOL * max(scale, 1e-300):
                raise ValueError(
                    f"matrix is not monotone: min eigenvalue of symmetric part {min_eig:.3e}"
                )
        self.C = C
        self.dim = C.shape[0]

    def resolvent(self, gamma, x):
        x = as_vector(x, self.dim)
        return np.linalg.solve(np.eye(self.dim) + gamma * self.C, x)

    def graph_distance(self, y, p):
        return float(np.linalg.norm(as_vector(p, self.dim) - self.apply(y)))

    def apply(self, y):
        return self.C @ as_vector(y, self.dim)

    def sample_graph_pair(self, rng, radius=2.0):
        y = rng.normal(0.0, radius, self.dim)
        return y, self.C @ y

    def invert(self):
        svals = np.linalg.svd(self.C, compute_uv=False)
        rcond = float(svals[-1] / svals[0]) if svals[0] > 0 else 0.0
        if rcond > 1e-12:
            return LinearOperator(np.linalg.inv(self.C), unchecked=True)
        return InverseOperator(self)

    def affine_parts(self):
        return self.C, np.zeros(self.dim)

    def domain_project(self, x):
        return as_vector(x, self.dim).copy()

    def domain_project_m(self, M, x):
        return as_vector(x, self.dim).copy()


class SubdifferentialOperator(MonotoneOperator):
    """Convex subdifferential of a registry function."""

    has_resolvent = True
    has_graph = True

    def __init__(self, fn: ConvexFunction):
        self.fn = fn
        self.dim = fn.dim
        self.single_valued = isinstance(fn, Quadratic)

    def resolvent(self, gamma, x):
        return self.fn.prox(gamma, as_vector(x, self.dim))

    def graph_distance(self, y, p):
        return self.fn.subgradient_distance(y, p)

    def apply(self, y):
        if not self.single_valued:
            raise NotImplementedError("subdifferential is set-valued for this function")
        return self.fn.gradient(y)

    def sample_graph_pair(self, rng, radius=2.0):
        y = self.fn.sample_point(rng, radius)
        if self.fn.separable and not self.fn.is_indicator:
            mask = rng.uniform(size=self.dim) < 0.3
            y = np.where(mask, 0.0, y)
        return y, self.fn.sample_subgradient(rng, y)

    def affine_parts(self):
        if isinstance(self.fn, Quadratic):
            return self.fn.Q, self.fn.b.copy()
        return None

    def domain_project(self, x):
        if self.fn.is_indicator:
            return self.fn.prox(1.0, x)
        return as_vector(x, self.dim).copy()

    def domain_project_m(self, M, x):
        if self.fn.is_indicator:
            return self.fn.project_m(M, x)
        return as_vector(x, self.dim).copy()


class NormalConeOperator(SubdifferentialOperator):
    """Normal cone of a closed convex set, given as an indicator-kind function."""

    def __init__(self, set_fn: ConvexFunction):
        if not set_fn.is_indicator:
            raise ValueError("normal cone needs an indicator-kind function")
        super().__init__(set_fn)
        self.single_valued = False


class InverseOperator(MonotoneOperator):
    """Graph transpose T^{-1}; resolvent via the inversion identity."""

    has_graph = True

    def __init__(self, base: MonotoneOperator):
        self.base = base
        self.dim = base.dim
        self.has_resolvent = base.has_resolvent

    def resolvent(self, gamma, x):
        x = as_vector(x, self.dim)
        return x - gamma * self.base.resolvent(1.0 / gamma, x / gamma)

    def graph_distance(self, y, p):
        return self.base.graph_distance(p, y)

    def sample_graph_pair(self, rng, radius=2.0):
        y, p = self.base.sample_graph_pair(rng, radius)
        return p, y

    def invert(self):
        return self.base


class ScaledOperator(MonotoneOperator):
    """alpha * T for alpha > 0."""

    def __init__(self, alpha, base: MonotoneOperator):
        if alpha <= 0:
            raise ValueError("scale must be positive")
        self.alpha = float(alpha)
        self.base = base
        self.dim = base.dim
        self.has_resolvent = base.has_resolvent
        self.has_graph = base.has_graph
        self.single_valued = base.single_valued

    def resolvent(self, gamma, x):
        return self.base.resolvent(gamma * self.alpha, x)

    def graph_distance(self, y, p):
        return self.alpha * self.base.graph_distance(y, as_vector(p, self.dim) / self.alpha)

    def apply(self, y):
        return self.alpha * self.base.apply(y)

    def sample_graph_pair(self, rng, radius=2.0):
        y, p = self.base.sample_graph_pair(rng, radius)
        return y, self.alpha * p

    def affine_parts(self):
        parts = self.base.affine_parts()
        if parts is None:
            return None
        C, d = parts
        return self.alpha * C, self.alpha * d

    def domain_project(self, x):
        return self.base.domain_project(x)

    def domain_project_m(self, M, x):
        return self.base.domain_project_m(M, x)


class ShiftedOperator(MonotoneOperator):
    """T(.) + offset (range shift)."""

    def __init__(self, offset, base: MonotoneOperator):
        self.base = base
        self.dim = base.dim
        self.offset = as_vector(offset, base.dim)
        self.has_resolvent = base.has_resolvent
        self.has_graph = base.has_graph
        self.single_valued = base.single_valued

    def resolvent(self, gamma, x):
        x = as_vector(x, self.dim)
        return self.base.resolvent(gamma, x - gamma * self.offset)

    def graph_distance(self, y, p):
        return self.base.graph_distance(y, as_vector(p, self.dim) - self.offset)

    def apply(self, y):
        return self.base.apply(y) + self.offset

    def sample_graph_pair(self, rng, radius=2.0):
        y, p = self.base.sample_graph_pair(rng, radius)
        return y, p + self.offset

    def affine_parts(self):
        parts = self.base.affine_parts()
        if parts is None:
            return None
        C, d = parts
        return C, d + self.offset

    def domain_project(self, x):
        return self.base.domain_project(x)

    def domain_project_m(self, M, x):
        return self.base.domain_project_m(M, x)


class NegationConjugateOperator(MonotoneOperator):
    """(-I) o T o (-I); conjugation by the sign flip preserves monotonicity."""

    def __init__(self, base: MonotoneOperator):
        self.base = base
        self.dim = base.dim
        self.has_resolvent = base.has_resolvent
        self.has_graph = base.has_graph
        self.single_valued = base.single_valued

    def resolvent(self, gamma, x):
        x = as_vector(x, self.dim)
        return -self.base.resolvent(gamma, -x)

    def graph_distance(self, y, p):
        return self.base.graph_distance(-as_vector(y, self.dim), -as_vector(p, self.dim))

    def apply(self, y):
        return -self.base.apply(-as_vector(y, self.dim))

    def sample_graph_pair(self, rng, radius=2.0):
        y, p = self.base.sample_graph_pair(rng, radius)
        return -y, -p

    def affine_parts(self):
        parts = self.base.affine_parts()
        if parts is None:
            return None
        C, d = parts
        return C, -d


class ProductOperator(MonotoneOperator):
    """Cartesian product T1 x T2 on the direct sum of the factor spaces."""

    def __init__(self, first: MonotoneOperator, second: MonotoneOperator):
        self.first = first
        self.second = second
        self.dim = first.dim + second.dim
        self.has_resolvent = first.has_resolvent and second.has_resolvent
        self.has_graph = first.has_graph and second.has_graph
        self.single_valued = first.single_valued and second.single_valued

    def _split(self, x):
        x = as_vector(x, self.dim)
        return x[: self.first.dim], x[self.first.dim :]

    def resolvent(self, gamma, x):
        a, b = self._split(x)
        return np.concatenate([self.first.resolvent(gamma, a), self.second.resolvent(gamma, b)])

    def graph_distance(self, y, p):
        ya, yb = self._split(y)
        pa, pb = self._split(p)
        return float(np.hypot(self.first.graph_distance(ya, pa), self.second.graph_distance(yb, pb)))

    def apply(self, y):
        a, b = self._split(y)
        return np.concatenate([self.first.apply(a), self.second.apply(b)])

    def sample_graph_pair(self, rng, radius=2.0):
        y1, p1 = self.first.sample_graph_pair(rng, radius)
        y2, p2 = self.second.sample_graph_pair(rng, radius)
        return np.concatenate([y1, y2]), np.concatenate([p1, p2])

    def affine_parts(self):
        pa = self.first.affine_parts()
        pb = self.second.affine_parts()
        if pa is None or pb is None:
            return None
        C = np.block(
            [
                [pa[0], np.zeros((self.first.dim, self.second.dim))],
                [np.zeros((self.second.dim, self.first.dim)), pb[0]],
            ]
        )
        return C, np.concatenate([pa[1], pb[1]])


class DRBlockOperator(MonotoneOperator):
    """Block operator [[alpha*A, I], [-I, (alpha*B)^{-1}]] on the doubled space.

    Paired with the degenerate block preconditioner, its warped resolvent has
    a closed form built from the factor resolvents (see the warped module);
    the Euclidean resolvent is deliberately not offered.
    """

    has_graph = True

    def __init__(self, A: MonotoneOperator, B: MonotoneOperator, alpha):
        if A.dim != B.dim:
            raise DimensionMismatchError("factors must share a dimension")
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.A = A
        self.B = B
        self.alpha = float(alpha)
        self.block_dim = A.dim
        self.dim = 2 * A.dim
        self.has_graph = A.has_graph and B.has_graph
        self._scaled_a = ScaledOperator(alpha, A)
        self._scaled_b_inv = InverseOperator(ScaledOperator(alpha, B))

    def _split(self, z):
        z = as_vector(z, self.dim)
        return z[: self.block_dim], z[self.block_dim :]

    def graph_distance(self, y, p):
        u, v = self._split(y)
        pu, pv = self._split(p)
        d_first = self._scaled_a.graph_distance(u, pu - v)
        d_second = self._scaled_b_inv.graph_distance(v, pv + u)
        return float(np.hypot(d_first, d_second))

    def sample_graph_pair(self, rng, radius=2.0):
        u, pa = self.A.sample_graph_pair(rng, radius)
        w, pb = self.B.sample_graph_pair(rng, radius)
        v = self.alpha * pb
        point = np.concatenate([u, v])
        value = np.concatenate([self.alpha * pa + v, w - u])
        return point, value


class YosidaOperator(MonotoneOperator):
    """A warped Yosida regularization registered as a first-class handle.

    Single-valued, monotone, Lipschitz; `apply` delegates to the bound
    evaluator and the graph check compares against that evaluation.
    """

    has_graph = True
    single_valued = True

    def __init__(self, evaluator):
        self.evaluator = evaluator
        self.dim = evaluator.operator.dim

    def apply(self, y):
        from .warped import warped_yosida

        return warped_yosida(self.evaluator, y)

    def graph_distance(self, y, p):
        return float(np.linalg.norm(as_vector(p, self.dim) - self.apply(y)))

    def sample_graph_pair(self, rng, radius=2.0):
        y = rng.normal(0.0, radius, self.dim)
        return y, self.apply(y)


def tilde(T: MonotoneOperator) -> MonotoneOperator:
    """The dual-side transform (-I) o T^{-1} o (-I)."""
    return NegationConjugateOperator(T.invert())


def reflected_resolvent(T: MonotoneOperator, gamma, x):
    """2 J_{gamma T}(x) - x."""
    x = as_vector(x, T.dim)
    return 2.0 * T.resolvent(gamma, x) - x


def make_dr_block(A: MonotoneOperator, B: MonotoneOperator, alpha):
    """Block operator and its degenerate preconditioner for DR-type dynamics."""
    block = DRBlockOperator(A, B, alpha)
    return block, dr_block(A.dim)


@dataclass
class MonotonicityReport:
    min_inner: float
    passed: bool
    samples: int
    violations: int


def monotonicity_probe(T: MonotoneOperator, sample_count, seed, radius=2.0, tol=1e-9):
    """Minimum of <y1 - y2, p1 - p2> over all pairs of sampled graph points."""
    rng = np.random.default_rng(seed)
    pairs = [T.sample_graph_pair(rng, radius) for _ in range(sample_count)]
    min_inner = np.inf
    violations = 0
    for i in range(len(pairs)):
        yi, pi = pairs[i]
        for j in range(i + 1, len(pairs)):
            yj, pj = pairs[j]
            inner = float((yi - yj) @ (pi - pj))
            if inner < min_inner:
                min_inner = inner
            if inner < -tol:
                violations += 1
    if not pairs:
        min_inner = 0.0
    return MonotonicityReport(
        min_inner=float(min_inner),
        passed=violations == 0,
        samples=sample_count,
        violations=violations,
    )
