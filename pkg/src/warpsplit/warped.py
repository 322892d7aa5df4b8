"""Warped resolvents and warped Yosida regularization.

The warped resolvent of an operator T with kernel M at step gamma is
``(M + gamma T)^{-1} o M``; the warped Yosida regularization is
``(M - M o J) / gamma``.  Closed forms are used wherever the registry
structure allows (affine operators, normal cones, the DR block at unit step);
everything else runs an inner forward-backward loop, which needs the
positive-definite tier.  The degenerate tier is served only by closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .convex import Quadratic
from .errors import DegenerateUnsupportedError, InnerSolveDivergedError
from .linalg import Preconditioner, as_vector, m_norm, solve_shifted
from .operators import (
    DRBlockOperator,
    InverseOperator,
    LinearOperator,
    MonotoneOperator,
    NegationConjugateOperator,
    NormalConeOperator,
    ProductOperator,
    ScaledOperator,
    ShiftedOperator,
    SubdifferentialOperator,
    YosidaOperator,
    ZeroOperator,
)


@dataclass(frozen=True)
class WarpedEvaluator:
    """Bound triple (operator, preconditioner, gamma) plus inner-loop knobs."""

    operator: MonotoneOperator
    preconditioner: Preconditioner
    gamma: float
    inner_tol: float = 1e-10
    inner_max_iter: int = 10_000

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.operator.dim != self.preconditioner.dim:
            raise ValueError("operator and preconditioner dimensions differ")

    def with_gamma(self, gamma):
        return replace(self, gamma=gamma)


def _is_diagonal(M):
    return np.allclose(M.matrix, np.diag(np.diag(M.matrix)), atol=1e-14 * max(M.beta_max, 1.0))


def _is_identity(M):
    return np.allclose(M.matrix, np.eye(M.dim), atol=1e-14)


def _dr_block_matrix(n):
    eye = np.eye(n)
    return np.block([[eye, -eye], [-eye, eye]])


def _inner_forward_backward(W, x):
    """Solve 0 in M(z - x) + gamma T(z) by forward-backward on the M-part.

    Needs the positive-definite tier and a Euclidean base resolvent.  The
    returned point carries a certified graph residual below
    ``inner_tol * (1 + ||M x||)``.
    """
    M = W.preconditioner
    if not M.is_positive_definite:
        raise DegenerateUnsupportedError(
            "inner warped solve needs a positive-definite preconditioner"
        )
    if not W.operator.has_resolvent:
        raise NotImplementedError(
            f"{type(W.operator).__name__} offers no base resolvent for the inner loop"
        )
    tau = 1.0 / M.beta_max
    target = W.inner_tol * (1.0 + np.linalg.norm(M.matrix @ x))
    z = x.copy()
    for _ in range(W.inner_max_iter):
        v = z - tau * (M.matrix @ (z - x))
        z_new = W.operator.resolvent(tau * W.gamma, v)
        shift = z - z_new
        residual = np.linalg.norm(M.matrix @ shift - shift / tau)
        if residual <= target:
            return z_new
        z = z_new
    raise InnerSolveDivergedError(
        f"inner warped solve did not reach tolerance {W.inner_tol:.2e} "
        f"within {W.inner_max_iter} iterations"
    )


def _yosida_handle_resolvent(W, x):
    """Warped resolvent of a registered Yosida handle via a contraction loop.

    For S = (T with same kernel at step g), the point y = J^M_{lam S}(x)
    satisfies y = (g x + lam J^M_{g T}(y)) / (g + lam); the iteration of that
    map contracts with ratio lam / (g + lam) in the M-norm.
    """
    handle = W.operator
    inner = handle.evaluator
    M = W.preconditioner
    if inner.preconditioner.matrix is not M.matrix and not np.array_equal(
        inner.preconditioner.matrix, M.matrix
    ):
        raise NotImplementedError("Yosida handle must be taken with the same kernel")
    if not M.is_positive_definite:
        raise DegenerateUnsupportedError("Yosida-handle resolvent needs the positive-definite tier")
    g = inner.gamma
    lam = W.gamma
    q = lam / (g + lam)
    target = W.inner_tol * (1.0 + m_norm(M, x)) * (1.0 - q) / max(q, 1e-16)
    y = x.copy()
    for _ in range(W.inner_max_iter):
        y_new = (g * x + lam * warped_resolvent(inner, y)) / (g + lam)
        if m_norm(M, y_new - y) <= target:
            return y_new
        y = y_new
    raise InnerSolveDivergedError("Yosida-handle resolvent iteration exhausted its budget")


def warped_resolvent(W: WarpedEvaluator, x):
    """Evaluate (M + gamma T)^{-1} (M x)."""
    x = as_vector(x, W.operator.dim)
    T = W.operator
    M = W.preconditioner
    gamma = W.gamma

    if isinstance(T, ZeroOperator):
        return x.copy()

    parts = T.affine_parts()
    if parts is not None:
        C, d = parts
        return solve_shifted(M, C, gamma, M.matrix @ x - gamma * d)

    if isinstance(T, ScaledOperator):
        return warped_resolvent(
            replace(W, operator=T.base, gamma=gamma * T.alpha), x
        )

    if isinstance(T, ShiftedOperator):
        if M.is_positive_definite:
            shifted_x = x - gamma * M.inv_apply(T.offset)
            return warped_resolvent(replace(W, operator=T.base), shifted_x)
        raise DegenerateUnsupportedError("range-shifted operator needs an invertible kernel")

    if isinstance(T, NegationConjugateOperator):
        return -warped_resolvent(replace(W, operator=T.base), -x)

    if isinstance(T, (NormalConeOperator, SubdifferentialOperator)):
        fn = T.fn
        if fn.is_indicator:
            if _is_identity(M):
                return fn.prox(1.0, x)
            try:
                return fn.project_m(M, x)
            except NotImplementedError:
                return _inner_forward_backward(W, x)
        if _is_identity(M):
            return fn.prox(gamma, x)
        if fn.separable and _is_diagonal(M):
            diag = np.diag(M.matrix)
            return np.array(
                [fn.prox_coordinate(i, gamma / diag[i], x[i]) for i in range(T.dim)]
            )
        return _inner_forward_backward(W, x)

    if isinstance(T, InverseOperator):
        base_parts = T.base.affine_parts()
        if base_parts is not None:
            C, d = base_parts
            lhs = M.matrix @ C + gamma * np.eye(T.dim)
            svals = np.linalg.svd(lhs, compute_uv=False)
            if svals[0] == 0 or svals[-1] / svals[0] <= 1e-12:
                from .errors import SingularSystemError

                raise SingularSystemError(
                    float(svals[-1] / svals[0]) if svals[0] > 0 else 0.0,
                    "inverse-of-affine warped system is singular",
                )
            w = np.linalg.solve(lhs, M.matrix @ (x - d))
            return C @ w + d
        return _inner_forward_backward(W, x)

    if isinstance(T, ProductOperator):
        na = T.first.dim
        top_left = M.matrix[:na, :na]
        bottom_right = M.matrix[na:, na:]
        off = M.matrix[:na, na:]
        if np.allclose(off, 0.0, atol=1e-14 * max(M.beta_max, 1.0)):
            Wa = WarpedEvaluator(
                T.first, Preconditioner(top_left), gamma, W.inner_tol, W.inner_max_iter
            )
            Wb = WarpedEvaluator(
                T.second, Preconditioner(bottom_right), gamma, W.inner_tol, W.inner_max_iter
            )
            return np.concatenate(
                [warped_resolvent(Wa, x[:na]), warped_resolvent(Wb, x[na:])]
            )
        return _inner_forward_backward(W, x)

    if isinstance(T, DRBlockOperator):
        if abs(gamma - 1.0) > 1e-12 or not np.allclose(
            M.matrix, _dr_block_matrix(T.block_dim), atol=1e-12
        ):
            raise DegenerateUnsupportedError(
                "block operator has a closed form only with its paired kernel at unit step"
            )
        w = x[: T.block_dim] - x[T.block_dim :]
        u = T.A.resolvent(T.alpha, w)
        reflected = 2.0 * u - w
        v = reflected - T.B.resolvent(T.alpha, reflected)
        return np.concatenate([u, v])

    if isinstance(T, YosidaOperator):
        return _yosida_handle_resolvent(W, x)

    return _inner_forward_backward(W, x)


def warped_yosida(W: WarpedEvaluator, x):
    """Evaluate (M x - M J^M(x)) / gamma."""
    x = as_vector(x, W.operator.dim)
    y = warped_resolvent(W, x)
    return W.preconditioner.matrix @ (x - y) / W.gamma


def graph_pair(W: WarpedEvaluator, x):
    """(y, p) with p in T(y) and x = y + gamma M^{-1} p; needs invertible M."""
    if not W.preconditioner.is_positive_definite:
        raise DegenerateUnsupportedError("graph pair reconstruction needs an invertible kernel")
    x = as_vector(x, W.operator.dim)
    y = warped_resolvent(W, x)
    p = W.preconditioner.matrix @ (x - y) / W.gamma
    return y, p


def yosida_via_inverse(W: WarpedEvaluator, x):
    """Evaluate the regularization through the inverse-operator route.

    Solves x in gamma M^{-1} p + T^{-1}(p), i.e. applies the warped resolvent
    of T^{-1} with kernel gamma M^{-1}; must agree with `warped_yosida`.
    """
    M = W.preconditioner
    if not M.is_positive_definite:
        raise DegenerateUnsupportedError("inverse route needs an invertible kernel")
    x = as_vector(x, W.operator.dim)
    inverse_handle = W.operator.invert()
    kernel = M.inverse().scaled(W.gamma)
    W_inv = WarpedEvaluator(
        inverse_handle, kernel, 1.0, W.inner_tol, W.inner_max_iter
    )
    return warped_resolvent(W_inv, M.matrix @ x / W.gamma)


def shifted_resolvent_identity(W: WarpedEvaluator, mu, x):
    """Both sides of the resolvent-parameter identity for 0 < mu <= gamma.

    lhs re-evaluates the gamma-resolvent through the mu-resolvent at a convex
    combination; rhs is the gamma-resolvent itself.
    """
    if not 0 < mu <= W.gamma:
        raise ValueError("need 0 < mu <= gamma")
    x = as_vector(x, W.operator.dim)
    ratio = mu / W.gamma
    y_gamma = warped_resolvent(W, x)
    lhs = warped_resolvent(W.with_gamma(mu), ratio * x + (1.0 - ratio) * y_gamma)
    return lhs, y_gamma


def _affine_yosida_handle(W: WarpedEvaluator):
    """The regularization of an affine operator as an affine handle."""
    parts = W.operator.affine_parts()
    if parts is None:
        return None
    C, d = parts
    M = W.preconditioner.matrix
    n = W.operator.dim
    J_lin = np.linalg.solve(M + W.gamma * C, M)
    G = (M - M @ J_lin) / W.gamma
    offset = M @ np.linalg.solve(M + W.gamma * C, d)
    handle = LinearOperator(G, unchecked=True)
    if np.linalg.norm(offset) > 0:
        return ShiftedOperator(offset, handle)
    return handle


def semigroup_check(W: WarpedEvaluator, lam, x):
    """Both sides of the parameter-additivity law of the regularization.

    lhs regularizes T at step gamma + lam; rhs regularizes the registered
    step-gamma regularization at step lam, through an independent route.
    """
    if lam <= 0:
        raise ValueError("lam must be positive")
    x = as_vector(x, W.operator.dim)
    lhs = warped_yosida(W.with_gamma(W.gamma + lam), x)
    handle = _affine_yosida_handle(W)
    if handle is None:
        handle = YosidaOperator(W)
    W_outer = WarpedEvaluator(
        handle, W.preconditioner, lam, W.inner_tol, W.inner_max_iter
    )
    rhs = warped_yosida(W_outer, x)
    return lhs, rhs


@dataclass
class ResolventLimitDiagnostics:
    gammas: list = field(default_factory=list)
    m_distances: list = field(default_factory=list)
    target: np.ndarray | None = None
    final: np.ndarray | None = None


def resolvent_limit(T, M, x, gamma0, halvings, inner_tol=1e-10, inner_max_iter=10_000):
    """Track J^M at gamma0 * 2^{-k} toward the M-projection onto cl(dom T)."""
    if not M.is_positive_definite:
        raise DegenerateUnsupportedError("resolvent limit diagnostics need an invertible kernel")
    x = as_vector(x, T.dim)
    target = T.domain_project_m(M, x)
    diag = ResolventLimitDiagnostics(target=target)
    y = None
    for k in range(halvings + 1):
        gamma = gamma0 * (0.5 ** k)
        W = WarpedEvaluator(T, M, gamma, inner_tol, inner_max_iter)
        y = warped_resolvent(W, x)
        diag.gammas.append(gamma)
        diag.m_distances.append(m_norm(M, y - target))
    diag.final = y
    return y, diag
