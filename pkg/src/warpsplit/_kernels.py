"""Hot numeric kernels with a numba fast path and a pure-Python twin.

The active backend is chosen once at import time from the environment
variable ``WARPSPLIT_BACKEND``: ``numba`` (default) JIT-compiles the kernels,
``numpy`` keeps the plain interpreter versions.  Both variants of every
kernel stay importable (``*_py`` / ``*_jit``) so the benchmark can race them;
they share one source of truth, so results are identical.
"""

from __future__ import annotations

import os

import numpy as np

BACKEND = os.environ.get("WARPSPLIT_BACKEND", "numba").strip().lower()
if BACKEND not in ("numba", "numpy"):
    raise ValueError(f"WARPSPLIT_BACKEND must be 'numba' or 'numpy', got {BACKEND!r}")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only on stripped installs
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap

JIT_ENABLED = HAVE_NUMBA and BACKEND == "numba"

HYPERBOLA_NEWTON_MAX_ITER = 50
HYPERBOLA_NEWTON_TOL = 1e-12


def _hyperbola_project_impl(s, t, ws, wt):
    # Projection onto {(s, t): s > 0, t >= 1/s} in diag(ws, wt) geometry.
    if s > 0.0 and s * t >= 1.0:
        return s, t
    # Root of g(sig) = ws*(sig - s) - wt*(1/sig - t)/sig^2 on (0, inf);
    # bracket first, then safeguarded Newton.
    lo = 1e-12
    hi = max(abs(s), 1.0)
    for _ in range(200):
        g_hi = ws * (hi - s) - wt * (1.0 / hi - t) / (hi * hi)
        if g_hi > 0.0:
            break
        hi *= 2.0
    if s > lo:
        sig = min(s, hi)
    else:
        sig = 0.5 * (lo + hi)
    for _ in range(HYPERBOLA_NEWTON_MAX_ITER):
        inv = 1.0 / sig
        g = ws * (sig - s) - wt * (inv - t) * inv * inv
        if g > 0.0:
            hi = sig
        else:
            lo = sig
        dg = ws + wt * inv ** 4 + 2.0 * wt * (inv - t) * inv ** 3
        step_ok = dg > 0.0
        if step_ok:
            nxt = sig - g / dg
            step_ok = lo < nxt < hi
        if step_ok:
            new_sig = nxt
        else:
            new_sig = 0.5 * (lo + hi)
        if abs(new_sig - sig) <= HYPERBOLA_NEWTON_TOL * max(1.0, abs(sig)):
            sig = new_sig
            break
        sig = new_sig
    return sig, 1.0 / sig


def _alternating_scan_impl(s0, t0, n_steps, norm_threshold, ws, wt):
    # x_{k+1} = P_hyperbola(P_lower_halfplane(x_k)); returns
    # (max_norm, first step with norm > threshold or -1, s_end, t_end).
    s = s0
    t = t0
    max_norm = np.sqrt(s * s + t * t)
    first_exceed = -1
    for k in range(n_steps):
        if t > 0.0:
            t = 0.0
        s, t = _hyperbola_project_impl(s, t, ws, wt)
        norm = np.sqrt(s * s + t * t)
        if norm > max_norm:
            max_norm = norm
        if first_exceed < 0 and norm > norm_threshold:
            first_exceed = k + 1
    return max_norm, first_exceed, s, t


def _rk4_linear_impl(G, u0, step, n_steps):
    # Explicit RK4 for u' = -G u; returns the terminal state.
    u = u0.copy()
    for _ in range(n_steps):
        k1 = -(G @ u)
        k2 = -(G @ (u + 0.5 * step * k1))
        k3 = -(G @ (u + 0.5 * step * k2))
        k4 = -(G @ (u + step * k3))
        u = u + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


hyperbola_project_py = _hyperbola_project_impl
alternating_scan_py = _alternating_scan_impl
rk4_linear_py = _rk4_linear_impl

if HAVE_NUMBA:
    hyperbola_project_jit = njit(cache=False)(_hyperbola_project_impl)

    def _scan_with(project):
        def impl(s0, t0, n_steps, norm_threshold, ws, wt):
            s = s0
            t = t0
            max_norm = np.sqrt(s * s + t * t)
            first_exceed = -1
            for k in range(n_steps):
                if t > 0.0:
                    t = 0.0
                s, t = project(s, t, ws, wt)
                norm = np.sqrt(s * s + t * t)
                if norm > max_norm:
                    max_norm = norm
                if first_exceed < 0 and norm > norm_threshold:
                    first_exceed = k + 1
            return max_norm, first_exceed, s, t

        return impl

    alternating_scan_jit = njit(cache=False)(_scan_with(hyperbola_project_jit))
    rk4_linear_jit = njit(cache=False)(_rk4_linear_impl)
else:  # pragma: no cover
    hyperbola_project_jit = None
    alternating_scan_jit = None
    rk4_linear_jit = None

if JIT_ENABLED:
    hyperbola_project = hyperbola_project_jit
    alternating_scan = alternating_scan_jit
    rk4_linear = rk4_linear_jit
else:
    hyperbola_project = hyperbola_project_py
    alternating_scan = alternating_scan_py
    rk4_linear = rk4_linear_py
