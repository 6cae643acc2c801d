"""Arbitrage-stable states and the surface function of the numeraire reserve.

Token ``n`` (the last one) is the numeraire. On a level surface its reserve
is a function ``f`` of the other ``n - 1`` reserves, and the stable state at
prices ``p`` minimizes ``m . x_hat + f(x_hat)`` with ``m = p[:-1] / p[-1]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels
from .amm import Family, SolverError, SpecError, as_positive_vector, surface_defect, surface_gradient

DEFAULT_TOL = 1e-10
MAX_ITER = 200
HESSIAN_STEP = 1e-5
POLISH_TOL = 1e-14


@dataclass(frozen=True)
class StableState:
    x: np.ndarray
    lam: float
    grad_residual: float
    level_residual: float
    iterations: int
    method: str = "newton"

    @property
    def x_hat(self):
        return self.x[:-1]


def eval_f_batch(spec, level, Xhat):
    """Numeraire reserve for each row of ``Xhat`` (NaN where no root exists)."""
    level = spec.resolve_level(level)
    Xhat = np.atleast_2d(np.asarray(Xhat, dtype=np.float64))
    w = spec.weight_array
    if spec.family is Family.CONSTANT_PRODUCT:
        return level / np.prod(Xhat, axis=1)
    if spec.family is Family.WEIGHTED_G3M:
        return np.exp((np.log(level) - np.log(Xhat) @ w[:-1]) / w[-1])
    return _kernels.solve_last(spec.code, w, spec.amp, level, Xhat)


def surface_batch(spec, level, Xhat):
    """``(f, grad f)`` at each row of ``Xhat``."""
    level = spec.resolve_level(level)
    Xhat = np.atleast_2d(np.asarray(Xhat, dtype=np.float64))
    fx = eval_f_batch(spec, level, Xhat)
    if not np.all(np.isfinite(fx)):
        bad = Xhat[~np.isfinite(fx)]
        raise SolverError(f"no positive numeraire reserve on the surface at {bad[:3].tolist()}")
    G = surface_gradient(spec, level, np.column_stack([Xhat, fx]))
    return fx, -G[:, :-1] / G[:, -1:]


def _check_hat(spec, x_hat):
    x_hat = np.atleast_1d(np.asarray(x_hat, dtype=np.float64))
    return as_positive_vector(x_hat, spec.n - 1, "x_hat")


def eval_f(spec, level, x_hat):
    """Numeraire reserve on the surface given the other ``n - 1`` reserves."""
    x_hat = _check_hat(spec, x_hat)
    fx = eval_f_batch(spec, level, x_hat[None, :])[0]
    if not np.isfinite(fx):
        raise SolverError(f"no positive root for the numeraire reserve at {x_hat.tolist()}")
    return float(fx)


def grad_f(spec, level, x_hat):
    """Slopes ``-A_i / A_n`` of the surface function; all negative."""
    x_hat = _check_hat(spec, x_hat)
    return surface_batch(spec, level, x_hat[None, :])[1][0]


def _residuals(spec, level, x, p):
    g = surface_gradient(spec, level, x)[0]
    grad_res = float(np.max(np.abs(g / g.max() - p / p.max())))
    level_res = float(surface_defect(spec, level, x)[0])
    lam = float(g @ p / (p @ p))
    return lam, grad_res, level_res


def closed_form_stable_point(spec, level, p):
    """Analytic stable state for the geometric families; ``None`` for StableSwap.

    Weighted pools hold ``p_j x_j / w_j`` equal across tokens, giving
    ``x_j = k (w_j / p_j) prod_l (p_l / w_l) ** w_l``.
    """
    if not spec.is_geometric:
        return None
    level = spec.resolve_level(level)
    p = as_positive_vector(p, spec.n, "price vector")
    if spec.family is Family.CONSTANT_PRODUCT:
        x = level ** (1.0 / spec.n) * np.exp(np.mean(np.log(p))) / p
    else:
        w = spec.weight_array
        x = level * (w / p) * np.exp(w @ np.log(p / w))
    lam, grad_res, level_res = _residuals(spec, level, x, p)
    return StableState(x, lam, grad_res, level_res, 0, "closed")


def _golden_sweep(phi, u):
    """One pass of coordinate-wise golden-section descent in log-reserve space."""
    u = u.copy()
    for j in range(u.size):
        def along(s, j=j):
            v = u.copy()
            v[j] = s
            return phi(v)
        res = minimize_scalar(along, bracket=(u[j] - 0.5, u[j] + 0.5), method="golden")
        if np.isfinite(res.fun) and res.fun <= along(u[j]):
            u[j] = res.x
    return u


def solve_stable_point(spec, level, p, tol=DEFAULT_TOL, max_iter=MAX_ITER, method="auto"):
    """Value-minimizing state on the surface at prices ``p``.

    ``method`` is ``"auto"`` (closed form when the family has one),
    ``"closed"`` or ``"newton"``. The numeric path runs damped Newton on the
    reduced problem in log-reserve coordinates, with a finite-difference
    Hessian of the analytic gradient, and drops to golden-section sweeps
    when the line search stalls.
    """
    if method not in ("auto", "closed", "newton"):
        raise SpecError(f"unknown method {method!r}")
    if not tol > 0:
        raise SpecError("tol must be positive")
    level = spec.resolve_level(level)
    p = as_positive_vector(p, spec.n, "price vector")
    if method in ("auto", "closed"):
        state = closed_form_stable_point(spec, level, p)
        if state is not None:
            return state
        if method == "closed":
            raise SpecError(f"no closed form for {spec.family.value}")

    m = p[:-1] / p[-1]
    q = spec.n - 1

    def phi(u):
        x = np.exp(u)
        fx = eval_f_batch(spec, level, x[None, :])[0]
        return x @ m + fx if np.isfinite(fx) else np.inf

    def grads(U):
        X = np.exp(U)
        fx, gf = surface_batch(spec, level, X)
        return X * (m + gf), fx

    u = np.log(spec.symmetric_point(level)[:-1])
    eye = np.eye(q)
    grad_res = level_res = np.inf
    prev_mismatch = np.inf
    for it in range(max_iter + 1):
        g, fx = grads(u[None, :])
        g, fx = g[0], fx[0]
        x = np.append(np.exp(u), fx)
        lam, grad_res, level_res = _residuals(spec, level, x, p)
        # Relative slope mismatch; keep polishing past tol while Newton still gains digits.
        mismatch = np.abs(g / (x[:-1] * m)).max()
        if grad_res <= tol and level_res <= tol and (mismatch <= POLISH_TOL or mismatch > 0.5 * prev_mismatch):
            return StableState(x, lam, grad_res, level_res, it, "newton")
        prev_mismatch = mismatch
        if it == max_iter:
            break

        probes = np.concatenate([u + HESSIAN_STEP * eye, u - HESSIAN_STEP * eye])
        gp, _ = grads(probes)
        H = (gp[:q] - gp[q:]).T / (2 * HESSIAN_STEP)
        H = 0.5 * (H + H.T)
        shift = 0.0
        while True:
            try:
                L = np.linalg.cholesky(H + shift * eye)
                break
            except np.linalg.LinAlgError:
                shift = max(2 * shift, 1e-8 * max(1.0, np.abs(H).max()))
        step = -np.linalg.solve(L.T, np.linalg.solve(L, g))
        # Cap the step so that no reserve changes by more than a factor e^2.
        step *= min(1.0, 2.0 / max(np.abs(step).max(), 1e-300))

        phi0 = x[:-1] @ m + fx
        gnorm = np.abs(g).max()
        alpha = 1.0
        while alpha > 1e-10:
            trial = u + alpha * step
            phi1 = phi(trial)
            if phi1 < phi0:
                break
            # Near the optimum phi is flat to rounding; accept a step that still shrinks the gradient.
            if np.isfinite(phi1) and phi1 <= phi0 + 1e-14 * abs(phi0):
                g1, _ = grads(trial[None, :])
                if np.abs(g1).max() < gnorm:
                    break
            alpha *= 0.5
        else:
            u = _golden_sweep(phi, u)
            continue
        u = trial

    raise SolverError(
        f"stable point did not converge in {max_iter} iterations",
        grad_residual=grad_res, level_residual=level_res, iterations=max_iter,
    )
