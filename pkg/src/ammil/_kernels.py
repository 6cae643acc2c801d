"""Batched invariant kernels with a numba backend and a pure-numpy fallback.

Every kernel takes a family code, the weight vector (ignored unless the
family is weighted), the StableSwap amplification, a level parameter and a
2-D array of reserve rows. The level is the invariant target ``k`` for the
geometric families and the ``D`` parameter for StableSwap.

Set ``AMMIL_DISABLE_NUMBA=1`` to force the numpy path. Both backends are
always importable as :data:`numpy_kernels` and :data:`numba_kernels` (the
latter is ``None`` when numba is missing) so they can be compared directly.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np

CONSTANT_PRODUCT = 0
WEIGHTED_G3M = 1
STABLESWAP = 2

BRACKET_LO = 1e-9
BRACKET_HI = 1.0
BRACKET_CAP = 1e12
BRACKET_FLOOR = 1e-300
MAX_ROOT_ITER = 200


# ---------------------------------------------------------------------------
# numpy backend (vectorized over rows)
# ---------------------------------------------------------------------------


def _np_invariant(code, weights, amp, level, X):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if code == CONSTANT_PRODUCT:
        return np.prod(X, axis=1)
    if code == WEIGHTED_G3M:
        return np.exp(np.log(X) @ weights)
    nn = float(n) ** n
    return (amp * nn * X.sum(axis=1) + level - amp * level * nn
            - level ** (n + 1) / (nn * np.prod(X, axis=1)))


def _np_gradient(code, weights, amp, level, X):
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[1]
    if code == CONSTANT_PRODUCT:
        return np.prod(X, axis=1)[:, None] / X
    if code == WEIGHTED_G3M:
        a = np.exp(np.log(X) @ weights)
        return weights[None, :] * a[:, None] / X
    nn = float(n) ** n
    c = level ** (n + 1) / (nn * np.prod(X, axis=1))
    return amp * nn + c[:, None] / X


def _np_defect_last(code, weights, amp, level, Xhat, xn):
    """Monotone surface defect as a function of the last reserve, plus its slope."""
    n = Xhat.shape[1] + 1
    if code == CONSTANT_PRODUCT:
        val = np.log(Xhat).sum(axis=1) + np.log(xn) - np.log(level)
        return val, 1.0 / xn
    if code == WEIGHTED_G3M:
        wl = weights[n - 1]
        val = np.log(Xhat) @ weights[: n - 1] + wl * np.log(xn) - np.log(level)
        return val, wl / xn
    nn = float(n) ** n
    prod = np.prod(Xhat, axis=1) * xn
    c = level ** (n + 1) / (nn * prod)
    val = amp * nn * (Xhat.sum(axis=1) + xn) + level - amp * level * nn - c
    return val, amp * nn + c / xn


def _np_solve_last(code, weights, amp, level, Xhat):
    Xhat = np.asarray(Xhat, dtype=np.float64)
    m = Xhat.shape[0]
    lo = np.full(m, BRACKET_LO)
    hi = np.full(m, BRACKET_HI)
    ok = np.ones(m, dtype=bool)

    need = _np_defect_last(code, weights, amp, level, Xhat, hi)[0] < 0
    while need.any():
        hi = np.where(need, hi * 2.0, hi)
        over = need & (hi > BRACKET_CAP)
        ok &= ~over
        need &= ~over
        need &= _np_defect_last(code, weights, amp, level, Xhat, hi)[0] < 0
    need = ok & (_np_defect_last(code, weights, amp, level, Xhat, lo)[0] > 0)
    while need.any():
        lo = np.where(need, lo * 1e-3, lo)
        under = need & (lo < BRACKET_FLOOR)
        ok &= ~under
        need &= ~under
        need &= _np_defect_last(code, weights, amp, level, Xhat, lo)[0] > 0

    x = np.sqrt(lo * hi)
    active = ok.copy()
    for _ in range(MAX_ROOT_ITER):
        if not active.any():
            break
        val, dval = _np_defect_last(code, weights, amp, level, Xhat, x)
        hit = val == 0.0
        lo = np.where(val < 0, x, lo)
        hi = np.where(val > 0, x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = x - val / dval
        outside = ~((newton > lo) & (newton < hi) & np.isfinite(newton))
        x_new = np.where(outside, np.sqrt(lo * hi), newton)
        done = hit | (np.abs(x_new - x) <= 4e-16 * x) | (hi - lo <= 4e-16 * hi)
        x = np.where(active & ~hit, x_new, x)
        active &= ~done
    x[~ok] = np.nan
    x[active] = np.nan
    return x


numpy_kernels = SimpleNamespace(
    name="numpy",
    invariant=_np_invariant,
    gradient=_np_gradient,
    solve_last=_np_solve_last,
)


# ---------------------------------------------------------------------------
# numba backend (scalar loops per row)
# ---------------------------------------------------------------------------

try:
    import numba as nb
except ImportError:  # pragma: no cover
    nb = None

numba_kernels = None

if nb is not None:
    _jit = nb.njit(cache=True, nogil=True)

    @_jit
    def _nb_row_invariant(code, weights, amp, level, x):
        n = x.shape[0]
        if code == CONSTANT_PRODUCT:
            acc = 1.0
            for i in range(n):
                acc *= x[i]
            return acc
        if code == WEIGHTED_G3M:
            acc = 0.0
            for i in range(n):
                acc += weights[i] * np.log(x[i])
            return np.exp(acc)
        nn = float(n) ** n
        s = 0.0
        prod = 1.0
        for i in range(n):
            s += x[i]
            prod *= x[i]
        return amp * nn * s + level - amp * level * nn - level ** (n + 1) / (nn * prod)

    @_jit
    def _nb_invariant(code, weights, amp, level, X):
        out = np.empty(X.shape[0])
        for r in range(X.shape[0]):
            out[r] = _nb_row_invariant(code, weights, amp, level, X[r])
        return out

    @_jit
    def _nb_gradient(code, weights, amp, level, X):
        m, n = X.shape
        out = np.empty((m, n))
        nn = float(n) ** n
        for r in range(m):
            if code == STABLESWAP:
                prod = 1.0
                for i in range(n):
                    prod *= X[r, i]
                c = level ** (n + 1) / (nn * prod)
                for i in range(n):
                    out[r, i] = amp * nn + c / X[r, i]
            else:
                a = _nb_row_invariant(code, weights, amp, level, X[r])
                for i in range(n):
                    w = 1.0 if code == CONSTANT_PRODUCT else weights[i]
                    out[r, i] = w * a / X[r, i]
        return out

    @_jit
    def _nb_defect_last(code, weights, amp, level, xhat, xn):
        q = xhat.shape[0]
        n = q + 1
        if code == CONSTANT_PRODUCT:
            acc = np.log(xn) - np.log(level)
            for i in range(q):
                acc += np.log(xhat[i])
            return acc, 1.0 / xn
        if code == WEIGHTED_G3M:
            wl = weights[q]
            acc = wl * np.log(xn) - np.log(level)
            for i in range(q):
                acc += weights[i] * np.log(xhat[i])
            return acc, wl / xn
        nn = float(n) ** n
        s = xn
        prod = xn
        for i in range(q):
            s += xhat[i]
            prod *= xhat[i]
        c = level ** (n + 1) / (nn * prod)
        return amp * nn * s + level - amp * level * nn - c, amp * nn + c / xn

    @_jit
    def _nb_root_row(code, weights, amp, level, xhat):
        lo = BRACKET_LO
        hi = BRACKET_HI
        while _nb_defect_last(code, weights, amp, level, xhat, hi)[0] < 0:
            hi *= 2.0
            if hi > BRACKET_CAP:
                return np.nan
        while _nb_defect_last(code, weights, amp, level, xhat, lo)[0] > 0:
            lo *= 1e-3
            if lo < BRACKET_FLOOR:
                return np.nan
        x = np.sqrt(lo * hi)
        for _ in range(MAX_ROOT_ITER):
            val, dval = _nb_defect_last(code, weights, amp, level, xhat, x)
            if val == 0.0:
                return x
            if val < 0:
                lo = x
            else:
                hi = x
            x_new = x - val / dval
            if not (x_new > lo and x_new < hi):
                x_new = np.sqrt(lo * hi)
            if abs(x_new - x) <= 4e-16 * x or hi - lo <= 4e-16 * hi:
                return x_new
            x = x_new
        return np.nan

    @_jit
    def _nb_solve_last(code, weights, amp, level, Xhat):
        out = np.empty(Xhat.shape[0])
        for r in range(Xhat.shape[0]):
            out[r] = _nb_root_row(code, weights, amp, level, Xhat[r])
        return out

    numba_kernels = SimpleNamespace(
        name="numba",
        invariant=_nb_invariant,
        gradient=_nb_gradient,
        solve_last=_nb_solve_last,
    )


def _select():
    flag = os.environ.get("AMMIL_DISABLE_NUMBA", "").strip().lower()
    if numba_kernels is None or flag in {"1", "true", "yes", "on"}:
        return numpy_kernels
    return numba_kernels


active = _select()
BACKEND = active.name


def invariant(code, weights, amp, level, X):
    return active.invariant(code, weights, float(amp), float(level), np.ascontiguousarray(X, dtype=np.float64))


def gradient(code, weights, amp, level, X):
    return active.gradient(code, weights, float(amp), float(level), np.ascontiguousarray(X, dtype=np.float64))


def solve_last(code, weights, amp, level, Xhat):
    """Last reserve putting each row of ``Xhat`` on the surface; NaN where no root is bracketed."""
    return active.solve_last(code, weights, float(amp), float(level), np.ascontiguousarray(Xhat, dtype=np.float64))
