"""Portfolio value ``W`` as a function of exchange rates, and its duality with ``f``.

Exchange rates are quoted against the numeraire (last) token: ``m_i = p_i / p_n``
and ``m_n = 1``. ``W(m)`` is the numeraire-denominated value of the stable
state at rates ``m``; its gradient is the stable state's first ``n - 1``
reserves, and it is recovered from ``f`` by inverting ``m = -grad f(x)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import golden, root

from .amm import SolverError, SpecError
from .stable_point import DEFAULT_TOL, eval_f, eval_f_batch, grad_f, solve_stable_point

DEFAULT_SCALES = (0.5, 2.0, 10.0)
DEFAULT_BASE_POINTS = 5
BASE_BOX = (0.3, 3.0)


def as_rates(spec, m):
    """Full length-``n`` rate vector from ``n - 1`` rates or an ``n`` vector ending in 1."""
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    if m.ndim != 1 or m.shape[0] not in (spec.n - 1, spec.n):
        raise SpecError(f"expected {spec.n - 1} exchange rates, got shape {m.shape}")
    if m.shape[0] == spec.n:
        if m[-1] != 1.0:
            raise SpecError(f"numeraire rate must be exactly 1, got {m[-1]!r}")
    else:
        m = np.append(m, 1.0)
    if not np.all(np.isfinite(m)) or np.any(m <= 0):
        raise SpecError(f"exchange rates must be positive: {m}")
    return m


def stable_state_at(spec, level, m, tol=DEFAULT_TOL, method="auto"):
    return solve_stable_point(spec, level, as_rates(spec, m), tol=tol, method=method)


def eval_w(spec, level, m, tol=DEFAULT_TOL, method="auto"):
    """Numeraire value of the stable portfolio at rates ``m``."""
    m = as_rates(spec, m)
    x = stable_state_at(spec, level, m, tol, method).x
    return float(x @ m)


def grad_w(spec, level, m, tol=DEFAULT_TOL, method="auto"):
    """Gradient of ``W``: the stable state's non-numeraire reserves."""
    return stable_state_at(spec, level, m, tol, method).x_hat.copy()


def eval_w_direct(spec, level, m, grid=64, span=1e4):
    """Brute-force ``min_x [m . x + f(x)]`` by nested grid scan plus golden section.

    Each coordinate is scanned on ``grid`` log-spaced points within ``span``
    of the symmetric point, and the best cell is refined by golden section.
    Meant as a test oracle; it shares nothing with the Newton solver.
    """
    if grid < 64:
        raise SpecError("grid resolution must be at least 64")
    m = as_rates(spec, m)[:-1]
    level = spec.resolve_level(level)
    q = spec.n - 1
    center = np.log(spec.symmetric_point(level)[0])
    axis = np.linspace(center - np.log(span), center + np.log(span), grid)

    def objective(prefix, s):
        # minimum over the remaining coordinates with prefix + (s,) fixed
        return best(np.append(prefix, s))[0]

    def best(prefix):
        j = prefix.size
        if j == q:
            x = np.exp(prefix)
            fx = eval_f_batch(spec, level, x[None, :])[0]
            return (x @ m + fx if np.isfinite(fx) else np.inf), prefix
        if j == q - 1:
            X = np.exp(np.column_stack([np.tile(prefix, (grid, 1)), axis]))
            fx = eval_f_batch(spec, level, X)
            vals = np.where(np.isfinite(fx), X @ m + fx, np.inf)
        else:
            vals = np.array([objective(prefix, s) for s in axis])
        i = int(np.argmin(vals))
        if i == 0 or i == grid - 1:
            # Inner scans at outer points far from the optimum may legitimately run off the grid.
            if j == 0:
                raise SolverError("brute-force minimum on the scan boundary")
            return vals[i], np.append(prefix, axis[i])
        s = golden(lambda s: objective(prefix, s), brack=(axis[i - 1], axis[i], axis[i + 1]), tol=1e-10)
        return objective(prefix, s), np.append(prefix, s)

    return float(best(np.empty(0))[0])


def slope_inverse(spec, level, m):
    """Solve ``-grad f(x_hat) = m`` for ``x_hat`` by Levenberg-Marquardt in log space."""
    m = as_rates(spec, m)[:-1]
    u0 = np.log(spec.symmetric_point(level)[:-1])

    def residual(u):
        try:
            return np.log(-grad_f(spec, level, np.exp(u))) - np.log(m)
        except SolverError:
            return np.full(u.size, 1e6)

    sol = root(residual, u0, method="lm", options={"xtol": 1e-15, "ftol": 1e-15})
    worst = float(np.abs(sol.fun).max())
    if worst > 1e-9:
        raise SolverError(f"slope inversion failed: {sol.message}", residual=worst)
    return np.exp(sol.x)


def legendre_transform(spec, level, m):
    """``W(m)`` computed from ``f`` alone through slope inversion.

    With slopes read as ``m = -grad f`` the dual value is ``f(x) + m . x`` at
    the inverted point. The textbook-style expression ``-f(x) + m . x``
    differs from it by exactly ``2 f(x)``.
    """
    mm = as_rates(spec, m)[:-1]
    x_hat = slope_inverse(spec, level, m)
    fx = eval_f(spec, level, x_hat)
    return float(fx + mm @ x_hat)


@dataclass(frozen=True)
class HomogeneityEstimate:
    coordinate: int
    degree: float
    max_log_deviation: float
    probes: int


def surface_function(spec, level):
    """``f`` as a one-argument callable of the non-numeraire reserves."""
    return lambda x_hat: eval_f(spec, level, x_hat)


def value_function(spec, level):
    """``W`` as a one-argument callable of the non-numeraire rates."""
    return lambda m: eval_w(spec, level, m)


def default_base_points(dim, count=DEFAULT_BASE_POINTS, seed=0):
    rng = np.random.default_rng(seed)
    lo, hi = np.log(BASE_BOX[0]), np.log(BASE_BOX[1])
    return np.exp(rng.uniform(lo, hi, size=(count, dim)))


def estimate_homogeneity(fn, coordinate, base_points, scales=DEFAULT_SCALES):
    """Fit the degree of ``fn`` in one coordinate from log-ratio slopes.

    For every base point ``z`` and scale ``c`` the slope
    ``log(fn(z with z_j * c) / fn(z)) / log(c)`` is recorded. The degree is
    their mean and ``max_log_deviation`` the largest distance of any slope
    from it; an exactly homogeneous function gives zero.
    """
    base_points = np.atleast_2d(np.asarray(base_points, dtype=np.float64))
    scales = np.asarray(scales, dtype=np.float64)
    if base_points.shape[0] < 3:
        raise SpecError("need at least 3 base points")
    if scales.size < 3 or np.any(scales <= 0) or np.any(scales == 1.0):
        raise SpecError("need at least 3 positive scales different from 1")
    if scales.max() / scales.min() < 10:
        raise SpecError("scales must span at least one decade")
    if not 0 <= coordinate < base_points.shape[1]:
        raise SpecError(f"coordinate {coordinate} out of range")

    slopes, failures = [], []
    for z in base_points:
        try:
            f0 = fn(z)
        except SolverError as exc:
            failures.append((z.tolist(), 1.0, str(exc)))
            continue
        for c in scales:
            zc = z.copy()
            zc[coordinate] *= c
            try:
                fc = fn(zc)
            except SolverError as exc:
                failures.append((z.tolist(), float(c), str(exc)))
                continue
            if not (f0 > 0 and fc > 0):
                failures.append((z.tolist(), float(c), "non-positive value"))
                continue
            slopes.append(np.log(fc / f0) / np.log(c))
    if failures:
        lines = "; ".join(f"base={b} scale={c}: {msg}" for b, c, msg in failures)
        raise SolverError(f"{len(failures)} homogeneity probe(s) failed: {lines}", failures=failures)
    slopes = np.array(slopes)
    degree = float(slopes.mean())
    return HomogeneityEstimate(coordinate, degree, float(np.abs(slopes - degree).max()), slopes.size)
