"""Impermanent loss, exchange-rate ratio coordinates and the ERLI test."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .amm import SolverError, SpecError, as_positive_vector, surface_defect
from .legendre import (
    DEFAULT_SCALES,
    HomogeneityEstimate,
    as_rates,
    default_base_points,
    estimate_homogeneity,
    stable_state_at,
    surface_function,
    value_function,
)
from .stable_point import DEFAULT_TOL, StableState, eval_f_batch, solve_stable_point

DEFAULT_ERLI_TOL = 1e-6
HYSTERESIS = 10.0


def ratio_vector(p_i, p_f):
    """Final-over-initial exchange rate quotients against the last token."""
    p_i = np.asarray(p_i, dtype=np.float64)
    p_f = np.asarray(p_f, dtype=np.float64)
    if p_i.shape != p_f.shape or p_i.ndim != 1:
        raise SpecError(f"price vectors differ in shape: {p_i.shape} vs {p_f.shape}")
    p_i = as_positive_vector(p_i, p_i.size, "initial price vector")
    p_f = as_positive_vector(p_f, p_f.size, "final price vector")
    t = (p_f / p_f[-1]) / (p_i / p_i[-1])
    t[-1] = 1.0
    return t


@dataclass(frozen=True)
class IlReport:
    il: float
    v_hold: float
    v_pool: float
    x_initial: StableState
    x_final: StableState
    t: np.ndarray


def impermanent_loss(spec, level, p_i, p_f, tol=DEFAULT_TOL, method="auto"):
    """Pool-versus-hold shortfall after prices move from ``p_i`` to ``p_f``.

    Values are reported in units of the last token.
    """
    p_i = as_positive_vector(p_i, spec.n, "initial price vector")
    p_f = as_positive_vector(p_f, spec.n, "final price vector")
    s_i = solve_stable_point(spec, level, p_i, tol=tol, method=method)
    s_f = solve_stable_point(spec, level, p_f, tol=tol, method=method)
    v_hold = float(p_f @ s_i.x) / p_f[-1]
    v_pool = float(p_f @ s_f.x) / p_f[-1]
    return IlReport(v_pool / v_hold - 1.0, v_hold, v_pool, s_i, s_f, ratio_vector(p_i, p_f))


def il_from_w(spec, level, m_i, m_f, tol=DEFAULT_TOL, method="auto"):
    """IL as ``W(m_f)`` over the tangent-plane value of ``W`` at ``m_i``, minus one."""
    m_i = as_rates(spec, m_i)
    m_f = as_rates(spec, m_f)
    s_i = stable_state_at(spec, level, m_i, tol, method)
    s_f = stable_state_at(spec, level, m_f, tol, method)
    w_i = float(s_i.x @ m_i)
    w_f = float(s_f.x @ m_f)
    tangent = w_i + float((m_f - m_i)[:-1] @ s_i.x_hat)
    return w_f / tangent - 1.0


def _as_ratio(t):
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    return as_positive_vector(t, t.size, "ratio vector")


def il_cpmm_closed(t):
    """Geometric over arithmetic mean of the rate quotients, minus one."""
    t = _as_ratio(t)
    return float(np.exp(np.mean(np.log(t))) / np.mean(t) - 1.0)


def il_weighted_closed(weights, t):
    """Weighted pool IL: ``prod t_j^w_j / sum w_j t_j - 1``."""
    t = _as_ratio(t)
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != t.shape or np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise SpecError("weights must be positive, sum to 1 and match t")
    return float(np.exp(w @ np.log(t)) / (w @ t) - 1.0)


class Verdict(enum.Enum):
    ERLI = "erli"
    NOT_ERLI = "not_erli"
    INCONCLUSIVE = "inconclusive"


@dataclass
class ErliProbes:
    """Probe layout for :func:`erli_test`.

    ``t_values`` are ratio vectors over the non-numeraire tokens; ``None``
    picks a default set. Base rates are assigned to each coordinate in an
    independent shuffled order so that multi-token pools see varied levels.
    """

    t_values: list | None = None
    base_rates: tuple = tuple(np.geomspace(0.1, 10.0, 10))
    base_points: int = 5
    scales: tuple = DEFAULT_SCALES
    seed: int = 0

    def ratios(self, q):
        if self.t_values is not None:
            return [np.asarray(t, dtype=np.float64).reshape(q) for t in self.t_values]
        out = [np.full(q, 2.0), np.full(q, 0.25)]
        for j in range(q):
            t = np.ones(q)
            t[j] = 5.0
            out.append(t)
        unique = []
        for t in out:
            if not any(np.array_equal(t, u) for u in unique):
                unique.append(t)
        return unique

    def rate_levels(self, q):
        rng = np.random.default_rng(self.seed)
        base = np.asarray(self.base_rates, dtype=np.float64)
        cols = [base] + [rng.permutation(base) for _ in range(q - 1)]
        return np.column_stack(cols)


@dataclass
class ErliReport:
    verdict: Verdict
    f_degrees: list
    w_degrees: list
    direct_spread: float
    tolerance: float
    diagnostics: list = field(default_factory=list)


def direct_spread(spec, level, t, base_rates, tol=DEFAULT_TOL):
    """Range of IL over initial rate vectors at one fixed ratio vector ``t``."""
    t = np.append(np.asarray(t, dtype=np.float64), 1.0)
    ils = []
    for m in np.atleast_2d(base_rates):
        m_i = as_rates(spec, m)
        ils.append(impermanent_loss(spec, level, m_i, m_i * t, tol=tol).il)
    return float(np.ptp(ils))


def erli_test(spec, level, tolerance=DEFAULT_ERLI_TOL, probes=None):
    """Decide whether IL on this surface depends only on rate quotients.

    Combines a direct check (IL spread over initial rate levels at fixed
    quotients) with a structural one (homogeneity of ``f`` in every
    coordinate). ``W`` degrees are estimated for the report as well.
    """
    probes = probes or ErliProbes()
    q = spec.n - 1
    diagnostics = []
    f_degrees, w_degrees = [], []
    spread = float("nan")
    try:
        rates = probes.rate_levels(q)
        spread = max(direct_spread(spec, level, t, rates) for t in probes.ratios(q))
        points = default_base_points(q, probes.base_points, probes.seed)
        f = surface_function(spec, level)
        w = value_function(spec, level)
        for j in range(q):
            f_degrees.append(estimate_homogeneity(f, j, points, probes.scales))
            w_degrees.append(estimate_homogeneity(w, j, points, probes.scales))
    except SolverError as exc:
        diagnostics.append(str(exc))
        return ErliReport(Verdict.INCONCLUSIVE, f_degrees, w_degrees, spread, tolerance, diagnostics)

    f_dev = max(e.max_log_deviation for e in f_degrees)
    if spread <= tolerance and f_dev <= tolerance:
        verdict = Verdict.ERLI
    elif spread >= HYSTERESIS * tolerance or f_dev >= HYSTERESIS * tolerance:
        verdict = Verdict.NOT_ERLI
    else:
        verdict = Verdict.INCONCLUSIVE
        diagnostics.append(f"spread {spread:.3g} and f deviation {f_dev:.3g} fall in the hysteresis band")
    return ErliReport(verdict, f_degrees, w_degrees, spread, tolerance, diagnostics)


@dataclass(frozen=True)
class G3mEquivalent:
    exponents: np.ndarray
    fit_residual: float
    degrees: tuple[HomogeneityEstimate, ...] = ()


def recover_g3m(spec, level, samples=64, seed=0):
    """Exponents of ``B(x) = prod_{j<n} x_j^g_j * x_n`` sharing this surface.

    ``g_j`` is minus the homogeneity degree of ``f`` in ``x_j``. The fit
    residual is the largest relative spread of ``B`` over sampled surface
    points; it is near zero only when the surface really is a G3M surface.
    """
    q = spec.n - 1
    f = surface_function(spec, level)
    points = default_base_points(q, seed=seed)
    degrees = tuple(estimate_homogeneity(f, j, points) for j in range(q))
    exponents = np.append([-e.degree for e in degrees], 1.0)

    rng = np.random.default_rng(seed + 1)
    Xhat = np.exp(rng.uniform(np.log(0.3), np.log(3.0), size=(samples, q)))
    fx = eval_f_batch(spec, level, Xhat)
    if not np.all(np.isfinite(fx)):
        raise SolverError("surface evaluation failed while fitting exponents")
    logb = np.log(np.column_stack([Xhat, fx])) @ exponents
    b = np.exp(logb - np.median(logb))
    return G3mEquivalent(exponents, float(np.abs(b - 1.0).max()), degrees)


class SurfaceComparison(NamedTuple):
    same: bool
    max_defect: float


def same_level_surfaces(spec_a, level_a, spec_b, level_b, samples=64, seed=0, tol=1e-9):
    """Whether surface ``A = level_a`` lies on surface ``B = level_b``, by sampling."""
    if spec_a.n != spec_b.n:
        raise SpecError("specs have different token counts")
    q = spec_a.n - 1
    rng = np.random.default_rng(seed)
    Xhat = np.exp(rng.uniform(np.log(0.3), np.log(3.0), size=(samples, q)))
    fx = eval_f_batch(spec_a, level_a, Xhat)
    if not np.all(np.isfinite(fx)):
        raise SolverError("surface evaluation failed while sampling")
    defect = float(surface_defect(spec_b, level_b, np.column_stack([Xhat, fx])).max())
    return SurfaceComparison(defect <= tol, defect)
