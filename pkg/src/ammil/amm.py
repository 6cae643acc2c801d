"""AMM invariant families, gradients and sampled axiom checks."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from . import _kernels

WEIGHT_SUM_TOL = 1e-12
MIN_WEIGHT = 1e-9


class SpecError(ValueError):
    """Invalid AMM parameters, reserves or prices."""


class SolverError(RuntimeError):
    """A numerical routine failed to converge or to bracket a root."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class Family(enum.Enum):
    CONSTANT_PRODUCT = "constant-product"
    WEIGHTED_G3M = "weighted-g3m"
    STABLESWAP = "stableswap"


_CODES = {
    Family.CONSTANT_PRODUCT: _kernels.CONSTANT_PRODUCT,
    Family.WEIGHTED_G3M: _kernels.WEIGHTED_G3M,
    Family.STABLESWAP: _kernels.STABLESWAP,
}


@dataclass(frozen=True)
class AmmSpec:
    """A validated member of one invariant family.

    ``weights`` applies to the weighted geometric mean family only, ``amp``
    and ``d`` to StableSwap only. Use the ``constant_product``,
    ``weighted_g3m`` and ``stableswap`` constructors rather than filling the
    fields by hand.
    """

    family: Family
    n: int
    weights: tuple[float, ...] | None = None
    amp: float | None = None
    d: float | None = None
    _w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        if isinstance(self.n, bool) or not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise SpecError(f"token count must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

        if family is Family.WEIGHTED_G3M:
            if self.weights is None:
                raise SpecError("weighted-g3m requires weights")
            w = tuple(float(v) for v in self.weights)
            if len(w) != self.n:
                raise SpecError(f"expected {self.n} weights, got {len(w)}")
            if not all(math.isfinite(v) and v >= MIN_WEIGHT for v in w):
                raise SpecError(f"weights must all be >= {MIN_WEIGHT}: {w}")
            if abs(math.fsum(w) - 1.0) > WEIGHT_SUM_TOL:
                raise SpecError(f"weights must sum to 1, got {math.fsum(w)!r}")
            object.__setattr__(self, "weights", w)
        elif self.weights is not None:
            raise SpecError(f"{family.value} takes no weights")

        if family is Family.STABLESWAP:
            for name in ("amp", "d"):
                v = getattr(self, name)
                if v is None or not math.isfinite(v) or v <= 0:
                    raise SpecError(f"stableswap requires positive {name}, got {v!r}")
                object.__setattr__(self, name, float(v))
        elif self.amp is not None or self.d is not None:
            raise SpecError(f"{family.value} takes no amp/d")

        w = np.array(self.weights if self.weights is not None else (1.0 / self.n,) * self.n)
        w.setflags(write=False)
        object.__setattr__(self, "_w", w)

    @classmethod
    def constant_product(cls, n=2):
        return cls(Family.CONSTANT_PRODUCT, n)

    @classmethod
    def weighted_g3m(cls, weights):
        return cls(Family.WEIGHTED_G3M, len(weights), weights=tuple(weights))

    @classmethod
    def stableswap(cls, n=2, amp=1.0, d=1.0):
        return cls(Family.STABLESWAP, n, amp=amp, d=d)

    @property
    def code(self):
        return _CODES[self.family]

    @property
    def weight_array(self):
        """Weights as an array; ``1/n`` each for non-weighted families."""
        return self._w

    @property
    def is_geometric(self):
        """True for the families whose level surfaces are G3M surfaces."""
        return self.family is not Family.STABLESWAP

    def resolve_level(self, level):
        """Map an optional level argument to the surface parameter for this family.

        StableSwap surfaces are indexed by ``D`` and default to ``self.d``; the
        geometric families need an explicit positive invariant value ``k``.
        """
        if level is None:
            if self.family is Family.STABLESWAP:
                return self.d
            raise SpecError(f"{self.family.value} needs an explicit level")
        level = float(level)
        if not math.isfinite(level) or level <= 0:
            raise SpecError(f"level must be positive, got {level!r}")
        return level

    def symmetric_point(self, level=None):
        """The on-surface point with all reserves equal."""
        level = self.resolve_level(level)
        if self.family is Family.CONSTANT_PRODUCT:
            s = level ** (1.0 / self.n)
        elif self.family is Family.WEIGHTED_G3M:
            s = level
        else:
            s = level / self.n
        return np.full(self.n, s)

    def to_dict(self):
        out = {"family": self.family.value, "n": self.n}
        if self.weights is not None:
            out["weights"] = list(self.weights)
        if self.amp is not None:
            out["amp"] = self.amp
            out["d"] = self.d
        return out


_SPEC_KEYS = {"family", "n", "weights", "amp", "d"}


def spec_from_dict(obj):
    if not isinstance(obj, dict):
        raise SpecError("spec must be a JSON object")
    unknown = set(obj) - _SPEC_KEYS
    if unknown:
        raise SpecError(f"unknown spec keys: {sorted(unknown)}")
    if "family" not in obj or "n" not in obj:
        raise SpecError("spec needs 'family' and 'n'")
    try:
        family = Family(obj["family"])
    except ValueError:
        raise SpecError(f"unknown family {obj['family']!r}") from None
    weights = obj.get("weights")
    return AmmSpec(family, obj["n"], weights=tuple(weights) if weights is not None else None,
                   amp=obj.get("amp"), d=obj.get("d"))


def load_spec(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
        obj = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecError(f"cannot read spec file {path}: {exc}") from exc
    return spec_from_dict(obj)


def as_positive_vector(values, n, what="reserve vector"):
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != n:
        raise SpecError(f"{what} must have {n} components, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        raise SpecError(f"{what} must be strictly positive: {x}")
    return x


def eval_invariant(spec, x):
    """Invariant value at ``x``.

    For StableSwap this is the signed defect of the ``spec.d`` surface rather
    than a level value; it vanishes exactly on that surface.
    """
    x = as_positive_vector(x, spec.n)
    level = spec.d if spec.family is Family.STABLESWAP else 1.0
    return float(_kernels.invariant(spec.code, spec.weight_array, spec.amp or 0.0, level, x[None, :])[0])


def eval_gradient(spec, x):
    x = as_positive_vector(x, spec.n)
    level = spec.d if spec.family is Family.STABLESWAP else 1.0
    return _kernels.gradient(spec.code, spec.weight_array, spec.amp or 0.0, level, x[None, :])[0]


def surface_gradient(spec, level, X):
    """Invariant gradient at each row of ``X`` for the surface indexed by ``level``."""
    return _kernels.gradient(spec.code, spec.weight_array, spec.amp or 0.0, level, np.atleast_2d(X))


def surface_defect(spec, level, X):
    """Relative distance of each row of ``X`` from the surface indexed by ``level``.

    Geometric families: ``|A(x) - k| / k``. StableSwap: ``|F(x)|`` divided by
    the sum of magnitudes of the terms of F.
    """
    level = spec.resolve_level(level)
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    vals = _kernels.invariant(spec.code, spec.weight_array, spec.amp or 0.0, level, X)
    if spec.is_geometric:
        return np.abs(vals - level) / level
    n = spec.n
    nn = float(n) ** n
    scale = (spec.amp * nn * X.sum(axis=1) + level + spec.amp * level * nn
             + level ** (n + 1) / (nn * np.prod(X, axis=1)))
    return np.abs(vals) / scale


def stableswap_level(spec, x):
    """The ``D`` whose StableSwap surface passes through ``x``."""
    if spec.family is not Family.STABLESWAP:
        raise SpecError("stableswap_level needs a stableswap spec")
    x = as_positive_vector(x, spec.n)
    n = spec.n
    nn = float(n) ** n
    s, prod = x.sum(), np.prod(x)

    def defect(d):
        return spec.amp * nn * s + d - spec.amp * d * nn - d ** (n + 1) / (nn * prod)

    # F(0+) > 0 and F(sum x) <= 0 by AM-GM, with equality on the diagonal.
    hi = s * (1 + 1e-9)
    return brentq(defect, 1e-300, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


@dataclass
class ValidationReport:
    passed: bool
    samples: int
    gradient_violations: list = field(default_factory=list)
    convexity_violations: list = field(default_factory=list)
    skipped: int = 0


def validate_spec(spec, domain_box, points_per_axis=6, hessian_step=1e-4):
    """Check gradient positivity and convexity of level surfaces on a sampled box.

    Samples a log-spaced grid in the box. At each point the surface through
    that point is used: ``k = A(x)`` for the geometric families and the
    matching ``D`` for StableSwap. Convexity is checked through the
    finite-difference Hessian of the induced surface function of the first
    ``n - 1`` reserves, which must be positive definite.
    """
    from .stable_point import grad_f  # circular at module level

    lo = np.asarray(domain_box[0], dtype=np.float64)
    hi = np.asarray(domain_box[1], dtype=np.float64)
    if lo.shape != (spec.n,) or hi.shape != (spec.n,):
        raise SpecError(f"domain box corners must have {spec.n} components")
    if np.any(lo <= 0) or np.any(hi <= 0):
        raise SpecError("domain box bounds must be positive")
    if np.any(hi <= lo):
        raise SpecError("domain box is empty")

    axes = [np.geomspace(a, b, points_per_axis) for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.n)
    report = ValidationReport(passed=True, samples=len(grid))
    q = spec.n - 1
    for x in grid:
        if spec.is_geometric:
            level = float(_kernels.invariant(spec.code, spec.weight_array, 0.0, 1.0, x[None, :])[0])
        else:
            level = stableswap_level(spec, x)
        g = surface_gradient(spec, level, x)[0]
        if not np.all(g > 0):
            report.gradient_violations.append(x.tolist())
        xh = x[:-1]
        try:
            hess = np.empty((q, q))
            for j in range(q):
                h = hessian_step * xh[j]
                up, dn = xh.copy(), xh.copy()
                up[j] += h
                dn[j] -= h
                hess[:, j] = (grad_f(spec, level, up) - grad_f(spec, level, dn)) / (2 * h)
            hess = 0.5 * (hess + hess.T)
            if np.linalg.eigvalsh(hess)[0] <= 0:
                report.convexity_violations.append(x.tolist())
        except SolverError:
            report.skipped += 1
    report.passed = not report.gradient_violations and not report.convexity_violations
    return report
