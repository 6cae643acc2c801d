"""Stable states, impermanent loss and value-function duality for AMM invariants."""

__version__ = "0.1.0"

from .amm import (  # noqa: E402
    AmmSpec,
    Family,
    SolverError,
    SpecError,
    eval_gradient,
    eval_invariant,
    load_spec,
    spec_from_dict,
    validate_spec,
)
from .il import (  # noqa: E402
    ErliProbes,
    Verdict,
    erli_test,
    il_cpmm_closed,
    il_from_w,
    il_weighted_closed,
    impermanent_loss,
    ratio_vector,
    recover_g3m,
    same_level_surfaces,
)
from .legendre import (  # noqa: E402
    estimate_homogeneity,
    eval_w,
    eval_w_direct,
    grad_w,
    legendre_transform,
)
from .stable_point import closed_form_stable_point, eval_f, grad_f, solve_stable_point  # noqa: E402

__all__ = [
    "AmmSpec", "Family", "SolverError", "SpecError", "eval_gradient", "eval_invariant", "load_spec",
    "spec_from_dict", "validate_spec", "ErliProbes", "Verdict", "erli_test", "il_cpmm_closed",
    "il_from_w", "il_weighted_closed", "impermanent_loss", "ratio_vector", "recover_g3m",
    "same_level_surfaces", "estimate_homogeneity", "eval_w", "eval_w_direct", "grad_w",
    "legendre_transform", "closed_form_stable_point", "eval_f", "grad_f", "solve_stable_point",
]
