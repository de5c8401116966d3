"""Convergence-bound calculator for the split-aggregation scheme.

Evaluates the training-error upper bound as a function of iteration count,
and the sensitivity of its aggregation-penalty term to the split point.
Layers at or below the split are personal to each device, so their
gradient-noise contribution enters at full weight; layers above it are
averaged across devices and contribute at weight 1/K.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class ConvergenceParams:
    """Inputs of the bound.

    ``grad_norm_sq`` and ``grad_var_sq`` are the per-layer bounds on the
    squared gradient norm and gradient variance; ``hetero_gap`` measures how
    far device optima sit below the global optimum (zero for IID data);
    ``init_gap`` is the mean squared distance of the initial iterate from
    the optimum.
    """

    smoothness: float
    strong_convexity: float
    grad_norm_sq: float
    grad_var_sq: float
    hetero_gap: float
    local_steps: int
    num_devices: int
    num_layers: int
    agg_split: int
    init_gap: float = 0.0

    def __post_init__(self):
        if not self.smoothness >= self.strong_convexity > 0:
            raise ValueError("need smoothness >= strong_convexity > 0")
        for f in ("grad_norm_sq", "grad_var_sq", "hetero_gap", "init_gap"):
            if getattr(self, f) < 0:
                raise ValueError(f"{f} must be >= 0")
        if self.local_steps < 1:
            raise ValueError("local_steps must be >= 1")
        if self.num_devices < 1:
            raise ValueError("num_devices must be >= 1")
        if not 1 <= self.agg_split <= self.num_layers:
            raise ValueError("agg_split must be in [1, num_layers]")


def p_term(params: ConvergenceParams, mode: str = "theorem") -> float:
    """Aggregation-penalty term of the bound.

    The heterogeneity coefficient differs between the two statements of the
    result (6x smoothness in one, 4x in the other); ``mode`` selects
    ``"theorem"`` (default) or ``"appendix"``.
    """
    coeff = {"theorem": 6.0, "appendix": 4.0}[mode]
    e, k = params.local_steps, params.num_devices
    l_total, ell = params.num_layers, params.agg_split
    z2, s2 = params.grad_norm_sq, params.grad_var_sq
    drift = 2.0 * (e - 1) ** 2 * l_total * z2
    hetero = coeff * params.smoothness * params.hetero_gap
    personal = ell * (z2 + s2)
    shared = (1.0 / k) * (l_total - ell) * (z2 + s2)
    return drift + hetero + personal + shared


def bound_at(params: ConvergenceParams, t: int, mode: str = "theorem") -> float:
    """Error bound after ``t`` iterations under the prescribed step size."""
    if t < 1:
        raise ValueError("t must be >= 1")
    alpha = params.smoothness / params.strong_convexity
    gamma = max(8.0 * alpha, float(params.local_steps))
    p = p_term(params, mode=mode)
    mu = params.strong_convexity
    return (alpha / (gamma + t)) * (2.0 * p / mu + 0.5 * mu * (gamma + 1.0) * params.init_gap)


def split_sensitivity(params: ConvergenceParams) -> float:
    """Rate of change of the penalty term per unit split depth.

    Equals ``(1 - 1/K)(Z^2 + sigma^2)``; non-negative, so deeper splits can
    only loosen the bound.
    """
    return (1.0 - 1.0 / params.num_devices) * (params.grad_norm_sq + params.grad_var_sq)
