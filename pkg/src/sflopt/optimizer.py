"""Alternating optimization of split points and bandwidth ratios.

The two decisions are coupled: a device's split point fixes how much data
it uploads, which drives the bandwidth it needs, while its bandwidth share
changes the transmission times the split decision weighs.  Each iteration
solves the split step exactly per device (given the current ratios) and
the bandwidth step exactly given the splits, keeping the best pair seen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator

from .bandwidth import BandwidthAllocation, binary_search_allocation
from .splitting import SplitPolicy, backward_induction


def per_layer_comm_latencies(profile, bandwidth_ratio, full_band_rate, max_split) -> np.ndarray:
    """Transmission time of each candidate layer's output at a bandwidth share."""
    data = np.asarray(profile.data_size_bits[:max_split], dtype=float)
    return data / (bandwidth_ratio * full_band_rate)


def expected_total_latency(splits, ratios, scenario) -> float:
    """System objective: the largest per-device mean compute + transmit time."""
    per_device = _per_device_expected(splits, ratios, scenario)
    return float(np.max(per_device))


def _per_device_expected(splits, ratios, scenario):
    profile = scenario.profile
    rates = scenario.full_band_rates()
    out = np.empty(len(scenario.fleet))
    for k, dev in enumerate(scenario.fleet):
        c = float(profile.cumulative_macs[splits[k] - 1])
        d = float(profile.data_size_bits[splits[k] - 1])
        compute = c * (dev.sec_per_mac + 1.0 / dev.fluctuation_rate)
        out[k] = compute + d / (ratios[k] * rates[k])
    return out


@dataclass(frozen=True)
class JointSolution:
    """Result of the alternating optimization.

    ``objective_trace`` holds the raw per-iteration objective (it may
    oscillate); ``best_trace`` the best seen so far, which is non-increasing
    by construction.
    """

    splits: np.ndarray
    allocation: BandwidthAllocation
    expected_total_latency: float
    policies: tuple[SplitPolicy, ...]
    objective_trace: tuple[float, ...] = field(default=())
    best_trace: tuple[float, ...] = field(default=())
    n_iterations: int = 0


def _split_step(scenario, ratios):
    """Per-device exact split given ratios; devices decouple under a fixed allocation."""
    rates = scenario.full_band_rates()
    policies = []
    for k, dev in enumerate(scenario.fleet):
        tau_cm = per_layer_comm_latencies(scenario.profile, ratios[k], rates[k], scenario.l_hat)
        policies.append(backward_induction(scenario.profile, dev, tau_cm, scenario.l_hat))
    return policies


def _bandwidth_step(scenario, splits, eps_tol):
    profile = scenario.profile
    data = np.array([profile.data_size_bits[s - 1] for s in splits], dtype=float)
    compute = np.array(
        [
            float(profile.cumulative_macs[s - 1]) * (d.sec_per_mac + 1.0 / d.fluctuation_rate)
            for s, d in zip(splits, scenario.fleet)
        ]
    )
    return binary_search_allocation(data, compute, scenario.full_band_rates(), eps_tol=eps_tol)


def alternating_optimize(scenario, n_iter: int = 10, eps_tol: float = 1e-3) -> JointSolution:
    """Alternate the split step and the bandwidth step, returning the best pair.

    Starts from a uniform 1/K allocation.  Since splits are discrete, the
    loop terminates as soon as the split vector repeats; otherwise it runs
    ``n_iter`` iterations.  The returned solution is the best (splits,
    allocation) pair by objective, not necessarily the last one.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    k = len(scenario.fleet)
    ratios = np.full(k, 1.0 / k)
    best = None
    prev_splits = None
    raw_trace, best_trace = [], []
    iterations = 0
    for _ in range(n_iter):
        iterations += 1
        policies = _split_step(scenario, ratios)
        splits = np.array([p.chosen_split for p in policies], dtype=int)
        allocation = _bandwidth_step(scenario, splits, eps_tol)
        objective = allocation.finish_time
        raw_trace.append(objective)
        if best is None or objective < best[0]:
            best = (objective, splits, allocation, tuple(policies))
        best_trace.append(best[0])
        if prev_splits is not None and np.array_equal(splits, prev_splits):
            break
        prev_splits = splits
        ratios = allocation.ratios
    objective, splits, allocation, policies = best
    return JointSolution(
        splits=splits,
        allocation=allocation,
        expected_total_latency=objective,
        policies=policies,
        objective_trace=tuple(raw_trace),
        best_trace=tuple(best_trace),
        n_iterations=iterations,
    )


class JointLatencyOptimizer(BaseEstimator):
    """Estimator-style wrapper around :func:`alternating_optimize`.

    Follows the scikit-learn parameter protocol so it can be cloned and
    grid-searched; ``fit`` takes a scenario instead of an array.
    """

    def __init__(self, n_iter=10, eps_tol=1e-3):
        self.n_iter = n_iter
        self.eps_tol = eps_tol

    def fit(self, scenario, y=None):
        solution = alternating_optimize(scenario, n_iter=self.n_iter, eps_tol=self.eps_tol)
        self.solution_ = solution
        self.splits_ = solution.splits
        self.ratios_ = solution.allocation.ratios
        self.finish_time_ = solution.expected_total_latency
        return self
