"""Monte-Carlo simulation of training rounds and parameter-sweep campaigns.

A round is ``local_steps`` iterations of split forward/backward (compute at
the split plus upload of the split layer's output) followed by one
aggregation, whose server-side cost is ignored.  The FedAvg baseline
computes the full network over the local dataset and uploads the full
parameter vector once per round.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bandwidth import binary_search_allocation
from .errors import InfeasibleError, NumericalError
from .optimizer import alternating_optimize
from .rng import rng_stream
from .wireless import (
    comm_latency,
    expected_compute_latency,
    sample_channel,
    sample_compute_latency,
    transmission_rate,
)


@dataclass(frozen=True)
class RoundOutcome:
    """Latency breakdown of one simulated round."""

    per_device_compute: np.ndarray
    per_device_comm: np.ndarray
    round_latency: float
    scheme: str


def _finalize(compute, comm, scheme):
    total = compute + comm
    return RoundOutcome(
        per_device_compute=compute,
        per_device_comm=comm,
        round_latency=float(np.max(total)),
        scheme=scheme,
    )


def simulate_sfl_round(
    solution,
    scenario,
    rng,
    local_steps: int = 1,
    deterministic: bool = False,
    correlated: bool = False,
    downlink: bool = False,
) -> RoundOutcome:
    """Sample one SFL round under a solved (splits, ratios) pair.

    Each device draws a compute latency at its split and a fresh channel for
    the upload; per-iteration latency is multiplied by ``local_steps``.
    ``deterministic`` replaces draws with their means and reuses the
    scenario's fixed channels.  ``correlated`` accumulates independent
    per-layer increments instead of one draw at the cumulative load, a
    sensitivity mode for the independence assumption of the latency model.
    The server-side gradient return is free by default (server latency is
    neglected); ``downlink`` charges it as a second, symmetric transfer.
    """
    profile = scenario.profile
    ratios = solution.allocation.ratios
    fixed_channels = scenario.channels() if deterministic else None
    compute = np.empty(len(scenario.fleet))
    comm = np.empty(len(scenario.fleet))
    for k, dev in enumerate(scenario.fleet):
        split = int(solution.splits[k])
        macs = float(profile.cumulative_macs[split - 1])
        data = float(profile.data_size_bits[split - 1])
        if deterministic:
            ch = fixed_channels[k]
            step_compute = expected_compute_latency(dev, macs)
        else:
            ch = sample_channel(dev, scenario.system, rng)
            if correlated:
                increments = np.diff(profile.cumulative_macs[:split], prepend=0)
                step_compute = sum(
                    sample_compute_latency(dev, float(dc), rng) for dc in increments if dc > 0
                )
            else:
                step_compute = sample_compute_latency(dev, macs, rng)
        rate = transmission_rate(ratios[k], ch, scenario.system) if data > 0 else 0.0
        transfers = 2.0 if downlink else 1.0
        compute[k] = local_steps * step_compute
        comm[k] = local_steps * transfers * comm_latency(data, rate) if data > 0 else 0.0
    return _finalize(compute, comm, "sfl")


def fedavg_workload(scenario, local_dataset_size: int):
    """Full-model MACs per device-round and the uploaded parameter bits."""
    per_sample = float(scenario.profile.cumulative_macs[-1]) / scenario.arch.batch_size
    return per_sample * local_dataset_size, float(scenario.model_bits)


def fedavg_allocation(scenario, local_dataset_size: int, eps_tol: float = 1e-3):
    """Bandwidth allocation for the baseline: everyone uploads the full model."""
    full_macs, model_bits = fedavg_workload(scenario, local_dataset_size)
    k = len(scenario.fleet)
    data = np.full(k, model_bits)
    compute = np.array([expected_compute_latency(d, full_macs) for d in scenario.fleet])
    return binary_search_allocation(data, compute, scenario.full_band_rates(), eps_tol=eps_tol)


def simulate_fedavg_round(
    scenario,
    rng,
    local_dataset_size: int = 1500,
    deterministic: bool = False,
    allocation=None,
) -> RoundOutcome:
    """Sample one FedAvg round: full local epoch, then one full-model upload."""
    full_macs, model_bits = fedavg_workload(scenario, local_dataset_size)
    if allocation is None:
        allocation = fedavg_allocation(scenario, local_dataset_size)
    fixed_channels = scenario.channels() if deterministic else None
    compute = np.empty(len(scenario.fleet))
    comm = np.empty(len(scenario.fleet))
    for k, dev in enumerate(scenario.fleet):
        if deterministic:
            ch = fixed_channels[k]
            compute[k] = expected_compute_latency(dev, full_macs)
        else:
            ch = sample_channel(dev, scenario.system, rng)
            compute[k] = sample_compute_latency(dev, full_macs, rng)
        if model_bits > 0:
            rate = transmission_rate(allocation.ratios[k], ch, scenario.system)
            comm[k] = comm_latency(model_bits, rate)
        else:
            comm[k] = 0.0
    return _finalize(compute, comm, "fedavg")


# ---------------------------------------------------------------------------
# campaigns

_SWEEPS = {
    "distance_m": lambda sc, v: sc.with_distance(v),
    "sec_per_mac": lambda sc, v: sc.with_sec_per_mac(v),
    "l_hat": lambda sc, v: sc.with_l_hat(int(v)),
}


def _bottleneck(outcome: RoundOutcome):
    k = int(np.argmax(outcome.per_device_compute + outcome.per_device_comm))
    return outcome.per_device_compute[k], outcome.per_device_comm[k]


def _grid_point(args):
    (scenario, sweep, value, schemes, seeds, n_rounds, local_steps,
     local_dataset_size, deterministic, correlated, downlink, grid_idx) = args
    rounds, summaries = [], []
    base = dict(sweep_param=sweep or "", sweep_value="" if value is None else value)
    if sweep is not None:
        try:
            scenario = _SWEEPS[sweep](scenario, value)
        except (InfeasibleError, NumericalError, ValueError) as exc:
            for scheme in schemes:
                summaries.append(dict(base, scheme=scheme, status=f"error: {exc}"))
            return rounds, summaries

    solution = None
    if "sfl" in schemes:
        try:
            solution = alternating_optimize(scenario, **scenario.optimizer_opts)
        except (InfeasibleError, NumericalError) as exc:
            summaries.append(dict(base, scheme="sfl", status=f"error: {exc}"))
    plans = []
    if solution is not None:
        split_str = ";".join(str(s) for s in solution.splits)
        plans.append(("sfl", split_str, solution, None))
    if "fedavg" in schemes:
        try:
            alloc = fedavg_allocation(scenario, local_dataset_size)
            plans.append(("fedavg", "", None, alloc))
        except (InfeasibleError, NumericalError) as exc:
            summaries.append(dict(base, scheme="fedavg", status=f"error: {exc}"))

    for scheme, split_str, sol, alloc in plans:
        totals, computes, comms = [], [], []
        for seed in seeds:
            rng = rng_stream(seed, grid_idx, 0 if scheme == "sfl" else 1)
            for r in range(n_rounds):
                if scheme == "sfl":
                    out = simulate_sfl_round(
                        sol, scenario, rng, local_steps=local_steps,
                        deterministic=deterministic, correlated=correlated,
                        downlink=downlink,
                    )
                else:
                    out = simulate_fedavg_round(
                        scenario, rng, local_dataset_size=local_dataset_size,
                        deterministic=deterministic, allocation=alloc,
                    )
                cmp_s, comm_s = _bottleneck(out)
                rounds.append(dict(base, scheme=scheme, seed=seed, round=r,
                                   compute_s=cmp_s, comm_s=comm_s,
                                   total_s=out.round_latency, splits=split_str,
                                   status="ok"))
                totals.append(out.round_latency)
                computes.append(cmp_s)
                comms.append(comm_s)
        totals = np.array(totals)
        summaries.append(dict(
            base,
            scheme=scheme,
            n_rounds=len(totals),
            mean_total_s=float(totals.mean()),
            p50_total_s=float(np.percentile(totals, 50)),
            p95_total_s=float(np.percentile(totals, 95)),
            mean_compute_s=float(np.mean(computes)),
            mean_comm_s=float(np.mean(comms)),
            splits=split_str,
            expected_total_s=(sol.expected_total_latency if sol is not None
                              else alloc.finish_time),
            status="ok",
        ))
    return rounds, summaries


def run_campaign(
    scenario,
    n_rounds: int,
    seeds,
    scheme: str = "both",
    sweep: str | None = None,
    sweep_values=None,
    local_steps: int = 5,
    local_dataset_size: int = 1500,
    deterministic: bool = False,
    correlated: bool = False,
    downlink: bool = False,
    jobs: int = 1,
):
    """Solve and simulate every grid point; returns (round rows, summary rows).

    Grid points are independent tasks with their own derived random streams,
    so results are identical for any ``jobs`` value; failures at one point
    are recorded in its summary row and the campaign continues.
    """
    schemes = ("sfl", "fedavg") if scheme == "both" else (scheme,)
    values = [None] if sweep is None else list(sweep_values)
    tasks = [
        (scenario, sweep, value, schemes, tuple(seeds), n_rounds, local_steps,
         local_dataset_size, deterministic, correlated, downlink, idx)
        for idx, value in enumerate(values)
    ]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_grid_point, tasks))
    else:
        results = [_grid_point(t) for t in tasks]
    rounds, summaries = [], []
    for r, s in results:
        rounds.extend(r)
        summaries.extend(s)
    return rounds, summaries
