"""Command-line interface.

Subcommands: ``profile`` (per-layer compute/data table), ``optimize``
(joint split + bandwidth solve), ``simulate`` (Monte-Carlo rounds and
sweeps), ``train`` (micro split-training run), ``bound`` (convergence-bound
table).  Every run writes RFC-4180-style CSVs plus a replayable manifest
into the output directory.  Exit codes: 0 success, 1 configuration error,
2 infeasible constraints, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import sys

import numpy as np

from . import __version__
from .convergence import bound_at, p_term
from .errors import ConfigError, InfeasibleError, NumericalError
from .microsfl import train
from .optimizer import alternating_optimize
from .profiler import layer_macs
from .scenario import load_scenario
from .simulator import run_campaign


def _fmt(value):
    # np.float64 subclasses float, so convert before taking repr
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return value


def write_csv(path, fieldnames, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, extrasaction="ignore")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(v) for k, v in row.items()})


def write_manifest(out_dir, args, config_path):
    with open(config_path, "rb") as fh:
        config_bytes = fh.read()
    manifest = {
        "command": args.command,
        "config_path": os.path.abspath(config_path),
        "config_sha256": hashlib.sha256(config_bytes).hexdigest(),
        "config_text": config_bytes.decode("utf-8", errors="replace"),
        "seed_override": args.seed,
        "jobs": args.jobs,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_profile(scenario, out_dir, args):
    arch = scenario.arch
    prof = scenario.profile
    rows = [
        dict(
            layer=i + 1,
            name=layer.name,
            kind=layer.kind,
            layer_macs=layer_macs(layer, arch.batch_size),
            cumulative_macs=int(prof.cumulative_macs[i]),
            data_bits=int(prof.data_size_bits[i]),
        )
        for i, layer in enumerate(arch.layers)
    ]
    write_csv(
        os.path.join(out_dir, "layers.csv"),
        ["layer", "name", "kind", "layer_macs", "cumulative_macs", "data_bits"],
        rows,
    )
    print(f"profiled {arch.name or 'architecture'}: {arch.num_layers} layers, "
          f"{int(prof.cumulative_macs[-1])} total MACs (batch {arch.batch_size})")
    return 0


def cmd_optimize(scenario, out_dir, args):
    solution = alternating_optimize(scenario, **scenario.optimizer_opts)
    prof = scenario.profile
    rates = scenario.full_band_rates()
    rows = []
    for k, dev in enumerate(scenario.fleet):
        split = int(solution.splits[k])
        ratio = float(solution.allocation.ratios[k])
        compute = float(prof.cumulative_macs[split - 1]) * (
            dev.sec_per_mac + 1.0 / dev.fluctuation_rate
        )
        comm = float(prof.data_size_bits[split - 1]) / (ratio * rates[k])
        rows.append(dict(device=k, split=split, ratio=ratio,
                         expected_compute_s=compute, comm_s=comm,
                         total_s=compute + comm))
    write_csv(os.path.join(out_dir, "solution.csv"),
              ["device", "split", "ratio", "expected_compute_s", "comm_s", "total_s"], rows)

    policy_rows = []
    for k, policy in enumerate(solution.policies):
        for i in range(len(policy.split_probs)):
            policy_rows.append(dict(
                device=k, layer=i + 1,
                threshold_s=float(policy.thresholds[i]),
                expected_cost_s=float(policy.expected_costs[i]),
                split_prob=float(policy.split_probs[i]),
            ))
    write_csv(os.path.join(out_dir, "policies.csv"),
              ["device", "layer", "threshold_s", "expected_cost_s", "split_prob"], policy_rows)

    trace_rows = [
        dict(iteration=i + 1, objective_s=obj, best_objective_s=best)
        for i, (obj, best) in enumerate(zip(solution.objective_trace, solution.best_trace))
    ]
    write_csv(os.path.join(out_dir, "trace.csv"),
              ["iteration", "objective_s", "best_objective_s"], trace_rows)

    splits = ";".join(str(s) for s in solution.splits)
    print(f"devices: {len(scenario.fleet)}  split cap: {scenario.l_hat}")
    print(f"splits: {splits}")
    print(f"expected total latency: {solution.expected_total_latency:.6g} s "
          f"({solution.n_iterations} iterations, residual bandwidth "
          f"{solution.allocation.residual:.2e})")
    return 0


def cmd_simulate(scenario, out_dir, args):
    opts = scenario.simulate_opts
    rounds, summaries = run_campaign(
        scenario,
        n_rounds=opts["n_rounds"],
        seeds=opts["seeds"],
        scheme=opts["scheme"],
        sweep=opts["sweep"],
        sweep_values=opts["sweep_values"],
        local_steps=opts["local_steps"],
        local_dataset_size=opts["local_dataset_size"],
        deterministic=opts["deterministic"],
        correlated=opts["correlated"],
        downlink=opts["downlink"],
        jobs=args.jobs,
    )
    write_csv(os.path.join(out_dir, "rounds.csv"),
              ["scheme", "sweep_param", "sweep_value", "seed", "round",
               "compute_s", "comm_s", "total_s", "splits", "status"], rounds)
    write_csv(os.path.join(out_dir, "summary.csv"),
              ["scheme", "sweep_param", "sweep_value", "n_rounds", "mean_total_s",
               "p50_total_s", "p95_total_s", "mean_compute_s", "mean_comm_s",
               "splits", "expected_total_s", "status"], summaries)
    for s in summaries:
        label = f"{s['scheme']}"
        if s.get("sweep_param"):
            label += f" @ {s['sweep_param']}={s['sweep_value']}"
        if s.get("status", "ok") != "ok":
            print(f"{label}: {s['status']}")
        else:
            print(f"{label}: mean round latency {s['mean_total_s']:.6g} s "
                  f"over {s['n_rounds']} rounds")
    return 0


def cmd_train(scenario, out_dir, args):
    opts = dict(scenario.train_opts)
    rows = train(seed=scenario.seed, **opts)
    write_csv(os.path.join(out_dir, "metrics.csv"),
              ["iteration", "model_time_s", "loss", "accuracy", "scheme", "splits"], rows)
    last = rows[-1]
    print(f"trained {opts['iterations']} iterations: final loss {last['loss']:.4f}, "
          f"accuracy {last['accuracy']:.3f}")
    return 0


def cmd_bound(scenario, out_dir, args):
    params = scenario.convergence
    if params is None:
        raise ConfigError("convergence.smoothness: required for the bound subcommand")
    mode = scenario.bound_opts["p_mode"]
    rows = [
        dict(t=t, p_term=p_term(params, mode=mode), bound=bound_at(params, t, mode=mode))
        for t in scenario.bound_opts["t_values"]
    ]
    write_csv(os.path.join(out_dir, "bound.csv"), ["t", "p_term", "bound"], rows)
    print(f"bound table written for {len(rows)} iteration counts "
          f"(penalty mode: {mode}, split {params.agg_split}/{params.num_layers})")
    return 0


_COMMANDS = {
    "profile": cmd_profile,
    "optimize": cmd_optimize,
    "simulate": cmd_simulate,
    "train": cmd_train,
    "bound": cmd_bound,
}


class _Parser(argparse.ArgumentParser):
    # argparse usage problems are configuration errors: exit 1, not 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"error: {message}\n")


def build_parser():
    parser = _Parser(prog="sflopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="scenario config file (INI)")
        p.add_argument("--out", default="sflopt_out", help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="parallel workers for sweep campaigns")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(args.config, seed_override=args.seed)
        os.makedirs(args.out, exist_ok=True)
        code = _COMMANDS[args.command](scenario, args.out, args)
        write_manifest(args.out, args, args.config)
        return code
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
