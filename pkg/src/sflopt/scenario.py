"""Scenario configuration: fleets, channels, architecture, and options.

A scenario bundles everything a solve or simulation needs.  It is built
either programmatically or from an INI config file with one section per
concern (system, fleet, architecture, convergence, optimizer, simulate,
train).  Channel gains are derived from per-device fading factors stored on
the scenario, so sweep variants (distance, compute speed, split cap) reuse
the same randomness and stay comparable across grid points.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
from dataclasses import dataclass, field

import numpy as np

from .convergence import ConvergenceParams
from .errors import ConfigError
from .profiler import NetworkArchitecture, NetworkProfile, builtin_architecture, load_architecture, parameter_bits, profile
from .rng import rng_stream
from .splitting import split_layer_cap
from .wireless import ChannelRealization, DeviceProfile, SystemParams, _make_channel, transmission_rate

PAPER_DEFAULTS = dict(
    num_devices=20,
    bandwidth_hz=20e6,
    noise_dbm=-114.0,
    tx_power_dbm=10.0,
    sec_per_mac=(0.2e-9, 1.0e-9),
    distance_m=500.0,
)


def generate_fleet(
    count,
    sec_per_mac,
    tx_power_dbm=10.0,
    distance_m=500.0,
    fluctuation=None,
    seed=0,
):
    """Create ``count`` devices; scalar parameters may be (lo, hi) ranges.

    ``fluctuation=None`` applies the rate rule ``2 / sec_per_mac``.
    Returns the device list and the unit-mean fading factors drawn for them.
    """
    if count < 1:
        raise ConfigError("fleet.count: must be >= 1")
    rng = rng_stream(seed, 0xF1EE7)
    a = _draw(rng, sec_per_mac, count)
    d = _draw(rng, distance_m, count)
    p = _draw(rng, tx_power_dbm, count)
    fading = rng.exponential(size=count)
    devices = []
    for k in range(count):
        eps = 2.0 / a[k] if fluctuation is None else float(fluctuation)
        devices.append(
            DeviceProfile(
                sec_per_mac=float(a[k]),
                fluctuation_rate=eps,
                tx_power_dbm=float(p[k]),
                distance_m=float(d[k]),
            )
        )
    return devices, fading


def _draw(rng, value, count):
    if isinstance(value, (tuple, list)):
        lo, hi = value
        return rng.uniform(lo, hi, size=count)
    return np.full(count, float(value))


@dataclass(frozen=True)
class Scenario:
    """Fully materialized inputs for the optimizer, simulator, and trainer."""

    system: SystemParams
    fleet: tuple[DeviceProfile, ...]
    fading_factors: np.ndarray
    arch: NetworkArchitecture
    profile: NetworkProfile
    l_hat: int
    model_bits: int = 0
    seed: int = 0
    optimizer_opts: dict = field(default_factory=dict)
    simulate_opts: dict = field(default_factory=dict)
    train_opts: dict = field(default_factory=dict)
    convergence: ConvergenceParams | None = None
    bound_opts: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 1 <= self.l_hat <= self.profile.num_layers:
            raise ConfigError(
                f"convergence.l_hat: {self.l_hat} outside [1, {self.profile.num_layers}]"
            )
        if len(self.fleet) != len(self.fading_factors):
            raise ConfigError("fleet and fading_factors lengths differ")

    def channels(self) -> list[ChannelRealization]:
        return [
            _make_channel(dev, self.system, float(x))
            for dev, x in zip(self.fleet, self.fading_factors)
        ]

    def full_band_rates(self) -> np.ndarray:
        return np.array(
            [transmission_rate(1.0, ch, self.system) for ch in self.channels()]
        )

    def with_distance(self, distance_m) -> "Scenario":
        fleet = tuple(
            dataclasses.replace(dev, distance_m=float(distance_m)) for dev in self.fleet
        )
        return dataclasses.replace(self, fleet=fleet)

    def with_sec_per_mac(self, sec_per_mac, fluctuation=None) -> "Scenario":
        """All devices set to one compute speed; fluctuation follows 2/a unless given."""
        eps = 2.0 / sec_per_mac if fluctuation is None else fluctuation
        fleet = tuple(
            dataclasses.replace(dev, sec_per_mac=float(sec_per_mac), fluctuation_rate=float(eps))
            for dev in self.fleet
        )
        return dataclasses.replace(self, fleet=fleet)

    def with_l_hat(self, l_hat) -> "Scenario":
        return dataclasses.replace(self, l_hat=int(l_hat))


def make_scenario(
    arch: NetworkArchitecture,
    fleet,
    fading_factors=None,
    bandwidth_hz=PAPER_DEFAULTS["bandwidth_hz"],
    noise_dbm=PAPER_DEFAULTS["noise_dbm"],
    noise_mode="total",
    l_hat=None,
    seed=0,
    **opts,
) -> Scenario:
    """Programmatic scenario constructor with paper-style defaults."""
    fleet = tuple(fleet)
    if fading_factors is None:
        fading_factors = np.ones(len(fleet))
    system = SystemParams(
        bandwidth_hz=bandwidth_hz,
        noise_dbm=noise_dbm,
        num_devices=len(fleet),
        seed=seed,
        noise_mode=noise_mode,
    )
    prof = profile(arch)
    if l_hat is None:
        l_hat = prof.num_layers
    return Scenario(
        system=system,
        fleet=fleet,
        fading_factors=np.asarray(fading_factors, dtype=float),
        arch=arch,
        profile=prof,
        l_hat=int(l_hat),
        model_bits=parameter_bits(arch),
        seed=seed,
        **opts,
    )


# ---------------------------------------------------------------------------
# config-file parsing


class _Section:
    """Typed accessors over one config section with field-named errors."""

    def __init__(self, name, mapping):
        self.name = name
        self.mapping = mapping

    def _raw(self, key, default):
        return self.mapping.get(key, default)

    def _parse(self, key, default, conv):
        raw = self._raw(key, None)
        if raw is None:
            if default is _REQUIRED:
                raise ConfigError(f"{self.name}.{key}: required key missing")
            return default
        try:
            return conv(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{self.name}.{key}: {exc}") from exc

    def str(self, key, default=None):
        return self._parse(key, default, str)

    def int(self, key, default=None):
        return self._parse(key, default, lambda s: int(str(s), 0))

    def float(self, key, default=None):
        return self._parse(key, default, float)

    def bool(self, key, default=False):
        def conv(s):
            s = str(s).strip().lower()
            if s in ("1", "true", "yes", "on"):
                return True
            if s in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {s!r}")

        return self._parse(key, default, conv)

    def float_or_range(self, key, default=None):
        def conv(s):
            parts = [float(p) for p in str(s).split(",")]
            if len(parts) == 1:
                return parts[0]
            if len(parts) == 2:
                return (parts[0], parts[1])
            raise ValueError("expected one value or 'lo, hi'")

        return self._parse(key, default, conv)

    def float_list(self, key, default=None):
        return self._parse(key, default, lambda s: [float(p) for p in str(s).split(",")])

    def int_list(self, key, default=None):
        return self._parse(key, default, lambda s: [int(p) for p in str(s).split(",")])


_REQUIRED = object()


def load_scenario(path, seed_override=None) -> Scenario:
    """Build a scenario from an INI config file.

    Missing sections fall back to the documented defaults (20 devices,
    20 MHz, -114 dBm noise, 10 dBm transmit power, compute slope uniform in
    [0.2e-9, 1e-9] s/MAC with fluctuation rate 2/slope).
    """
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    def section(name):
        return _Section(name, dict(parser[name]) if parser.has_section(name) else {})

    system_s = section("system")
    fleet_s = section("fleet")
    arch_s = section("architecture")
    conv_s = section("convergence")

    seed = system_s.int("seed", 0)
    if seed_override is not None:
        seed = int(seed_override)

    device_sections = [s for s in parser.sections() if s.startswith("device:")]
    if device_sections:
        fleet = [_explicit_device(_Section(s, dict(parser[s]))) for s in device_sections]
        count = len(fleet)
        fading = rng_stream(fleet_s.int("seed", seed), 0xF1EE7).exponential(size=count)
    else:
        count = fleet_s.int("count", PAPER_DEFAULTS["num_devices"])
        fluct = fleet_s.str("fluctuation", "2/a").strip()
        fluctuation = None if fluct in ("2/a", "") else _parse_float(fluct, "fleet.fluctuation")
        fleet, fading = generate_fleet(
            count=count,
            sec_per_mac=fleet_s.float_or_range("sec_per_mac", PAPER_DEFAULTS["sec_per_mac"]),
            tx_power_dbm=fleet_s.float_or_range("tx_power_dbm", PAPER_DEFAULTS["tx_power_dbm"]),
            distance_m=fleet_s.float_or_range("distance_m", PAPER_DEFAULTS["distance_m"]),
            fluctuation=fluctuation,
            seed=fleet_s.int("seed", seed),
        )
    if fleet_s.str("fading", "random") == "unit":
        fading = np.ones(count)

    arch = _load_arch(arch_s)
    prof = profile(arch)

    l_hat = conv_s.int("l_hat", None)
    if l_hat is None:
        moment = conv_s.float("moment_per_layer", None)
        cap = conv_s.float("moment_cap", None)
        if moment is not None and cap is not None:
            l_hat = split_layer_cap(moment, cap, count, prof.num_layers)
        else:
            l_hat = prof.num_layers

    system = SystemParams(
        bandwidth_hz=system_s.float("bandwidth_hz", PAPER_DEFAULTS["bandwidth_hz"]),
        noise_dbm=system_s.float("noise_dbm", PAPER_DEFAULTS["noise_dbm"]),
        num_devices=count,
        seed=seed,
        noise_mode=system_s.str("noise_mode", "total"),
    )

    optimizer_s = section("optimizer")
    optimizer_opts = dict(
        n_iter=optimizer_s.int("n_iter", 10),
        eps_tol=optimizer_s.float("eps_tol", 1e-3),
    )

    simulate_s = section("simulate")
    simulate_opts = dict(
        local_steps=simulate_s.int("local_steps", 5),
        n_rounds=simulate_s.int("n_rounds", 100),
        seeds=simulate_s.int_list("seeds", [0]),
        scheme=simulate_s.str("scheme", "both"),
        local_dataset_size=simulate_s.int("local_dataset_size", 1500),
        deterministic=simulate_s.bool("deterministic", False),
        correlated=simulate_s.bool("correlated", False),
        downlink=simulate_s.bool("downlink", False),
        sweep=simulate_s.str("sweep", None),
        sweep_values=simulate_s.float_list("sweep_values", None),
    )
    if simulate_opts["scheme"] not in ("sfl", "fedavg", "both"):
        raise ConfigError(f"simulate.scheme: unknown scheme {simulate_opts['scheme']!r}")
    if simulate_opts["sweep"] not in (None, "distance_m", "sec_per_mac", "l_hat"):
        raise ConfigError(f"simulate.sweep: unknown sweep {simulate_opts['sweep']!r}")
    if simulate_opts["sweep"] and not simulate_opts["sweep_values"]:
        raise ConfigError("simulate.sweep_values: required when simulate.sweep is set")

    train_s = section("train")
    train_opts = dict(
        num_devices=train_s.int("num_devices", 4),
        splits=train_s.int_list("splits", [1]),
        hidden=train_s.int_list("hidden", [16, 16]),
        local_steps=train_s.int("local_steps", 5),
        iterations=train_s.int("iterations", 200),
        lr=train_s.float("lr", 0.1),
        batch_size=train_s.int("batch_size", 16),
        partition=train_s.str("partition", "iid"),
        dirichlet_alpha=train_s.float("dirichlet_alpha", 0.3),
        classes=train_s.int("classes", 3),
        dim=train_s.int("dim", 8),
        samples_per_device=train_s.int("samples_per_device", 50),
        test_samples=train_s.int("test_samples", 400),
        latency_per_iteration=train_s.float("latency_per_iteration", 0.0),
    )
    if train_opts["partition"] not in ("iid", "dirichlet"):
        raise ConfigError(f"train.partition: unknown partition {train_opts['partition']!r}")

    convergence = _load_convergence(conv_s, count, prof.num_layers)
    bound_opts = dict(
        t_values=conv_s.int_list("t_values", [1, 2, 5, 10, 20, 50, 100, 200, 500, 1000]),
        p_mode=conv_s.str("p_mode", "theorem"),
    )
    if bound_opts["p_mode"] not in ("theorem", "appendix"):
        raise ConfigError(f"convergence.p_mode: must be 'theorem' or 'appendix'")

    model_bits = simulate_s.int("model_bits", None)
    return Scenario(
        system=system,
        fleet=tuple(fleet),
        fading_factors=fading,
        arch=arch,
        profile=prof,
        l_hat=l_hat,
        model_bits=model_bits if model_bits is not None else parameter_bits(arch),
        seed=seed,
        optimizer_opts=optimizer_opts,
        simulate_opts=simulate_opts,
        train_opts=train_opts,
        convergence=convergence,
        bound_opts=bound_opts,
    )


def _parse_float(raw, field_name):
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{field_name}: {exc}") from exc


def _explicit_device(section: _Section) -> DeviceProfile:
    sec_per_mac = section.float("sec_per_mac", _REQUIRED)
    fluct = section.str("fluctuation", "2/a").strip()
    fluctuation = (
        2.0 / sec_per_mac if fluct in ("2/a", "") else _parse_float(fluct, f"{section.name}.fluctuation")
    )
    try:
        return DeviceProfile(
            sec_per_mac=sec_per_mac,
            fluctuation_rate=fluctuation,
            tx_power_dbm=section.float("tx_power_dbm", PAPER_DEFAULTS["tx_power_dbm"]),
            distance_m=section.float("distance_m", _REQUIRED),
        )
    except ValueError as exc:
        raise ConfigError(f"{section.name}: {exc}") from exc


def _load_arch(arch_s: _Section) -> NetworkArchitecture:
    batch_size = arch_s.int("batch_size", 1)
    element_bits = arch_s.int("element_bits", 32)
    file_path = arch_s.str("file", None)
    if file_path is not None:
        if not os.path.exists(file_path):
            raise ConfigError(f"architecture.file: not found: {file_path}")
        return load_architecture(file_path, batch_size=batch_size, element_bits=element_bits)
    name = arch_s.str("name", "alexnet20")
    return builtin_architecture(name, batch_size=batch_size, element_bits=element_bits)


def _load_convergence(conv_s: _Section, num_devices, num_layers):
    if conv_s.str("smoothness", None) is None:
        return None
    try:
        return ConvergenceParams(
            smoothness=conv_s.float("smoothness", _REQUIRED),
            strong_convexity=conv_s.float("strong_convexity", _REQUIRED),
            grad_norm_sq=conv_s.float("grad_norm_sq", _REQUIRED),
            grad_var_sq=conv_s.float("grad_var_sq", _REQUIRED),
            hetero_gap=conv_s.float("hetero_gap", 0.0),
            local_steps=conv_s.int("local_steps", 1),
            num_devices=conv_s.int("num_devices", num_devices),
            num_layers=conv_s.int("num_layers", num_layers),
            agg_split=conv_s.int("agg_split", 1),
            init_gap=conv_s.float("init_gap", 0.0),
        )
    except ValueError as exc:
        raise ConfigError(f"convergence: {exc}") from exc
