"""Run configuration: one JSON file of flat keys, overridable from the CLI.

Nested objects are accepted and flattened; a dotted key such as
``"architecture.width"`` resolves by its last component. Every random draw
comes from ``plant_seed`` (plant, reference, x0, ideal weights of the
realizable fixture) or ``weight_seed_base`` (initial weights), both fed to
numpy's PCG64 generator via ``default_rng``.
"""

from __future__ import annotations

import json
import re

import numpy as np

from .control import Gains
from .plant import PlantModel, load_plant_csv, sample_plant
from .resnet import ResNetSpec, init_weights
from .sim import SimConfig

DEFAULTS = {
    # architecture
    "n": 10,
    "num_blocks": 20,
    "hidden_layers_per_block": 1,
    "width": 10,
    "activation": "tanh",
    "shortcut": True,
    "init_low": -0.05,
    "init_high": 0.05,
    # control
    "sigma_e": 2.0,
    "sigma_s": 2.0,
    "sigma_theta": 0.0,
    "gamma": 1.0,
    "law": "sliding",
    # plant
    "plant_seed": 0,
    "plant_a_high": 0.1,
    "plant_file": "",
    "plant_per_run": False,
    "realizable": False,
    "realizable_low": -0.05,
    "realizable_high": 0.05,
    # simulation
    "horizon_s": 10.0,
    "dt": 0.001,
    "integrator": "euler",
    "boundary_layer": 0.0,
    "decimation": 1,
    "snapshot_period": 0.1,
    "snapshot_indices": [],
    # monte carlo
    "weight_seed_base": 0,
    "runs": 100,
    "Q": 1.0,
    "R": 0.01,
}


class ConfigError(ValueError):
    pass


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    return text.count("\n", 0, m.start()) + 1 if m else None


def _flatten(obj, prefix=""):
    for k, v in obj.items():
        full = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, full + ".")
        else:
            yield full, v


def _coerce(key, value, where=""):
    default = DEFAULTS[key]
    try:
        if isinstance(default, bool):
            if isinstance(value, str):
                low = value.strip().lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(value)
                return low in ("true", "1", "yes")
            if not isinstance(value, (bool, int)):
                raise ValueError(value)
            return bool(value)
        if isinstance(default, int):
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(value)
            return int(value)
        if isinstance(default, float):
            return float(value)
        if isinstance(default, list):
            if isinstance(value, str):
                value = json.loads(value)
            return [int(v) for v in value]
        return str(value)
    except (TypeError, ValueError, json.JSONDecodeError):
        raise ConfigError(f"{where}bad value {value!r} for '{key}'") from None


def parse_config(text, source="<config>"):
    """Parse config text into a full, validated flat dict."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}:1: top level must be an object")
    if "config" in raw and isinstance(raw["config"], dict) and "artifact_version" in raw:
        raw = raw["config"]  # a run manifest
    cfg = dict(DEFAULTS)
    for full, value in _flatten(raw):
        key = full.rsplit(".", 1)[-1]
        line = _line_of(text, key)
        where = f"{source}:{line}: " if line else f"{source}: "
        if key not in DEFAULTS:
            raise ConfigError(f"{where}unknown key '{full}'")
        cfg[key] = _coerce(key, value, where)
    validate(cfg, source, text)
    return cfg


def load_config(path=None):
    if path is None:
        return dict(DEFAULTS)
    with open(path) as fh:
        return parse_config(fh.read(), str(path))


def apply_overrides(cfg, overrides):
    """``overrides`` maps key -> value (strings allowed)."""
    out = dict(cfg)
    for key, value in overrides.items():
        if key not in DEFAULTS:
            raise ConfigError(f"unknown override '{key}'")
        out[key] = _coerce(key, value, "override: ")
    validate(out, "override")
    return out


def validate(cfg, source="<config>", text=None):
    def bad(key, why):
        line = _line_of(text, key.split("/")[0]) if text else None
        where = f"{source}:{line}" if line else source
        raise ConfigError(f"{where}: '{key}' {why}")

    if cfg["n"] < 1 or cfg["num_blocks"] < 1 or cfg["hidden_layers_per_block"] < 1 or cfg["width"] < 1:
        bad("n/num_blocks/hidden_layers_per_block/width", "must be positive")
    if cfg["activation"] not in ("tanh", "sigmoid", "identity"):
        bad("activation", "must be tanh, sigmoid or identity")
    if cfg["law"] not in ("sliding", "emod"):
        bad("law", "must be sliding or emod")
    if cfg["integrator"] not in ("euler", "rk4"):
        bad("integrator", "must be euler or rk4")
    if not cfg["dt"] > 0:
        bad("dt", "must be positive")
    if cfg["horizon_s"] < cfg["dt"]:
        bad("horizon_s", "must be at least dt")
    if cfg["decimation"] < 1:
        bad("decimation", "must be >= 1")
    if cfg["runs"] < 1:
        bad("runs", "must be >= 1")
    if not cfg["init_low"] <= cfg["init_high"]:
        bad("init_low", "must not exceed init_high")
    if not cfg["sigma_e"] > 0 or not cfg["gamma"] > 0:
        bad("sigma_e/gamma", "must be positive")
    if cfg["sigma_s"] < 0 or cfg["sigma_theta"] < 0:
        bad("sigma_s/sigma_theta", "must be nonnegative")


def build_spec(cfg):
    return ResNetSpec.uniform(cfg["n"], cfg["num_blocks"], cfg["hidden_layers_per_block"],
                              cfg["width"], cfg["activation"], cfg["shortcut"])


def realizable_plant(spec, plant_seed, low=-0.05, high=0.05):
    star = init_weights(spec, np.random.default_rng([plant_seed, 1]), low, high)
    return PlantModel.realizable(star)


def build_sim_config(cfg):
    spec = build_spec(cfg)
    n = cfg["n"]
    if cfg["plant_file"]:
        plant, x0, ref = load_plant_csv(cfg["plant_file"])
        if plant.n != n:
            raise ConfigError(f"plant file has n={plant.n}, config has n={n}")
    else:
        plant, x0, ref = sample_plant(np.random.default_rng(cfg["plant_seed"]), n,
                                      cfg["plant_a_high"])
    if cfg["realizable"]:
        plant = realizable_plant(spec, cfg["plant_seed"], cfg["realizable_low"],
                                 cfg["realizable_high"])
    return SimConfig(
        spec=spec,
        gains=Gains(cfg["sigma_e"], cfg["sigma_s"], cfg["sigma_theta"], cfg["gamma"]),
        plant=plant, x0=x0, reference=ref, law=cfg["law"], dt=cfg["dt"],
        horizon=cfg["horizon_s"], integrator=cfg["integrator"],
        boundary_layer=cfg["boundary_layer"], decimation=cfg["decimation"],
        snapshot_period=cfg["snapshot_period"], init_low=cfg["init_low"],
        init_high=cfg["init_high"],
    )


def plant_sampler(cfg):
    """Per-run plant draws for ``plant_per_run``, or None for one fixed plant.

    Run ``s`` draws from ``default_rng([plant_seed, 2, s])``.
    """
    if not cfg["plant_per_run"]:
        return None
    if cfg["plant_file"] or cfg["realizable"]:
        raise ConfigError("plant_per_run cannot be combined with plant_file or realizable")
    n, seed, a_high = cfg["n"], cfg["plant_seed"], cfg["plant_a_high"]
    return lambda s: sample_plant(np.random.default_rng([seed, 2, s]), n, a_high)


def snapshot_indices(cfg, total):
    idx = cfg["snapshot_indices"]
    if idx:
        if any(i < 0 or i >= total for i in idx):
            raise ConfigError(f"snapshot_indices must lie in [0, {total})")
        return list(idx)
    return [int(i) for i in np.linspace(0, total - 1, min(10, total))]


def dump_config(cfg):
    return json.dumps(cfg, indent=2, sort_keys=True) + "\n"
