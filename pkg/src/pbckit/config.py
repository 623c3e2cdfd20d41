"""Scenario files: flat ``section.key = value`` text.

Matrices are comma-separated, row-major; intervals are ``lo:hi``. Lines
starting with ``#`` are comments. Example::

    plant.kind = msd
    controller.kind = linear
    controller.A = 1, -10, 0, -1
    controller.B = 0, 1
    sector.k1 = 3.5
    sector.k2 = 6.0
    initial.x = 1, 0
    integrator.horizon = 20
"""
from __future__ import annotations

import functools
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .analysis import SamplingBox
from .controllers import (
    linear_controller,
    msd_c1_controller,
    static_gain_controller,
    tora_c1_controller,
    tora_c2_controller,
)
from .core import ClosedLoopState, ConfigurationError, DissipativityTriple, SectorBounds
from .plants import lti_model, msd_model, tora_model
from .sim import IntegratorConfig, Scenario


class ConfigError(ConfigurationError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def parse_config(text: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        cfg[key] = value
    return cfg


def bundled_scenarios() -> list[str]:
    folder = resources.files("pbckit") / "scenarios"
    return sorted(p.name[:-4] for p in folder.iterdir() if p.name.endswith(".cfg"))


def resolve_config_path(ref: str) -> Path:
    """A filesystem path, or the name of a bundled scenario such as ``msd_c1``."""
    path = Path(ref)
    if path.is_file():
        return path
    bundled = resources.files("pbckit") / "scenarios" / f"{path.stem}.cfg"
    if path.suffix in ("", ".cfg") and bundled.is_file():
        return Path(str(bundled))
    raise FileNotFoundError(f"no config file or bundled scenario named {ref!r}")


def load_config(ref: str) -> dict[str, str]:
    path = resolve_config_path(ref)
    cfg = parse_config(path.read_text())
    cfg.setdefault("name", path.stem)
    return cfg


def _float(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(key, "missing")
        return default
    try:
        value = float(cfg[key])
    except ValueError:
        raise ConfigError(key, f"not a number: {cfg[key]!r}") from None
    if not math.isfinite(value):
        raise ConfigError(key, "must be finite")
    return value


def _vector(cfg, key, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(key, "missing")
        return np.asarray(default, dtype=float)
    try:
        return np.array([float(tok) for tok in cfg[key].split(",") if tok.strip()])
    except ValueError:
        raise ConfigError(key, f"not a comma-separated list of numbers: {cfg[key]!r}") from None


def _square(cfg, key):
    flat = _vector(cfg, key)
    n = int(round(math.sqrt(flat.size)))
    if n * n != flat.size or n == 0:
        raise ConfigError(key, f"{flat.size} entries do not form a square matrix")
    return flat.reshape(n, n)


def _bool(cfg, key, default):
    if key not in cfg:
        return default
    value = cfg[key].lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ConfigError(key, f"expected true/false, got {cfg[key]!r}")


def _interval(text, key):
    try:
        lo, hi = (float(tok) for tok in text.split(":"))
    except ValueError:
        raise ConfigError(key, f"expected 'lo:hi', got {text!r}") from None
    if lo > hi:
        raise ConfigError(key, f"interval {text!r} is reversed")
    return lo, hi


def build_plant(cfg):
    kind = cfg.get("plant.kind")
    try:
        if kind == "msd":
            return msd_model()
        if kind == "tora":
            return tora_model(
                _float(cfg, "plant.epsilon", 0.1),
                _float(cfg, "plant.h0", 10.0),
                _float(cfg, "plant.h1", 1.0),
            )
        if kind == "lti":
            A = _square(cfg, "plant.A")
            P = _square(cfg, "plant.P") if "plant.P" in cfg else None
            return lti_model(A, _vector(cfg, "plant.B"), _vector(cfg, "plant.G"), P)
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError("plant", str(exc)) from None
    raise ConfigError("plant.kind", f"unknown plant kind {kind!r} (msd, tora, lti)")


@functools.lru_cache(maxsize=None)
def _cached_linear(a_flat, m, b):
    # one compiled closure per distinct matrix pair
    return linear_controller(np.reshape(a_flat, (m, m)), np.array(b))


def build_controller(cfg):
    kind = cfg.get("controller.kind")
    try:
        if kind == "msd_c1":
            return msd_c1_controller()
        if kind == "tora_c1":
            return tora_c1_controller()
        if kind == "tora_c2":
            return tora_c2_controller()
        if kind == "linear":
            A = _square(cfg, "controller.A")
            return _cached_linear(tuple(A.flat), A.shape[0], tuple(_vector(cfg, "controller.B")))
        if kind == "static_gain":
            return static_gain_controller(_float(cfg, "controller.k"))
    except ConfigError:
        raise
    except ConfigurationError as exc:
        raise ConfigError("controller", str(exc)) from None
    raise ConfigError(
        "controller.kind",
        f"unknown controller kind {kind!r} (linear, msd_c1, tora_c1, tora_c2, static_gain)",
    )


def build_bounds(cfg):
    if "sector.k1" not in cfg and "sector.k2" not in cfg:
        return None
    k1, k2 = _float(cfg, "sector.k1"), _float(cfg, "sector.k2")
    if not k1 < k2:
        raise ConfigError("sector.k1", f"must be smaller than sector.k2 ({k1} >= {k2})")
    return SectorBounds(k1, k2)


def build_integrator(cfg):
    h = _float(cfg, "integrator.h", 1e-4)
    if h <= 0:
        raise ConfigError("integrator.h", "must be positive")
    horizon = _float(cfg, "integrator.horizon", 20.0)
    if horizon < h:
        raise ConfigError("integrator.horizon", "must be at least one step")
    stride = _float(cfg, "integrator.record_stride", 10)
    if stride < 1 or stride != int(stride):
        raise ConfigError("integrator.record_stride", "must be a positive integer")
    mode_tol = _float(cfg, "integrator.mode_tol", 1e-9)
    budget = _float(cfg, "integrator.drift_budget", 1e-7)
    for key, value in (("integrator.mode_tol", mode_tol), ("integrator.drift_budget", budget)):
        if value <= 0:
            raise ConfigError(key, "must be positive")
    return IntegratorConfig(horizon, h, mode_tol, budget, int(stride))


def build_scenario(cfg) -> Scenario:
    plant = build_plant(cfg)
    controller = build_controller(cfg)
    bounds = build_bounds(cfg)
    projection = _bool(cfg, "projection.enabled", not controller.is_static)
    x0 = _vector(cfg, "initial.x", np.zeros(plant.dim))
    if x0.size != plant.dim:
        raise ConfigError("initial.x", f"has {x0.size} entries, plant dimension is {plant.dim}")
    z0 = _vector(cfg, "initial.z", np.zeros(controller.dim))
    if z0.size != controller.dim:
        raise ConfigError("initial.z", f"has {z0.size} entries, controller dimension is {controller.dim}")
    if projection and controller.is_static:
        raise ConfigError("projection.enabled", "static-gain controllers run without projection")
    if projection and bounds is None:
        raise ConfigError("sector", "projection requires sector.k1 and sector.k2")
    integrator = build_integrator(cfg)
    xi0 = ClosedLoopState(x0, z0[0], z0[1:])
    try:
        return Scenario(plant, controller, bounds, xi0, integrator, projection, cfg.get("name", "scenario"))
    except ConfigurationError as exc:
        raise ConfigError("initial", str(exc)) from None


def build_dissipativity(cfg):
    """Return (triple, box, n_samples, tol) from the ``dissipativity.*`` keys."""
    triple = DissipativityTriple(
        _float(cfg, "dissipativity.q"), _float(cfg, "dissipativity.s"), _float(cfg, "dissipativity.r")
    )
    plant_dim = build_plant(cfg).dim
    if "dissipativity.state_box" not in cfg:
        raise ConfigError("dissipativity.state_box", "missing")
    state = [_interval(tok, "dissipativity.state_box") for tok in cfg["dissipativity.state_box"].split(",")]
    if len(state) != plant_dim:
        raise ConfigError("dissipativity.state_box", f"needs {plant_dim} intervals, got {len(state)}")
    inp = _interval(cfg.get("dissipativity.input_box", "0:0"), "dissipativity.input_box")
    samples = _float(cfg, "dissipativity.samples", 10_000)
    if samples < 1 or samples != int(samples):
        raise ConfigError("dissipativity.samples", "must be a positive integer")
    tol = _float(cfg, "dissipativity.tol", 1e-9)
    return triple, SamplingBox(tuple(state), inp), int(samples), tol


def analysis_options(cfg) -> dict:
    opts = {"band": _float(cfg, "analysis.band", 0.02)}
    if "analysis.state_index" in cfg:
        idx = _float(cfg, "analysis.state_index")
        if idx != int(idx) or idx < 0:
            raise ConfigError("analysis.state_index", "must be a non-negative integer")
        opts["state_index"] = int(idx)
    if "analysis.threshold" in cfg:
        opts["threshold"] = _float(cfg, "analysis.threshold")
    return opts
