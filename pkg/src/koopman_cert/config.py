"""JSON config loading for systems and dictionaries."""

import json

import numpy as np

from . import dictionaries as dicts
from .errors import ConfigError
from .systems import (
    CircleRotationSystem,
    FiniteMarkovSystem,
    NoisyMapSystem,
    QuadraticIrrational,
    SdeSystem,
)


def load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def system_from_config(cfg):
    """Build a system from {"type": ..., ...}."""
    if not isinstance(cfg, dict) or "type" not in cfg:
        raise ConfigError("system config must be an object with a 'type' key")
    kind = cfg["type"]
    if kind == "finite_chain":
        return FiniteMarkovSystem(np.asarray(cfg["transition"], dtype=np.float64))
    if kind == "circle_rotation":
        t0 = cfg.get("t0")
        if isinstance(t0, dict):
            if t0.get("form") != "quadratic":
                raise ConfigError("t0 object must have form='quadratic'")
            return CircleRotationSystem(
                QuadraticIrrational(t0["a"], t0["b"], t0["c"], t0["d"])
            )
        if t0 is None:
            raise ConfigError("circle_rotation needs t0")
        return CircleRotationSystem(float(t0))
    if kind == "noisy_map":
        return _noisy_map_from_config(cfg)
    if kind == "sde":
        return _sde_from_config(cfg)
    raise ConfigError(f"unknown system type {kind!r}")


def _noisy_map_from_config(cfg):
    spec = cfg.get("map", {})
    name = spec.get("name")
    if name == "logistic":
        r = float(spec.get("r", 3.9))

        def map_fn(x):
            return r * x * (1.0 - x)

        dim = 1
    elif name == "linear":
        A = np.asarray(spec["matrix"], dtype=np.float64)

        def map_fn(x):
            return x @ A.T

        dim = A.shape[0]
    else:
        raise ConfigError("noisy_map supports map names 'logistic' and 'linear'")
    sigma = float(cfg.get("noise_sigma", 0.0))

    def noise(gen, shape):
        if sigma == 0.0:
            return np.zeros(shape)
        return sigma * gen.standard_normal(shape)

    x0 = cfg.get("x0")
    return NoisyMapSystem(map_fn, noise, dim, x0=x0)


def _sde_from_config(cfg):
    name = cfg.get("model")
    if name == "ornstein_uhlenbeck":
        rate = float(cfg.get("rate", 1.0))
        sigma = float(cfg.get("sigma", 1.0))
        dim = int(cfg.get("state_dim", 1))

        def drift(x):
            return -rate * x

        def diffusion(x):
            return sigma * np.ones_like(x)

    elif name == "double_well":
        sigma = float(cfg.get("sigma", 0.7))
        dim = 1

        def drift(x):
            return x - x**3

        def diffusion(x):
            return sigma * np.ones_like(x)

    else:
        raise ConfigError("sde supports models 'ornstein_uhlenbeck' and 'double_well'")
    lag = float(cfg.get("lag", 1.0))
    dt = cfg.get("integrator_dt")
    return SdeSystem(drift, diffusion, dim, lag, integrator_dt=dt)


def dictionary_from_config(cfg, system=None):
    """Build a dictionary from {"kind": ..., ...}.

    {"kind": "indicator"} takes its size from the accompanying finite
    chain when n_states is omitted.
    """
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("dictionary config must be an object with a 'kind' key")
    kind = cfg["kind"]
    if kind == "indicator":
        n = cfg.get("n_states")
        if n is None:
            if not isinstance(system, FiniteMarkovSystem):
                raise ConfigError(
                    "indicator dictionary needs n_states or a finite-chain system"
                )
            n = system.n_states
        return dicts.indicator(int(n))
    if kind == "fourier":
        return dicts.fourier(int(cfg.get("max_freq", 1)))
    if kind == "monomial":
        return dicts.monomial(int(cfg.get("degree", 2)), float(cfg.get("scale", 1.0)))
    if kind == "rff":
        return dicts.random_fourier(
            int(cfg.get("n_features", 100)),
            float(cfg.get("bandwidth", 1.0)),
            int(cfg.get("seed", 0)),
            dim=int(cfg.get("dim", 1)),
        )
    raise ConfigError(f"unknown dictionary kind {kind!r}")
