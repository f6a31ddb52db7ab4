"""Config-record (de)serialization for the CLI and certificate files."""

from __future__ import annotations

import numpy as np
import yaml

from .drift import SetSpec
from .errors import ConfigError
from .models import (BackwardRecurrenceSpec, ConstantRegime, LaplaceNoise,
                     LogarithmicRegime, NonlinearARSpec, PolynomialRegime,
                     RandomWalkMetropolisSpec, StochasticUnitRootSpec,
                     SubexponentialRegime, SymmetrizedWeibullNoise)
from .phi import DriftModulus
from .young import (conjugate_power_pair, log_pair, mixed_pair, power_pair)

_PHI_ALIASES = {
    "constant": "constant",
    "power": "power",
    "logarithmic": "logarithmic",
    "log": "logarithmic",
    "subexponential": "subexponential",
    "subexp": "subexponential",
    "linear": "linear",
    "custom-linear": "linear",
}


def load_config(path):
    try:
        with open(path) as fh:
            cfg = yaml.safe_load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError("config must be a mapping")
    return cfg


def _need(cfg, key, context):
    if key not in cfg:
        raise ConfigError(f"{context}: missing key {key!r}")
    return cfg[key]


def phi_from_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("phi record must be a mapping")
    fam = _PHI_ALIASES.get(str(_need(cfg, "family", "phi")).lower())
    if fam is None:
        raise ConfigError(f"unknown phi family {cfg['family']!r}")
    try:
        if fam == "constant":
            return DriftModulus.constant(cfg.get("c", 1.0))
        if fam == "power":
            return DriftModulus.power(cfg.get("c", 1.0), cfg.get("alpha", 0.5))
        if fam == "logarithmic":
            return DriftModulus.logarithmic(cfg.get("c", 1.0),
                                            cfg.get("alpha", 1.0))
        if fam == "subexponential":
            return DriftModulus("subexponential", c=cfg.get("c", 1.0),
                                alpha=cfg.get("alpha", 1.0),
                                v0=cfg.get("v0"),
                                log_form=cfg.get("form", "log"))
        return DriftModulus.linear(cfg.get("lam", cfg.get("c", 1.0)))
    except Exception as exc:
        raise ConfigError(f"invalid phi record: {exc}") from exc


def phi_to_config(phi):
    return phi.to_config()


def pair_from_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("pair record must be a mapping")
    kind = str(_need(cfg, "kind", "pair")).lower()
    try:
        if kind == "power":
            return power_pair(_need(cfg, "p", "power pair"))
        if kind == "conjugate":
            return conjugate_power_pair(_need(cfg, "p", "conjugate pair"))
        if kind == "log":
            return log_pair(_need(cfg, "b", "log pair"))
        if kind == "mixed":
            return mixed_pair(_need(cfg, "p", "mixed pair"),
                              _need(cfg, "b", "mixed pair"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid pair record: {exc}") from exc
    raise ConfigError(f"unknown pair kind {kind!r}")


def _regime_from_config(cfg):
    kind = str(_need(cfg, "kind", "regime")).lower()
    if kind == "polynomial":
        return PolynomialRegime(theta=_need(cfg, "theta", "regime"))
    if kind == "logarithmic":
        return LogarithmicRegime(theta=_need(cfg, "theta", "regime"))
    if kind in ("subexponential", "subexp"):
        return SubexponentialRegime(theta=_need(cfg, "theta", "regime"),
                                    beta=_need(cfg, "beta", "regime"))
    if kind == "constant":
        return ConstantRegime(p=cfg.get("p", 0.5))
    raise ConfigError(f"unknown regime kind {kind!r}")


def _noise_from_config(cfg):
    if cfg is None:
        return LaplaceNoise()
    kind = str(cfg.get("kind", "laplace")).lower()
    if kind == "laplace":
        return LaplaceNoise(scale=cfg.get("scale", 1.0), loc=cfg.get("loc", 0.0))
    if kind in ("weibull", "symmetrized-weibull"):
        return SymmetrizedWeibullNoise(shape=cfg.get("shape", 0.5))
    raise ConfigError(f"unknown noise kind {kind!r}")


def model_from_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("model record must be a mapping")
    kind = str(_need(cfg, "model", "model")).lower()
    try:
        if kind == "brt":
            return BackwardRecurrenceSpec(
                regime=_regime_from_config(_need(cfg, "regime", "brt model")),
                truncation=cfg.get("truncation", 2000),
                overrides={int(k): float(v)
                           for k, v in (cfg.get("overrides") or {}).items()})
        if kind == "rwm":
            return RandomWalkMetropolisSpec(
                weibull_scale=cfg.get("weibull_scale", 1.0),
                weibull_shape=cfg.get("weibull_shape", 0.5),
                half_width=cfg.get("half_width", 1.0),
                floor_radius=cfg.get("floor_radius", 0.25))
        if kind == "nar":
            return NonlinearARSpec(
                contraction=cfg.get("contraction", 0.5),
                drift_power=cfg.get("drift_power", 1.5),
                radius=cfg.get("radius", 1.0),
                noise=_noise_from_config(cfg.get("noise")),
                smoothing=cfg.get("smoothing", 1.0))
        if kind == "sur":
            return StochasticUnitRootSpec(
                kappa=cfg.get("kappa", 0.5),
                c_plus=cfg.get("c_plus", 0.5),
                c_minus=cfg.get("c_minus"),
                radius=cfg.get("radius", 1.0),
                noise=_noise_from_config(cfg.get("noise")),
                mean_case=cfg.get("mean_case", "zero"))
    except ConfigError:
        raise
    except Exception as exc:
        raise ConfigError(f"invalid {kind} model record: {exc}") from exc
    raise ConfigError(f"unknown model {kind!r}")


def set_from_config(cfg):
    if not isinstance(cfg, dict):
        raise ConfigError("set record must be a mapping")
    kind = str(_need(cfg, "kind", "set")).lower()
    if kind == "explicit":
        return SetSpec.explicit(_need(cfg, "states", "explicit set"))
    if kind == "sublevel":
        return SetSpec.sublevel(_need(cfg, "level", "sublevel set"))
    if kind == "interval":
        return SetSpec.interval(cfg.get("lo", -np.inf), cfg.get("hi", np.inf))
    raise ConfigError(f"unknown set kind {kind!r}")


def rate_from_config(cfg):
    """A modulating rate: either a phi record or a named closed form."""
    from .empirical import power_rate, stretched_rate
    from .rates import RateFunction
    if "phi" in cfg:
        return RateFunction(phi_from_config(cfg["phi"]))
    kind = str(_need(cfg, "kind", "rate")).lower()
    if kind == "power":
        return power_rate(_need(cfg, "beta", "power rate"))
    if kind == "stretched":
        return stretched_rate(_need(cfg, "a", "stretched rate"),
                              _need(cfg, "beta", "stretched rate"))
    raise ConfigError(f"unknown rate kind {kind!r}")
