"""Run configuration shared by every CLI subcommand.

A `RunConfig` is a flat JSON object. Every key has a default, unknown keys are
rejected, and ``RunConfig.from_dict(cfg.to_dict()) == cfg`` holds. All random
streams derive from the single master ``seed``; nested sections may not carry
their own seeds.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .metrics import SsimConfig
from .ml.evaluate import EvalConfig
from .phantom import DegradeSpec, PhantomSpec

SUBCOMMANDS = ("phantom", "preprocess", "quality", "extract", "correlate", "group",
               "classify", "report")
PIPELINE_STAGES = ("preprocess", "quality", "extract", "correlate", "group", "classify")


class ConfigError(ValueError):
    """Invalid configuration; the CLI exits with status 2."""


def _default_degradations():
    return {
        "mild_blur": {"blur_sigma": 0.7},
        "heavy_noise": {"noise_sigma": 0.15},
        "lesion_edit": {"lesion_dropout": True, "false_lesion": True, "blur_sigma": 0.5},
    }


@dataclass
class RunConfig:
    subcommand: str = "report"
    out: str = "out"
    # inputs
    manifest: str = ""
    reference: str = ""
    candidate: str = ""
    features: str = ""
    test_features: str = ""
    networks: dict = field(default_factory=dict)
    profiles: str = ""
    # phantom cohorts
    n_cases: int = 20
    phantom: dict = field(default_factory=dict)
    degradations: dict = field(default_factory=_default_degradations)
    # preprocessing
    target_dims: list = field(default_factory=lambda: [128, 128, 64])
    target_spacing_mm: list = field(default_factory=list)
    # pipeline
    stages: list = field(default_factory=lambda: ["quality", "extract", "correlate", "group",
                                                  "classify"])
    n_bins: int = 32
    ssim_window_radius: int = 3
    ssim_sigma: float = 1.5
    data_range: float = 1.0
    tau: float = 0.5
    ssim_cutoff: float = 0.85
    group1_rule: str = "any_low"
    ml: dict = field(default_factory=dict)
    seed: int = 0
    workers: int = 1

    # --- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {f.name: copy.deepcopy(getattr(self, f.name)) for f in fields(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(d) - set(known))
        if unknown:
            raise ConfigError(f"unknown configuration keys: {unknown}")
        defaults = cls()
        kw = {}
        for k, v in d.items():
            kw[k] = _coerce(k, v, getattr(defaults, k))
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
        return cls.from_dict(data)

    def merged(self, overrides: dict) -> "RunConfig":
        d = self.to_dict()
        d.update(overrides)
        return RunConfig.from_dict(d)

    # --- validation and derived objects --------------------------------
    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand {self.subcommand!r}")
        bad = [s for s in self.stages if s not in PIPELINE_STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}; choose from {list(PIPELINE_STAGES)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.n_cases < 1:
            raise ConfigError("n_cases must be >= 1")
        if self.n_bins < 2:
            raise ConfigError("n_bins must be >= 2")
        if not 0.0 < self.tau < 1.0:
            raise ConfigError("tau must lie in (0, 1)")
        if self.group1_rule not in ("any_low", "majority"):
            raise ConfigError(f"group1_rule must be 'any_low' or 'majority', got {self.group1_rule!r}")
        if len(self.target_dims) != 3 or any(not isinstance(n, int) or n < 1 for n in self.target_dims):
            raise ConfigError(f"target_dims must be three positive integers, got {self.target_dims}")
        if self.target_spacing_mm and (len(self.target_spacing_mm) != 3
                                       or any(s <= 0 for s in self.target_spacing_mm)):
            raise ConfigError("target_spacing_mm must be empty or three positive numbers")
        for name, section in (("phantom", self.phantom), ("ml", self.ml)):
            if "seed" in section:
                raise ConfigError(f"{name}.seed is not configurable; set the master seed")
        for name, d in self.degradations.items():
            if not isinstance(d, dict) or "seed" in d:
                raise ConfigError(f"degradation {name!r} must be an object without a seed")
        for name, path in self.networks.items():
            if not isinstance(path, str):
                raise ConfigError(f"network {name!r} must map to a path string")
        # building the derived objects surfaces their own validation errors
        try:
            self.phantom_spec()
            self.degrade_specs()
            self.eval_config()
            self.ssim_config()
        except (TypeError, ValueError) as e:
            raise ConfigError(str(e)) from None

    def phantom_spec(self) -> PhantomSpec:
        return PhantomSpec(**{**self.phantom, "seed": self.seed})

    def degrade_specs(self) -> dict:
        out = {}
        for k, (name, d) in enumerate(sorted(self.degradations.items())):
            sub = int(np.random.SeedSequence([self.seed, k + 1]).generate_state(1)[0])
            out[name] = DegradeSpec(**{**d, "seed": sub})
        return out

    def eval_config(self) -> EvalConfig:
        ml = dict(self.ml)
        for key in ("fractions", "depth_candidates"):
            if key in ml:
                ml[key] = tuple(ml[key])
        return EvalConfig(seed=self.seed, **ml)

    def ssim_config(self) -> SsimConfig:
        return SsimConfig(window_radius=self.ssim_window_radius, gaussian_sigma=self.ssim_sigma,
                          data_range=self.data_range)


def _coerce(key, value, default):
    """Type-check `value` against the type of the field default."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        value = float(value) if ok else value
    else:
        ok = isinstance(value, type(default))
    if not ok:
        raise ConfigError(f"config key {key!r} expects {type(default).__name__}, "
                          f"got {type(value).__name__}")
    return copy.deepcopy(value)
