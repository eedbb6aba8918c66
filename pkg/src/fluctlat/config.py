"""Flat dotted-key experiment configuration.

Config files are plain text, one `key = value` per line, `#` comments.
Example:

    mode ignored here; the CLI selects it
    sim.n = 64
    sim.t = 0.5
    sim.beta_plus = 1.0
    sim.beta_minus = 1.0
    sim.rate = constant
    sim.gamma = poly:0.75,0,-0.25
    grid.nx = 128

Profile-valued keys (gamma, tilts) use compact specs:
    const:0.5            constant value
    poly:c0,c1,c2,...    c0 + c1 x + c2 x^2 + ...
    zero                 identically zero
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .rates import BUILTIN_RATES, build_cylinder_rate

VERSION = "0.1.0"

MODES = ("simulate", "hydro", "rate-eval", "contract", "oracle", "validate")


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_config_file(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def serialize_config(cfg: dict) -> str:
    return "".join(f"{k} = {cfg[k]}\n" for k in sorted(cfg))


def parse_profile(spec: str):
    """Turn a profile spec string into a callable of x."""
    spec = spec.strip()
    if spec == "zero":
        return lambda x: np.zeros_like(np.asarray(x, dtype=float)) + 0.0
    if ":" not in spec:
        raise ConfigError(f"bad profile spec {spec!r}")
    kind, args = spec.split(":", 1)
    if kind == "const":
        v = float(args)
        return lambda x: np.full_like(np.asarray(x, dtype=float), v) + 0.0
    if kind == "poly":
        coeffs = [float(a) for a in args.split(",")]
        return lambda x: sum(c * np.asarray(x, dtype=float) ** k for k, c in enumerate(coeffs))
    raise ConfigError(f"unknown profile kind {kind!r}")


@dataclass
class ExperimentConfig:
    mode: str
    raw: dict = field(default_factory=dict)
    seed: int = 0
    replicas: int = 1
    out_dir: str = "."

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.replicas < 1:
            raise ConfigError("replicas must be >= 1")

    # typed getters -------------------------------------------------------
    def _get(self, key, default=None, required=False):
        if key in self.raw:
            return self.raw[key]
        if required:
            raise ConfigError(f"mode {self.mode!r} requires config key {key!r}")
        return default

    def get_int(self, key, default=None, required=False):
        v = self._get(key, default, required)
        return v if v is None else int(v)

    def get_float(self, key, default=None, required=False):
        v = self._get(key, default, required)
        return v if v is None else float(v)

    def get_str(self, key, default=None, required=False):
        return self._get(key, default, required)

    def get_profile(self, key, default=None):
        v = self._get(key)
        if v is None:
            return default
        return parse_profile(v)

    def get_rate(self):
        spec = self._get("sim.rate", "constant")
        if spec in BUILTIN_RATES:
            return build_cylinder_rate(spec)
        try:
            table = [float(a) for a in spec.split(",")]
        except ValueError as exc:
            raise ConfigError(f"bad rate spec {spec!r}") from exc
        return build_cylinder_rate(table)

    def get_floats(self, key, default=()):
        v = self._get(key)
        if v is None:
            return tuple(default)
        return tuple(float(a) for a in v.split(","))

    # manifest round-trip -------------------------------------------------
    def manifest(self) -> dict:
        return {
            "version": VERSION,
            "mode": self.mode,
            "seed": self.seed,
            "replicas": self.replicas,
            "config": dict(sorted(self.raw.items())),
        }

    @classmethod
    def from_manifest(cls, data: dict, out_dir: str = ".") -> "ExperimentConfig":
        return cls(
            mode=data["mode"],
            raw=dict(data["config"]),
            seed=int(data["seed"]),
            replicas=int(data["replicas"]),
            out_dir=out_dir,
        )


def write_manifest(cfg: ExperimentConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(cfg.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return ExperimentConfig.from_manifest(json.load(fh))
