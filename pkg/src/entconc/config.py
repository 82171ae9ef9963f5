"""Flat ``key = value`` experiment configuration.

Lines are ``key = value``; ``#`` starts a comment.  Angles are in degrees.
Unknown keys and out-of-range values are rejected with the offending line
or key named.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Any

from . import optics, stochastics
from .metrics import ChshSettings
from .protocols import BRANCHES

COMMANDS = ("concentrate", "repeater", "repeater-filtered", "bell-swap", "chsh", "delay-scan", "table1")
PROTOCOLS = ("concentrate", "repeater", "repeater-filtered", "bell-swap")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class ExperimentConfig:
    command: str | None = None
    protocol: str = "concentrate"
    seed: int = 0
    ideal: bool = False
    branch: str = "pp"
    # pair preparation: windows on photons 1 and 3, or explicit real amplitudes
    windows: int = 1
    windows_34: int | None = None
    t_h: float = optics.T_H
    t_v: float = optics.T_V
    alpha: float | None = None
    beta: float | None = None
    alpha_34: float | None = None
    beta_34: float | None = None
    phase_deg: float = 0.0
    # imperfections
    overlap_gamma: float = 1.0
    background_eps: float = stochastics.DEFAULT_EPS
    coherence_length_um: float = stochastics.coherence_length_um()
    # sampling
    rate: float = stochastics.FOURFOLD_RATE
    time: float = stochastics.INTEGRATION_TIME
    accounting: str = "per_outcome"
    # CHSH analyzer angles
    chsh_a_deg: float = 0.0
    chsh_a_prime_deg: float = 45.0
    chsh_b_deg: float = 67.5
    chsh_b_prime_deg: float = 22.5
    # delay scan, span in units of the coherence length
    scan_points: int = 61
    scan_span: float = 3.0
    scan_time: float = 2000.0

    def __post_init__(self):
        _validate(self)

    @property
    def chsh_settings(self) -> ChshSettings:
        return ChshSettings(
            math.radians(self.chsh_a_deg),
            math.radians(self.chsh_a_prime_deg),
            math.radians(self.chsh_b_deg),
            math.radians(self.chsh_b_prime_deg),
        )

    @property
    def noise(self) -> stochastics.NoiseParams:
        return stochastics.NoiseParams(self.overlap_gamma, self.background_eps, self.coherence_length_um)

    def replace(self, **changes: Any) -> "ExperimentConfig":
        vals = {f.name: getattr(self, f.name) for f in fields(self)}
        vals.update(changes)
        return ExperimentConfig(**vals)

    def to_text(self) -> str:
        """Config lines that parse back to an equal config."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            out.append(f"{f.name} = {_fmt(v)}")
        return "\n".join(out) + "\n"


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _check(cond: bool, key: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{key}: {msg}", key=key)


def _validate(c: ExperimentConfig) -> None:
    _check(c.command is None or c.command in COMMANDS, "command", f"must be one of {COMMANDS}")
    _check(c.protocol in PROTOCOLS, "protocol", f"must be one of {PROTOCOLS}")
    _check(0 <= c.seed < 2**64, "seed", "must be an unsigned 64-bit integer")
    _check(c.branch in BRANCHES, "branch", f"must be one of {BRANCHES}")
    _check(c.windows >= 0, "windows", "must be >= 0")
    _check(c.windows_34 is None or c.windows_34 >= 0, "windows_34", "must be >= 0")
    _check(0 < c.t_h <= 1, "t_h", "must lie in (0, 1]")
    _check(0 < c.t_v <= 1, "t_v", "must lie in (0, 1]")
    _check(c.t_v <= c.t_h, "t_v", "must not exceed t_h")
    for a, b in (("alpha", "beta"), ("alpha_34", "beta_34")):
        va, vb = getattr(c, a), getattr(c, b)
        _check((va is None) == (vb is None), a, f"{a} and {b} must be given together")
        if va is not None:
            _check(abs(va * va + vb * vb - 1) < 1e-9, a, f"{a}^2 + {b}^2 must equal 1")
    _check(0 <= c.overlap_gamma <= 1, "overlap_gamma", "must lie in [0, 1]")
    _check(0 <= c.background_eps <= 1, "background_eps", "must lie in [0, 1]")
    _check(c.coherence_length_um > 0, "coherence_length_um", "must be positive")
    _check(c.rate > 0, "rate", "must be positive")
    _check(c.time > 0, "time", "must be positive")
    _check(c.accounting in ("per_outcome", "per_setting"), "accounting", "per_outcome or per_setting")
    for k in ("chsh_a_deg", "chsh_a_prime_deg", "chsh_b_deg", "chsh_b_prime_deg"):
        _check(0 <= getattr(c, k) < 180, k, "must lie in [0, 180)")
    _check(c.scan_points >= 5, "scan_points", "must be >= 5")
    _check(c.scan_span > 0, "scan_span", "must be positive")
    _check(c.scan_time > 0, "scan_time", "must be positive")


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _convert(key: str, raw: str, line: int) -> Any:
    t = _TYPES[key]
    try:
        if "None" in t and raw.lower() in ("none", ""):
            return None
        if t.startswith("bool"):
            low = raw.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return low in ("true", "1", "yes")
        if t.startswith("int"):
            return int(raw)
        if t.startswith("float"):
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r}", line=line, key=key) from None


def parse_config(text: str) -> ExperimentConfig:
    vals: dict[str, Any] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=no)
        key, value = (p.strip() for p in body.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"unknown key {key!r}", line=no, key=key)
        if key in vals:
            raise ConfigError(f"duplicate key {key!r}", line=no, key=key)
        vals[key] = _convert(key, value, no)
    return ExperimentConfig(**vals)
