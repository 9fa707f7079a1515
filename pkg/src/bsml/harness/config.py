"""Flat ``key = value`` experiment configuration.

One setting per line, ``#`` starts a comment, lists are comma separated::

    experiment = converge-moments
    seed = 42
    n_list = 100, 1000, 10000
    t_list = 0.5, 1

``experiment`` and ``seed`` are required; every other key falls back to the
experiment's default (see ``DEFAULTS``).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = (
    "converge-moments",
    "converge-dist",
    "fdd",
    "ck-check",
    "semigroup-compare",
    "subordinator-check",
    "generator-check",
)
REQUIRED = ("experiment", "seed")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    experiment: str
    seed: int
    n_list: list[int] = field(default_factory=list)
    t_list: list[float] = field(default_factory=list)
    s_list: list[float] = field(default_factory=list)
    m_list: list[float] = field(default_factory=list)
    x_list: list[float] = field(default_factory=list)
    alpha_list: list[float] = field(default_factory=list)
    efunc_alpha_list: list[float] = field(default_factory=list)
    k_list: list[int] = field(default_factory=list)
    replicates: int = 10_000
    ks_size: int = 10_000
    mc_n_max: int = 1000
    precision_bits: int = 256
    tolerance: float = 0.02
    mc_sigma: float = 4.0
    significance: float = 0.01
    window: float = 3.0
    tail_level: float = 10.0
    jobs: int = 1
    record_timings: bool = False
    output_path: str = ""
    format: str = "csv"

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {', '.join(EXPERIMENTS)}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.replicates < 1 or self.ks_size < 1:
            raise ConfigError("replicates must be >= 1")
        if self.format not in ("csv", "json"):
            raise ConfigError(f"format must be csv or json, got {self.format!r}")
        if self.precision_bits < 64:
            raise ConfigError("precision_bits must be >= 64")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        for name in ("t_list", "s_list"):
            if any(v < 0 for v in getattr(self, name)):
                raise ConfigError(f"{name}: times must be >= 0")
        for name in _USED_LISTS[self.experiment]:
            if not getattr(self, name):
                raise ConfigError(f"{name} must be non-empty for {self.experiment}")
        if self.experiment == "converge-dist" and self.replicates < 10_000:
            raise ConfigError("converge-dist needs replicates >= 10000")
        if self.experiment == "fdd":
            if len(self.t_list) != len(self.m_list) or len(self.t_list) > 4:
                raise ConfigError("fdd needs equally many times and exponents, at most 4")
            if any(int(m) != m or m < 0 for m in self.m_list) or sum(self.m_list) > 6:
                raise ConfigError("fdd exponents must be integers >= 0 with sum <= 6")
        if self.experiment in ("converge-moments", "semigroup-compare"):
            if any(int(m) != m or m < 0 for m in self.m_list):
                raise ConfigError("m_list must hold integers >= 0")
        if self.experiment == "semigroup-compare" and max(self.m_list) > 5:
            raise ConfigError("semigroup-compare supports monomial degree <= 5")
        if self.experiment == "generator-check":
            ts = sorted(self.t_list, reverse=True)
            if not all(0 < t <= 0.1 for t in ts):
                raise ConfigError("generator-check times must lie in (0, 0.1]")
            if len({round(a / b, 9) for a, b in zip(ts, ts[1:])}) > 1:
                raise ConfigError("generator-check t_list must be geometric")
            if any(not 1 <= k <= 8 for k in self.k_list):
                raise ConfigError("generator-check supports k in 1..8")
        return self


_USED_LISTS = {
    "converge-moments": ("n_list", "t_list", "m_list"),
    "converge-dist": ("n_list", "t_list"),
    "fdd": ("n_list", "t_list", "m_list"),
    "ck-check": ("n_list", "s_list", "t_list", "x_list", "m_list"),
    "semigroup-compare": ("n_list", "s_list", "t_list", "m_list"),
    "subordinator-check": ("alpha_list", "x_list", "efunc_alpha_list"),
    "generator-check": ("k_list", "x_list", "t_list"),
}

DEFAULTS: dict[str, dict] = {
    "converge-moments": dict(
        n_list=[100, 1000, 10_000, 100_000], t_list=[0.5, 1.0], m_list=[1, 2, 3], tolerance=0.02
    ),
    "converge-dist": dict(n_list=[10, 100, 1000, 10_000], t_list=[1.0], replicates=10_000),
    "fdd": dict(
        n_list=[100, 1000, 10_000], t_list=[0.5, 1.5], m_list=[1, 1], tolerance=0.03,
        replicates=20_000, mc_n_max=1000,
    ),
    "ck-check": dict(
        n_list=[5, 10, 20, 30], s_list=[0.3, 1.0], t_list=[0.5, 2.0], x_list=[0.5, 1.0, 4.0],
        m_list=[10], tolerance=1e-8,
    ),
    "semigroup-compare": dict(
        n_list=[100, 1000, 10_000, 100_000], s_list=[0.5], t_list=[0.5], m_list=[2],
        window=3.0, tolerance=0.05,
    ),
    "subordinator-check": dict(
        alpha_list=[0.2, 0.5, 0.9], x_list=[0.5, 1.0, 3.0], efunc_alpha_list=[0.5],
        replicates=100_000, ks_size=10_000, tolerance=0.02,
    ),
    "generator-check": dict(
        k_list=[1, 2, 3, 4, 5], x_list=[0.5, 1.0, 2.0], t_list=[1e-2, 1e-3, 1e-4], tolerance=1e-3
    ),
}

_FIELDS = {f.name: f for f in dataclasses.fields(ExperimentConfig)}


def _parse_value(name: str, raw: str):
    kind = str(_FIELDS[name].type)
    raw = raw.strip()
    try:
        if kind.startswith("list"):
            items = [p.strip() for p in raw.split(",") if p.strip()]
            conv = int if "int" in kind else float
            return [conv(float(p)) if conv is int else conv(p) for p in items]
        if kind == "int":
            return int(float(raw)) if "e" in raw.lower() else int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def make_config(experiment: str, seed: int = 0, **overrides) -> ExperimentConfig:
    if experiment not in DEFAULTS:
        raise ConfigError(f"unknown experiment {experiment!r}")
    values = {**DEFAULTS[experiment], **overrides}
    return ExperimentConfig(experiment=experiment, seed=seed, **values).validate()


def parse_config(text: str) -> ExperimentConfig:
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _FIELDS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    for key in REQUIRED:
        if key not in values:
            raise ConfigError(f"missing required key {key!r}")
    experiment = values.pop("experiment")
    seed = values.pop("seed")
    return make_config(experiment, seed, **values)


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def dump_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            v = ", ".join(repr(x) for x in v)
        elif isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
