"""Flat ``key = value`` experiment configs with dotted sections.

Lines are ``section.key = value``; ``#`` starts a comment. Lists are
comma-separated and numeric ranges may be written ``linspace(a, b, n)`` or
``range(a, b)`` (inclusive of both ends for integers). See ``SCHEMA`` for
every accepted key.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

EXPERIMENTS = ("rmt_fdt", "chain_fdt", "scaling", "decay", "correlators")


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _float(s: str) -> float:
    x = float(s)
    if not math.isfinite(x):
        raise ValueError(f"not finite: {s!r}")
    return x


def _int(s: str) -> int:
    x = float(s)
    if not x.is_integer():
        raise ValueError(f"not an integer: {s!r}")
    return int(x)


def _seed(s: str) -> int:
    x = int(s.strip(), 0)
    if not 0 <= x < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return x


_RANGE = re.compile(r"^\s*(linspace|range)\(([^)]*)\)\s*$")


def _list(conv):
    def parse(s: str):
        m = _RANGE.match(s)
        if m:
            args = [a.strip() for a in m.group(2).split(",")]
            if m.group(1) == "linspace":
                import numpy as np

                a, b, n = _float(args[0]), _float(args[1]), _int(args[2])
                if n < 1:
                    raise ValueError("linspace needs n >= 1")
                return [conv(repr(float(x))) for x in np.linspace(a, b, n)]
            a, b = _int(args[0]), _int(args[1])
            return [conv(str(x)) for x in range(a, b + 1)]
        items = [p.strip() for p in s.split(",") if p.strip()]
        if not items:
            raise ValueError("empty list")
        return [conv(p) for p in items]

    return parse


# key -> (parser, default); default None means required
SCHEMA = {
    "experiment": (str, None),
    "master_seed": (_seed, None),
    "output.dir": (str, "out"),
    "output.plot": (_bool, True),
    "sweep.n_total": (_list(_int), None),
    "sweep.g": (_list(_float), None),
    "sweep.beta": (_list(_float), [0.0]),
    "observable": (str, "sigma_z_probe"),
    "state.e0_fraction": (_float, 0.0),
    "state.cutoff": (_bool, False),
    "chain.bz": (_float, None),
    "chain.bx": (_float, None),
    "chain.jz": (_float, None),
    "chain.jx": (_float, None),
    "chain.n_m": (_int, 2),
    "time.t_max_factor": (_float, 100.0),
    "time.n_samples": (_int, 4096),
    "estimator.tail_tol": (_float, 0.01),
    "delta2.method": (str, "closed"),
    "theory.w_o_regime": (str, "auto"),
    "correlators.m": (_int, 100),
    "correlators.n_pairs": (_int, 200),
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    master_seed: int
    n_total: list
    g: list
    beta: list = field(default_factory=lambda: [0.0])
    observable: str = "sigma_z_probe"
    e0_fraction: float = 0.0
    cutoff: bool = False
    chain: dict = field(default_factory=dict)
    t_max_factor: float = 100.0
    n_time_samples: int = 4096
    tail_tol: float = 0.01
    delta2_method: str = "closed"
    w_o_regime: str = "auto"
    corr_m: int = 100
    corr_pairs: int = 200
    out_dir: str = "out"
    plot: bool = True

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        for name in ("n_total", "g", "beta"):
            vals = getattr(self, name)
            if not vals:
                raise ConfigError(f"sweep.{name} must be non-empty")
        if any(b < 0 for b in self.beta):
            raise ConfigError("sweep.beta entries must be >= 0")
        if any(g < 0 for g in self.g):
            raise ConfigError("sweep.g entries must be >= 0")
        if self.delta2_method not in ("closed", "windowed"):
            raise ConfigError("delta2.method must be 'closed' or 'windowed'")
        if self.w_o_regime not in ("auto", "high_T", "low_T"):
            raise ConfigError("theory.w_o_regime must be auto, high_T or low_T")
        if self.observable not in ("sigma_z_probe", "o_sym", "o_odd"):
            raise ConfigError(f"unknown observable {self.observable!r}")
        if not 0.0 <= self.e0_fraction <= 1.0:
            raise ConfigError("state.e0_fraction must lie in [0, 1]")

    @property
    def is_chain(self) -> bool:
        return self.experiment in ("chain_fdt", "scaling")

    def grid(self) -> list:
        """Sweep points in row order: n_total outermost, then g, then beta."""
        return [(n, g, b) for n in self.n_total for g in self.g for b in self.beta]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, master_seed=_seed(str(seed)))

    def with_out_dir(self, path) -> "ExperimentConfig":
        from dataclasses import replace

        return replace(self, out_dir=str(path))


def parse_config(text: str) -> ExperimentConfig:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        conv = SCHEMA[key][0]
        try:
            raw[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None

    for key, (_, default) in SCHEMA.items():
        if key not in raw:
            if default is None and not key.startswith("chain."):
                raise ConfigError(f"missing required key {key!r}")
            raw[key] = default

    from ..models import CHAIN_DEFAULTS

    chain = {k: raw[f"chain.{k}"] if raw[f"chain.{k}"] is not None else CHAIN_DEFAULTS[k] for k in CHAIN_DEFAULTS}
    chain["n_m"] = raw["chain.n_m"]
    return ExperimentConfig(
        experiment=raw["experiment"],
        master_seed=raw["master_seed"],
        n_total=raw["sweep.n_total"],
        g=raw["sweep.g"],
        beta=raw["sweep.beta"],
        observable=raw["observable"],
        e0_fraction=raw["state.e0_fraction"],
        cutoff=raw["state.cutoff"],
        chain=chain,
        t_max_factor=raw["time.t_max_factor"],
        n_time_samples=raw["time.n_samples"],
        tail_tol=raw["estimator.tail_tol"],
        delta2_method=raw["delta2.method"],
        w_o_regime=raw["theory.w_o_regime"],
        corr_m=raw["correlators.m"],
        corr_pairs=raw["correlators.n_pairs"],
        out_dir=raw["output.dir"],
        plot=raw["output.plot"],
    )


def load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
