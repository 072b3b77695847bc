"""Model configuration and coefficient functions.

The model family is fixed: the mid-price diffusion scale is g1(x) = c1 * x**2
and, in the two-dimensional case, the half-spread diffusion scale is
g2(eps) = c2 * eps**2.  The displacement fields f1, f2 select the transform:
a constant shift of size eps_transform in the one-dimensional case, or the
rotation-generator pair in the mid-price/half-spread plane.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np


class ConfigError(ValueError):
    """Raised for malformed, unknown, or out-of-range configuration input."""


class ModelKind(enum.Enum):
    TRANSLATION_1D = "translation_1d"
    ROTATION_2D = "rotation_2d"


class BlurMeanSign(enum.Enum):
    """Sign convention for the fitted blur mean in the translation case.

    PROPOSITION_LITERAL uses mean -eps/3 (the literal closed-form moment),
    SECTION_FOUR_FOUR uses mean +eps/3.  Under the engine's kernel argument
    orientation H(x_i - c_b), PROPOSITION_LITERAL is the mode that produces
    downside fear (elevated volatility after negative returns) and is the
    default.
    """

    PROPOSITION_LITERAL = "proposition_literal"
    SECTION_FOUR_FOUR = "section_four_four"


# keys accepted in config files; everything else is an error
_CONFIG_KEYS = (
    "model_kind",
    "eps_transform",
    "g1_coeff",
    "g2_coeff",
    "x0",
    "spread0",
    "n_paths",
    "n_buckets",
    "n_steps",
    "dt",
    "seed",
    "blur_mean_sign",
    "density_floor_mult",
)

_REQUIRED_KEYS = ("model_kind", "eps_transform", "x0", "n_paths", "n_buckets", "n_steps", "seed")


@dataclass(frozen=True)
class ModelConfig:
    """Validated, immutable run configuration."""

    model_kind: ModelKind
    eps_transform: float
    x0: float
    n_paths: int
    n_buckets: int
    n_steps: int
    seed: int
    g1_coeff: float = 0.01
    g2_coeff: float | None = None
    spread0: float | None = None
    dt: float = 1.0
    blur_mean_sign: BlurMeanSign = BlurMeanSign.PROPOSITION_LITERAL
    density_floor_mult: float = 1.0

    def __post_init__(self):
        if not isinstance(self.model_kind, ModelKind):
            raise ConfigError("model_kind must be a ModelKind")
        if not math.isfinite(self.eps_transform) or self.eps_transform < 0:
            raise ConfigError("eps_transform must be a finite real >= 0")
        if not math.isfinite(self.x0) or self.x0 <= 0:
            raise ConfigError("x0 must be a finite real > 0")
        if self.g1_coeff < 0 or not math.isfinite(self.g1_coeff):
            raise ConfigError("g1_coeff must be >= 0")
        if self.n_paths < 1:
            raise ConfigError("n_paths must be >= 1")
        if self.n_buckets < 2:
            raise ConfigError("n_buckets must be >= 2")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be >= 1")
        if not math.isfinite(self.dt) or self.dt <= 0:
            raise ConfigError("dt must be > 0")
        if not (0 <= self.seed < 2**64):
            raise ConfigError("seed must fit in an unsigned 64-bit integer")
        if self.density_floor_mult <= 0 or not math.isfinite(self.density_floor_mult):
            raise ConfigError("density_floor_mult must be > 0")
        if self.model_kind is ModelKind.ROTATION_2D:
            if self.g2_coeff is None:
                raise ConfigError("g2_coeff is required for rotation_2d")
            if self.g2_coeff < 0 or not math.isfinite(self.g2_coeff):
                raise ConfigError("g2_coeff must be >= 0")
            if self.spread0 is None:
                raise ConfigError("spread0 is required for rotation_2d")
            if self.spread0 < 0 or not math.isfinite(self.spread0):
                raise ConfigError("spread0 must be >= 0")

    def as_dict(self) -> dict:
        """Flat echo of the configuration with enum values as their tokens."""
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            out[f.name] = v
        return out


def _parse_value(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "model_kind":
            return ModelKind(raw)
        if key == "blur_mean_sign":
            return BlurMeanSign(raw)
        if key in ("n_paths", "n_buckets", "n_steps", "seed"):
            return int(raw)
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value for config key '{key}': {raw!r}") from exc


def parse_config(text: str) -> ModelConfig:
    """Parse flat key=value config text.

    Lines are KEY = VALUE, one entry per line; '#' starts a comment.  Unknown
    keys are an error, as are duplicates and missing required keys.
    """
    entries: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        key, raw = line.split("=", 1)
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown config key '{key}'")
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate config key '{key}'")
        entries[key] = _parse_value(key, raw)

    missing = [k for k in _REQUIRED_KEYS if k not in entries]
    if missing:
        raise ConfigError(f"missing required config keys: {', '.join(missing)}")
    return ModelConfig(**entries)


def load_config(path: str | Path) -> ModelConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))


@dataclass(frozen=True)
class CoefficientFunctions:
    """Vectorized coefficient maps for one configured model.

    g1, g2 are diffusion scales, f1, f2 displacement fields; each takes
    (x, spread) arrays and broadcasts.  g2 and f2 are identically zero in the
    one-dimensional case.
    """

    kind: ModelKind
    eps: float
    g1: object
    g2: object
    f1: object
    f2: object


def eval_coefficients(config: ModelConfig) -> CoefficientFunctions:
    """Build the coefficient functions for a configuration.

    Rejects negative diffusion coefficients (also enforced by ModelConfig;
    kept here so directly constructed configs cannot slip through).
    """
    c1 = float(config.g1_coeff)
    if c1 < 0:
        raise ConfigError("g1_coeff must be >= 0")
    eps = float(config.eps_transform)

    def g1(x, spread=None):
        return c1 * np.asarray(x, dtype=float) * np.asarray(x, dtype=float)

    if config.model_kind is ModelKind.TRANSLATION_1D:

        def g2(x, spread=None):
            return np.zeros_like(np.asarray(x, dtype=float))

        def f1(x, spread=None):
            return np.full_like(np.asarray(x, dtype=float), eps)

        def f2(x, spread=None):
            return np.zeros_like(np.asarray(x, dtype=float))

    else:
        c2 = float(config.g2_coeff)
        if c2 < 0:
            raise ConfigError("g2_coeff must be >= 0")

        def g2(x, spread):
            s = np.asarray(spread, dtype=float)
            return c2 * s * s

        # infinitesimal rotation in the (x, spread) plane, expanded to
        # second order in eps
        def f1(x, spread):
            x = np.asarray(x, dtype=float)
            s = np.asarray(spread, dtype=float)
            return eps * s - 0.5 * eps * eps * x

        def f2(x, spread):
            x = np.asarray(x, dtype=float)
            s = np.asarray(spread, dtype=float)
            return -eps * x - 0.5 * eps * eps * s

    return CoefficientFunctions(kind=config.model_kind, eps=eps, g1=g1, g2=g2, f1=f1, f2=f2)


@dataclass(frozen=True)
class ParticleEnsemble:
    """State of the interacting particle system after some number of steps.

    Arrays are never mutated in place; each step produces a new ensemble.
    `returns` holds one row of proportional mid-price returns per completed
    step.
    """

    x: np.ndarray
    spread: np.ndarray | None
    returns: tuple = field(default_factory=tuple)
    step_index: int = 0

    @property
    def n_paths(self) -> int:
        return int(self.x.shape[0])
