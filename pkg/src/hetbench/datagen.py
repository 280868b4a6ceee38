"""Synthetic micropore feature/label generator.

Every dataset is produced from a single splitmix64 chain seeded by
``GenConfig.seed``. Each row consumes exactly ``DRAWS_PER_ROW`` (10)
outputs of the chain, in this order:

    phi, pixel, grad, betw                  (feature sampling, 4 draws)
    pixel jitter (2), grad jitter (2)       (Box-Muller normals, 4 draws)
    flip decision, replacement label        (2 draws)

The draws are consumed even when a noise parameter is zero, so changing
the noise settings never shifts the features of later rows.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass, fields
from typing import Iterator, NamedTuple

import numpy as np

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO_POW_53 = float(1 << 53)

FEATURE_DRAWS = 4
DRAWS_PER_ROW = 10

PIXEL_RANGE = (0, 255)
GRAD_RANGE = (10, 90)

# Labeler cut-offs. Any pixel cut in (138, 155] and any gradient cut in
# (66, 84] reproduces the 20-row reference sample.
PIXEL_THRESHOLD = 150
GRAD_THRESHOLD = 80

FEATURE_NAMES = ("PhiXSectContin", "PixelColor", "NeighbColorGrad", "Betw2Amplify")


# ---------------------------------------------------------------------------
# PRNG
# ---------------------------------------------------------------------------

def prng_next(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state. Returns ``(output, new_state)``."""
    state = (state + _GAMMA) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31), state


def uniform_int(state: int, lo: int, hi: int) -> tuple[int, int]:
    """Integer uniform on ``[lo, hi]`` from one draw (multiply-high reduction)."""
    out, state = prng_next(state)
    span = hi - lo + 1
    return lo + ((out * span) >> 64), state


def uniform_float(state: int) -> tuple[float, int]:
    """Float uniform on ``[0, 1)`` with 53 random bits."""
    out, state = prng_next(state)
    return (out >> 11) / _TWO_POW_53, state


def standard_normal(state: int) -> tuple[float, int]:
    """Box-Muller normal from two consecutive draws (cosine branch only)."""
    out1, state = prng_next(state)
    out2, state = prng_next(state)
    u1 = ((out1 >> 11) + 1) / _TWO_POW_53  # (0, 1], log-safe
    u2 = (out2 >> 11) / _TWO_POW_53
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2), state


def derive_seed(seed: int, *keys: int) -> int:
    """Mix integer keys into a seed to get an independent stream state."""
    state = seed & MASK64
    for key in keys:
        state, _ = prng_next(state ^ ((key * _MIX1) & MASK64))
    return state


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

class Label(enum.IntEnum):
    SOLID = 0
    THROAT = 1
    PORE = 2
    NCVUGS = 3

    @property
    def spelling(self) -> str:
        return _SPELLINGS[self]

    @classmethod
    def parse(cls, text: str) -> "Label":
        try:
            return _ALIASES[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown label {text!r}") from None


_SPELLINGS = {
    Label.SOLID: "Solid",
    Label.THROAT: "Throat",
    Label.PORE: "Pore",
    Label.NCVUGS: "NC_Vugs",
}
_ALIASES = {
    "solid": Label.SOLID,
    "throat": Label.THROAT,
    "thraot": Label.THROAT,
    "pore": Label.PORE,
    "nc_vugs": Label.NCVUGS,
    "nc-vugs": Label.NCVUGS,
    "ncvugs": Label.NCVUGS,
}

N_CLASSES = len(Label)


class FeatureVector(NamedTuple):
    phi_x_sect_contin: float
    pixel_color: float
    neighb_color_grad: float
    betw2_amplify: float

    def in_range(self) -> bool:
        return (
            self.phi_x_sect_contin in (0.0, 1.0)
            and self.betw2_amplify in (0.0, 1.0)
            and PIXEL_RANGE[0] <= self.pixel_color <= PIXEL_RANGE[1]
            and GRAD_RANGE[0] <= self.neighb_color_grad <= GRAD_RANGE[1]
        )


@dataclass(frozen=True)
class GenConfig:
    seed: int = 3
    n_samples: int = 10_000
    p_phi_one: float = 0.5
    p_betw_one: float = 0.5
    jitter_pixel_sd: float = 15.0
    jitter_grad_sd: float = 8.0
    p_flip: float = 0.5

    def __post_init__(self):
        if not 0 <= self.seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        for name in ("p_phi_one", "p_betw_one", "p_flip"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        for name in ("jitter_pixel_sd", "jitter_grad_sd"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")

    def noiseless(self) -> "GenConfig":
        return self.replace(jitter_pixel_sd=0.0, jitter_grad_sd=0.0, p_flip=0.0)

    def replace(self, **changes) -> "GenConfig":
        return GenConfig(**{**asdict(self), **changes})

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "GenConfig":
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ValueError(f"unknown GenConfig key {key!r}")
        return cls(**data)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of feature rows and integer labels.

    ``index`` holds each row's position in the dataset it was generated or
    loaded as, so subsets produced by splitting keep their provenance.
    """

    features: np.ndarray
    labels: np.ndarray
    index: np.ndarray
    provenance: GenConfig | None = None

    def __post_init__(self):
        features = np.array(self.features, dtype=np.float64).reshape(-1, len(FEATURE_NAMES))
        labels = np.array(self.labels, dtype=np.int64).reshape(-1)
        index = np.array(self.index, dtype=np.int64).reshape(-1)
        if not len(features) == len(labels) == len(index):
            raise ValueError("features, labels and index must have equal length")
        for arr in (features, labels, index):
            arr.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "index", index)

    @classmethod
    def from_arrays(cls, features, labels, provenance: GenConfig | None = None) -> "Dataset":
        return cls(features, labels, np.arange(len(labels)), provenance)

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.features[rows], self.labels[rows], self.index[rows], self.provenance)

    def row(self, i: int) -> tuple[int, FeatureVector, Label]:
        return int(self.index[i]), FeatureVector(*map(float, self.features[i])), Label(int(self.labels[i]))

    def rows(self) -> Iterator[tuple[int, FeatureVector, Label]]:
        for i in range(len(self)):
            yield self.row(i)

    @property
    def provenance_tag(self) -> dict | str:
        return "external" if self.provenance is None else self.provenance.to_dict()


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------

def sample_features(state: int, config: GenConfig) -> tuple[FeatureVector, int]:
    """Draw one feature row; consumes ``FEATURE_DRAWS`` outputs."""
    u, state = uniform_float(state)
    phi = 1.0 if u < config.p_phi_one else 0.0
    pixel, state = uniform_int(state, *PIXEL_RANGE)
    grad, state = uniform_int(state, *GRAD_RANGE)
    u, state = uniform_float(state)
    betw = 1.0 if u < config.p_betw_one else 0.0
    return FeatureVector(phi, float(pixel), float(grad), betw), state


def label_rule(f: FeatureVector) -> Label:
    """Expert if-statement labeler. Total over all real inputs."""
    if f.phi_x_sect_contin == 0:
        return Label.NCVUGS if f.pixel_color < PIXEL_THRESHOLD else Label.SOLID
    if f.betw2_amplify == 1:
        return Label.THROAT
    return Label.PORE if f.neighb_color_grad >= GRAD_THRESHOLD else Label.SOLID


def apply_label_noise(state: int, f: FeatureVector, config: GenConfig) -> tuple[Label, int]:
    """Label a jittered copy of ``f``, then maybe flip to another class.

    Consumes 6 draws: two Box-Muller normals, the flip decision, and the
    replacement class (uniform over the three other labels).
    """
    z_pixel, state = standard_normal(state)
    z_grad, state = standard_normal(state)
    jittered = f._replace(
        pixel_color=f.pixel_color + config.jitter_pixel_sd * z_pixel,
        neighb_color_grad=f.neighb_color_grad + config.jitter_grad_sd * z_grad,
    )
    label = label_rule(jittered)
    u, state = uniform_float(state)
    pick, state = uniform_int(state, 0, N_CLASSES - 2)
    if u < config.p_flip:
        others = [c for c in Label if c != label]
        label = others[pick]
    return label, state


def generate_dataset(config: GenConfig) -> Dataset:
    if config.n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    n = config.n_samples
    features = np.empty((n, len(FEATURE_NAMES)))
    labels = np.empty(n, dtype=np.int64)
    state = config.seed
    for i in range(n):
        f, state = sample_features(state, config)
        label, state = apply_label_noise(state, f, config)
        features[i] = f
        labels[i] = label
    return Dataset.from_arrays(features, labels, provenance=config)
