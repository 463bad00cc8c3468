"""Seeded synthetic dataset generators and the benchmark parameter tables.

Regression families other than ``linear`` sample features from Uniform[0,1)
so powers, exponentials, and tangents stay tame; the linear family uses
standard normals (optionally with a low-rank singular profile). All draws
come from one ``numpy.random.default_rng(seed)`` stream in a fixed order,
so a spec is byte-reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CLASSIFICATION, REGRESSION, Dataset, save_csv
from .errors import FamilyNeedsMoreFeatures, InvalidSpec

LINEAR = "linear"
SYNTHETIC = "synthetic"
CUBIC = "cubic"
EXPONENTIAL = "exponential"
STEP = "step"
COMPLEX_INTERACTION = "complex_interaction"
POLYNOMIAL = "polynomial"
EXP_LOG = "exp_log"
SIN_EXP = "sin_exp"
TAN = "tan"

REGRESSION_FAMILIES = (
    LINEAR, SYNTHETIC, CUBIC, EXPONENTIAL, STEP,
    COMPLEX_INTERACTION, POLYNOMIAL, EXP_LOG, SIN_EXP, TAN,
)

# smallest feature index each family's formula touches, plus one
_MIN_FEATURES = {
    COMPLEX_INTERACTION: 3,
    POLYNOMIAL: 3,
    EXP_LOG: 2,
    SIN_EXP: 2,
}

OUTLIER_NOISE_FACTOR = 10.0  # outlier rows get Normal(0, 10 * noise) extra
_TAN_GUARD = 0.05


@dataclass(frozen=True)
class RegressionGenSpec:
    family: str
    n_samples: int
    n_features: int
    n_informative: int | None = None
    noise: float = 0.0
    n_outliers: int = 0
    bias: float = 0.0
    shuffle: bool = True
    effective_rank: int | None = None
    tail_strength: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.family not in REGRESSION_FAMILIES:
            raise InvalidSpec(f"unknown regression family {self.family!r}")
        if self.n_samples < 1 or self.n_features < 1:
            raise InvalidSpec("n_samples and n_features must be >= 1")
        if self.n_informative is not None and not 0 <= self.n_informative <= self.n_features:
            raise InvalidSpec("n_informative must be in 0..n_features")
        if self.noise < 0:
            raise InvalidSpec("noise must be >= 0")
        if not 0 <= self.n_outliers <= self.n_samples:
            raise InvalidSpec("n_outliers must be in 0..n_samples")
        if not 0.0 <= self.tail_strength <= 1.0:
            raise InvalidSpec("tail_strength must be in [0, 1]")
        needed = _MIN_FEATURES.get(self.family, 1)
        if self.n_features < needed:
            raise FamilyNeedsMoreFeatures(self.family, needed, self.n_features)


@dataclass(frozen=True)
class ClassificationGenSpec:
    n_samples: int
    n_features: int
    n_informative: int
    n_redundant: int = 0
    weights: tuple[float, float] = (0.5, 0.5)
    flip_y: float = 0.01
    class_sep: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 2 or self.n_features < 1:
            raise InvalidSpec("need n_samples >= 2 and n_features >= 1")
        if self.n_informative < 1:
            raise InvalidSpec("n_informative must be >= 1")
        if self.n_redundant < 0:
            raise InvalidSpec("n_redundant must be >= 0")
        if self.n_informative + self.n_redundant > self.n_features:
            raise InvalidSpec("n_informative + n_redundant must be <= n_features")
        if len(self.weights) != 2 or abs(sum(self.weights) - 1.0) > 1e-9:
            raise InvalidSpec("weights must be two class proportions summing to 1")
        if min(self.weights) < 0:
            raise InvalidSpec("weights must be non-negative")
        if not 0.0 <= self.flip_y <= 1.0:
            raise InvalidSpec("flip_y must be in [0, 1]")
        if self.class_sep <= 0:
            raise InvalidSpec("class_sep must be > 0")


def _feature_names(d: int) -> list[str]:
    return [f"x{j}" for j in range(d)]


def _singular_profile(r: int, effective_rank: int, tail_strength: float) -> np.ndarray:
    i = np.arange(r)
    bell = (1.0 - tail_strength) * np.exp(-((i / effective_rank) ** 2))
    tail = tail_strength * np.exp(-i / effective_rank)
    return bell + tail


def _low_rank_normal(rng: np.random.Generator, n: int, d: int,
                     effective_rank: int, tail_strength: float) -> np.ndarray:
    r = min(n, d)
    u, _ = np.linalg.qr(rng.standard_normal((n, r)))
    v, _ = np.linalg.qr(rng.standard_normal((d, r)))
    s = _singular_profile(r, effective_rank, tail_strength)
    return (u * s) @ v.T


def gen_regression_linear(spec: RegressionGenSpec) -> Dataset:
    """y = X w + bias + noise, with only n_informative nonzero weights."""
    if spec.family != LINEAR:
        raise InvalidSpec("gen_regression_linear requires family='linear'")
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_samples, spec.n_features
    if spec.effective_rank is None:
        X = rng.standard_normal((n, d))
    else:
        X = _low_rank_normal(rng, n, d, spec.effective_rank, spec.tail_strength)
    n_inf = d if spec.n_informative is None else spec.n_informative
    w = np.zeros(d)
    w[:n_inf] = rng.standard_normal(n_inf)
    y = X @ w + spec.bias
    if spec.noise > 0:
        y = y + rng.normal(0.0, spec.noise, n)
    if spec.shuffle:
        row_perm = rng.permutation(n)
        col_perm = rng.permutation(d)
        X = X[row_perm][:, col_perm]
        y = y[row_perm]
    return Dataset(X, y, _feature_names(d), REGRESSION)


def _family_target(family: str, X: np.ndarray) -> np.ndarray:
    """The noiseless target for one non-linear family."""
    d = X.shape[1]
    cols = [X[:, j] for j in range(d)]
    if family == SYNTHETIC:
        return cols[0] + sum(cols[j] ** j for j in range(1, d))
    if family == CUBIC:
        return cols[0] + sum(cols[j] ** (j + 2) for j in range(1, d))
    if family == EXPONENTIAL:
        return np.exp(cols[0]) + sum(cols[j] ** j for j in range(1, d))
    if family == STEP:
        # closed-at-threshold step: u(0) = 1
        return (cols[0] >= 0.5).astype(float) + sum(cols[j] ** j for j in range(1, d))
    if family == COMPLEX_INTERACTION:
        return cols[0] ** 2 + np.sin(cols[1]) * np.log(cols[2] ** 2 + 1.0)
    if family == POLYNOMIAL:
        return cols[0] ** 3 + cols[1] ** 4 - cols[2] ** 5
    if family == EXP_LOG:
        return np.exp(cols[0]) * np.log1p(cols[1])
    if family == SIN_EXP:
        return np.sin(np.pi * cols[0]) * np.exp(cols[1])
    if family == TAN:
        # features live in [0, 1) so the pole guard never binds there
        safe = np.clip(cols[0], None, np.pi / 2 - _TAN_GUARD)
        return np.tan(safe) + sum(cols[j] ** j for j in range(1, d))
    raise InvalidSpec(f"unknown family {family!r}")


def gen_regression_family(spec: RegressionGenSpec) -> Dataset:
    """Uniform[0,1) features pushed through one of the non-linear formulas."""
    if spec.family == LINEAR:
        raise InvalidSpec("use gen_regression_linear for the linear family")
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_samples, spec.n_features
    X = rng.random((n, d))
    y = _family_target(spec.family, X)
    if spec.noise > 0:
        y = y + rng.normal(0.0, spec.noise, n)
    if spec.n_outliers > 0:
        rows = rng.choice(n, size=spec.n_outliers, replace=False)
        y = np.array(y)
        y[rows] += rng.normal(0.0, OUTLIER_NOISE_FACTOR * spec.noise, spec.n_outliers)
    return Dataset(X, y, _feature_names(d), REGRESSION)


def gen_regression(spec: RegressionGenSpec) -> Dataset:
    if spec.family == LINEAR:
        return gen_regression_linear(spec)
    return gen_regression_family(spec)


def gen_classification(spec: ClassificationGenSpec) -> Dataset:
    """Binary clusters on opposite hypercube vertices, +-class_sep per axis.

    Class sizes are floor(weight * n) with the remainder assigned to class
    0. The flip step exchanges labels among a seeded sample of rows (a
    permutation), so class counts are preserved exactly.
    """
    rng = np.random.default_rng(spec.seed)
    n, d = spec.n_samples, spec.n_features
    n_inf, n_red = spec.n_informative, spec.n_redundant
    n_noise = d - n_inf - n_red

    n1 = int(math.floor(spec.weights[1] * n))
    n0 = n - n1
    y = np.concatenate([np.zeros(n0, dtype=int), np.ones(n1, dtype=int)])

    centroids = np.where(y[:, None] == 0, -spec.class_sep, spec.class_sep)
    informative = centroids * np.ones(n_inf)[None, :] + rng.standard_normal((n, n_inf))
    blocks = [informative]
    if n_red:
        mix = rng.standard_normal((n_inf, n_red))
        blocks.append(informative @ mix)
    if n_noise:
        blocks.append(rng.standard_normal((n, n_noise)))
    X = np.hstack(blocks)

    n_flip = int(round(spec.flip_y * n))
    if n_flip > 1:
        rows = rng.choice(n, size=n_flip, replace=False)
        y[rows] = y[rows][rng.permutation(n_flip)]

    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], _feature_names(d), CLASSIFICATION)


def export_csv(d: Dataset, path: str, spec: RegressionGenSpec | ClassificationGenSpec):
    """Write a generated dataset with its provenance comment line."""
    family = getattr(spec, "family", "classification")
    save_csv(d, path, target_column="target", comment=f"spinex-gen family={family} seed={spec.seed}")


# --- the published benchmark parameter grids --------------------------------

def table3_specs(base_seed: int = 0) -> list[tuple[str, RegressionGenSpec]]:
    """The 18 synthetic regression parameterizations."""
    linear = [
        dict(n_samples=50, n_features=5, n_informative=5, noise=0.0, bias=0.0),
        dict(n_samples=5000, n_features=4, n_informative=4, noise=0.1, bias=0.0),
        dict(n_samples=1000, n_features=6, n_informative=5, noise=0.0, bias=10.0),
        dict(n_samples=7000, n_features=2, n_informative=2, noise=0.0, bias=0.0, shuffle=False),
        dict(n_samples=750, n_features=8, n_informative=6, noise=0.0, bias=0.0, effective_rank=5),
        dict(n_samples=800, n_features=4, n_informative=4, noise=0.0, bias=0.0, tail_strength=0.1),
        dict(n_samples=1000, n_features=5, n_informative=3, noise=0.0, bias=10.0),
        dict(n_samples=2500, n_features=3, n_informative=2, noise=0.0, bias=0.0, shuffle=False),
        dict(n_samples=1000, n_features=4, n_informative=4, noise=0.9, bias=0.0, effective_rank=10),
    ]
    nonlinear = [
        (STEP, dict(n_samples=2000, n_features=7, noise=0.0)),
        (CUBIC, dict(n_samples=1000, n_features=10, n_outliers=20, noise=0.5)),
        (SYNTHETIC, dict(n_samples=2000, n_features=6, n_outliers=200, noise=0.8)),
        (EXPONENTIAL, dict(n_samples=2000, n_features=5, n_outliers=40, noise=0.8)),
        (TAN, dict(n_samples=750, n_features=8, noise=0.1)),
        (COMPLEX_INTERACTION, dict(n_samples=500, n_features=7, noise=0.0)),
        (POLYNOMIAL, dict(n_samples=2000, n_features=5, noise=0.1)),
        (EXP_LOG, dict(n_samples=1000, n_features=10, noise=0.5)),
        (SIN_EXP, dict(n_samples=3000, n_features=5, noise=0.0)),
    ]
    specs = []
    for i, params in enumerate(linear, start=1):
        specs.append((f"dataset_{i:02d}_linear",
                      RegressionGenSpec(family=LINEAR, seed=base_seed + i, **params)))
    for offset, (family, params) in enumerate(nonlinear, start=10):
        specs.append((f"dataset_{offset:02d}_{family}",
                      RegressionGenSpec(family=family, seed=base_seed + offset, **params)))
    return specs


_TABLE5A = [
    (50, 3, 2, 0),
    (100, 10, 6, 2),
    (1000, 80, 20, 40),
    (500, 20, 20, 0),
    (5000, 40, 15, 10),
    (10000, 10, 5, 5),
    (500, 20, 20, 0),
    (3000, 55, 20, 20),
    (50000, 5, 3, 0),
]

_TABLE5B = [
    (50, 3, 2, 0, 0.01, 1.0, (0.9, 0.1)),
    (100, 10, 6, 2, 0.02, 0.5, (0.8, 0.2)),
    (1000, 80, 20, 40, 0.03, 0.8, (0.7, 0.3)),
    (500, 20, 20, 0, 0.04, 0.2, (0.6, 0.4)),
    (5000, 40, 15, 10, 0.05, 0.3, (0.5, 0.5)),
    (10000, 10, 5, 5, 0.06, 0.4, (0.6, 0.4)),
    (1500, 100, 40, 0, 0.07, 0.5, (0.7, 0.3)),
    (3000, 55, 20, 20, 0.08, 0.6, (0.8, 0.2)),
    (50000, 5, 3, 0, 0.09, 0.7, (0.6, 0.4)),
]


def table5a_specs(base_seed: int = 0) -> list[tuple[str, ClassificationGenSpec]]:
    """Series A classification grid (defaults for flip/sep/weights)."""
    return [
        (f"dataset_{i:02d}_series_a",
         ClassificationGenSpec(n_samples=n, n_features=d, n_informative=inf,
                               n_redundant=red, seed=base_seed + i))
        for i, (n, d, inf, red) in enumerate(_TABLE5A, start=1)
    ]


def table5b_specs(base_seed: int = 0) -> list[tuple[str, ClassificationGenSpec]]:
    """Series B classification grid with imbalance, flips, and separations."""
    return [
        (f"dataset_{i:02d}_series_b",
         ClassificationGenSpec(n_samples=n, n_features=d, n_informative=inf,
                               n_redundant=red, flip_y=flip, class_sep=sep,
                               weights=w, seed=base_seed + i))
        for i, (n, d, inf, red, flip, sep, w) in enumerate(_TABLE5B, start=1)
    ]
