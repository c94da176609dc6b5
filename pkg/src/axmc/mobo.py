"""Scalarized multi-objective Bayesian optimization machinery.

Each iteration draws a weight vector from the user's weight box, collapses
the archive's objective vectors with the augmented Tchebycheff norm,
fits a random-forest surrogate on (encoded configuration -> scalar) and
proposes the candidate with maximal expected improvement. Constraining
the weight box is how an operator focuses the search on a region of the
Pareto front between runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr
from sklearn.ensemble import RandomForestRegressor

from .errors import ArgumentError, InfeasibleBoxError, InsufficientDataError
from .gbt import INTEGER_PARAMS, PARAM_BOUNDS, BoosterParams
from .measures import MeasureVector
from .pareto import Archive

MAX_REJECTIONS = 10_000
DEFAULT_RHO = 0.05
DEFAULT_CANDIDATES = 1000
DEFAULT_FOREST_SIZE = 100
N_MUTATIONS = 10
MUTATION_SCALE = 0.10


@dataclass(frozen=True)
class PipelineConfig:
    """One full candidate: booster hyperparameters + rounds + threshold.

    For full evaluations the engine trains with ``max_rounds = nrounds``;
    sub-evaluation records reinterpret a smaller ``nrounds`` against the
    same trained booster, so the invariant is ``nrounds <= max_rounds``.
    """

    booster: BoosterParams
    nrounds: int
    thr: float

    def __post_init__(self):
        if not 0.0 <= self.thr <= 1.0:
            raise ArgumentError(f"thr={self.thr} outside [0, 1]")
        if self.nrounds < 1 or self.nrounds > self.booster.max_rounds:
            raise ArgumentError(
                f"nrounds={self.nrounds} outside [1, max_rounds={self.booster.max_rounds}]"
            )

    def to_dict(self) -> dict:
        return {"booster": self.booster.to_dict(), "nrounds": self.nrounds, "thr": self.thr}

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        return cls(
            booster=BoosterParams.from_dict(d["booster"]), nrounds=d["nrounds"], thr=d["thr"]
        )


@dataclass(frozen=True)
class WeightBox:
    """Per-objective bounds on the sampled scalarization weights."""

    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.bounds:
            if not 0.0 <= lo <= hi <= 1.0:
                raise ArgumentError(f"weight bound ({lo}, {hi}) invalid")
        lo_sum = sum(lo for lo, _ in self.bounds)
        hi_sum = sum(hi for _, hi in self.bounds)
        if lo_sum > 1.0 + 1e-12 or hi_sum < 1.0 - 1e-12:
            raise InfeasibleBoxError(
                f"box does not intersect the weight simplex (sum of lows {lo_sum}, "
                f"sum of highs {hi_sum})"
            )

    @property
    def k(self) -> int:
        return len(self.bounds)

    @classmethod
    def default(cls, k: int) -> "WeightBox":
        return cls(bounds=tuple((0.0, 1.0) for _ in range(k)))

    def to_list(self) -> list[list[float]]:
        return [[lo, hi] for lo, hi in self.bounds]

    @classmethod
    def from_list(cls, raw) -> "WeightBox":
        return cls(bounds=tuple((float(lo), float(hi)) for lo, hi in raw))


def sample_weights(box: WeightBox, rng: np.random.Generator) -> np.ndarray:
    """Uniform simplex weight vector constrained to the box.

    k=2 samples the feasible interval of w1 directly (the exact
    conditional law, and the only way degenerate boxes like w1 in [1,1]
    terminate); k>=3 uses the sorted-uniforms construction with rejection
    against the box.
    """
    k = box.k
    lows = np.array([lo for lo, _ in box.bounds])
    highs = np.array([hi for _, hi in box.bounds])
    if k == 1:
        if lows[0] > 1.0 or highs[0] < 1.0:
            raise InfeasibleBoxError("single-objective weight must be 1")
        return np.array([1.0])
    # boxes touching the simplex in a single point
    if abs(lows.sum() - 1.0) <= 1e-12:
        return lows.copy()
    if abs(highs.sum() - 1.0) <= 1e-12:
        return highs.copy()
    if k == 2:
        lo = max(lows[0], 1.0 - highs[1])
        hi = min(highs[0], 1.0 - lows[1])
        if lo > hi:
            raise InfeasibleBoxError(f"w1 interval [{lo}, {hi}] empty")
        w1 = lo if lo == hi else float(rng.uniform(lo, hi))
        return np.array([w1, 1.0 - w1])
    for _ in range(MAX_REJECTIONS):
        cuts = np.sort(rng.random(k - 1))
        w = np.diff(np.concatenate(([0.0], cuts, [1.0])))
        if (w >= lows).all() and (w <= highs).all():
            return w
    raise InfeasibleBoxError(
        f"no weight vector satisfied the box after {MAX_REJECTIONS} draws"
    )


@dataclass(frozen=True)
class ScalarizerConfig:
    """Augmentation coefficient plus per-objective normalization ranges."""

    normalization: tuple[tuple[float, float], ...]
    rho: float = DEFAULT_RHO

    def __post_init__(self):
        if self.rho <= 0.0:
            raise ArgumentError("rho must be strictly positive")
        for lo, hi in self.normalization:
            if hi < lo:
                raise ArgumentError(f"normalization range ({lo}, {hi}) inverted")

    @classmethod
    def from_archive(cls, archive: Archive, rho: float = DEFAULT_RHO) -> "ScalarizerConfig":
        values = archive.matrix()
        if values.shape[0] == 0:
            raise ArgumentError("cannot derive normalization from an empty archive")
        return cls(
            normalization=tuple(
                (float(lo), float(hi)) for lo, hi in zip(values.min(axis=0), values.max(axis=0))
            ),
            rho=rho,
        )


def _normalize(y: np.ndarray, cfg: ScalarizerConfig) -> np.ndarray:
    lo = np.array([b[0] for b in cfg.normalization])
    hi = np.array([b[1] for b in cfg.normalization])
    span = hi - lo
    out = np.where(span > 0.0, (y - lo) / np.where(span > 0.0, span, 1.0), 0.0)
    return np.clip(out, 0.0, 1.0)


def scalarize(y: MeasureVector | np.ndarray, w: np.ndarray, cfg: ScalarizerConfig) -> float:
    """Augmented Tchebycheff norm of a normalized objective vector:
    max_i(w_i * f_i) + rho * sum_i(w_i * f_i)."""
    yv = y.as_array() if isinstance(y, MeasureVector) else np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if yv.shape != w.shape:
        raise ArgumentError(f"objective/weight length mismatch: {yv.shape} vs {w.shape}")
    f = _normalize(yv, cfg)
    prod = w * f
    return float(prod.max() + cfg.rho * prod.sum())


def scalarize_archive(archive: Archive, w: np.ndarray, cfg: ScalarizerConfig) -> np.ndarray:
    """Scalarized value of every archive record, vectorized."""
    values = archive.matrix()
    lo = np.array([b[0] for b in cfg.normalization])
    hi = np.array([b[1] for b in cfg.normalization])
    span = hi - lo
    f = np.where(span > 0.0, (values - lo) / np.where(span > 0.0, span, 1.0), 0.0)
    f = np.clip(f, 0.0, 1.0)
    prod = f * np.asarray(w)
    return prod.max(axis=1) + cfg.rho * prod.sum(axis=1)


@dataclass(frozen=True)
class Dimension:
    name: str
    low: float
    high: float
    scale: str = "linear"
    integer: bool = False

    def scaled_bounds(self) -> tuple[float, float]:
        if self.scale == "log":
            return math.log(self.low), math.log(self.high)
        return float(self.low), float(self.high)

    def to_scaled(self, value) -> float:
        return math.log(value) if self.scale == "log" else float(value)

    def from_scaled(self, s: float):
        lo, hi = self.scaled_bounds()
        s = min(max(s, lo), hi)
        value = math.exp(s) if self.scale == "log" else s
        if self.integer:
            return int(min(max(round(value), self.low), self.high))
        return float(min(max(value, self.low), self.high))


class ConfigSpace:
    """The searched pipeline space: booster hyperparameters, rounds, threshold."""

    def __init__(self):
        dims = []
        for name, (low, high, scale) in PARAM_BOUNDS.items():
            if name == "max_rounds":
                continue  # trained rounds are searched as nrounds below
            dims.append(Dimension(name, low, high, scale, integer=name in INTEGER_PARAMS))
        nlow, nhigh, _ = PARAM_BOUNDS["max_rounds"]
        dims.append(Dimension("nrounds", nlow, nhigh, "linear", integer=True))
        dims.append(Dimension("thr", 0.0, 1.0, "linear"))
        self.dims: tuple[Dimension, ...] = tuple(dims)

    @property
    def dimension(self) -> int:
        return len(self.dims)

    def _build(self, values: dict) -> PipelineConfig:
        nrounds = values.pop("nrounds")
        thr = values.pop("thr")
        booster = BoosterParams(max_rounds=nrounds, seed=0, **values)
        return PipelineConfig(booster=booster, nrounds=nrounds, thr=thr)

    def sample(self, rng: np.random.Generator) -> PipelineConfig:
        values = {}
        for dim in self.dims:
            lo, hi = dim.scaled_bounds()
            values[dim.name] = dim.from_scaled(float(rng.uniform(lo, hi)))
        return self._build(values)

    def mutate(self, config: PipelineConfig, rng: np.random.Generator) -> PipelineConfig:
        """Gaussian jitter (sd = 10% of each scaled range), clipped to bounds."""
        encoded = self.encode(config)
        values = {}
        for i, dim in enumerate(self.dims):
            lo, hi = dim.scaled_bounds()
            step = float(rng.normal(0.0, MUTATION_SCALE * (hi - lo)))
            values[dim.name] = dim.from_scaled(encoded[i] + step)
        return self._build(values)

    def encode(self, config: PipelineConfig) -> np.ndarray:
        """Numeric vector: log dims log-transformed, integers as reals."""
        raw = {
            **{name: getattr(config.booster, name) for name, _ in PARAM_BOUNDS.items() if name != "max_rounds"},
            "nrounds": config.nrounds,
            "thr": config.thr,
        }
        return np.array([dim.to_scaled(raw[dim.name]) for dim in self.dims], dtype=np.float64)

    def contains(self, config: PipelineConfig) -> bool:
        raw = {
            **{name: getattr(config.booster, name) for name, _ in PARAM_BOUNDS.items() if name != "max_rounds"},
            "nrounds": config.nrounds,
            "thr": config.thr,
        }
        return all(dim.low <= raw[dim.name] <= dim.high for dim in self.dims)


class Surrogate:
    """Random-forest regressor over encoded configurations.

    Exposes across-tree prediction mean and standard deviation, the
    uncertainty the expected-improvement acquisition consumes.
    """

    def __init__(self, forest: RandomForestRegressor):
        self._forest = forest

    def predict_mean_sd(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        per_tree = np.stack([tree.predict(X) for tree in self._forest.estimators_])
        return per_tree.mean(axis=0), per_tree.std(axis=0)


def fit_surrogate(
    archive: Archive,
    w: np.ndarray,
    cfg: ScalarizerConfig,
    space: ConfigSpace,
    seed: int = 0,
    n_trees: int = DEFAULT_FOREST_SIZE,
    min_leaf: int = 5,
) -> Surrogate:
    """Fit the forest on (encoded config -> scalarized objectives)."""
    if len(archive) < 4:
        raise InsufficientDataError(f"need at least 4 records, archive has {len(archive)}")
    X = np.stack([space.encode(r.config) for r in archive.records])
    y = scalarize_archive(archive, w, cfg)
    forest = RandomForestRegressor(
        n_estimators=n_trees,
        max_features=math.ceil(space.dimension / 3),
        min_samples_leaf=min_leaf,
        bootstrap=True,
        random_state=seed,
    )
    forest.fit(X, y)
    return Surrogate(forest)


def expected_improvement(mu: np.ndarray, sd: np.ndarray, best: float) -> np.ndarray:
    """E[max(best - Y, 0)] for Y ~ Normal(mu, sd^2); max(best - mu, 0) at sd=0."""
    improvement = best - mu
    out = np.maximum(improvement, 0.0)
    positive_sd = sd > 0.0
    z = np.zeros_like(mu)
    np.divide(improvement, sd, out=z, where=positive_sd)
    phi = np.exp(-0.5 * z**2) / math.sqrt(2.0 * math.pi)
    ei = improvement * ndtr(z) + sd * phi
    return np.where(positive_sd, ei, out)


def propose(
    surrogate: Surrogate,
    space: ConfigSpace,
    best: float,
    rng: np.random.Generator,
    n_candidates: int = DEFAULT_CANDIDATES,
    incumbent: PipelineConfig | None = None,
) -> PipelineConfig:
    """Candidate-sampling infill: uniform draws plus incumbent mutations.

    Returns the candidate maximizing expected improvement, ties broken by
    earliest candidate index; deterministic under a seeded generator.
    """
    if n_candidates < 1:
        raise ArgumentError("n_candidates must be >= 1")
    candidates = [space.sample(rng) for _ in range(n_candidates)]
    if incumbent is not None:
        candidates.extend(space.mutate(incumbent, rng) for _ in range(N_MUTATIONS))
    X = np.stack([space.encode(c) for c in candidates])
    mu, sd = surrogate.predict_mean_sd(X)
    ei = expected_improvement(mu, sd, best)
    return candidates[int(np.argmax(ei))]
