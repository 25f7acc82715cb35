"""Reference numeric implementations of the six CNCC stages.

Each stage is the smallest deterministic computation honoring its dataflow
contract:

    SC  <Mi, Mn, Es>        -> <Sa, Sv>    top-k local contrast
    DL  <Sa, Ma>, <Sv, Mv>  -> <Fa, Fv>    random features + softmax readout
    CC  <Fa, Mt>, <Fv, Ms>  -> <Ct, Cs>    Bayes posterior
    EL  <Ct, Cs, Fa, Fv>    -> Cp          weighted vote, AdaBoost weights
    RL  <Cp>                -> <Ei, Es>    scalar error feedback
    IL  <Ei, Cp>            -> <Mp, Ma, Mv, Mt, Ms, Mn>   EMA memory
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, NoExperts

PROB_TOL = 1e-9


def stage_seed(seed: int, stage: str, iteration: int = 0) -> int:
    """Stage-local 64-bit seed: blake2b over ``"{seed}:{stage}:{iteration}"``."""
    digest = hashlib.blake2b(f"{seed}:{stage}:{iteration}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


# --- payload types -------------------------------------------------------------


@dataclass(frozen=True)
class MediaSample:
    """One media item: an H×W "image" and a length-T "audio" track."""

    spatial: np.ndarray
    temporal: np.ndarray
    label: int | None = None

    def __post_init__(self) -> None:
        spatial = np.asarray(self.spatial, dtype=np.float64)
        temporal = np.asarray(self.temporal, dtype=np.float64)
        if spatial.ndim != 2 or min(spatial.shape) < 1:
            raise DimensionMismatch(f"spatial modality must be a non-empty matrix, got {spatial.shape}")
        if temporal.ndim != 1 or temporal.size < 1:
            raise DimensionMismatch(f"temporal modality must be a non-empty vector, got {temporal.shape}")
        if not (np.isfinite(spatial).all() and np.isfinite(temporal).all()):
            raise ValueError("media samples must be finite")
        object.__setattr__(self, "spatial", spatial)
        object.__setattr__(self, "temporal", temporal)

    @property
    def shape(self) -> tuple[int, int, int]:
        h, w = self.spatial.shape
        return h, w, self.temporal.size


@dataclass(frozen=True)
class SparseMap:
    """Sparse map stored as flat indices (ascending) and values."""

    shape: tuple[int, ...]
    indices: np.ndarray
    values: np.ndarray

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def nnz(self) -> int:
        return int(np.count_nonzero(self.values))

    def dense(self) -> np.ndarray:
        out = np.zeros(self.size)
        out[self.indices] = self.values
        return out.reshape(self.shape)


@dataclass(frozen=True)
class SaliencyPair:
    temporal: SparseMap  # Sa
    spatial: SparseMap  # Sv
    sparsity: float
    degenerate: bool = False


@dataclass(frozen=True)
class SenseFeatures:
    temporal: np.ndarray  # Fa, samples × classes
    spatial: np.ndarray  # Fv


@dataclass(frozen=True)
class PerceptFeatures:
    temporal: np.ndarray  # Ct
    spatial: np.ndarray  # Cs
    degenerate: bool = False


@dataclass(frozen=True)
class SemanticDecision:
    """Cp: the winning label, its share of the vote, and every class's share."""

    label: int
    score: float
    shares: np.ndarray


@dataclass(frozen=True)
class Reinforcement:
    ei: float
    es: float
    error: float


@dataclass(frozen=True)
class Increments:
    """What IL emits: one increment per feedback consumer."""

    mp: np.ndarray
    ma: np.ndarray
    mv: np.ndarray
    mt: np.ndarray
    ms: np.ndarray
    mn: np.ndarray

    def is_zero(self) -> bool:
        return all(not np.any(getattr(self, f)) for f in ("mp", "ma", "mv", "mt", "ms", "mn"))

    def zeroed(self) -> Increments:
        return Increments(*(np.zeros_like(getattr(self, f)) for f in ("mp", "ma", "mv", "mt", "ms", "mn")))


@dataclass(frozen=True)
class FeedbackBundle:
    """Accumulated feedback carried between iterations."""

    ei: float
    es: float
    mp: np.ndarray
    ma: np.ndarray
    mv: np.ndarray
    mt: np.ndarray
    ms: np.ndarray
    mn: np.ndarray

    def __post_init__(self) -> None:
        if not (math.isfinite(self.ei) and math.isfinite(self.es)) or self.ei < 0 or self.es < 0:
            raise ValueError("Ei and Es must be finite and non-negative")

    @classmethod
    def neutral(cls, n_classes: int, hidden: int, attention: int) -> FeedbackBundle:
        c = n_classes
        return cls(
            0.0, 0.0, np.zeros(c), np.zeros((hidden, c)), np.zeros((hidden, c)),
            np.zeros(c), np.zeros(c), np.zeros(attention),
        )

    def apply(self, inc: Increments, ei: float, es: float) -> FeedbackBundle:
        return FeedbackBundle(
            ei, es,
            self.mp + inc.mp, self.ma + inc.ma, self.mv + inc.mv,
            self.mt + inc.mt, self.ms + inc.ms, self.mn + inc.mn,
        )


# --- SC ----------------------------------------------------------------------


@dataclass(frozen=True)
class ScConfig:
    sparsity: float = 0.25
    window: int = 3

    def __post_init__(self) -> None:
        if not 0 < self.sparsity <= 1:
            raise ValueError("sparsity must lie in (0, 1]")
        if self.window < 1 or self.window % 2 == 0:
            raise ValueError("window must be a positive odd integer")


def local_mean(x: np.ndarray, window: int) -> np.ndarray:
    """Mean over a centered ``window``-wide box; edges replicate the border."""
    r = window // 2
    padded = np.pad(x, r, mode="edge")
    view = np.lib.stride_tricks.sliding_window_view(padded, (window,) * x.ndim)
    return view.mean(axis=tuple(range(x.ndim, 2 * x.ndim)))


def top_k_count(sparsity: float, size: int) -> int:
    return math.ceil(round(sparsity * size, 9))


def _sparse_top_k(contrast: np.ndarray, sparsity: float) -> SparseMap:
    flat = contrast.ravel()
    k = top_k_count(sparsity, flat.size)
    order = np.argsort(-flat, kind="stable")
    keep = order[:k]
    keep = np.sort(keep[flat[keep] > 0])
    return SparseMap(contrast.shape, keep, flat[keep].copy())


def stage_sc(sample: MediaSample, mn=0.0, es: float = 0.0, cfg: ScConfig = ScConfig()) -> SaliencyPair:
    """Saliency: ``max(0, |x - local mean| + Mn) * (1 + Es)``, then keep the top k.

    ``mn`` biases the temporal entries first, then the flattened spatial ones.
    A modality whose entries are all equal yields an all-zero map and sets
    ``degenerate``.
    """
    h, w, t = sample.shape
    mn = np.broadcast_to(np.asarray(mn, dtype=np.float64), (t + h * w,))
    maps, degenerate = [], False
    for x, bias in ((sample.temporal, mn[:t]), (sample.spatial, mn[t:].reshape(h, w))):
        if np.all(x == x.flat[0]):
            degenerate = True
            maps.append(SparseMap(x.shape, np.zeros(0, dtype=np.int64), np.zeros(0)))
            continue
        contrast = np.maximum(0.0, np.abs(x - local_mean(x, cfg.window)) + bias) * (1.0 + es)
        maps.append(_sparse_top_k(contrast, cfg.sparsity))
    return SaliencyPair(maps[0], maps[1], cfg.sparsity, degenerate)


def saliency_batch(samples: Sequence[MediaSample], mn, es: float, cfg: ScConfig) -> tuple[np.ndarray, np.ndarray]:
    """Dense Sa (n×T) and Sv (n×HW) for a batch."""
    pairs = [stage_sc(s, mn, es, cfg) for s in samples]
    sa = np.stack([p.temporal.dense() for p in pairs])
    sv = np.stack([p.spatial.dense().ravel() for p in pairs])
    return sa, sv


# --- DL ----------------------------------------------------------------------


def softmax_rows(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _unit_rows(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return np.divide(x, norms, out=np.zeros_like(x), where=norms > 0)


@dataclass(frozen=True)
class RandomFeatureModel:
    """Per modality: fixed random projection, ReLU, linear readout."""

    projection_t: np.ndarray
    projection_s: np.ndarray
    readout_t: np.ndarray
    bias_t: np.ndarray
    readout_s: np.ndarray
    bias_s: np.ndarray
    gain: float = 5.0

    @classmethod
    def init(cls, seed: int, temporal_dim: int, spatial_dim: int, n_classes: int,
             hidden: int = 64, gain: float = 5.0) -> RandomFeatureModel:
        rng = np.random.default_rng(seed)
        pt = rng.standard_normal((temporal_dim, hidden))
        ps = rng.standard_normal((spatial_dim, hidden))
        zeros = np.zeros((hidden, n_classes))
        return cls(pt, ps, zeros, np.zeros(n_classes), zeros.copy(), np.zeros(n_classes), gain)

    @property
    def hidden_size(self) -> int:
        return self.projection_t.shape[1]

    @property
    def n_classes(self) -> int:
        return self.readout_t.shape[1]

    def hidden(self, x: np.ndarray, modality: str) -> np.ndarray:
        proj = self.projection_t if modality == "temporal" else self.projection_s
        if x.ndim != 2 or x.shape[1] != proj.shape[0]:
            raise DimensionMismatch(f"{modality} input has shape {x.shape}, projection expects width {proj.shape[0]}")
        return np.maximum(0.0, _unit_rows(x) @ proj)

    def fit(self, sa: np.ndarray, sv: np.ndarray, labels: np.ndarray, ridge: float = 1e-2) -> RandomFeatureModel:
        """Ridge-regress the readouts onto one-hot labels."""
        y = np.eye(self.n_classes)[np.asarray(labels)]
        fitted = {}
        for key, x in (("t", sa), ("s", sv)):
            hid = self.hidden(x, "temporal" if key == "t" else "spatial")
            mu_h, mu_y = hid.mean(axis=0), y.mean(axis=0)
            hc = hid - mu_h
            gram = hc.T @ hc + ridge * np.eye(hid.shape[1])
            weights = np.linalg.solve(gram, hc.T @ (y - mu_y))
            fitted[f"readout_{key}"] = weights
            fitted[f"bias_{key}"] = mu_y - mu_h @ weights
        return replace(self, **fitted)


def stage_dl(sa: np.ndarray, ma: np.ndarray, sv: np.ndarray, mv: np.ndarray,
             model: RandomFeatureModel) -> SenseFeatures:
    """Sense features: softmax(gain * (relu(x P) (R + increment) + b)) per modality."""
    out = []
    for x, inc, readout, bias, modality in (
        (sa, ma, model.readout_t, model.bias_t, "temporal"),
        (sv, mv, model.readout_s, model.bias_s, "spatial"),
    ):
        inc = np.asarray(inc, dtype=np.float64)
        if inc.shape != readout.shape:
            raise DimensionMismatch(f"{modality} increment has shape {inc.shape}, readout is {readout.shape}")
        hid = model.hidden(np.atleast_2d(np.asarray(x, dtype=np.float64)), modality)
        out.append(softmax_rows(model.gain * (hid @ (readout + inc) + bias)))
    return SenseFeatures(out[0], out[1])


# --- CC ----------------------------------------------------------------------


def _check_prior(prior: np.ndarray) -> np.ndarray:
    prior = np.asarray(prior, dtype=np.float64)
    if prior.ndim != 1 or np.any(prior < 0) or abs(prior.sum() - 1.0) > PROB_TOL:
        raise ValueError("prior must be a probability vector")
    return prior


def posterior(features: np.ndarray, increment, prior: np.ndarray) -> tuple[np.ndarray, bool]:
    """``prior * max(0, mean row + increment)``, renormalized.

    Returns ``(prior, True)`` when every class clips to zero mass.
    """
    likelihood = np.maximum(0.0, np.atleast_2d(features).mean(axis=0) + increment)
    unnorm = prior * likelihood
    total = unnorm.sum()
    if not total > 0:
        return prior.copy(), True
    return unnorm / total, False


def stage_cc(fa: np.ndarray, mt, fv: np.ndarray, ms, prior: np.ndarray) -> PerceptFeatures:
    prior = _check_prior(prior)
    for name, f in (("Fa", fa), ("Fv", fv)):
        if np.atleast_2d(f).shape[1] != prior.size:
            raise DimensionMismatch(f"{name} has {np.atleast_2d(f).shape[1]} classes, prior has {prior.size}")
    ct, dt = posterior(fa, mt, prior)
    cs, ds = posterior(fv, ms, prior)
    return PerceptFeatures(ct, cs, dt or ds)


# --- EL ----------------------------------------------------------------------

EXPERTS = ("Ct", "Cs", "Fa", "Fv")


def adaboost_weights(errors: Sequence[float]) -> np.ndarray:
    """``alpha = 1/2 ln((1 - e) / e)`` with e clamped to [1e-6, 1 - 1e-6].

    Experts no better than chance get weight 0 instead of a negative vote.
    """
    eps = np.clip(np.asarray(errors, dtype=np.float64), 1e-6, 1 - 1e-6)
    return np.maximum(0.0, 0.5 * np.log((1 - eps) / eps))


def expert_votes(ct, cs, fa, fv) -> list[int]:
    return [
        int(np.argmax(ct)),
        int(np.argmax(cs)),
        int(np.argmax(np.atleast_2d(fa).mean(axis=0))),
        int(np.argmax(np.atleast_2d(fv).mean(axis=0))),
    ]


def stage_el(ct, cs, fa, fv, weights: Sequence[float]) -> SemanticDecision:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (len(EXPERTS),):
        raise DimensionMismatch(f"need {len(EXPERTS)} expert weights, got {weights.shape}")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("expert weights must be finite and non-negative")
    total = weights.sum()
    if not total > 0:
        raise NoExperts("every expert has zero weight")
    mass = np.zeros(np.asarray(ct).size)
    for vote, w in zip(expert_votes(ct, cs, fa, fv), weights):
        mass[vote] += w
    label = int(np.argmax(mass))  # first maximum: smallest class index wins ties
    shares = mass / total
    return SemanticDecision(label, float(shares[label]), shares)


# --- RL ----------------------------------------------------------------------


def decision_error(cp: SemanticDecision, expected) -> float:
    """Total-variation distance between the vote shares and the expectation.

    For a class label ``y`` this is ``1 - share[y]``.
    """
    if np.ndim(expected) == 0:
        target = np.zeros(cp.shares.size)
        target[int(expected)] = 1.0
    else:
        target = _check_prior(expected)
    return float(min(1.0, max(0.0, 0.5 * np.abs(cp.shares - target).sum())))


def stage_rl(cp: SemanticDecision, expected, lambda_s: float = 0.5, lambda_i: float = 1.0) -> Reinforcement:
    if lambda_s <= 0 or lambda_i <= 0:
        raise ValueError("feedback gains must be positive")
    e = decision_error(cp, expected)
    return Reinforcement(lambda_i * e, lambda_s * e, e)


# --- IL ----------------------------------------------------------------------

# observation name -> (consumer, projection of the per-class delta matrix)
_PROJECTIONS: dict[str, tuple[str, Callable[[np.ndarray], np.ndarray]]] = {
    "hidden_temporal": ("ma", lambda d: d.T),
    "hidden_spatial": ("mv", lambda d: d.T),
    "topic_temporal": ("mt", np.diag),
    "topic_spatial": ("ms", np.diag),
    "saliency": ("mn", lambda d: d.mean(axis=0)),
    "shares": ("mp", np.diag),
}
OBSERVATIONS = tuple(_PROJECTIONS)


@dataclass(frozen=True)
class MemoryHistory:
    """Per-class running means, one (classes × dim) table per observation."""

    stats: Mapping[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def zeros(cls, n_classes: int, dims: Mapping[str, int]) -> MemoryHistory:
        return cls({name: np.zeros((n_classes, dims[name])) for name in OBSERVATIONS})

    def equals(self, other: MemoryHistory) -> bool:
        return self.stats.keys() == other.stats.keys() and all(
            np.array_equal(self.stats[k], other.stats[k]) for k in self.stats
        )


@dataclass(frozen=True)
class ILResult:
    increments: Increments
    history: MemoryHistory
    accepted: bool
    candidate_error: float | None = None


def stage_il(
    ei: float,
    decisions: Sequence[int],
    history: MemoryHistory,
    observations: Mapping[str, np.ndarray],
    eta: float = 0.1,
    evaluate: Callable[[Increments], float] | None = None,
    last_error: float | None = None,
) -> ILResult:
    """EMA memory update at rate ``eta * Ei`` grouped by decided class.

    Increments are the change of each running mean, projected to the shape of
    the stage that consumes it. With ``evaluate`` and ``last_error`` given, a
    candidate that would raise the error is zeroed and the history kept as is.
    """
    rate = float(np.clip(eta * ei, 0.0, 1.0))
    decisions = np.asarray(decisions, dtype=np.int64)
    new_stats, parts = {}, {}
    for name, (consumer, project) in _PROJECTIONS.items():
        old = history.stats[name]
        obs = np.asarray(observations[name], dtype=np.float64)
        new = old.copy()
        if rate > 0:
            for c in np.unique(decisions):
                new[c] = old[c] + rate * (obs[decisions == c].mean(axis=0) - old[c])
        new_stats[name] = new
        parts[consumer] = project(new - old)
    increments = Increments(**parts)
    updated = MemoryHistory(new_stats)

    if evaluate is None or last_error is None or increments.is_zero():
        return ILResult(increments, updated, True)
    candidate = evaluate(increments)
    if candidate > last_error:
        return ILResult(increments.zeroed(), history, False, candidate)
    return ILResult(increments, updated, True, candidate)
