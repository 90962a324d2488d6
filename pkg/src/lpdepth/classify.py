"""Maximum-depth and density-ratio classifiers built on fitted L_p depths."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .core import LpModel, depth, log_density_from_depth
from .errors import DomainError, InsufficientDataError
from .fit import (
    DEFAULT_GRID,
    DEPTH_CLAMP,
    ClassFit,
    OrientationSearch,
    PGrid,
    TrimSpec,
    _argmax_smallest,
    finish_class,
    prepare_class,
    profile_class,
)
from .kde import DENSITY_FLOOR, LOG_FLOOR, DepthKde

__all__ = [
    "TrainedClass",
    "MaxDepthClassifier",
    "ClassifierD2",
    "fit_common_p",
    "train_max_depth",
    "train_d2",
    "classify_d1",
    "classify_d2",
    "class_density",
    "log_class_density",
    "select_threshold",
    "cv_error",
    "fit_threshold_k",
    "sample_priors",
]

MIN_CLASS_SIZE = 8
_LOG_RATIO_CAP = 700.0


@dataclass(frozen=True)
class TrainedClass:
    model: LpModel
    kde: DepthKde
    prior: float
    label: str
    nj: int
    tr_ratio: float = math.nan

    @property
    def dim(self) -> int:
        return self.model.dim


def _trained(fit: ClassFit, prior: float, label) -> TrainedClass:
    return TrainedClass(fit.model, fit.kde, float(prior), str(label), int(fit.kde.n), float(fit.tr.ratio))


def sample_priors(class_data) -> list[float]:
    counts = [len(x) for x in class_data]
    total = sum(counts)
    return [c / total for c in counts]


def _resolve_priors(class_data, priors):
    if priors is None or priors == "sample":
        return sample_priors(class_data)
    if priors == "equal":
        return [1.0 / len(class_data)] * len(class_data)
    priors = [float(v) for v in priors]
    if len(priors) != len(class_data) or abs(sum(priors) - 1) > 1e-12 or min(priors) <= 0:
        raise DomainError("priors must be positive, one per class, and sum to 1")
    return priors


def _check_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != d:
        raise DomainError(f"points have dimension {x.shape[-1]}, classifier expects {d}")
    return x


# -- densities ---------------------------------------------------------------


def _log_density_at(delta, log_g, c: TrainedClass):
    d = c.dim
    if d > 1:
        delta = np.minimum(delta, DEPTH_CLAMP)
    out = log_density_from_depth(delta, np.maximum(log_g, LOG_FLOOR), c.model, d)
    return np.maximum(out, LOG_FLOOR)


def log_class_density(x, c: TrainedClass):
    x = _check_points(x, c.dim)
    delta = depth(x, c.model)
    return _log_density_at(delta, c.kde.log_eval(delta), c)


def class_density(x, c: TrainedClass):
    """Estimated class density, floored at 1e-300.

    Depth 1 (the fitted centre) is nudged to ``1 - 1e-12`` when d > 1.
    """
    logf = log_class_density(x, c)
    out = np.where(logf <= LOG_FLOOR, DENSITY_FLOOR, np.exp(logf))
    return float(out) if np.ndim(out) == 0 else out


# -- maximum depth -----------------------------------------------------------


def _fit_common(class_data, grid, trim, rng, search, max_tries=5000):
    prepared = [prepare_class(x, rng, max_tries) for x in class_data]
    profiles = [profile_class(x, est, A0, grid, trim, search) for x, est, _, A0 in prepared]
    totals = [sum(prof[j][0] for prof in profiles) for j in range(len(grid))]
    j = _argmax_smallest(totals)
    fits = [finish_class(x, est, tr, grid, prof, j, trim)
            for (x, est, tr, _), prof in zip(prepared, profiles)]
    return grid.values[j], fits


def fit_common_p(
    class_data,
    grid: PGrid = DEFAULT_GRID,
    trim: TrimSpec = TrimSpec(),
    rng: np.random.Generator | None = None,
    search: OrientationSearch = OrientationSearch(),
) -> float:
    """Exponent maximising the summed per-class trimmed likelihoods."""
    rng = np.random.default_rng(0) if rng is None else rng
    return _fit_common(class_data, grid, trim, rng, search)[0]


@dataclass(frozen=True)
class MaxDepthClassifier:
    classes: tuple[TrainedClass, ...]

    kind = "d1"

    @property
    def dim(self) -> int:
        return self.classes[0].dim

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.classes]

    def depths(self, x) -> np.ndarray:
        x = _check_points(np.atleast_2d(x), self.dim)
        return np.column_stack([depth(x, c.model) for c in self.classes])

    def predict_index(self, x) -> np.ndarray:
        # argmax returns the first maximum, i.e. the smallest class index on ties
        return np.argmax(self.depths(x), axis=1)

    def predict(self, x) -> list[str]:
        return [self.classes[i].label for i in self.predict_index(x)]


def train_max_depth(
    class_data,
    labels=None,
    grid: PGrid = DEFAULT_GRID,
    trim: TrimSpec = TrimSpec(),
    rng: np.random.Generator | None = None,
    priors=None,
    search: OrientationSearch = OrientationSearch(),
) -> MaxDepthClassifier:
    rng = np.random.default_rng(0) if rng is None else rng
    labels = [str(i + 1) for i in range(len(class_data))] if labels is None else labels
    _, fits = _fit_common(class_data, grid, trim, rng, search)
    pri = _resolve_priors(class_data, priors)
    return MaxDepthClassifier(tuple(_trained(f, q, l) for f, q, l in zip(fits, pri, labels)))


def classify_d1(x, classes) -> str:
    """Label of the class in which ``x`` is deepest (ties: first class)."""
    if len({c.model.p for c in classes}) != 1:
        raise DomainError("maximum depth classification needs one common exponent")
    return MaxDepthClassifier(tuple(classes)).predict(np.atleast_2d(x))[0]


# -- density ratio with cross-validated threshold -----------------------------


def cv_error(k: float, ratios_a, ratios_b, prior_a: float, prior_b: float) -> float:
    """Leave-one-out error estimate at threshold ``k``.

    ``ratios_*`` are ``f_a / f_b`` at the held-out points of each class.
    A class-a point is wrong when its ratio is <= k; a class-b point when
    ``f_b / f_a <= 1 / k``.
    """
    ra = np.asarray(ratios_a, dtype=float)
    rb = np.asarray(ratios_b, dtype=float)
    err_a = np.count_nonzero(ra <= k) / ra.size
    err_b = np.count_nonzero(1.0 / rb <= 1.0 / k) / rb.size
    return prior_a * err_a + prior_b * err_b


def select_threshold(ratios_a, ratios_b, prior_a: float, prior_b: float) -> tuple[float, float]:
    """Exact minimiser of :func:`cv_error` over k.

    The error is piecewise constant with jumps only at observed ratios, so
    midpoints of consecutive ratios plus one value beyond each end cover every
    attainable value. Ties go to the k closest (in log scale) to
    ``prior_b / prior_a``, then to the smaller k.
    """
    ra = np.sort(np.asarray(ratios_a, dtype=float))
    rb = np.sort(np.asarray(ratios_b, dtype=float))
    u = np.unique(np.concatenate([ra, rb]))
    cands = np.concatenate([[u[0] / 2.0], 0.5 * (u[:-1] + u[1:]), [u[-1] * 2.0]])
    err = (prior_a * np.searchsorted(ra, cands, side="right") / ra.size
           + prior_b * (rb.size - np.searchsorted(rb, cands, side="left")) / rb.size)
    best = err.min()
    tied = np.flatnonzero(err <= best + 1e-15)
    target = math.log(prior_b / prior_a)
    dist = np.abs(np.log(cands[tied]) - target)
    pick = tied[np.flatnonzero(dist <= dist.min() + 1e-15)[0]]
    return float(cands[pick]), float(err[pick])


def _loo_log_density(x, c: TrainedClass):
    """Own-class log density at training points, each point's depth left out
    of the KDE (location, transform, exponent and bandwidth are kept)."""
    delta = depth(x, c.model)
    g = c.kde.eval_leave_one_out(delta, delta)
    return _log_density_at(delta, np.log(np.maximum(g, 1e-300)), c)


def _ratios(log_num, log_den):
    return np.exp(np.clip(log_num - log_den, -_LOG_RATIO_CAP, _LOG_RATIO_CAP))


def fit_threshold_k(class_a: TrainedClass, class_b: TrainedClass, train_a, train_b,
                    return_error: bool = False):
    """Cross-validated threshold for ``f_a / f_b > k``."""
    train_a = _check_points(train_a, class_a.dim)
    train_b = _check_points(train_b, class_b.dim)
    if len(train_a) < MIN_CLASS_SIZE or len(train_b) < MIN_CLASS_SIZE:
        raise InsufficientDataError(f"threshold selection needs {MIN_CLASS_SIZE} points per class")
    ra = _ratios(_loo_log_density(train_a, class_a), log_class_density(train_a, class_b))
    rb = _ratios(log_class_density(train_b, class_a), _loo_log_density(train_b, class_b))
    total = class_a.prior + class_b.prior
    k, err = select_threshold(ra, rb, class_a.prior / total, class_b.prior / total)
    return (k, err) if return_error else k


@dataclass(frozen=True)
class ClassifierD2:
    classes: tuple[TrainedClass, ...]
    thresholds: dict = field(default_factory=dict)

    kind = "d2"

    def __post_init__(self):
        J = len(self.classes)
        want = set(combinations(range(J), 2))
        if set(self.thresholds) != want:
            raise DomainError("need exactly one threshold per unordered class pair")
        for k in self.thresholds.values():
            if not (k > 0 and math.isfinite(k)):
                raise DomainError(f"thresholds must be finite and positive, got {k}")

    @property
    def dim(self) -> int:
        return self.classes[0].dim

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.classes]

    def log_densities(self, x) -> np.ndarray:
        x = _check_points(np.atleast_2d(x), self.dim)
        return np.column_stack([log_class_density(x, c) for c in self.classes])

    def votes(self, x) -> np.ndarray:
        logf = self.log_densities(x)
        v = np.zeros_like(logf, dtype=int)
        for (i, j), k in self.thresholds.items():
            win_i = logf[:, i] - logf[:, j] > math.log(k)
            v[:, i] += win_i
            v[:, j] += ~win_i
        return v

    def predict_index(self, x) -> np.ndarray:
        return np.argmax(self.votes(x), axis=1)

    def predict(self, x) -> list[str]:
        return [self.classes[i].label for i in self.predict_index(x)]


def classify_d2(x, c: ClassifierD2) -> str:
    """Pairwise ratio votes; a ratio equal to the threshold votes for the
    second class of the pair; vote ties go to the smallest class index."""
    return c.predict(np.atleast_2d(x))[0]


def train_d2(
    class_data,
    labels=None,
    grid: PGrid = DEFAULT_GRID,
    trim: TrimSpec = TrimSpec(),
    rng: np.random.Generator | None = None,
    priors=None,
    search: OrientationSearch = OrientationSearch(),
) -> ClassifierD2:
    """Per-class exponents, then one cross-validated threshold per pair."""
    from .fit import fit_class

    rng = np.random.default_rng(0) if rng is None else rng
    labels = [str(i + 1) for i in range(len(class_data))] if labels is None else labels
    if len(class_data) < 2:
        raise DomainError("classification needs at least two classes")
    pri = _resolve_priors(class_data, priors)
    classes = tuple(
        _trained(fit_class(x, rng, grid, trim, search), q, l)
        for x, q, l in zip(class_data, pri, labels)
    )
    thresholds = {
        (i, j): fit_threshold_k(classes[i], classes[j], class_data[i], class_data[j])
        for i, j in combinations(range(len(classes)), 2)
    }
    return ClassifierD2(classes, thresholds)
