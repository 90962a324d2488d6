"""Per-class estimation: moments, TR square root, trimmed likelihood, choice of p.

The likelihood of one class at exponent ``p`` is built from depth alone:
depths of the training points are smoothed by a 1-d KDE, the KDE is mapped
back to a d-dimensional density with the L_p density-from-depth identity,
and log densities are summed over the points whose depth lies between two
empirical quantiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import LpModel, log_density_from_depth
from .errors import (
    DegenerateGeometryError,
    DomainError,
    InsufficientDataError,
    LpDepthError,
    SingularityError,
    TrimError,
)
from .kde import LOG_FLOOR, DepthKde

__all__ = [
    "ScatterEstimate",
    "TrSqrtResult",
    "PGrid",
    "TrimSpec",
    "DEFAULT_GRID",
    "MD_GRID",
    "moment_estimates",
    "tr_ratio",
    "tr_sqrt",
    "tr_candidates",
    "normalize_sqrt",
    "depth_sample",
    "trimmed_loglik",
    "estimate_p",
    "OrientationSearch",
    "NO_ORIENTATION",
    "best_orientation",
    "profile_class",
    "ClassFit",
    "prepare_class",
    "fit_class",
]

MIN_RETAINED = 8
DEPTH_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class ScatterEstimate:
    mu: np.ndarray
    sigma: np.ndarray
    n: int


@dataclass(frozen=True)
class TrSqrtResult:
    """Affine equivariant square root from a (d+1)-point basis.

    ``A_hat`` is the raw inverse basis ``X(alpha)^-1``; its overall scale
    depends on the chosen points. See :func:`normalize_sqrt`.
    """

    A_hat: np.ndarray
    alpha: tuple[int, ...]
    ratio: float
    tries_used: int


@dataclass(frozen=True)
class PGrid:
    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise DomainError("exponent grid is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise DomainError("exponent grid must be strictly ascending")
        if vals[0] < 1:
            raise DomainError("exponents must be >= 1")
        object.__setattr__(self, "values", vals)

    @classmethod
    def default(cls) -> "PGrid":
        return cls(tuple(2.0 ** ((i - 1) / 2) for i in range(1, 11)))

    @classmethod
    def parse(cls, text: str) -> "PGrid":
        return cls(tuple(sorted(float(v) for v in text.split(",") if v.strip())))

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)


DEFAULT_GRID = PGrid.default()
MD_GRID = PGrid((2.0,))


@dataclass(frozen=True)
class TrimSpec:
    lo: float = 0.02
    hi: float = 0.98

    def __post_init__(self):
        if not 0 < self.lo < self.hi < 1:
            raise DomainError(f"trim levels must satisfy 0 < lo < hi < 1, got {self.lo}, {self.hi}")

    @classmethod
    def parse(cls, text: str) -> "TrimSpec":
        lo, hi = (float(v) for v in text.split(","))
        return cls(lo, hi)


def moment_estimates(data) -> ScatterEstimate:
    """Sample mean and unbiased sample covariance."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2:
        raise DomainError("data must be an n x d matrix")
    n, d = x.shape
    if n < d + 2:
        raise InsufficientDataError(f"need at least d+2={d + 2} rows, got {n}")
    mu = x.mean(axis=0)
    xc = x - mu
    sigma = xc.T @ xc / (n - 1)
    sigma = 0.5 * (sigma + sigma.T)
    eig = np.linalg.eigvalsh(sigma)
    tr = float(np.trace(sigma))
    if not tr > 0 or eig[0] <= 1e-10 * tr / d:
        raise SingularityError("sample covariance is singular")
    return ScatterEstimate(mu, sigma, n)


def tr_ratio(Z) -> float:
    """``d det(Z)^(1/d) / trace(Z)``; 1 exactly when Z is a multiple of I."""
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    d = Z.shape[0]
    sign, logdet = np.linalg.slogdet(Z)
    if sign <= 0:
        return 0.0
    return float(d * math.exp(logdet / d) / np.trace(Z))


def _batch_ratios(data, est: ScatterEstimate, subsets):
    d = data.shape[1]
    pivot = data[subsets[:, d]]
    X = data[subsets[:, :d]] - pivot[:, None, :]  # (B, d columns, d coords)
    X = np.swapaxes(X, 1, 2)  # columns are differences
    L = np.linalg.cholesky(est.sigma)
    Y = np.linalg.solve(L[None, :, :], X)
    Z = np.swapaxes(Y, 1, 2) @ Y
    sign, logdet_x = np.linalg.slogdet(X)
    # nonsingularity is judged relative to sqrt(det sigma) so it is affine invariant
    _, logdet_s = np.linalg.slogdet(est.sigma)
    ok = (sign != 0) & (logdet_x - 0.5 * logdet_s > math.log(1e-10))
    ratios = np.zeros(len(subsets))
    if ok.any():
        zs, zl = np.linalg.slogdet(Z[ok])
        tr = np.trace(Z[ok], axis1=1, axis2=2)
        ratios[ok] = np.where(zs > 0, d * np.exp(zl / d) / tr, 0.0)
    return X, ok, ratios


def tr_candidates(
    data,
    est: ScatterEstimate,
    rng: np.random.Generator,
    n_candidates: int = 1,
    max_tries: int = 5000,
    threshold: float = 0.99,
    batch: int = 256,
) -> list[TrSqrtResult]:
    """Random (d+1)-subsets in draw order whose ratio reaches ``threshold``.

    Returns the first ``n_candidates`` qualifying subsets. If fewer qualify
    within ``max_tries`` draws, the best non-qualifying subsets seen fill the
    remaining slots.
    """
    x = np.asarray(data, dtype=float)
    n, d = x.shape
    if n < d + 1:
        raise InsufficientDataError(f"need at least d+1={d + 1} rows, got {n}")
    found: list[TrSqrtResult] = []
    seen_best: list[tuple[float, int, tuple[int, ...], np.ndarray]] = []
    tries = 0
    while tries < max_tries and len(found) < n_candidates:
        b = min(batch, max_tries - tries)
        subsets = rng.integers(0, n, size=(b, d + 1))
        X, ok, ratios = _batch_ratios(x, est, subsets)
        for i in range(b):
            tries += 1
            if not ok[i]:
                continue
            alpha = tuple(int(v) for v in subsets[i])
            if len(set(alpha)) < d + 1:
                continue
            if ratios[i] >= threshold:
                found.append(TrSqrtResult(np.linalg.inv(X[i]), alpha, float(ratios[i]), tries))
                if len(found) == n_candidates:
                    break
            else:
                seen_best.append((float(ratios[i]), tries, alpha, X[i]))
                if len(seen_best) > 4 * n_candidates:
                    seen_best.sort(key=lambda t: (-t[0], t[1]))
                    del seen_best[n_candidates:]
    if len(found) < n_candidates:
        seen_best.sort(key=lambda t: (-t[0], t[1]))
        for ratio, _, alpha, X in seen_best[: n_candidates - len(found)]:
            found.append(TrSqrtResult(np.linalg.inv(X), alpha, ratio, tries))
    if not found:
        raise DegenerateGeometryError(f"no nonsingular subset found in {max_tries} tries")
    return found


def tr_sqrt(data, est: ScatterEstimate, rng: np.random.Generator, max_tries: int = 5000) -> TrSqrtResult:
    """First random subset with ratio >= 0.99, else the best one seen."""
    return tr_candidates(data, est, rng, 1, max_tries)[0]


def normalize_sqrt(A, sigma) -> np.ndarray:
    """Rescale ``A`` so that ``|det A| = det(sigma)^(-1/2)``.

    A TR root is only determined up to a scalar; fixing the determinant makes
    depths of different classes comparable while keeping affine equivariance.
    """
    A = np.asarray(A, dtype=float)
    d = A.shape[0]
    _, logdet_a = np.linalg.slogdet(A)
    _, logdet_s = np.linalg.slogdet(np.asarray(sigma, dtype=float))
    return A * math.exp((-0.5 * logdet_s - logdet_a) / d)


def depth_sample(data, b, A, p: float) -> np.ndarray:
    return 1.0 / (1.0 + LpModel(p, b, A).radius(np.asarray(data, dtype=float)))


@dataclass(frozen=True)
class _LikFit:
    value: float
    model: LpModel
    kde: DepthKde
    depths: np.ndarray
    retained: np.ndarray


def _loglik(data, model: LpModel, trim: TrimSpec, fast: bool = False) -> _LikFit:
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != model.dim:
        raise DomainError("data dimension does not match the model")
    delta = 1.0 / (1.0 + model.radius(x))
    z1, z2 = np.quantile(delta, [trim.lo, trim.hi])
    keep = (delta >= z1) & (delta <= z2)
    if keep.sum() < MIN_RETAINED:
        raise TrimError(f"only {int(keep.sum())} points survive trimming; need {MIN_RETAINED}")
    kde = DepthKde.fit(delta)
    dk = delta[keep]
    g = kde.eval_binned(dk) if fast else kde.eval(dk)
    log_g = np.log(np.maximum(g, np.exp(LOG_FLOOR)))
    d = model.dim
    if d > 1:
        dk = np.minimum(dk, DEPTH_CLAMP)
    terms = log_density_from_depth(dk, log_g, model, d)
    return _LikFit(float(np.maximum(terms, LOG_FLOOR).sum()), model, kde, delta, keep)


def trimmed_loglik(data, b, A, p: float, trim: TrimSpec = TrimSpec(), fast: bool = False) -> float:
    """Sum of log estimated densities over depth-trimmed training points.

    The KDE is fitted on every depth; trimming only restricts the sum.
    ``fast`` swaps exact KDE evaluation for the binned approximation.
    """
    return _loglik(data, LpModel(p, b, A), trim, fast).value


def _argmax_smallest(values) -> int:
    best = 0
    for i, v in enumerate(values):
        if v > values[best]:
            best = i
    return best


def estimate_p(data, b, A, grid: PGrid = DEFAULT_GRID, trim: TrimSpec = TrimSpec()):
    """Grid maximiser of the trimmed log-likelihood (ties go to the smaller p).

    Returns ``(p_hat, {p: score})``. Grid points whose fit fails score -inf;
    if every point fails the first error is raised.
    """
    scores: dict[float, float] = {}
    first_err: Exception | None = None
    for p in grid:
        try:
            scores[p] = trimmed_loglik(data, b, A, p, trim)
        except LpDepthError as err:
            first_err = first_err or err
            scores[p] = -math.inf
    if all(v == -math.inf for v in scores.values()):
        raise first_err
    ps = list(scores)
    return ps[_argmax_smallest([scores[p] for p in ps])], scores


@dataclass(frozen=True)
class OrientationSearch:
    """Likelihood search over rotations applied after the TR root.

    A TR root fixes the transform only up to an orthogonal factor, which
    leaves the L_p unit ball at an arbitrary angle when p != 2. For each p the
    rotation (mod 90 degrees, per coordinate plane) with the largest trimmed
    likelihood is kept: ``n_angles`` evenly spaced angles, then ``refine``
    bisection steps around the best one. Planes are swept once, in order.
    Skipped for p = 2, d = 1 and d > ``max_dim``.

    Each fitted angle costs ``0.5 log n`` in the returned score (BIC charge),
    so the rotation-free p = 2 model is not beaten by search noise alone.
    """

    n_angles: int = 18
    refine: int = 2
    max_dim: int = 3
    enabled: bool = True
    penalize: bool = True

    def active(self, p: float, d: int) -> bool:
        return self.enabled and p != 2.0 and 1 < d <= self.max_dim


NO_ORIENTATION = OrientationSearch(enabled=False)


def givens(d: int, i: int, j: int, theta: float) -> np.ndarray:
    G = np.eye(d)
    c, s = math.cos(theta), math.sin(theta)
    G[i, i] = G[j, j] = c
    G[i, j], G[j, i] = -s, s
    return G


def _safe_score(x, b, A, p, trim) -> float:
    try:
        return trimmed_loglik(x, b, A, p, trim, fast=True)
    except LpDepthError:
        return -math.inf


def best_orientation(x, b, A0, p: float, trim: TrimSpec, search: OrientationSearch):
    """Returns ``(score, A)`` maximising the screened likelihood at ``p``."""
    A0 = np.asarray(A0, dtype=float)
    d = A0.shape[0]
    if not search.active(p, d):
        return _safe_score(x, b, A0, p, trim), A0
    A = A0
    v_best = -math.inf
    period = 0.5 * math.pi
    for i in range(d - 1):
        for j in range(i + 1, d):
            thetas = [k * period / search.n_angles for k in range(search.n_angles)]
            vals = [_safe_score(x, b, givens(d, i, j, t) @ A, p, trim) for t in thetas]
            k = _argmax_smallest(vals)
            t_best, v_best = thetas[k], vals[k]
            step = period / search.n_angles
            for _ in range(search.refine):
                step *= 0.5
                for t in (t_best - step, t_best + step):
                    v = _safe_score(x, b, givens(d, i, j, t) @ A, p, trim)
                    if v > v_best:
                        t_best, v_best = t, v
            A = givens(d, i, j, t_best) @ A
    if search.penalize:
        v_best -= 0.5 * math.log(len(x)) * d * (d - 1) / 2
    return v_best, A


def profile_class(x, est: ScatterEstimate, A0, grid: PGrid, trim: TrimSpec,
                  search: OrientationSearch) -> list[tuple[float, np.ndarray]]:
    """Per grid exponent: best screened likelihood and its transform."""
    out = [best_orientation(x, est.mu, A0, p, trim, search) for p in grid]
    if all(v == -math.inf for v, _ in out):
        # surface the underlying error
        trimmed_loglik(x, est.mu, A0, grid.values[0], trim)
        raise TrimError("no exponent on the grid gives a usable likelihood")
    return out


@dataclass(frozen=True)
class ClassFit:
    """Everything fitted for one class at its chosen exponent."""

    model: LpModel
    kde: DepthKde
    est: ScatterEstimate = field(repr=False)
    tr: TrSqrtResult = field(repr=False)
    scores: dict = field(repr=False)
    depths: np.ndarray = field(repr=False)


def prepare_class(data, rng: np.random.Generator, max_tries: int = 5000):
    """Moments and the determinant-normalised TR root for one class."""
    x = np.asarray(data, dtype=float)
    est = moment_estimates(x)
    tr = tr_sqrt(x, est, rng, max_tries)
    return x, est, tr, normalize_sqrt(tr.A_hat, est.sigma)


def finish_class(x, est, tr, grid: PGrid, profile, j: int, trim: TrimSpec) -> ClassFit:
    p = grid.values[j]
    lik = _loglik(x, LpModel(p, est.mu, profile[j][1]), trim)
    scores = {q: float(v) for q, (v, _) in zip(grid, profile)}
    return ClassFit(lik.model, lik.kde, est, tr, scores, lik.depths)


def fit_class(
    data,
    rng: np.random.Generator,
    grid: PGrid = DEFAULT_GRID,
    trim: TrimSpec = TrimSpec(),
    search: OrientationSearch = OrientationSearch(),
    max_tries: int = 5000,
) -> ClassFit:
    """Moments -> TR root -> per-p orientation -> argmax over the grid."""
    x, est, tr, A0 = prepare_class(data, rng, max_tries)
    profile = profile_class(x, est, A0, grid, trim, search)
    j = _argmax_smallest([v for v, _ in profile])
    return finish_class(x, est, tr, grid, profile, j, trim)
