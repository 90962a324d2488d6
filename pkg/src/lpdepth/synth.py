"""Exponential-power l_p-symmetric distributions, Bayes risk and contour grids."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import LpModel, depth
from .errors import DomainError

__all__ = [
    "LpSymmetricSpec",
    "TwoClassProblem",
    "sample_lp",
    "bayes_risk_mc",
    "contour_grid",
    "write_contour_csv",
    "rotation",
]


@dataclass(frozen=True)
class LpSymmetricSpec:
    """Density ``c exp(-||A(x - b)||_p^p / sigma)``."""

    p: float
    b: np.ndarray
    A: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.p >= 1:
            raise DomainError("p must be >= 1")
        b = np.array(self.b, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float).reshape(b.size, b.size)
        b.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)

    @property
    def dim(self) -> int:
        return self.b.size

    @property
    def model(self) -> LpModel:
        return LpModel(self.p, self.b, self.A)

    def log_norm_const(self) -> float:
        p, d = self.p, self.dim
        one = math.log(p) - math.log(2.0) - math.log(self.sigma) / p - math.lgamma(1.0 / p)
        return d * one + math.log(abs(np.linalg.det(self.A)))

    def log_pdf(self, x):
        r = self.model.radius(np.asarray(x, dtype=float))
        return self.log_norm_const() - r**self.p / self.sigma

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def affine_image(self, M, c) -> "LpSymmetricSpec":
        """Law of ``M x + c`` when ``x`` follows this spec."""
        M = np.asarray(M, dtype=float)
        return LpSymmetricSpec(self.p, M @ self.b + np.asarray(c, dtype=float),
                               self.A @ np.linalg.inv(M), self.sigma)


@dataclass(frozen=True)
class TwoClassProblem:
    spec_a: LpSymmetricSpec
    spec_b: LpSymmetricSpec
    priors: tuple[float, float] = (0.5, 0.5)

    def __post_init__(self):
        pa, pb = self.priors
        if not (pa > 0 and pb > 0 and abs(pa + pb - 1) < 1e-12):
            raise DomainError("priors must be positive and sum to 1")


def sample_lp(spec: LpSymmetricSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points: i.i.d. generalized-normal coordinates mapped by A^-1."""
    if n < 1:
        raise DomainError("n must be >= 1")
    d = spec.dim
    g = rng.standard_gamma(1.0 / spec.p, size=(n, d))
    s = np.where(rng.random((n, d)) < 0.5, -1.0, 1.0)
    z = s * (spec.sigma * g) ** (1.0 / spec.p)
    return spec.b + z @ np.linalg.inv(spec.A).T


def bayes_risk_mc(problem: TwoClassProblem, n_mc: int, rng: np.random.Generator):
    """Monte Carlo error of the true-density Bayes rule; returns ``(risk, se)``."""
    if n_mc < 10_000:
        raise DomainError("n_mc must be at least 10^4")
    pa, pb = problem.priors
    from_a = rng.random(n_mc) < pa
    na = int(from_a.sum())
    x = np.empty((n_mc, problem.spec_a.dim))
    x[from_a] = sample_lp(problem.spec_a, na, rng)
    x[~from_a] = sample_lp(problem.spec_b, n_mc - na, rng)
    log_ratio = problem.spec_a.log_pdf(x) - problem.spec_b.log_pdf(x)
    say_a = log_ratio > math.log(pb / pa)
    risk = float(np.mean(say_a != from_a))
    return risk, math.sqrt(risk * (1 - risk) / n_mc)


def rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def contour_grid(model, bounds, resolution: int, value: str = "depth"):
    """Row-major grid of depth (or true density, for a spec) values.

    ``bounds`` is ``(xmin, xmax, ymin, ymax)``. Returns ``(xs, ys, values)``
    where ``values[i, j]`` belongs to ``(xs[j], ys[i])``.
    """
    if resolution < 16:
        raise DomainError("resolution must be at least 16")
    lp_model = model.model if isinstance(model, LpSymmetricSpec) else model
    if lp_model.dim != 2:
        raise DomainError(f"contour grids need d = 2, got d = {lp_model.dim}")
    x0, x1, y0, y1 = (float(v) for v in bounds)
    xs = np.linspace(x0, x1, resolution)
    ys = np.linspace(y0, y1, resolution)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    if value == "depth":
        vals = depth(pts, lp_model)
    elif value == "density":
        if not isinstance(model, LpSymmetricSpec):
            raise DomainError("density grids need a distribution spec")
        vals = model.pdf(pts)
    else:
        raise DomainError(f"unknown grid value {value!r}")
    return xs, ys, vals.reshape(resolution, resolution)


def write_contour_csv(path, xs, ys, values) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "value"])
        for i, y in enumerate(ys):
            for j, x in enumerate(xs):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{values[i, j]:.17g}"])

