"""L_p norms, L_p depth and the density-from-depth identity.

For a density of the form ``psi(||A(x - b)||_p)`` the depth
``delta = 1 / (1 + ||A(x - b)||_p)`` carries all the information needed to
reconstruct the density from the one-dimensional density ``g`` of the depth:

    f(x) = |det A| * C(p, d) * g(delta) * delta**(d + 1) / (1 - delta)**(d - 1)

with ``C(p, d) = p**(d-1) Gamma(d/p) / (2**d Gamma(1/p)**d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, SingularityError

__all__ = [
    "LpModel",
    "lp_norm",
    "depth",
    "lp_constant",
    "log_lp_constant",
    "density_from_depth",
    "log_density_from_depth",
]

_DET_TOL = 1e-300


def _check_p(p: float) -> None:
    if not (p >= 1.0) or not math.isfinite(p):
        raise DomainError(f"exponent p must be a finite real >= 1, got {p!r}")


def lp_norm(z, p: float):
    """L_p norm of a vector, or row-wise norms of a 2-d array.

    Powers are taken as ``exp(p * log|z|)`` after dividing by the largest
    absolute entry, so large exponents neither overflow nor underflow.
    """
    _check_p(p)
    z = np.asarray(z, dtype=float)
    if z.ndim == 0 or z.shape[-1] == 0:
        raise DomainError("lp_norm needs a non-empty vector")
    a = np.abs(z)
    m = a.max(axis=-1, keepdims=True)
    safe_m = np.where(m > 0, m, 1.0)
    u = a / safe_m
    with np.errstate(divide="ignore"):
        powers = np.where(u > 0, np.exp(p * np.log(np.where(u > 0, u, 1.0))), 0.0)
    s = powers.sum(axis=-1)
    out = np.squeeze(m, axis=-1) * np.exp(np.log(np.where(s > 0, s, 1.0)) / p)
    out = np.where(np.squeeze(m, axis=-1) > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class LpModel:
    """Fitted L_p geometry of one class: ``r(x) = ||A (x - b)||_p``."""

    p: float
    b: np.ndarray
    A: np.ndarray
    abs_det_A: float = field(init=False)

    def __post_init__(self):
        _check_p(self.p)
        b = np.array(self.b, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float)
        if A.ndim == 0:
            A = A.reshape(1, 1)
        if A.shape != (b.size, b.size):
            raise DomainError(f"A has shape {A.shape}, expected {(b.size, b.size)}")
        det = abs(float(np.linalg.det(A)))
        if not det > _DET_TOL or not math.isfinite(det):
            raise SingularityError("transform A is singular")
        b.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "abs_det_A", det)

    @property
    def dim(self) -> int:
        return self.b.size

    def with_p(self, p: float) -> "LpModel":
        return LpModel(p, self.b, self.A)

    def radius(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DomainError(f"point has dimension {x.shape[-1]}, model has {self.dim}")
        return lp_norm((x - self.b) @ self.A.T, self.p)


def depth(x, m: LpModel):
    """L_p depth ``1 / (1 + ||A(x - b)||_p)``; vectorised over rows of ``x``."""
    return 1.0 / (1.0 + m.radius(x))


def log_lp_constant(p: float, d: int) -> float:
    _check_p(p)
    if d < 1 or int(d) != d:
        raise DomainError(f"dimension must be a positive integer, got {d!r}")
    return (
        (d - 1) * math.log(p)
        + math.lgamma(d / p)
        - d * math.log(2.0)
        - d * math.lgamma(1.0 / p)
    )


def lp_constant(p: float, d: int) -> float:
    """``p**(d-1) Gamma(d/p) / (2**d Gamma(1/p)**d)``."""
    return math.exp(log_lp_constant(p, d))


def _depth_factor_log(delta, d: int):
    delta = np.asarray(delta, dtype=float)
    if np.any(delta <= 0) or np.any(delta > 1):
        raise DomainError("depth values must lie in (0, 1]")
    if d > 1 and np.any(delta >= 1):
        raise SingularityError("depth 1 is singular for d > 1; trim or clamp first")
    out = (d + 1) * np.log(delta)
    if d > 1:
        out = out - (d - 1) * np.log1p(-delta)
    return out


def log_density_from_depth(delta, log_g, m: LpModel, d: int | None = None):
    d = m.dim if d is None else d
    return (
        math.log(m.abs_det_A)
        + log_lp_constant(m.p, d)
        + np.asarray(log_g, dtype=float)
        + _depth_factor_log(delta, d)
    )


def density_from_depth(delta, g_at_delta, m: LpModel, d: int | None = None):
    """Density at a point from its depth and the depth density there.

    ``(1 - delta)**(d - 1)`` is taken as 1 when ``d == 1``, so ``delta = 1``
    is allowed only in one dimension.
    """
    d = m.dim if d is None else d
    g = np.asarray(g_at_delta, dtype=float)
    if np.any(g < 0):
        raise DomainError("depth density must be non-negative")
    scale = m.abs_det_A * lp_constant(m.p, d)
    out = scale * g * np.exp(_depth_factor_log(delta, d))
    return float(out) if out.ndim == 0 else out
