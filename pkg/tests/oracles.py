"""Independent reference computations used by the tests.

Nothing here calls into the package; formulas are coded from scratch with
scipy special functions and quadrature.
"""

import math

import numpy as np
from scipy import integrate, optimize, special, stats


def ep_density(x, p, b, A, sigma=1.0):
    """Exponential-power density c exp(-||A(x-b)||_p^p / sigma)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    z = (x - np.asarray(b, dtype=float)) @ A.T
    s = np.sum(np.abs(z) ** p, axis=1)
    c = abs(np.linalg.det(A)) * (p / (2.0 * sigma ** (1.0 / p) * special.gamma(1.0 / p))) ** d
    return c * np.exp(-s / sigma)


def ep_radius_pdf(r, p, d, sigma=1.0):
    """Density of R = ||A(X-b)||_p under the exponential-power law.

    R^p / sigma ~ Gamma(d/p, 1).
    """
    r = np.asarray(r, dtype=float)
    u = r**p / sigma
    return stats.gamma.pdf(u, d / p) * p * r ** (p - 1) / sigma


def ep_depth_pdf(delta, p, d, sigma=1.0, a0=1.0):
    """Density of depth 1/(1 + a0 R)."""
    delta = np.asarray(delta, dtype=float)
    r = (1.0 / delta - 1.0) / a0
    return ep_radius_pdf(r, p, d, sigma) / (a0 * delta**2)


def sj_exact(x):
    """Sheather-Jones solve-the-equation bandwidth with exact O(n^2) sums."""
    x = np.asarray(x, dtype=float)
    n = x.size
    diff = (x[:, None] - x[None, :]).ravel()
    sd = np.std(x, ddof=1)
    q75, q25 = np.percentile(x, [75, 25])
    scale = min(sd, (q75 - q25) / 1.349)

    def phi4(u):
        return (u**4 - 6 * u**2 + 3) * stats.norm.pdf(u)

    def phi6(u):
        return (u**6 - 15 * u**4 + 45 * u**2 - 15) * stats.norm.pdf(u)

    def S(a):
        return phi4(diff / a).sum() / (n * (n - 1) * a**5)

    def T(b):
        return -phi6(diff / b).sum() / (n * (n - 1) * b**7)

    a = 1.24 * scale * n ** (-1 / 7)
    b = 1.23 * scale * n ** (-1 / 9)
    coef = 1.357 * (S(a) / T(b)) ** (1 / 7)

    def f(h):
        return (1.0 / (2 * math.sqrt(math.pi) * n * S(coef * h ** (5 / 7)))) ** 0.2 - h

    return optimize.brentq(f, 1e-3 * sd, 3 * sd, xtol=1e-10)


def lp_radial_entropy_kl(p0, p, sigma=1.0, theta=0.0):
    """KL(f0 || best l_p-symmetric fit) for d = 2, f0 exponential power p0.

    The best density of the form psi(||R_theta x||_p) keeps the law of the
    radius R = ||R_theta X||_p and spreads it uniformly (in the l_p surface
    measure) over each sphere. Then

        KL = E log f0(X) + H(R) + E log(S_p R)

    where S_p r is the derivative of the l_p ball area 4 Gamma(1+1/p)^2 /
    Gamma(1+2/p) r^2. The radius law is computed by quadrature over angles.
    """
    c0 = (p0 / (2 * sigma ** (1 / p0) * special.gamma(1 / p0))) ** 2
    # E log f0 = log c0 - E ||X||^p0 / sigma = log c0 - d/p0
    e_log_f0 = math.log(c0) - 2.0 / p0

    def nrm(t, q):
        return (abs(math.cos(t)) ** q + abs(math.sin(t)) ** q) ** (1 / q)

    def h(r):
        # density of ||rot(x)||_p at r: integrate over the direction of rot(x)
        def integrand(t):
            rho = r / nrm(t, p)
            u = t - theta
            return c0 * math.exp(-(rho**p0) * nrm(u, p0) ** p0 / sigma) * rho / nrm(t, p)

        return integrate.quad(integrand, 0, 2 * math.pi, limit=200, points=[math.pi / 2, math.pi, 1.5 * math.pi])[0]

    upper = 12.0
    rs = np.linspace(1e-6, upper, 3001)
    hs = np.array([h(r) for r in rs])
    mass = np.trapezoid(hs, rs)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = -np.trapezoid(np.where(hs > 0, hs * np.log(hs), 0.0), rs)
        e_log_r = np.trapezoid(np.where(hs > 0, hs * np.log(rs), 0.0), rs)
    area = 4 * special.gamma(1 + 1 / p) ** 2 / special.gamma(1 + 2 / p)
    s_p = 2 * area  # derivative of area * r^2 is 2 area r
    return e_log_f0 + ent + math.log(s_p) + e_log_r, mass
