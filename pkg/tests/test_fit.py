import math

import numpy as np
import pytest

from lpdepth.classify import fit_common_p
from lpdepth.core import LpModel, depth, log_density_from_depth
from lpdepth.errors import DomainError, InsufficientDataError, SingularityError, TrimError
from lpdepth.fit import (
    DEFAULT_GRID,
    MD_GRID,
    NO_ORIENTATION,
    PGrid,
    TrimSpec,
    depth_sample,
    estimate_p,
    fit_class,
    moment_estimates,
    normalize_sqrt,
    tr_candidates,
    tr_ratio,
    tr_sqrt,
    trimmed_loglik,
)
from lpdepth.kde import DepthKde
from lpdepth.synth import LpSymmetricSpec, sample_lp

from oracles import lp_radial_entropy_kl


def test_default_grid():
    np.testing.assert_allclose(DEFAULT_GRID.values, [2 ** ((i - 1) / 2) for i in range(1, 11)])


@pytest.mark.parametrize("bad", [(), (2.0, 1.0), (0.5, 2.0)])
def test_grid_validation(bad):
    with pytest.raises(DomainError):
        PGrid(bad)


def test_trim_validation():
    with pytest.raises(DomainError):
        TrimSpec(0.6, 0.4)


class TestMoments:
    def test_square(self):
        est = moment_estimates([[0, 0], [2, 0], [0, 2], [2, 2]])
        np.testing.assert_allclose(est.mu, [1, 1])
        np.testing.assert_allclose(est.sigma, np.diag([4 / 3, 4 / 3]))

    def test_repeated_point(self):
        with pytest.raises(SingularityError):
            moment_estimates(np.ones((4, 2)))

    def test_too_few_rows(self):
        with pytest.raises(InsufficientDataError):
            moment_estimates(np.random.default_rng(0).normal(size=(3, 2)))

    def test_affine_equivariance(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 3))
        M = rng.normal(size=(3, 3))
        c = rng.normal(size=3)
        e0, e1 = moment_estimates(x), moment_estimates(x @ M.T + c)
        np.testing.assert_allclose(e1.mu, M @ e0.mu + c, atol=1e-12)
        np.testing.assert_allclose(e1.sigma, M @ e0.sigma @ M.T, rtol=1e-10, atol=1e-12)


class TestTrRoot:
    def test_ratio_identity(self):
        assert tr_ratio(3.7 * np.eye(4)) == pytest.approx(1.0, rel=1e-14)

    def test_ratio_diag(self):
        assert tr_ratio(np.diag([1.0, 4.0])) == pytest.approx(0.8, rel=1e-14)

    def test_one_dimensional(self):
        x = np.random.default_rng(0).normal(size=(20, 1))
        res = tr_sqrt(x, moment_estimates(x), np.random.default_rng(1))
        i, j = res.alpha
        assert res.ratio == 1.0
        assert res.A_hat[0, 0] == pytest.approx(1 / (x[i, 0] - x[j, 0]))

    def test_reaches_threshold(self):
        x = np.random.default_rng(2).normal(size=(300, 2))
        res = tr_sqrt(x, moment_estimates(x), np.random.default_rng(3))
        assert res.ratio >= 0.99
        assert len(set(res.alpha)) == 3

    def test_affine_equivariance(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(200, 2))
        M = np.array([[2.0, 0.7], [-0.4, 0.5]])
        c = np.array([3.0, -1.0])
        y = x @ M.T + c
        r0 = tr_sqrt(x, moment_estimates(x), np.random.default_rng(9))
        r1 = tr_sqrt(y, moment_estimates(y), np.random.default_rng(9))
        assert r0.alpha == r1.alpha
        np.testing.assert_allclose(r1.A_hat, r0.A_hat @ np.linalg.inv(M), rtol=1e-9, atol=1e-12)

    def test_fallback_returns_best_seen(self):
        x = np.random.default_rng(5).normal(size=(40, 3))
        out = tr_candidates(x, moment_estimates(x), np.random.default_rng(6), 1, max_tries=10, threshold=1.1)
        assert 0 < out[0].ratio < 1.0

    def test_normalization(self):
        A = np.array([[1.0, 2.0], [0.5, 3.0]])
        sigma = np.array([[2.0, 0.3], [0.3, 1.0]])
        An = normalize_sqrt(A, sigma)
        assert abs(np.linalg.det(An)) == pytest.approx(np.linalg.det(sigma) ** -0.5)
        np.testing.assert_allclose(An / An[0, 0], A / A[0, 0])


class TestLikelihood:
    def test_depth_sample_example(self):
        out = depth_sample([[1, 0], [0, 3]], [0, 0], np.eye(2), 1)
        np.testing.assert_allclose(out, [0.5, 0.25])

    def test_depth_sample_center(self):
        assert depth_sample([[1.0, 2.0]], [1.0, 2.0], np.eye(2), 3)[0] == 1.0

    def test_permutation(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(30, 2))
        perm = rng.permutation(30)
        a = depth_sample(x, [0, 0], np.eye(2), 1.5)
        np.testing.assert_array_equal(depth_sample(x[perm], [0, 0], np.eye(2), 1.5), a[perm])

    def test_reference_sum_and_retained_count(self):
        rng = np.random.default_rng(1)
        x = rng.laplace(size=(100, 2))
        b, A, p = x.mean(0), np.eye(2), 1.0
        m = LpModel(p, b, A)
        delta = depth(x, m)
        srt = np.sort(delta)
        # type-7 quantiles at 0.02 and 0.98 for n = 100
        lo = srt[1] + 0.98 * (srt[2] - srt[1])
        hi = srt[97] + 0.02 * (srt[98] - srt[97])
        keep = (delta >= lo) & (delta <= hi)
        assert keep.sum() == 96
        kde = DepthKde.fit(delta)
        want = float(np.sum(log_density_from_depth(delta[keep], np.log(kde.eval(delta[keep])), m)))
        assert trimmed_loglik(x, b, A, p) == pytest.approx(want, rel=1e-12)

    def test_fast_screening_close(self):
        x = np.random.default_rng(2).normal(size=(1000, 2))
        exact = trimmed_loglik(x, x.mean(0), np.eye(2), 2.0)
        fast = trimmed_loglik(x, x.mean(0), np.eye(2), 2.0, fast=True)
        assert fast == pytest.approx(exact, abs=0.05)

    def test_aggressive_trim(self):
        with pytest.raises(TrimError):
            trimmed_loglik([[0.0], [1.0]], [0.5], [[1.0]], 2.0, TrimSpec(0.49, 0.51))

    def test_singleton_grid(self):
        x = np.random.default_rng(3).laplace(size=(200, 2))
        p, scores = estimate_p(x, x.mean(0), np.eye(2), MD_GRID)
        assert p == 2.0 and list(scores) == [2.0]

    def test_estimate_p_axis_aligned(self):
        spec = LpSymmetricSpec(1.0, [0, 0], np.eye(2))
        x = sample_lp(spec, 2000, np.random.default_rng(4))
        p, scores = estimate_p(x, x.mean(0), np.eye(2))
        assert p == 1.0
        assert set(scores) == set(DEFAULT_GRID.values)


class TestFitClass:
    def test_singleton_grid(self):
        x = np.random.default_rng(0).laplace(size=(300, 2))
        fit = fit_class(x, np.random.default_rng(1), MD_GRID)
        assert fit.model.p == 2.0

    def test_common_p_single_class_matches_fit_class(self):
        x = np.random.default_rng(2).laplace(size=(400, 2))
        p1 = fit_common_p([x], rng=np.random.default_rng(5))
        p2 = fit_class(x, np.random.default_rng(5)).model.p
        assert p1 == p2

    def test_common_p_singleton_grid(self):
        rng = np.random.default_rng(3)
        assert fit_common_p([rng.normal(size=(50, 2)), rng.normal(size=(60, 2))], MD_GRID) == 2.0

    def test_common_p_shifted_copies(self):
        hits = 0
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x = sample_lp(LpSymmetricSpec(2.0, [0, 0], np.eye(2), 2.0), 1000, rng)
            hits += fit_common_p([x, x + [3.0, 1.0]], rng=rng) == 2.0
        assert hits >= 18

    def test_p0_off_grid_goes_to_kl_minimiser(self):
        grid = DEFAULT_GRID.values[:6]
        kl = {p: lp_radial_entropy_kl(3.0, p)[0] for p in grid}
        target = min(kl, key=kl.get)
        assert target == pytest.approx(2**1.5)
        picks = []
        for seed in range(20):
            x = sample_lp(LpSymmetricSpec(3.0, [0, 0], np.eye(2)), 2000, np.random.default_rng(seed))
            picks.append(estimate_p(x, x.mean(0), np.eye(2))[0])
        assert max(set(picks), key=picks.count) == target
        assert picks.count(target) > len(picks) / 2

    def test_orientation_off_is_plain_tr(self):
        x = np.random.default_rng(6).normal(size=(200, 2))
        fit = fit_class(x, np.random.default_rng(7), PGrid((1.0,)), search=NO_ORIENTATION)
        assert fit.tr.ratio >= 0.99
        An = normalize_sqrt(fit.tr.A_hat, fit.est.sigma)
        np.testing.assert_allclose(fit.model.A, An)
