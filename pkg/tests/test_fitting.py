import numpy as np
import pytest
import scipy.optimize
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from refdist import (
    FitResult,
    Histogram,
    HistogramDensityEstimator,
    Lnorm3Params,
    NelderMeadConfig,
    Norm3Params,
    build_histogram,
    fit_histogram,
    lnorm3_pdf,
    lnorm3_sample,
    norm3_pdf,
    normalize_histogram,
    sse_objective,
)

LIGHT = NelderMeadConfig(max_iter=1200, xtol=1e-7, ftol=1e-10, restarts=2)


def lnorm3_histogram(truth, n, seed, bins=50):
    return build_histogram(lnorm3_sample(truth, n, seed=seed), bins=bins)


class TestSseObjective:
    def test_perfect_fit_is_zero(self):
        """A density that already is a norm3 pdf at the centers scores 0."""
        params = Norm3Params(mu=5.0, sigma=1.0, d=0.0)
        edges = -3.0 + np.arange(65) * 0.25  # cover 8 sigma both sides
        centers = 0.5 * (edges[:-1] + edges[1:])
        dens = norm3_pdf(centers, params)
        hist = Histogram(edges=edges, frequencies=dens, is_density=True)
        assert sse_objective(hist, "norm3", params) == pytest.approx(0.0, abs=1e-28)

    def test_uniform_density_vs_constant_pdf_level(self):
        # densities [0.5, 0.5] against pdf values [0.4, 0.4] give 2*(0.1)^2
        sigma = scipy.optimize.brentq(
            lambda s: np.exp(-1.0 / (8 * s * s)) / (s * np.sqrt(2 * np.pi)) - 0.4,
            0.5,
            0.9,
        )
        params = Norm3Params(mu=1.0, sigma=sigma, d=0.0)
        centers = np.array([0.5, 1.5])
        np.testing.assert_allclose(norm3_pdf(centers, params), [0.4, 0.4], atol=1e-12)
        hist = Histogram(edges=[0.0, 1.0, 2.0], frequencies=[0.5, 0.5], is_density=True)
        assert sse_objective(hist, "norm3", params) == pytest.approx(0.02, abs=1e-12)

    def test_matches_manual_sum_any_order(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        hist = normalize_histogram(lnorm3_histogram(truth, 20000, seed=1, bins=30))
        centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
        err = hist.frequencies - lnorm3_pdf(centers, truth)
        forward = float(np.sum(err**2))
        reverse = float(np.sum(np.flip(err) ** 2))
        got = sse_objective(hist, "lnorm3", truth)
        assert got == pytest.approx(forward, rel=1e-15)
        assert forward == pytest.approx(reverse, rel=1e-15)

    def test_normalizes_raw_counts_first(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        raw = lnorm3_histogram(truth, 20000, seed=1, bins=30)
        assert sse_objective(raw, "lnorm3", truth) == sse_objective(
            normalize_histogram(raw), "lnorm3", truth
        )

    def test_finite_even_when_shift_crosses_bins(self):
        # d above several bin centers zeroes those pdf values, nothing blows up
        hist = normalize_histogram(
            Histogram(edges=[0.0, 1.0, 2.0, 3.0, 4.0], frequencies=[1.0, 2.0, 2.0, 1.0])
        )
        params = Lnorm3Params(mu=0.0, sigma=0.5, d=2.2)
        value = sse_objective(hist, "lnorm3", params)
        assert np.isfinite(value) and value > 0

    def test_width_weighted_variant(self):
        hist = normalize_histogram(
            Histogram(edges=[0.0, 1.0, 3.0, 4.0, 6.0], frequencies=[1.0, 2.0, 2.0, 1.0])
        )
        params = Norm3Params(mu=2.5, sigma=1.5, d=0.0)
        centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
        err = hist.frequencies - norm3_pdf(centers, params)
        want = float(np.sum(np.diff(hist.edges) * err**2))
        got = sse_objective(hist, "norm3", params, weight_by_width=True)
        assert got == pytest.approx(want, rel=1e-15)

    def test_unknown_family_rejected(self):
        hist = Histogram(edges=[0, 1, 2], frequencies=[0.5, 0.5], is_density=True)
        with pytest.raises(ValueError):
            sse_objective(hist, "boxcox", Lnorm3Params(0, 1, 0))


class TestFitHistogram:
    def test_needs_four_bins(self):
        hist = Histogram(edges=[0.0, 1.0, 2.0, 3.0], frequencies=[1.0, 2.0, 1.0])
        with pytest.raises(ValueError):
            fit_histogram(hist, family="lnorm3")

    def test_recovers_seeded_truth(self):
        """10^5 draws of (0.5, 0.3, 10) on 50 bins land close to the truth.

        The d tolerance is scaled by sigma*e^mu, the natural shift scale;
        this instance sits well inside the estimator's sampling spread.
        """
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        result = fit_histogram(lnorm3_histogram(truth, 10**5, seed=0), family="lnorm3", seed=0)
        got = result.params
        scale = truth.sigma * np.exp(truth.mu)
        assert abs(got.mu - truth.mu) / truth.mu < 0.02
        assert abs(got.sigma - truth.sigma) / truth.sigma < 0.02
        assert abs(got.d - truth.d) / scale < 0.02
        assert result.converged

    def test_result_sse_is_exactly_the_objective(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.4, d=3.0)
        hist = lnorm3_histogram(truth, 20000, seed=2, bins=40)
        result = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=2)
        assert result.sse == sse_objective(hist, "lnorm3", result.params)

    def test_constraints_hold_by_construction(self):
        truth = Lnorm3Params(mu=0.2, sigma=0.7, d=-4.0)
        hist = lnorm3_histogram(truth, 20000, seed=3, bins=40)
        result = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=3)
        centers = 0.5 * (hist.edges[:-1] + hist.edges[1:])
        assert result.params.sigma > 0
        assert result.params.d < centers[0]

    def test_norm3_exact_density_reaches_floor(self):
        # a density that IS a norm3 pdf at the centers is exactly representable
        params = Norm3Params(mu=5.0, sigma=1.0, d=0.0)
        edges = -3.0 + np.arange(65) * 0.25
        centers = 0.5 * (edges[:-1] + edges[1:])
        hist = Histogram(edges=edges, frequencies=norm3_pdf(centers, params), is_density=True)
        result = fit_histogram(hist, family="norm3", seed=0)
        assert result.sse < 1e-12

    def test_norm3_fit_recovers_normal_data(self):
        rng = np.random.default_rng(11)
        hist = build_histogram(rng.normal(30.0, 5.0, size=50000), bins=60)
        result = fit_histogram(hist, family="norm3", config=LIGHT, seed=1)
        assert result.params.d + result.params.mu == pytest.approx(30.0, abs=0.2)
        assert result.params.sigma == pytest.approx(5.0, rel=0.03)

    def test_lnorm3_beats_norm3_on_right_skew(self):
        truth = Lnorm3Params(mu=0.6, sigma=0.6, d=5.0)
        hist = lnorm3_histogram(truth, 20000, seed=5, bins=40)
        sse_l = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=5).sse
        sse_n = fit_histogram(hist, family="norm3", config=LIGHT, seed=5).sse
        assert sse_l <= sse_n

    def test_deterministic(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        hist = lnorm3_histogram(truth, 20000, seed=7, bins=40)
        a = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=7)
        b = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=7)
        assert a == b

    def test_seed_changes_restart_jitter_only(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        hist = lnorm3_histogram(truth, 20000, seed=7, bins=40)
        a = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=7)
        b = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=8)
        # both land in the same basin even if the paths differ
        assert a.params.mu == pytest.approx(b.params.mu, rel=1e-3)

    def test_shift_property(self):
        """Shifting every edge by c moves d by c and nothing else."""
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        samples = lnorm3_sample(truth, 30000, seed=9)
        # dyadic edges so the shifted grid is exactly representable
        base = build_histogram(samples, bins=50, range=(10.0, 16.25))
        c = 2.0
        shifted = Histogram(
            edges=base.edges + c,
            frequencies=base.frequencies,
            sample_size=base.sample_size,
        )
        fit_a = fit_histogram(base, family="lnorm3", config=LIGHT, seed=9)
        fit_b = fit_histogram(shifted, family="lnorm3", config=LIGHT, seed=9)
        assert fit_b.params.d == pytest.approx(fit_a.params.d + c, abs=1e-6)
        assert fit_b.params.mu == pytest.approx(fit_a.params.mu, abs=1e-6)
        assert fit_b.params.sigma == pytest.approx(fit_a.params.sigma, abs=1e-6)
        assert fit_b.sse == pytest.approx(fit_a.sse, rel=1e-6)

    def test_error_shrinks_with_sample_size(self):
        """Median recovery error over 20 seeds drops at each size decade."""
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        medians = []
        for n in (10**3, 10**4, 10**5):
            errs = []
            for seed in range(20):
                hist = lnorm3_histogram(truth, n, seed=seed)
                got = fit_histogram(hist, family="lnorm3", config=LIGHT, seed=seed).params
                errs.append(
                    np.sqrt(
                        ((got.mu - truth.mu) / truth.mu) ** 2
                        + ((got.sigma - truth.sigma) / truth.sigma) ** 2
                        + ((got.d - truth.d) / truth.d) ** 2
                    )
                )
            medians.append(float(np.median(errs)))
        assert medians[0] > medians[1] > medians[2]


class TestEstimatorApi:
    def test_fit_from_raw_samples_matches_functional_path(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        samples = lnorm3_sample(truth, 20000, seed=3)
        est = HistogramDensityEstimator(family="lnorm3", bins=40, config=LIGHT, seed=3)
        est.fit(samples)
        direct = fit_histogram(
            build_histogram(samples, bins=40), family="lnorm3", config=LIGHT, seed=3
        )
        assert est.result_ == direct
        assert est.params_ == direct.params
        assert est.sse_ == direct.sse

    def test_fit_accepts_prebuilt_histogram(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        hist = lnorm3_histogram(truth, 20000, seed=4, bins=40)
        est = HistogramDensityEstimator(family="lnorm3", config=LIGHT, seed=4).fit(hist)
        assert est.result_ == fit_histogram(hist, family="lnorm3", config=LIGHT, seed=4)

    def test_unfitted_raises(self):
        est = HistogramDensityEstimator()
        with pytest.raises(NotFittedError):
            est.pdf(1.0)

    def test_sklearn_clone_round_trip(self):
        est = HistogramDensityEstimator(family="norm3", bins=25, seed=9)
        cloned = clone(est)
        assert cloned.get_params() == est.get_params()

    def test_score_samples_is_log_density(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        samples = lnorm3_sample(truth, 20000, seed=5)
        est = HistogramDensityEstimator(family="lnorm3", bins=40, config=LIGHT, seed=5)
        est.fit(samples)
        x = np.array([11.0, 12.0, 14.0])
        np.testing.assert_allclose(est.score_samples(x), np.log(est.pdf(x)), rtol=1e-12)
        assert est.score_samples([est.params_.d - 1.0])[0] == -np.inf

    def test_expected_value_matches_params(self):
        truth = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
        est = HistogramDensityEstimator(family="lnorm3", bins=40, config=LIGHT, seed=6)
        est.fit(lnorm3_sample(truth, 20000, seed=6))
        assert est.expected_value() == est.params_.expected_value()

    def test_result_is_frozen(self):
        result = FitResult(
            params=Lnorm3Params(0.5, 0.3, 10.0), sse=0.0, iterations=1,
            converged=True, restarts_used=0,
        )
        with pytest.raises(AttributeError):
            result.sse = 1.0
