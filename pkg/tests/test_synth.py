import json
import math

import numpy as np
import pytest
import scipy.stats

import refdist as rd
from refdist import (
    CohortDef,
    CohortSpec,
    EmptyCohortError,
    ExclusionRule,
    ExperimentConfig,
    Lnorm3Params,
    NelderMeadConfig,
    apply_exclusion,
    default_experiment_config,
    generate_population,
    lnorm3_expected_value,
    pipeline_experiment,
    read_experiment_config,
    write_report,
)
from refdist.synth import config_from_dict, config_to_dict, near_pairs_of

TRUTH = Lnorm3Params(mu=0.5, sigma=0.3, d=10.0)
LIGHT = NelderMeadConfig(max_iter=1200, xtol=1e-7, ftol=1e-10, restarts=2)


def small_config(seed, **overrides):
    return default_experiment_config(
        seed, n_tests=overrides.pop("n_tests", 4),
        n_per_cohort=overrides.pop("n_per_cohort", 2000), **overrides
    )


class TestGeneratePopulation:
    def test_deterministic(self):
        spec = CohortSpec(truth=TRUTH, n=500, seed=9, rho=0.3)
        a = generate_population(spec)
        b = generate_population(spec)
        np.testing.assert_array_equal(a.values, b.values)
        np.testing.assert_array_equal(a.covariates, b.covariates)

    def test_values_are_lnorm3_draws(self):
        spec = CohortSpec(truth=TRUTH, n=20000, seed=1, rho=0.0)
        pop = generate_population(spec)
        assert np.all(pop.values > TRUTH.d)
        # one-sample KS against the exact cdf
        stat = scipy.stats.kstest(
            pop.values, lambda x: rd.lnorm3_cdf(x, TRUTH)
        ).pvalue
        assert stat > 0.01

    def test_independent_covariate_when_rho_zero(self):
        spec = CohortSpec(truth=TRUTH, n=10000, seed=2, rho=0.0)
        pop = generate_population(spec)
        corr = np.corrcoef(pop.values, pop.covariates)[0, 1]
        assert abs(corr) < 3 / math.sqrt(spec.n)

    def test_rank_correlation_tracks_rho(self):
        spec = CohortSpec(truth=TRUTH, n=20000, seed=3, rho=0.6)
        pop = generate_population(spec)
        rho_s = scipy.stats.spearmanr(pop.values, pop.covariates).statistic
        # Gaussian copula: spearman = 6/pi * asin(rho/2)
        want = 6 / np.pi * np.arcsin(0.6 / 2)
        assert rho_s == pytest.approx(want, abs=0.02)

    def test_mean_matches_expected_value(self):
        spec = CohortSpec(truth=TRUTH, n=10**6, seed=4, rho=0.3)
        pop = generate_population(spec)
        se = pop.values.std(ddof=1) / math.sqrt(pop.values.size)
        assert abs(pop.values.mean() - lnorm3_expected_value(TRUTH)) < 3 * se

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CohortSpec(truth=TRUTH, n=0, seed=0, rho=0.0)
        with pytest.raises(ValueError):
            CohortSpec(truth=TRUTH, n=10, seed=0, rho=1.5)


class TestApplyExclusion:
    def population(self, n=10000, seed=5):
        return generate_population(CohortSpec(truth=TRUTH, n=n, seed=seed, rho=0.3))

    def test_no_rules_is_identity(self):
        pop = self.population()
        result = apply_exclusion(pop, [])
        np.testing.assert_array_equal(result.population.values, pop.values)
        assert result.n_excluded == 0

    def test_conservation(self):
        pop = self.population()
        rule = ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=80.0)
        result = apply_exclusion(pop, [rule])
        assert result.n_kept + result.n_excluded == pop.values.size
        assert result.n_kept == result.population.values.size

    def test_80th_percentile_removes_a_fifth(self):
        pop = self.population(n=10000)
        rule = ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=80.0)
        result = apply_exclusion(pop, [rule])
        assert abs(result.n_excluded - math.ceil(0.2 * 10000)) <= 1

    def test_order_preserved(self):
        pop = self.population(n=500)
        rule = ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=50.0)
        kept = apply_exclusion(pop, [rule]).population.values
        mask = pop.values <= np.percentile(pop.values, 50.0)
        np.testing.assert_array_equal(kept, pop.values[mask])

    def test_upper_tail_cut_lowers_mean(self):
        pop = self.population()
        rule = ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=80.0)
        result = apply_exclusion(pop, [rule])
        assert result.population.values.mean() < pop.values.mean()

    def test_absolute_threshold(self):
        pop = self.population()
        rule = ExclusionRule(target="value", kind="upper_tail", unit="absolute", threshold=12.0)
        kept = apply_exclusion(pop, [rule]).population.values
        assert np.all(kept <= 12.0)

    def test_covariate_band(self):
        pop = self.population()
        rule = ExclusionRule(target="covariate", kind="band", unit="absolute", lo=-1.0, hi=1.0)
        kept = apply_exclusion(pop, [rule]).population
        assert np.all((kept.covariates >= -1.0) & (kept.covariates <= 1.0))

    def test_rules_combine_with_and(self):
        pop = self.population()
        r1 = ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=70.0)
        r2 = ExclusionRule(target="covariate", kind="lower_tail", unit="absolute", threshold=0.0)
        both = apply_exclusion(pop, [r1, r2]).n_kept
        only1 = apply_exclusion(pop, [r1]).n_kept
        only2 = apply_exclusion(pop, [r2]).n_kept
        assert both <= min(only1, only2)

    def test_empty_result_raises(self):
        pop = self.population(n=100)
        rule = ExclusionRule(target="value", kind="upper_tail", unit="absolute", threshold=TRUTH.d)
        with pytest.raises(EmptyCohortError):
            apply_exclusion(pop, [rule])

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            ExclusionRule(target="weight", kind="upper_tail", unit="absolute", threshold=1.0)
        with pytest.raises(ValueError):
            ExclusionRule(target="value", kind="band", unit="absolute", lo=2.0, hi=1.0)
        with pytest.raises(ValueError):
            ExclusionRule(target="value", kind="upper_tail", unit="percentile", threshold=130.0)


class TestMonotonicity:
    def test_stricter_cut_never_raises_fitted_mean(self):
        """Fitted expected value is nonincreasing as the upper-tail cut tightens."""
        truth = Lnorm3Params(mu=0.6, sigma=0.6, d=5.0)
        for seed in (0, 1, 2):
            pop = generate_population(CohortSpec(truth=truth, n=20000, seed=seed, rho=0.3))
            fitted = []
            for pct in (95.0, 85.0, 75.0, 65.0):
                rule = ExclusionRule(
                    target="value", kind="upper_tail", unit="percentile", threshold=pct
                )
                kept = apply_exclusion(pop, [rule]).population.values
                hist = rd.build_histogram(kept, bins=60)
                fit = rd.fit_histogram(hist, family="lnorm3", config=LIGHT, seed=seed)
                fitted.append(fit.params.expected_value())
            assert all(a >= b for a, b in zip(fitted, fitted[1:]))


class TestConfig:
    def test_default_layout(self):
        config = default_experiment_config(seed=0)
        assert len(config.cohorts) == 4
        with_rules = [c for c in config.cohorts if c.rules]
        without = [c for c in config.cohorts if not c.rules]
        assert len(with_rules) == 2 and len(without) == 2
        routes = {c.name: c.route for c in config.cohorts}
        assert sorted(routes.values()) == ["histogram", "histogram", "triple", "triple"]

    def test_near_pairs_by_rule_equality(self):
        config = default_experiment_config(seed=0)
        pairs = near_pairs_of(config)
        assert len(pairs) == 2
        names = {frozenset(p) for p in pairs}
        assert frozenset(("openA", "openB")) in names
        assert frozenset(("screenedA", "screenedB")) in names

    def test_exactly_four_cohorts_enforced(self):
        config = default_experiment_config(seed=0)
        with pytest.raises(ValueError):
            ExperimentConfig(n_tests=2, cohorts=config.cohorts[:3])

    def test_two_screened_cohorts_enforced(self):
        cohorts = tuple(CohortDef(name=f"c{i}", route="histogram", rules=()) for i in range(4))
        with pytest.raises(ValueError):
            ExperimentConfig(n_tests=2, cohorts=cohorts)

    def test_json_round_trip(self, tmp_path):
        config = default_experiment_config(seed=3, n_tests=5, exclusion_percentile=75.0)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(config_to_dict(config)))
        assert read_experiment_config(path) == config

    def test_config_from_dict_rejects_junk(self):
        with pytest.raises(ValueError):
            config_from_dict({"n_tests": 2})
        good = config_to_dict(default_experiment_config(seed=0))
        bad = dict(good, metric="wasserstein")
        with pytest.raises(ValueError):
            config_from_dict(bad)


class TestPipeline:
    def test_report_shape(self):
        config = small_config(seed=21)
        report = pipeline_experiment(config)
        assert len(report.fits) == config.n_tests * 4
        assert len(report.dfe_records) == config.n_tests * 2
        assert len(report.distances) == config.n_tests * 6
        assert report.group.n_near + report.group.n_far == len(report.distances)
        assert len(report.near_pairs) == 2

    def test_deterministic(self):
        a = pipeline_experiment(small_config(seed=22))
        b = pipeline_experiment(small_config(seed=22))
        assert a == b

    def test_seed_matters(self):
        a = pipeline_experiment(small_config(seed=23))
        b = pipeline_experiment(small_config(seed=24))
        assert a != b

    def test_jobs_do_not_change_output(self):
        config = small_config(seed=25)
        assert pipeline_experiment(config, jobs=1) == pipeline_experiment(config, jobs=2)

    def test_truth_stays_within_configured_ranges(self):
        config = small_config(seed=26)
        report = pipeline_experiment(config)
        for fit in report.fits:
            assert config.mu_range[0] <= fit.truth.mu <= config.mu_range[1]
            assert config.sigma_range[0] <= fit.truth.sigma <= config.sigma_range[1]
            assert config.d_range[0] <= fit.truth.d <= config.d_range[1]

    def test_screened_cohorts_report_exclusions(self):
        report = pipeline_experiment(small_config(seed=27))
        for fit in report.fits:
            if fit.dataset.startswith("screened"):
                assert fit.n_excluded > 0
                assert fit.route == "triple"
            else:
                assert fit.n_excluded == 0
                assert fit.route == "histogram"
            assert fit.n_kept + fit.n_excluded == 2000

    def test_dfe_pairs_screened_against_open_baseline(self):
        report = pipeline_experiment(small_config(seed=28))
        for rec in report.dfe_records:
            assert rec.baseline_dataset == "openA"
            assert rec.other_dataset in ("screenedA", "screenedB")


class TestWriteReport:
    FILES = ("fits.csv", "dfe.csv", "distances.csv", "group.json", "kde_near_far.csv")

    def test_files_and_headers(self, tmp_path):
        config = small_config(seed=30)
        report = pipeline_experiment(config)
        write_report(report, tmp_path, config)
        for name in self.FILES:
            assert (tmp_path / name).exists(), name
        assert (tmp_path / "fits.csv").read_text().splitlines()[0].startswith(
            "test_id,gender,dataset,route,n_kept,n_excluded,mu,sigma,d,expected_value"
        )
        assert (tmp_path / "kde_near_far.csv").read_text().splitlines()[0] == (
            "x,near_density,far_density"
        )

    def test_byte_identical_across_runs(self, tmp_path):
        out1 = tmp_path / "run1"
        out2 = tmp_path / "run2"
        for out in (out1, out2):
            config = small_config(seed=31)
            write_report(pipeline_experiment(config), out, config)
        for name in self.FILES:
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name

    def test_csv_floats_round_trip(self, tmp_path):
        config = small_config(seed=32)
        report = pipeline_experiment(config)
        write_report(report, tmp_path, config)
        back = rd.read_distances_csv(tmp_path / "distances.csv")
        assert back == list(report.distances)
