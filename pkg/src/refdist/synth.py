"""Synthetic cohorts, exclusion rules, and the end-to-end experiment.

The pipeline draws, per synthetic test, one shifted-lognormal truth and
four cohorts from it.  Two cohorts pass through exclusion rules (screened)
and two do not (open).  Screened cohorts are summarized the way screened
reference studies publish results, as a quantile triple, and solved in
closed form; open cohorts are binned and fit by least squares.  Pairwise
pdf distances between the four estimates are then split into Near pairs
(identical rule sets) and Far pairs (different rule sets) and compared with
Welch's t-test.  Everything is deterministic given the experiment seed: a
counter-based generator tree hands each test and cohort its own stream.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .compare import (
    METRICS,
    DfeRecord,
    DistanceRecord,
    GroupReport,
    dfe,
    distance_kde_export,
    grid_distance,
    group_analysis,
    split_near_far,
    write_dfe_csv,
    write_distances_csv,
    write_group_report_json,
)
from .distributions import Lnorm3Params
from .errors import EmptyCohortError
from .fitting import fit_histogram
from .histogram import build_histogram
from .quantiles import QuantileTriple, solve_lnorm3_from_triple
from .simplex import NelderMeadConfig

__all__ = [
    "CohortSpec",
    "ExclusionRule",
    "CohortDef",
    "ExperimentConfig",
    "Population",
    "ExclusionResult",
    "CohortFit",
    "ExperimentReport",
    "generate_population",
    "apply_exclusion",
    "build_histogram",
    "default_experiment_config",
    "pipeline_experiment",
    "write_report",
    "read_experiment_config",
    "config_to_dict",
    "config_from_dict",
]

FITS_CSV_COLUMNS = (
    "test_id",
    "gender",
    "dataset",
    "route",
    "n_kept",
    "n_excluded",
    "mu",
    "sigma",
    "d",
    "expected_value",
    "sse",
    "iterations",
    "converged",
    "truth_mu",
    "truth_sigma",
    "truth_d",
)

# lighter than the library default: the pipeline runs dozens of fits per
# experiment and the moment-based start is reliable on clean synthetic bins
_PIPELINE_NM = NelderMeadConfig(max_iter=1200, xtol=1e-7, ftol=1e-10, restarts=2)


@dataclass(frozen=True)
class ExclusionRule:
    """Keep-side description of one selection rule.

    target picks which variable the rule reads ("value" or "covariate");
    kind is "upper_tail" (keep at or below the threshold), "lower_tail"
    (keep at or above), or "band" (keep inside [lo, hi]); unit
    "percentile" resolves thresholds against the cohort being filtered,
    "absolute" uses them as raw cutoffs.
    """

    target: str
    kind: str
    unit: str = "absolute"
    threshold: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if self.target not in ("value", "covariate"):
            raise ValueError(
                f"target must be 'value' or 'covariate', got {self.target!r}"
            )
        if self.kind not in ("upper_tail", "lower_tail", "band"):
            raise ValueError(
                f"kind must be 'upper_tail', 'lower_tail' or 'band', "
                f"got {self.kind!r}"
            )
        if self.unit not in ("absolute", "percentile"):
            raise ValueError(
                f"unit must be 'absolute' or 'percentile', got {self.unit!r}"
            )
        if self.kind == "band":
            if self.lo is None or self.hi is None or not self.lo < self.hi:
                raise ValueError(f"band rule needs lo < hi, got {self.lo}, {self.hi}")
            bounds = (self.lo, self.hi)
        else:
            if self.threshold is None:
                raise ValueError(f"{self.kind} rule needs a threshold")
            bounds = (self.threshold,)
        for value in bounds:
            if not np.isfinite(value):
                raise ValueError(f"rule bounds must be finite, got {value}")
            if self.unit == "percentile" and not 0.0 <= value <= 100.0:
                raise ValueError(f"percentile bounds must be in [0, 100], got {value}")


@dataclass(frozen=True)
class CohortSpec:
    """One cohort draw: truth parameters, size, seed, covariate coupling."""

    truth: Lnorm3Params
    n: int
    seed: int
    rho: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if not -1.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [-1, 1], got {self.rho}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class Population:
    """Paired draws: the test value and an auxiliary covariate."""

    values: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(
            self, "covariates", np.asarray(self.covariates, dtype=float)
        )
        if self.values.shape != self.covariates.shape or self.values.ndim != 1:
            raise ValueError("values and covariates must be 1-D arrays of equal size")

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class ExclusionResult:
    population: Population
    n_kept: int
    n_excluded: int


@dataclass(frozen=True)
class CohortDef:
    """Named cohort role in an experiment: estimation route plus rules."""

    name: str
    route: str  # "histogram" or "triple"
    rules: tuple = ()

    def __post_init__(self):
        if self.route not in ("histogram", "triple"):
            raise ValueError(
                f"route must be 'histogram' or 'triple', got {self.route!r}"
            )
        object.__setattr__(self, "rules", tuple(self.rules))


@dataclass(frozen=True)
class ExperimentConfig:
    """Full experiment description; JSON-serializable.

    Exactly four cohorts, two carrying exclusion rules and two without.
    Truth parameters per synthetic test are drawn uniformly from the given
    ranges; sigma defaults stay well inside right-skew territory so that
    upper-tail-truncated quantile triples remain solvable.
    """

    n_tests: int
    cohorts: tuple
    n_per_cohort: int = 10_000
    # 100 bins keeps the histogram route's center-vs-bin-average bias below
    # what the Near/Far Welch test can detect when rules are zero-strength
    bins: int = 100
    alpha: float = 0.025
    seed: int = 0
    rho: float = 0.3
    metric: str = "L1Grid"
    n_points: int = 10_000
    mu_range: tuple = (0.0, 1.0)
    sigma_range: tuple = (0.5, 0.8)
    d_range: tuple = (1.0, 50.0)

    def __post_init__(self):
        object.__setattr__(self, "cohorts", tuple(self.cohorts))
        if self.n_tests < 1:
            raise ValueError(f"n_tests must be >= 1, got {self.n_tests}")
        if len(self.cohorts) != 4:
            raise ValueError(f"need exactly 4 cohorts, got {len(self.cohorts)}")
        n_with_rules = sum(1 for c in self.cohorts if c.rules)
        if n_with_rules != 2:
            raise ValueError(
                f"need exactly 2 cohorts with rules and 2 without, "
                f"got {n_with_rules} with rules"
            )
        names = [c.name for c in self.cohorts]
        if len(set(names)) != 4:
            raise ValueError(f"cohort names must be unique, got {names}")
        if self.n_per_cohort < 10:
            raise ValueError(f"n_per_cohort must be >= 10, got {self.n_per_cohort}")
        if self.bins < 4:
            raise ValueError(f"bins must be >= 4, got {self.bins}")
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must be in (0, 0.5), got {self.alpha}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        for label in ("mu_range", "sigma_range", "d_range"):
            lo, hi = getattr(self, label)
            if not lo <= hi:
                raise ValueError(f"{label} must satisfy lo <= hi, got ({lo}, {hi})")
        if self.sigma_range[0] <= 0:
            raise ValueError("sigma_range must be positive")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")
        if self.n_points < 2:
            raise ValueError(f"n_points must be >= 2, got {self.n_points}")


@dataclass(frozen=True)
class CohortFit:
    test_id: str
    gender: str
    dataset: str
    route: str
    n_kept: int
    n_excluded: int
    params: Lnorm3Params
    truth: Lnorm3Params
    sse: float | None = None
    iterations: int | None = None
    converged: bool | None = None


@dataclass(frozen=True)
class ExperimentReport:
    fits: tuple
    dfe_records: tuple
    distances: tuple
    group: GroupReport
    near_pairs: tuple


def generate_population(spec: CohortSpec) -> Population:
    """Draw (value, covariate) pairs from the cohort description.

    Values come from the shifted lognormal; the covariate shares the
    underlying standard normal with correlation rho through a Gaussian
    copula.  Identical specs give identical output.
    """
    rng = np.random.Generator(np.random.Philox(spec.seed))
    z = rng.standard_normal(spec.n)
    w = rng.standard_normal(spec.n)
    values = spec.truth.d + np.exp(spec.truth.mu + spec.truth.sigma * z)
    covariates = spec.rho * z + np.sqrt(1.0 - spec.rho**2) * w
    return Population(values=values, covariates=covariates)


def _rule_mask(population: Population, rule: ExclusionRule) -> np.ndarray:
    data = population.values if rule.target == "value" else population.covariates
    if rule.kind == "band":
        lo, hi = rule.lo, rule.hi
        if rule.unit == "percentile":
            lo, hi = np.percentile(data, [lo, hi])
        return (data >= lo) & (data <= hi)
    thr = rule.threshold
    if rule.unit == "percentile":
        thr = np.percentile(data, thr)
    if rule.kind == "upper_tail":
        return data <= thr
    return data >= thr


def apply_exclusion(population: Population, rules) -> ExclusionResult:
    """Subset satisfying every rule, original order preserved."""
    mask = np.ones(population.n, dtype=bool)
    for rule in rules:
        mask &= _rule_mask(population, rule)
    n_kept = int(mask.sum())
    if n_kept == 0:
        raise EmptyCohortError("exclusion rules removed every sample")
    filtered = Population(
        values=population.values[mask], covariates=population.covariates[mask]
    )
    return ExclusionResult(
        population=filtered, n_kept=n_kept, n_excluded=population.n - n_kept
    )


def default_experiment_config(
    seed: int,
    n_tests: int = 20,
    n_per_cohort: int = 10_000,
    exclusion_percentile: float = 80.0,
    **overrides,
) -> ExperimentConfig:
    """Standard four-cohort layout: two open, two screened.

    Open cohorts are reported as histograms and fit by least squares;
    screened cohorts pass an upper-tail exclusion on the test value and are
    reported as quantile triples.  exclusion_percentile=100 keeps every
    sample, turning the screening into a label-only difference (the null
    experiment).
    """
    rule = ExclusionRule(
        target="value",
        kind="upper_tail",
        unit="percentile",
        threshold=exclusion_percentile,
    )
    cohorts = (
        CohortDef(name="openA", route="histogram", rules=()),
        CohortDef(name="openB", route="histogram", rules=()),
        CohortDef(name="screenedA", route="triple", rules=(rule,)),
        CohortDef(name="screenedB", route="triple", rules=(rule,)),
    )
    return ExperimentConfig(
        n_tests=n_tests,
        cohorts=cohorts,
        n_per_cohort=n_per_cohort,
        seed=seed,
        **overrides,
    )


def near_pairs_of(config: ExperimentConfig) -> tuple:
    """Unordered cohort-name pairs whose rule sets are identical."""
    pairs = []
    for i, a in enumerate(config.cohorts):
        for b in config.cohorts[i + 1 :]:
            if a.rules == b.rules:
                pairs.append(tuple(sorted((a.name, b.name))))
    return tuple(sorted(pairs))


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, np.uint64)[0])


def _run_test(config: ExperimentConfig, index: int, seq: np.random.SeedSequence):
    streams = seq.spawn(1 + 2 * len(config.cohorts))
    truth_rng = np.random.Generator(np.random.Philox(_seed_int(streams[0])))
    truth = Lnorm3Params(
        mu=float(truth_rng.uniform(*config.mu_range)),
        sigma=float(truth_rng.uniform(*config.sigma_range)),
        d=float(truth_rng.uniform(*config.d_range)),
    )
    test_id = f"synth{index:03d}"
    gender = "M" if index % 2 == 0 else "F"

    fits = []
    params_by_name = {}
    for i, cohort in enumerate(config.cohorts):
        gen_seed = _seed_int(streams[1 + 2 * i])
        fit_seed = _seed_int(streams[2 + 2 * i])
        population = generate_population(
            CohortSpec(truth=truth, n=config.n_per_cohort, seed=gen_seed, rho=config.rho)
        )
        if cohort.rules:
            result = apply_exclusion(population, cohort.rules)
            kept = result.population.values
            n_excluded = result.n_excluded
        else:
            kept = population.values
            n_excluded = 0
        if cohort.route == "histogram":
            hist = build_histogram(kept, bins=config.bins)
            fit = fit_histogram(hist, family="lnorm3", config=_PIPELINE_NM, seed=fit_seed)
            params = fit.params
            extra = dict(sse=fit.sse, iterations=fit.iterations, converged=fit.converged)
        else:
            qs = np.quantile(kept, [config.alpha, 0.5, 1.0 - config.alpha])
            triple = QuantileTriple(
                lower=float(qs[0]),
                median=float(qs[1]),
                upper=float(qs[2]),
                alpha=config.alpha,
            )
            params = solve_lnorm3_from_triple(triple)
            extra = {}
        params_by_name[cohort.name] = params
        fits.append(
            CohortFit(
                test_id=test_id,
                gender=gender,
                dataset=cohort.name,
                route=cohort.route,
                n_kept=len(kept),
                n_excluded=n_excluded,
                params=params,
                truth=truth,
                **extra,
            )
        )

    baseline = next(c for c in config.cohorts if not c.rules)
    dfes = [
        dfe(
            params_by_name[baseline.name],
            params_by_name[cohort.name],
            test_id=test_id,
            gender=gender,
            baseline_dataset=baseline.name,
            other_dataset=cohort.name,
        )
        for cohort in config.cohorts
        if cohort.rules
    ]

    distances = []
    for i, a in enumerate(config.cohorts):
        for b in config.cohorts[i + 1 :]:
            distances.append(
                grid_distance(
                    params_by_name[a.name],
                    params_by_name[b.name],
                    metric=config.metric,
                    n_points=config.n_points,
                    range="auto",
                    test_id=test_id,
                    gender=gender,
                    dataset_a=a.name,
                    dataset_b=b.name,
                )
            )
    return fits, dfes, distances


def _run_test_packed(args):
    return _run_test(*args)


def pipeline_experiment(config: ExperimentConfig, jobs: int = 1) -> ExperimentReport:
    """Run every synthetic test and aggregate into one report.

    Tests get independent derived seeds, so the report is identical for any
    ``jobs`` value and bit-identical across runs of the same config.
    """
    root = np.random.SeedSequence(config.seed)
    children = root.spawn(config.n_tests)
    tasks = [(config, i, children[i]) for i in range(config.n_tests)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_test_packed, tasks))
    else:
        outcomes = [_run_test(*task) for task in tasks]

    fits, dfes, distances = [], [], []
    for test_fits, test_dfes, test_distances in outcomes:
        fits.extend(test_fits)
        dfes.extend(test_dfes)
        distances.extend(test_distances)
    fits.sort(key=lambda f: (f.test_id, f.dataset))
    dfes.sort(key=lambda r: (r.test_id, r.other_dataset))
    distances.sort(key=lambda r: (r.test_id, r.dataset_a, r.dataset_b))

    near = near_pairs_of(config)
    group = group_analysis(distances, near)
    return ExperimentReport(
        fits=tuple(fits),
        dfe_records=tuple(dfes),
        distances=tuple(distances),
        group=group,
        near_pairs=near,
    )


def _fit_row(fit: CohortFit) -> list:
    return [
        fit.test_id,
        fit.gender,
        fit.dataset,
        fit.route,
        fit.n_kept,
        fit.n_excluded,
        repr(fit.params.mu),
        repr(fit.params.sigma),
        repr(fit.params.d),
        repr(fit.params.expected_value()),
        "" if fit.sse is None else repr(fit.sse),
        "" if fit.iterations is None else fit.iterations,
        "" if fit.converged is None else fit.converged,
        repr(fit.truth.mu),
        repr(fit.truth.sigma),
        repr(fit.truth.d),
    ]


def write_report(report: ExperimentReport, outdir, config: ExperimentConfig | None = None) -> None:
    """Emit fits.csv, dfe.csv, distances.csv, group.json, kde_near_far.csv."""
    import csv

    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "fits.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(FITS_CSV_COLUMNS)
        for fit in report.fits:
            writer.writerow(_fit_row(fit))
    write_dfe_csv(report.dfe_records, os.path.join(outdir, "dfe.csv"))
    write_distances_csv(report.distances, os.path.join(outdir, "distances.csv"))

    metadata = {"near_pairs": [list(p) for p in report.near_pairs]}
    if config is not None:
        metadata.update(
            n_tests=config.n_tests,
            n_per_cohort=config.n_per_cohort,
            metric=config.metric,
            seed=config.seed,
        )
    write_group_report_json(report.group, os.path.join(outdir, "group.json"), metadata)

    near_values, far_values = split_near_far(report.distances, report.near_pairs)
    x, curves = distance_kde_export({"near": near_values, "far": far_values})
    with open(os.path.join(outdir, "kde_near_far.csv"), "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "near_density", "far_density"])
        for xi, ni, fi in zip(x, curves["near"], curves["far"]):
            writer.writerow([repr(float(xi)), repr(float(ni)), repr(float(fi))])


def _rule_to_dict(rule: ExclusionRule) -> dict:
    out = {"target": rule.target, "kind": rule.kind, "unit": rule.unit}
    if rule.kind == "band":
        out["lo"] = rule.lo
        out["hi"] = rule.hi
    else:
        out["threshold"] = rule.threshold
    return out


def config_to_dict(config: ExperimentConfig) -> dict:
    return {
        "n_tests": config.n_tests,
        "n_per_cohort": config.n_per_cohort,
        "bins": config.bins,
        "alpha": config.alpha,
        "seed": config.seed,
        "rho": config.rho,
        "metric": config.metric,
        "n_points": config.n_points,
        "mu_range": list(config.mu_range),
        "sigma_range": list(config.sigma_range),
        "d_range": list(config.d_range),
        "cohorts": [
            {
                "name": c.name,
                "route": c.route,
                "rules": [_rule_to_dict(r) for r in c.rules],
            }
            for c in config.cohorts
        ],
    }


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        cohorts = tuple(
            CohortDef(
                name=c["name"],
                route=c["route"],
                rules=tuple(ExclusionRule(**r) for r in c.get("rules", [])),
            )
            for c in data["cohorts"]
        )
        kwargs = {
            key: data[key]
            for key in (
                "n_per_cohort",
                "bins",
                "alpha",
                "seed",
                "rho",
                "metric",
                "n_points",
            )
            if key in data
        }
        for key in ("mu_range", "sigma_range", "d_range"):
            if key in data:
                kwargs[key] = tuple(data[key])
        return ExperimentConfig(n_tests=data["n_tests"], cohorts=cohorts, **kwargs)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed experiment config: {exc}") from exc


def read_experiment_config(path) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    return config_from_dict(data)
