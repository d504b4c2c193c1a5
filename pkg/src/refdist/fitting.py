"""Least-squares fitting of density families to histograms.

The objective is the sum of squared differences between the normalized
histogram density and the family pdf evaluated at bin centers.  The shifted
lognormal is optimized in an unconstrained reparameterization

    sigma = exp(t_sigma),   d = x_min - exp(t_d)

with x_min the leftmost bin center, which keeps every simplex vertex inside
the valid region (sigma > 0, d below all centers) without penalty cliffs.
Multiple jittered starts guard against the flat valleys shifted-lognormal
objectives are known for.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import isfinite

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_array, check_finite
from .distributions import Lnorm3Params, Norm3Params
from .histogram import Histogram, build_histogram, normalize_histogram
from .simplex import NelderMeadConfig, nelder_mead

__all__ = ["FitResult", "sse_objective", "fit_histogram", "HistogramDensityEstimator"]

_SQRT_2PI = np.sqrt(2.0 * np.pi)


@dataclass(frozen=True)
class FitResult:
    params: Lnorm3Params | Norm3Params
    sse: float
    iterations: int
    converged: bool
    restarts_used: int


def sse_objective(
    hist: Histogram, family: str, params, weight_by_width: bool = False
) -> float:
    """Sum of squared (density - pdf) differences at bin centers.

    ``weight_by_width`` multiplies each squared error by the bin width,
    turning the sum into a Riemann-style integral; off by default.
    """
    _check_family_matches(family, params)
    dens = normalize_histogram(hist)
    err = dens.frequencies - params.pdf(dens.centers)
    if weight_by_width:
        return float(np.sum(dens.widths * err * err))
    return float(np.dot(err, err))


def _check_family_matches(family: str, params) -> None:
    if family not in ("lnorm3", "norm3"):
        raise ValueError(f"family must be 'lnorm3' or 'norm3', got {family!r}")
    if params.family != family:
        raise ValueError(f"params are {params.family!r}, expected {family!r}")


def _lnorm3_center_objective(centers, density, weights, x_min):
    def objective(theta):
        mu = theta[0]
        sigma = np.exp(min(theta[1], 300.0))
        d = x_min - np.exp(min(theta[2], 300.0))
        t = centers - d
        z = (np.log(t) - mu) / sigma
        model = np.exp(-0.5 * z * z) / (_SQRT_2PI * sigma * t)
        err = density - model
        value = float(np.dot(err * weights, err))
        return value if isfinite(value) else 1e300

    return objective


def _norm3_center_objective(centers, density, weights):
    def objective(theta):
        mean = theta[0]
        sigma = np.exp(min(theta[1], 300.0))
        z = (centers - mean) / sigma
        model = np.exp(-0.5 * z * z) / (_SQRT_2PI * sigma)
        err = density - model
        value = float(np.dot(err * weights, err))
        return value if isfinite(value) else 1e300

    return objective


def _initial_guess_lnorm3(centers, density, widths):
    x_min = centers[0]
    mass = density * widths
    mean = float(np.sum(mass * centers))
    span = centers[-1] - centers[0]
    spread = max(mean - x_min, 1e-3 * span)
    d0 = x_min - 0.5 * spread
    logs = np.log(centers - d0)
    mu0 = float(np.sum(mass * logs))
    var0 = float(np.sum(mass * (logs - mu0) ** 2))
    sigma0 = max(np.sqrt(var0), 1e-3)
    return np.array([mu0, np.log(sigma0), np.log(x_min - d0)])


def _initial_guess_norm3(centers, density, widths):
    mass = density * widths
    mean = float(np.sum(mass * centers))
    var = float(np.sum(mass * (centers - mean) ** 2))
    sigma0 = max(np.sqrt(var), 1e-3 * (centers[-1] - centers[0]))
    return np.array([mean, np.log(sigma0)])


def _jittered_simplex(base: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    factors = rng.uniform(0.8, 1.2, size=base.shape)
    jittered = base * factors
    zero = base == 0.0
    if np.any(zero):
        jittered[zero] = 0.05 * rng.uniform(-1.0, 1.0, size=int(zero.sum()))
    return jittered


def _base_simplex(theta: np.ndarray) -> np.ndarray:
    n = len(theta)
    simplex = np.tile(theta, (n + 1, 1))
    for i in range(n):
        step = 0.1 * max(abs(theta[i]), 0.25)
        simplex[i + 1, i] += step
    return simplex


def fit_histogram(
    hist: Histogram,
    family: str = "lnorm3",
    config: NelderMeadConfig = NelderMeadConfig(),
    seed: int = 0,
    weight_by_width: bool = False,
) -> FitResult:
    """Best-of-restarts simplex fit of ``family`` to the histogram density."""
    if family not in ("lnorm3", "norm3"):
        raise ValueError(f"family must be 'lnorm3' or 'norm3', got {family!r}")
    if hist.n_bins < 4:
        raise ValueError(
            f"need at least 4 bins to fit a 3-parameter family, got {hist.n_bins}"
        )
    dens = normalize_histogram(hist)
    centers = dens.centers
    density = dens.frequencies
    widths = dens.widths
    weights = widths if weight_by_width else np.ones_like(widths)

    if family == "lnorm3":
        x_min = centers[0]
        objective = _lnorm3_center_objective(centers, density, weights, x_min)
        theta0 = _initial_guess_lnorm3(centers, density, widths)
    else:
        objective = _norm3_center_objective(centers, density, weights)
        theta0 = _initial_guess_norm3(centers, density, widths)

    rng = np.random.Generator(np.random.Philox(seed))
    base = _base_simplex(theta0)
    best = None
    for start in range(config.restarts):
        simplex = base if start == 0 else _jittered_simplex(base, rng)
        result = nelder_mead(objective, theta0, config, initial_simplex=simplex)
        if best is None or result.value < best.value:
            best = result

    if family == "lnorm3":
        params = Lnorm3Params(
            mu=float(best.x[0]),
            sigma=float(np.exp(best.x[1])),
            d=float(centers[0] - np.exp(best.x[2])),
        )
    else:
        params = Norm3Params(
            mu=float(best.x[0]), sigma=float(np.exp(best.x[1])), d=0.0
        )
    return FitResult(
        params=params,
        sse=sse_objective(dens, family, params, weight_by_width=weight_by_width),
        iterations=best.iterations,
        converged=best.converged,
        restarts_used=config.restarts,
    )


class HistogramDensityEstimator(BaseEstimator):
    """Sklearn-style front end for the histogram family fit.

    Accepts either a prepared :class:`Histogram` or a 1-D array of raw
    values (binned with ``bins`` equal-width bins first).  After ``fit``,
    the recovered parameters are in ``params_`` and the attained objective
    in ``sse_``.
    """

    def __init__(
        self,
        family: str = "lnorm3",
        bins: int = 50,
        config: NelderMeadConfig | None = None,
        seed: int = 0,
        weight_by_width: bool = False,
    ):
        self.family = family
        self.bins = bins
        self.config = config
        self.seed = seed
        self.weight_by_width = weight_by_width

    def fit(self, X, y=None):
        if isinstance(X, Histogram):
            hist = X
        else:
            samples = check_finite(as_float_array(X, "X"), "X")
            hist = build_histogram(samples, bins=self.bins)
        config = self.config if self.config is not None else NelderMeadConfig()
        result = fit_histogram(
            hist,
            family=self.family,
            config=config,
            seed=self.seed,
            weight_by_width=self.weight_by_width,
        )
        self.histogram_ = normalize_histogram(hist)
        self.result_ = result
        self.params_ = result.params
        self.sse_ = result.sse
        return self

    def pdf(self, X):
        check_is_fitted(self, "params_")
        return self.params_.pdf(X)

    def score_samples(self, X):
        """Log density at X, -inf outside the support."""
        check_is_fitted(self, "params_")
        with np.errstate(divide="ignore"):
            return np.log(self.params_.pdf(np.asarray(X, dtype=float)))

    def expected_value(self) -> float:
        check_is_fitted(self, "params_")
        return self.params_.expected_value()
