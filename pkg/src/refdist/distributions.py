"""Density families for laboratory-test values.

Three families are provided, each defined by its explicit formula:

* ``Lnorm3Params`` -- shifted (three-parameter) lognormal with log-location
  ``mu``, log-scale ``sigma`` and shift ``d``; support is x > d.
* ``Norm3Params`` -- normal density written with a redundant shift, equal to
  a plain normal with mean ``d + mu`` and standard deviation ``sigma``.  The
  three-field form is kept on purpose as a fit-quality baseline; note that
  (mu + c, sigma, d - c) describes the same density for any c, and that
  naming conventions for the shifted normal/lognormal pair are not uniform
  across the literature, so the formulas here are authoritative.
* ``BoxCoxParams`` -- the density obtained by inverse power-transforming a
  normal fitted in the transformed domain, as used by several published
  reference-interval derivations.  It is *not* renormalized by default; its
  numeric integral is exposed so callers can quantify the transformation
  error, or request a normalized view.

All evaluation functions accept scalars or numpy arrays and are pure;
parameter validity (sigma > 0, p != 0) is enforced once, at construction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from math import isfinite

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .special import std_normal_cdf, std_normal_pdf, std_normal_quantile

__all__ = [
    "Lnorm3Params",
    "Norm3Params",
    "BoxCoxParams",
    "lnorm3_pdf",
    "lnorm3_cdf",
    "lnorm3_quantile",
    "lnorm3_expected_value",
    "lnorm3_sample",
    "norm3_pdf",
    "norm3_cdf",
    "norm3_quantile",
    "norm3_expected_value",
    "boxcox_pdf",
    "boxcox_normalization",
    "support_lower",
    "expected_value",
    "params_to_dict",
    "params_from_dict",
    "write_params",
    "read_params",
]

_SQRT_2PI = np.sqrt(2.0 * np.pi)


def _require_finite(value: float, name: str) -> float:
    value = float(value)
    if not isfinite(value):
        raise ValueError(f"{name} must be finite, got {value}")
    return value


@dataclass(frozen=True)
class Lnorm3Params:
    """Shifted lognormal: ln(x - d) ~ Normal(mu, sigma), support x > d."""

    mu: float
    sigma: float
    d: float

    family = "lnorm3"

    def __post_init__(self):
        _require_finite(self.mu, "mu")
        _require_finite(self.d, "d")
        if not (isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def pdf(self, x):
        return lnorm3_pdf(x, self)

    def cdf(self, x):
        return lnorm3_cdf(x, self)

    def quantile(self, prob):
        return lnorm3_quantile(prob, self)

    def expected_value(self) -> float:
        return lnorm3_expected_value(self)


@dataclass(frozen=True)
class Norm3Params:
    """Normal density with redundant shift: mean d + mu, scale sigma."""

    mu: float
    sigma: float
    d: float

    family = "norm3"

    def __post_init__(self):
        _require_finite(self.mu, "mu")
        _require_finite(self.d, "d")
        if not (isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")

    def pdf(self, x):
        return norm3_pdf(x, self)

    def cdf(self, x):
        return norm3_cdf(x, self)

    def quantile(self, prob):
        return norm3_quantile(prob, self)

    def expected_value(self) -> float:
        return norm3_expected_value(self)


@dataclass(frozen=True)
class BoxCoxParams:
    """Inverse power-transform density; defined where x - mu + 4*sigma > 0.

    ``sigma`` appears both in the support shift (4*sigma) and as the
    transformed-domain scale, exactly as the formula is written.
    """

    mu: float
    sigma: float
    p: float
    m: float

    family = "boxcox"

    def __post_init__(self):
        _require_finite(self.mu, "mu")
        _require_finite(self.m, "m")
        if not (isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        p = _require_finite(self.p, "p")
        if p == 0:
            raise ValueError("p must be nonzero (the log limit is not defined here)")

    def pdf(self, x, normalized: bool = False):
        return boxcox_pdf(x, self, normalized=normalized)

    def cdf(self, x, normalized: bool = True):
        return boxcox_cdf(x, self, normalized=normalized)

    def quantile(self, prob):
        return boxcox_quantile(prob, self)

    def expected_value(self) -> float:
        return boxcox_mean(self)


Params = Lnorm3Params | Norm3Params | BoxCoxParams


def _eval_scalar_or_array(x, compute):
    """Run ``compute`` on a float array view of x, return matching shape."""
    arr = np.asarray(x, dtype=float)
    out = compute(np.atleast_1d(arr))
    return float(out[0]) if arr.ndim == 0 else out.reshape(arr.shape)


# --- shifted lognormal -------------------------------------------------------

def lnorm3_pdf(x, params: Lnorm3Params):
    """Density of the shifted lognormal; 0 at and below the shift d."""
    mu, sigma, d = params.mu, params.sigma, params.d

    def compute(arr):
        out = np.zeros_like(arr)
        mask = arr > d
        if np.any(mask):
            t = arr[mask] - d
            z = (np.log(t) - mu) / sigma
            out[mask] = np.exp(-0.5 * z * z) / (_SQRT_2PI * sigma * t)
        return out

    return _eval_scalar_or_array(x, compute)


def lnorm3_cdf(x, params: Lnorm3Params):
    mu, sigma, d = params.mu, params.sigma, params.d

    def compute(arr):
        out = np.zeros_like(arr)
        mask = arr > d
        if np.any(mask):
            z = (np.log(arr[mask] - d) - mu) / sigma
            out[mask] = std_normal_cdf(z)
        return out

    return _eval_scalar_or_array(x, compute)


def lnorm3_quantile(prob, params: Lnorm3Params):
    z = std_normal_quantile(prob)
    return params.d + np.exp(params.mu + params.sigma * z)


def lnorm3_expected_value(params: Lnorm3Params) -> float:
    return float(np.exp(params.mu + 0.5 * params.sigma**2) + params.d)


def lnorm3_sample(params: Lnorm3Params, n: int, seed) -> np.ndarray:
    """n i.i.d. draws d + exp(mu + sigma*Z); counter-based, so deterministic
    per seed and safe to fan out across parallel fits."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = np.random.Generator(np.random.Philox(seed))
    z = rng.standard_normal(int(n))
    return params.d + np.exp(params.mu + params.sigma * z)


# --- shifted normal ----------------------------------------------------------

def norm3_pdf(x, params: Norm3Params):
    mu, sigma, d = params.mu, params.sigma, params.d

    def compute(arr):
        z = (arr - d - mu) / sigma
        return np.exp(-0.5 * z * z) / (_SQRT_2PI * sigma)

    return _eval_scalar_or_array(x, compute)


def norm3_cdf(x, params: Norm3Params):
    def compute(arr):
        return np.atleast_1d(std_normal_cdf((arr - params.d - params.mu) / params.sigma))

    return _eval_scalar_or_array(x, compute)


def norm3_quantile(prob, params: Norm3Params):
    z = std_normal_quantile(prob)
    return params.d + params.mu + params.sigma * z


def norm3_expected_value(params: Norm3Params) -> float:
    return float(params.d + params.mu)


# --- inverse power-transform density ------------------------------------------

def boxcox_pdf(x, params: BoxCoxParams, normalized: bool = False):
    """Density h(x) on x - mu + 4*sigma > 0; 0 outside.

    With ``normalized=True`` the value is divided by the numerically
    computed integral of h (see :func:`boxcox_normalization`).
    """
    mu, sigma, p, m = params.mu, params.sigma, params.p, params.m

    def compute(arr):
        out = np.zeros_like(arr)
        base = arr - mu + 4.0 * sigma
        mask = base > 0
        if np.any(mask):
            b = base[mask]
            u = (np.power(b, p) - 1.0) / p - m
            out[mask] = np.power(b, p - 1.0) / (_SQRT_2PI * sigma) * np.exp(
                -0.5 * (u / sigma) ** 2
            )
        return out

    scale = boxcox_normalization(params) if normalized else 1.0
    result = _eval_scalar_or_array(x, compute)
    return result / scale


@lru_cache(maxsize=256)
def boxcox_normalization(params: BoxCoxParams) -> float:
    """Numeric integral of the raw density over its support.

    Typically close to, but not exactly, 1; the gap measures the error the
    power-transform round trip introduces.
    """
    lo = params.mu - 4.0 * params.sigma
    mode_guess = _boxcox_transform_quantile(params, 0.5)
    hi = _boxcox_transform_quantile(params, 1.0 - 1e-12)
    value, _ = quad(
        lambda t: boxcox_pdf(t, params), lo, hi,
        points=[mode_guess], limit=200,
    )
    return float(value)


def _boxcox_transform_quantile(params: BoxCoxParams, prob: float) -> float:
    """x such that the transformed-domain normal hits ``prob``.

    Solves (x - mu + 4 sigma)^p = 1 + p*(m + sigma*z); where the power
    cannot reach that value the relevant support endpoint is returned.
    """
    z = std_normal_quantile(prob)
    target = 1.0 + params.p * (params.m + params.sigma * z)
    if target <= 0:
        # Transform cannot reach this probability: clamp to the endpoint.
        return params.mu - 4.0 * params.sigma if params.p > 0 else np.inf
    base = target ** (1.0 / params.p)
    return float(params.mu - 4.0 * params.sigma + base)


def boxcox_cdf(x, params: BoxCoxParams, normalized: bool = True):
    """Numeric CDF of h; by default relative to the numeric normalization."""
    lo = params.mu - 4.0 * params.sigma
    scale = boxcox_normalization(params) if normalized else 1.0

    def one(value: float) -> float:
        if value <= lo:
            return 0.0
        mid = min(_boxcox_transform_quantile(params, 0.5), value)
        part, _ = quad(lambda t: boxcox_pdf(t, params), lo, value,
                       points=[mid], limit=200)
        return part / scale

    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return one(float(arr))
    return np.array([one(v) for v in arr.ravel()]).reshape(arr.shape)


def boxcox_quantile(prob, params: BoxCoxParams):
    """Inverse of the normalized numeric CDF."""
    p = float(prob)
    if not 0.0 < p < 1.0:
        raise ValueError(f"prob must lie strictly between 0 and 1, got {prob}")
    lo = params.mu - 4.0 * params.sigma
    hi = _boxcox_transform_quantile(params, 1.0 - 1e-13)
    if not np.isfinite(hi):
        hi = lo + 1.0
        while boxcox_cdf(hi, params) < p:
            hi = lo + (hi - lo) * 2.0
    return float(brentq(lambda t: boxcox_cdf(t, params) - p, lo + 1e-12 * max(1.0, abs(lo)), hi))


def boxcox_mean(params: BoxCoxParams) -> float:
    """Numeric mean of the normalized density."""
    lo = params.mu - 4.0 * params.sigma
    hi = _boxcox_transform_quantile(params, 1.0 - 1e-12)
    scale = boxcox_normalization(params)
    value, _ = quad(lambda t: t * boxcox_pdf(t, params), lo, hi,
                    points=[_boxcox_transform_quantile(params, 0.5)], limit=200)
    return float(value / scale)


# --- generic helpers ----------------------------------------------------------

def support_lower(params: Params) -> float:
    """Lower edge of the support (-inf for the normal family)."""
    if isinstance(params, Lnorm3Params):
        return params.d
    if isinstance(params, Norm3Params):
        return -np.inf
    if isinstance(params, BoxCoxParams):
        return params.mu - 4.0 * params.sigma
    raise TypeError(f"unsupported parameter type: {type(params)!r}")


def expected_value(params: Params) -> float:
    return params.expected_value()


# --- JSON wire format ----------------------------------------------------------

_FAMILIES = {
    "lnorm3": (Lnorm3Params, ("mu", "sigma", "d")),
    "norm3": (Norm3Params, ("mu", "sigma", "d")),
    "boxcox": (BoxCoxParams, ("mu", "sigma", "p", "m")),
}


def params_to_dict(params: Params) -> dict:
    _, fields = _FAMILIES[params.family]
    out = {"family": params.family}
    out.update({f: getattr(params, f) for f in fields})
    return out


def params_from_dict(data: dict) -> Params:
    try:
        family = data["family"]
    except KeyError:
        raise ValueError("parameter object is missing the 'family' key") from None
    try:
        cls, fields = _FAMILIES[family]
    except KeyError:
        raise ValueError(f"unknown distribution family {family!r}") from None
    missing = [f for f in fields if f not in data]
    if missing:
        raise ValueError(f"{family} parameters missing fields: {', '.join(missing)}")
    return cls(**{f: float(data[f]) for f in fields})


def write_params(params: Params, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(params_to_dict(params), fh, indent=2)
        fh.write("\n")


def read_params(path) -> Params:
    with open(path, encoding="utf-8") as fh:
        return params_from_dict(json.load(fh))
