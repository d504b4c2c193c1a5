"""Gaussian kernel density estimation with the Silverman rule.

Bandwidth defaults to 1.06 * min(sd, IQR/1.34) * n^(-1/5), the robust
variant of Silverman's rule.  Evaluation sums standard normal kernels over
the sample; x points are processed in chunks so large samples do not blow
up memory.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_float_array, check_finite
from .errors import BandwidthError
from .special import std_normal_pdf

__all__ = ["silverman_bandwidth", "GaussianKde", "kde"]

_CHUNK = 64


def silverman_bandwidth(samples) -> float:
    """Robust Silverman bandwidth; raises if the sample has no spread."""
    values = check_finite(as_float_array(samples, "samples"), "samples")
    n = values.size
    if n < 2:
        raise BandwidthError(
            f"need at least 2 samples for an automatic bandwidth, got {n}"
        )
    sd = float(np.std(values, ddof=1))
    q75, q25 = np.percentile(values, [75.0, 25.0])
    iqr = float(q75 - q25)
    scale = min(sd, iqr / 1.34) if iqr > 0 else sd
    if scale <= 0:
        raise BandwidthError("sample has zero spread, bandwidth undefined")
    return 1.06 * scale * n ** (-0.2)


class GaussianKde(BaseEstimator):
    """Gaussian kernel density estimate over a 1-D sample.

    ``bandwidth`` is either the string "silverman" or an explicit positive
    float.  The fitted bandwidth lands in ``bandwidth_``.
    """

    def __init__(self, bandwidth="silverman"):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        values = check_finite(as_float_array(X, "X"), "X")
        if values.size == 0:
            raise BandwidthError("cannot fit a density to an empty sample")
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "silverman":
                raise ValueError(
                    f"bandwidth must be 'silverman' or a positive float, "
                    f"got {self.bandwidth!r}"
                )
            bw = silverman_bandwidth(values)
        else:
            bw = float(self.bandwidth)
            if not np.isfinite(bw) or bw <= 0:
                raise BandwidthError(f"bandwidth must be positive, got {bw}")
        self.samples_ = values
        self.bandwidth_ = bw
        return self

    def pdf(self, X):
        check_is_fitted(self, "samples_")
        x = np.atleast_1d(np.asarray(X, dtype=float))
        scalar = np.ndim(X) == 0
        out = np.empty(x.size)
        h = self.bandwidth_
        n = self.samples_.size
        for start in range(0, x.size, _CHUNK):
            block = x[start : start + _CHUNK]
            z = (block[:, None] - self.samples_[None, :]) / h
            out[start : start + _CHUNK] = std_normal_pdf(z).sum(axis=1) / (n * h)
        return float(out[0]) if scalar else out

    def score_samples(self, X):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(X))

    def grid(self, lo: float, hi: float, n_points: int = 512):
        """Evaluate on a regular grid; returns (x, density)."""
        check_is_fitted(self, "samples_")
        if not hi > lo:
            raise ValueError(f"need hi > lo, got [{lo}, {hi}]")
        x = np.linspace(lo, hi, n_points)
        return x, self.pdf(x)


def kde(samples, bandwidth="silverman") -> GaussianKde:
    """Convenience constructor: returns an already fitted estimator."""
    return GaussianKde(bandwidth=bandwidth).fit(samples)
