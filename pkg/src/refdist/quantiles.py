"""Closed-form recovery of shifted-lognormal parameters from a published
three-value summary (lower reference-interval endpoint, median, upper
endpoint).

With L < M < U at tail level alpha and z = Phi^-1(1 - alpha), matching the
three quantiles of the shifted lognormal gives

    d  = (M^2 - U*L) / (2M - U - L)
    mu = ln(M - d)
    sigma = ln((U - d) / (M - d)) / z

which exists exactly when the triple is right-skewed (U + L > 2M).  A
symmetric triple sends d to infinity; a left-skewed one puts d above the
median.  Both cases raise typed errors rather than silently switching model
family.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from math import isfinite, log

import numpy as np

from .distributions import Lnorm3Params, lnorm3_cdf, lnorm3_pdf, lnorm3_quantile
from .errors import DegenerateSymmetricError, LeftSkewUnsupportedError
from .special import std_normal_quantile
from ._validation import check_probability

__all__ = [
    "QuantileTriple",
    "MirroredLnorm3",
    "classify_skew",
    "solve_lnorm3_from_triple",
    "solve_mirrored_lnorm3_from_triple",
    "triple_from_params",
    "read_triples_csv",
]

DEFAULT_ALPHA = 0.025
SYMMETRY_TOL = 1e-6

TRIPLE_CSV_COLUMNS = ("test_id", "gender", "lower", "median", "upper", "alpha")


@dataclass(frozen=True)
class QuantileTriple:
    """Lower endpoint, median and upper endpoint at tail probability alpha.

    ``lower`` is the alpha quantile and ``upper`` the (1 - alpha) quantile;
    alpha = 0.025 is the conventional central-95% reference interval.
    """

    lower: float
    median: float
    upper: float
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        for name in ("lower", "median", "upper"):
            v = getattr(self, name)
            if not isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
        if not self.lower < self.median < self.upper:
            raise ValueError(
                f"need lower < median < upper, got "
                f"({self.lower}, {self.median}, {self.upper})"
            )
        if not 0.0 < self.alpha < 0.5:
            raise ValueError(f"alpha must lie in (0, 0.5), got {self.alpha}")


def classify_skew(triple: QuantileTriple, tol: float = SYMMETRY_TOL) -> str:
    """Return "right", "left" or "symmetric".

    Symmetric means |U + L - 2M| <= tol * (U - L); the tolerance is relative
    to the interval width, above float noise but below anything a solver
    could distinguish.
    """
    gap = triple.upper + triple.lower - 2.0 * triple.median
    if abs(gap) <= tol * (triple.upper - triple.lower):
        return "symmetric"
    return "right" if gap > 0 else "left"


def solve_lnorm3_from_triple(
    triple: QuantileTriple, tol: float = SYMMETRY_TOL
) -> Lnorm3Params:
    """Recover the unique shifted lognormal matching the three quantiles."""
    skew = classify_skew(triple, tol)
    if skew == "symmetric":
        raise DegenerateSymmetricError(
            f"triple ({triple.lower}, {triple.median}, {triple.upper}) is "
            "symmetric within tolerance: the shift diverges; fit a normal instead"
        )
    if skew == "left":
        raise LeftSkewUnsupportedError(
            f"triple ({triple.lower}, {triple.median}, {triple.upper}) is "
            "left-skewed: the closed form puts the shift above the median; "
            "fit -x and negate (solve_mirrored_lnorm3_from_triple)"
        )
    low, med, upp = triple.lower, triple.median, triple.upper
    z = std_normal_quantile(1.0 - triple.alpha)
    d = (med * med - upp * low) / (2.0 * med - upp - low)
    mu = log(med - d)
    sigma = log((upp - d) / (med - d)) / z
    return Lnorm3Params(mu=mu, sigma=sigma, d=d)


def triple_from_params(params: Lnorm3Params, alpha: float = DEFAULT_ALPHA) -> QuantileTriple:
    """Forward map: the (alpha, 0.5, 1 - alpha) quantiles of the params."""
    check_probability(alpha, "alpha")
    if not alpha < 0.5:
        raise ValueError(f"alpha must be below 0.5, got {alpha}")
    return QuantileTriple(
        lower=float(lnorm3_quantile(alpha, params)),
        median=float(lnorm3_quantile(0.5, params)),
        upper=float(lnorm3_quantile(1.0 - alpha, params)),
        alpha=alpha,
    )


@dataclass(frozen=True)
class MirroredLnorm3:
    """Left-skewed density: X such that -X follows ``inner``.

    Support is x < -inner.d.  Produced only by the explicit mirrored solve;
    never returned in place of an Lnorm3Params.
    """

    inner: Lnorm3Params

    family = "mirrored_lnorm3"

    def pdf(self, x):
        return lnorm3_pdf(np.negative(x), self.inner)

    def cdf(self, x):
        return 1.0 - lnorm3_cdf(np.negative(x), self.inner)

    def quantile(self, prob):
        prob_arr = np.asarray(prob, dtype=float)
        return -lnorm3_quantile(1.0 - prob_arr, self.inner)

    def expected_value(self) -> float:
        from .distributions import lnorm3_expected_value

        return -lnorm3_expected_value(self.inner)


def solve_mirrored_lnorm3_from_triple(
    triple: QuantileTriple, tol: float = SYMMETRY_TOL
) -> MirroredLnorm3:
    """Explicit left-skew fit: solve the negated axis and mirror back."""
    negated = QuantileTriple(
        lower=-triple.upper,
        median=-triple.median,
        upper=-triple.lower,
        alpha=triple.alpha,
    )
    return MirroredLnorm3(inner=solve_lnorm3_from_triple(negated, tol))


def read_triples_csv(path) -> list[dict]:
    """Read triple rows: test_id, gender, lower, median, upper, alpha.

    Returns one dict per row with a ``triple`` key holding the parsed
    QuantileTriple; raises ValueError with the offending line number on
    malformed input.
    """
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if got != TRIPLE_CSV_COLUMNS:
            raise ValueError(
                f"{path}: expected header {','.join(TRIPLE_CSV_COLUMNS)}, "
                f"got {','.join(got)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                triple = QuantileTriple(
                    lower=float(row["lower"]),
                    median=float(row["median"]),
                    upper=float(row["upper"]),
                    alpha=float(row["alpha"]),
                )
            except (TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            rows.append(
                {"test_id": row["test_id"], "gender": row["gender"], "triple": triple}
            )
    return rows
