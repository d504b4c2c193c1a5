"""Directional and distance-based comparison of reference distributions.

Two kinds of comparison live here.  The first is the DFE (direction from
expected value): given a baseline cohort's fitted distribution and another
cohort's, report whether the second expected value sits higher or lower and
by how much.  The second is a family of grid distances between two fitted
pdfs (absolute, squared, symmetrized Kullback-Leibler), plus Welch's t-test
machinery for asking whether distances within one group of dataset pairs
run smaller than distances across groups.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import (
    GridRangeError,
    InsufficientDataError,
    MissingPredictionError,
    SupportError,
)
from .distributions import support_lower
from .kde import silverman_bandwidth, kde

__all__ = [
    "DfeRecord",
    "PredictionEntry",
    "ConcordanceReport",
    "DistanceRecord",
    "GroupReport",
    "dfe",
    "concordance",
    "grid_distance",
    "symmetric_kl",
    "welch_t_test",
    "cohen_d_pooled",
    "split_near_far",
    "group_analysis",
    "distance_kde_export",
    "read_predictions_csv",
    "read_distances_csv",
    "write_dfe_csv",
    "write_distances_csv",
    "group_report_to_dict",
    "write_group_report_json",
]

METRICS = ("L1Grid", "L2Grid", "SymKL")
DEFAULT_N_POINTS = 10_000
_TAIL_PROB = 5e-4
_KL_FLOOR = 1e-300

PREDICTIONS_CSV_COLUMNS = ("test_id", "gender", "dataset", "predicted_direction")
DFE_CSV_COLUMNS = (
    "test_id",
    "gender",
    "baseline_dataset",
    "other_dataset",
    "direction",
    "magnitude",
)
DISTANCES_CSV_COLUMNS = (
    "test_id",
    "gender",
    "dataset_a",
    "dataset_b",
    "metric",
    "value",
    "n_points",
    "range_lo",
    "range_hi",
    "raw_sum",
)


@dataclass(frozen=True)
class DfeRecord:
    test_id: str
    gender: str
    baseline_dataset: str
    other_dataset: str
    direction: str  # "Higher", "Lower", or "Tie"
    magnitude: float  # E[other] - E[baseline], in test units


@dataclass(frozen=True)
class PredictionEntry:
    test_id: str
    gender: str
    dataset: str
    predicted_direction: str  # "Higher" or "Lower"


@dataclass(frozen=True)
class ConcordanceReport:
    matches: tuple
    mismatches: tuple
    ties: tuple  # subset of mismatches where the record direction was Tie
    coverage: float  # matched fraction of all records, 0.0 for an empty set


@dataclass(frozen=True)
class DistanceRecord:
    test_id: str
    gender: str
    dataset_a: str
    dataset_b: str
    metric: str
    value: float  # grid-step-scaled sum
    n_points: int
    range: tuple  # (lo, hi) actually used
    raw_sum: float  # unscaled per-point sum


@dataclass(frozen=True)
class GroupReport:
    near_mean: float
    far_mean: float
    t_statistic: float
    p_value: float
    effect_size: float
    n_near: int
    n_far: int


def dfe(baseline, other, *, test_id: str = "", gender: str = "",
        baseline_dataset: str = "", other_dataset: str = "") -> DfeRecord:
    """Direction-from-expected-value comparison of two fitted distributions.

    magnitude = E[other] - E[baseline]; direction is its sign.  An exact
    zero is reported as "Tie" rather than forced into either direction.
    """
    magnitude = other.expected_value() - baseline.expected_value()
    if magnitude > 0:
        direction = "Higher"
    elif magnitude < 0:
        direction = "Lower"
    else:
        direction = "Tie"
    return DfeRecord(
        test_id=test_id,
        gender=gender,
        baseline_dataset=baseline_dataset,
        other_dataset=other_dataset,
        direction=direction,
        magnitude=magnitude,
    )


def concordance(records, predictions) -> ConcordanceReport:
    """Match DFE directions against predicted directions.

    Predictions are keyed by (test_id, gender, dataset) where dataset names
    the record's non-baseline cohort.  Every record must have a prediction;
    a missing key raises.  Tie records never match and are listed both in
    ``mismatches`` and ``ties``.
    """
    table = {}
    for entry in predictions:
        key = (entry.test_id, entry.gender, entry.dataset)
        if key in table:
            raise ValueError(f"duplicate prediction for {key}")
        table[key] = entry.predicted_direction
    matches, mismatches, ties = [], [], []
    for record in records:
        key = (record.test_id, record.gender, record.other_dataset)
        if key not in table:
            raise MissingPredictionError(f"no prediction for {key}")
        if record.direction == "Tie":
            mismatches.append(key)
            ties.append(key)
        elif record.direction == table[key]:
            matches.append(key)
        else:
            mismatches.append(key)
    total = len(matches) + len(mismatches)
    coverage = len(matches) / total if total else 0.0
    return ConcordanceReport(
        matches=tuple(matches),
        mismatches=tuple(mismatches),
        ties=tuple(ties),
        coverage=coverage,
    )


def _auto_range(a, b, metric: str) -> tuple:
    lo = min(a.quantile(_TAIL_PROB), b.quantile(_TAIL_PROB))
    hi = max(a.quantile(1.0 - _TAIL_PROB), b.quantile(1.0 - _TAIL_PROB))
    if metric == "SymKL":
        # the symmetrized KL needs both densities positive, so the grid
        # must start inside both supports
        floor = max(support_lower(a), support_lower(b))
        if np.isfinite(floor) and lo < floor:
            lo = floor
    return float(lo), float(hi)


def _check_explicit_range(a, b, lo: float, hi: float) -> None:
    if not hi > lo:
        raise GridRangeError(f"need lo < hi, got [{lo}, {hi}]")
    for params in (a, b):
        low = support_lower(params)
        if hi <= low:
            raise GridRangeError(
                f"range [{lo}, {hi}] lies entirely outside the support "
                f"starting at {low}"
            )


def grid_distance(
    a,
    b,
    metric: str = "L1Grid",
    n_points: int = DEFAULT_N_POINTS,
    range="auto",
    *,
    test_id: str = "",
    gender: str = "",
    dataset_a: str = "a",
    dataset_b: str = "b",
) -> DistanceRecord:
    """Distance between two pdfs sampled on an equally spaced grid.

    L1Grid sums absolute differences, L2Grid squared differences, SymKL the
    symmetrized Kullback-Leibler integrand.  ``value`` scales the point sum
    by the grid step so results compare across ranges; ``raw_sum`` keeps the
    unscaled sum.  range="auto" spans both distributions out to the 5e-4
    tails.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if n_points < 2:
        raise ValueError(f"need n_points >= 2, got {n_points}")
    if isinstance(range, str):
        if range != "auto":
            raise ValueError(f"range must be 'auto' or a (lo, hi) pair, got {range!r}")
        lo, hi = _auto_range(a, b, metric)
    else:
        lo, hi = float(range[0]), float(range[1])
        _check_explicit_range(a, b, lo, hi)
    grid = np.linspace(lo, hi, n_points)
    dx = (hi - lo) / (n_points - 1)
    if metric == "SymKL":
        raw = _symmetric_kl_raw(a, b, grid)
        value = dx * raw
    else:
        fa = a.pdf(grid)
        fb = b.pdf(grid)
        diff = fa - fb
        raw = float(np.sum(np.abs(diff))) if metric == "L1Grid" else float(
            np.dot(diff, diff)
        )
        value = dx * raw
    return DistanceRecord(
        test_id=test_id,
        gender=gender,
        dataset_a=dataset_a,
        dataset_b=dataset_b,
        metric=metric,
        value=value,
        n_points=n_points,
        range=(lo, hi),
        raw_sum=raw,
    )


def _symmetric_kl_raw(a, b, grid: np.ndarray) -> float:
    floor = max(support_lower(a), support_lower(b))
    if np.isfinite(floor) and floor >= grid[-1]:
        raise SupportError(
            f"supports only intersect above {floor}, beyond the grid end {grid[-1]}"
        )
    fa = np.maximum(a.pdf(grid), _KL_FLOOR)
    fb = np.maximum(b.pdf(grid), _KL_FLOOR)
    return float(np.sum((fa - fb) * np.log(fa / fb)))


def symmetric_kl(a, b, grid) -> float:
    """Symmetrized KL divergence, grid-step-scaled, over an explicit grid.

    The grid must be equally spaced with at least two points.  Densities
    are floored at 1e-300 before the log so tail underflow cannot produce
    infinities.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("grid must be a 1-D array with at least 2 points")
    steps = np.diff(grid)
    dx = (grid[-1] - grid[0]) / (grid.size - 1)
    if dx <= 0 or not np.allclose(steps, dx, rtol=1e-9, atol=0):
        raise ValueError("grid must be increasing and equally spaced")
    return dx * _symmetric_kl_raw(a, b, grid)


def welch_t_test(a, b) -> tuple:
    """Welch's unequal-variance t-test, two-sided.

    Returns (t, df, p) with t = (mean(a) - mean(b)) / se and the
    Welch-Satterthwaite degrees of freedom.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError(
            f"both samples need >= 2 values, got {a.size} and {b.size}"
        )
    va = np.var(a, ddof=1) / a.size
    vb = np.var(b, ddof=1) / b.size
    se = np.sqrt(va + vb)
    if se == 0:
        return 0.0, float(a.size + b.size - 2), 1.0
    t = (np.mean(a) - np.mean(b)) / se
    df = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    p = 2.0 * float(stats.t.sf(abs(t), df))
    return float(t), float(df), min(p, 1.0)


def cohen_d_pooled(a, b) -> float:
    """Cohen's d with pooled standard deviation: (mean(a) - mean(b)) / s_p."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise InsufficientDataError(
            f"both samples need >= 2 values, got {a.size} and {b.size}"
        )
    pooled = np.sqrt(
        ((a.size - 1) * np.var(a, ddof=1) + (b.size - 1) * np.var(b, ddof=1))
        / (a.size + b.size - 2)
    )
    if pooled == 0:
        return 0.0
    return float((np.mean(a) - np.mean(b)) / pooled)


def _as_pair_set(near_pairs) -> set:
    pairs = set()
    for pair in near_pairs:
        key = frozenset(pair)
        if len(key) != 2:
            raise ValueError(f"near pair must name two distinct datasets, got {pair}")
        pairs.add(key)
    return pairs


def split_near_far(distances, near_pairs) -> tuple:
    """Partition distance values into (near, far) by unordered dataset pair."""
    pairs = _as_pair_set(near_pairs)
    near, far = [], []
    for record in distances:
        key = frozenset((record.dataset_a, record.dataset_b))
        (near if key in pairs else far).append(record.value)
    return near, far


def group_analysis(distances, near_pairs) -> GroupReport:
    """Welch's t-test of Far distances against Near distances.

    ``near_pairs`` lists the unordered dataset pairs whose distances form
    the Near group; every other record is Far.  The t statistic and effect
    size are oriented Far minus Near, so both come out positive when
    same-group pairs sit closer together.  Records should share one metric;
    mixing metrics makes the means meaningless.
    """
    near, far = split_near_far(distances, near_pairs)
    if len(near) < 2 or len(far) < 2:
        raise InsufficientDataError(
            f"need >= 2 distances per group, got {len(near)} near, {len(far)} far"
        )
    t, _, p = welch_t_test(far, near)
    d = cohen_d_pooled(far, near)
    return GroupReport(
        near_mean=float(np.mean(near)),
        far_mean=float(np.mean(far)),
        t_statistic=t,
        p_value=p,
        effect_size=d,
        n_near=len(near),
        n_far=len(far),
    )


def distance_kde_export(values_by_group: dict, n_points: int = 256) -> tuple:
    """Per-group kernel density curves of distance values on a shared grid.

    Returns (x, {group: density}).  Groups enter the output sorted by name
    so the table is reproducible.  A group with fewer than 2 values or no
    spread fails inside the bandwidth rule.
    """
    if not values_by_group:
        raise ValueError("need at least one group of distances")
    bandwidths = {}
    for name, values in values_by_group.items():
        bandwidths[name] = silverman_bandwidth(values)
    all_values = np.concatenate(
        [np.asarray(v, dtype=float) for v in values_by_group.values()]
    )
    pad = 3.0 * max(bandwidths.values())
    x = np.linspace(all_values.min() - pad, all_values.max() + pad, n_points)
    curves = {}
    for name in sorted(values_by_group):
        curves[name] = kde(values_by_group[name]).pdf(x)
    return x, curves


def read_predictions_csv(path) -> list:
    """Predicted directions, one row per (test, gender, dataset)."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != PREDICTIONS_CSV_COLUMNS:
            raise ValueError(
                f"expected header {','.join(PREDICTIONS_CSV_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
            test_id, gender, dataset, direction = (field.strip() for field in row)
            if direction not in ("higher", "lower"):
                raise ValueError(
                    f"line {lineno}: predicted_direction must be 'higher' or "
                    f"'lower', got {direction!r}"
                )
            entries.append(
                PredictionEntry(
                    test_id=test_id,
                    gender=gender,
                    dataset=dataset,
                    predicted_direction=direction.capitalize(),
                )
            )
    return entries


def read_distances_csv(path) -> list:
    """Inverse of write_distances_csv."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != DISTANCES_CSV_COLUMNS:
            raise ValueError(
                f"expected header {','.join(DISTANCES_CSV_COLUMNS)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(DISTANCES_CSV_COLUMNS):
                raise ValueError(
                    f"line {lineno}: expected {len(DISTANCES_CSV_COLUMNS)} fields, "
                    f"got {len(row)}"
                )
            try:
                records.append(
                    DistanceRecord(
                        test_id=row[0],
                        gender=row[1],
                        dataset_a=row[2],
                        dataset_b=row[3],
                        metric=row[4],
                        value=float(row[5]),
                        n_points=int(row[6]),
                        range=(float(row[7]), float(row[8])),
                        raw_sum=float(row[9]),
                    )
                )
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
    return records


def write_dfe_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DFE_CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.test_id,
                    r.gender,
                    r.baseline_dataset,
                    r.other_dataset,
                    r.direction,
                    repr(r.magnitude),
                ]
            )


def write_distances_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DISTANCES_CSV_COLUMNS)
        for r in records:
            writer.writerow(
                [
                    r.test_id,
                    r.gender,
                    r.dataset_a,
                    r.dataset_b,
                    r.metric,
                    repr(r.value),
                    r.n_points,
                    repr(r.range[0]),
                    repr(r.range[1]),
                    repr(r.raw_sum),
                ]
            )


def group_report_to_dict(report: GroupReport, metadata: dict | None = None) -> dict:
    return {
        "near_mean": report.near_mean,
        "far_mean": report.far_mean,
        "t_statistic": report.t_statistic,
        "p_value": report.p_value,
        "effect_size": report.effect_size,
        "n_near": report.n_near,
        "n_far": report.n_far,
        "metadata": {
            "test": "welch_two_sided",
            "effect_size_kind": "cohen_d_pooled_sd",
            **(metadata or {}),
        },
    }


def write_group_report_json(report: GroupReport, path, metadata: dict | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(group_report_to_dict(report, metadata), fh, indent=2, sort_keys=True)
        fh.write("\n")
