"""Binned-frequency containers and normalization.

A ``Histogram`` is bin edges plus per-bin frequencies.  Frequencies are
mass-like (counts or percentages behave identically); ``normalize_histogram``
converts to a density view whose step function integrates to 1, with
density_b = (f_b / width_b) / sum_j f_j.  A histogram already carrying the
density flag passes through unchanged, which makes normalization idempotent
bit for bit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyHistogramError

__all__ = [
    "Histogram",
    "build_histogram",
    "normalize_histogram",
    "average_histograms",
    "read_histogram_csv",
    "write_histogram_csv",
]

HISTOGRAM_CSV_COLUMNS = ("bin_lower", "bin_upper", "frequency")


@dataclass(frozen=True)
class Histogram:
    """Bin edges (length B+1, strictly increasing) and frequencies (length B)."""

    edges: np.ndarray
    frequencies: np.ndarray
    sample_size: int | None = None
    is_density: bool = False

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        freqs = np.asarray(self.frequencies, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "frequencies", freqs)
        if edges.ndim != 1 or freqs.ndim != 1:
            raise ValueError("edges and frequencies must be one-dimensional")
        if len(edges) < 3:
            raise ValueError("need at least 2 bins")
        if len(freqs) != len(edges) - 1:
            raise ValueError(
                f"{len(edges)} edges require {len(edges) - 1} frequencies, "
                f"got {len(freqs)}"
            )
        if not np.all(np.isfinite(edges)) or not np.all(np.isfinite(freqs)):
            raise ValueError("edges and frequencies must be finite")
        if not np.all(np.diff(edges) > 0):
            raise ValueError("edges must be strictly increasing")
        if np.any(freqs < 0):
            raise ValueError("frequencies must be nonnegative")
        if self.is_density:
            total = float(np.sum(freqs * np.diff(edges)))
            if abs(total - 1.0) > 1e-12:
                raise ValueError(
                    f"density view must integrate to 1 within 1e-12, got {total}"
                )

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def n_bins(self) -> int:
        return len(self.frequencies)


def build_histogram(samples, bins: int = 50, range=None) -> Histogram:
    """Equal-width count histogram of a 1-D sample.

    With the default automatic range every sample lands in a bin, so the
    frequencies sum to the sample count.
    """
    values = np.asarray(samples, dtype=float).ravel()
    if values.size == 0:
        raise EmptyHistogramError("cannot build a histogram from an empty sample")
    if not np.all(np.isfinite(values)):
        raise ValueError("samples must be finite")
    if bins < 1:
        raise ValueError(f"bins must be >= 1, got {bins}")
    if np.min(values) == np.max(values):
        # np.histogram would produce a degenerate zero-width range
        center = float(values[0])
        pad = max(abs(center) * 1e-6, 1e-6)
        range = (center - pad, center + pad)
    counts, edges = np.histogram(values, bins=bins, range=range)
    return Histogram(
        edges=edges, frequencies=counts.astype(float), sample_size=int(values.size)
    )


def normalize_histogram(hist: Histogram) -> Histogram:
    """Density view of a histogram; a no-op if already a density."""
    if hist.is_density:
        return hist
    total = float(np.sum(hist.frequencies))
    if total <= 0:
        raise EmptyHistogramError("histogram has no mass: all frequencies are zero")
    density = hist.frequencies / (hist.widths * total)
    return replace(hist, frequencies=density, is_density=True)


def average_histograms(histograms: list[Histogram]) -> Histogram:
    """Bin-wise average of several normalized histograms on shared edges.

    Each input is normalized first; edges must match exactly, the usual
    situation for multi-year survey releases on fixed boundaries.
    """
    if not histograms:
        raise ValueError("need at least one histogram")
    normalized = [normalize_histogram(h) for h in histograms]
    edges = normalized[0].edges
    for h in normalized[1:]:
        if len(h.edges) != len(edges) or not np.array_equal(h.edges, edges):
            raise ValueError("histograms must share identical bin edges")
    stacked = np.vstack([h.frequencies for h in normalized])
    mean = stacked.mean(axis=0)
    # Averaged densities integrate to 1 up to rounding; rescale the residual
    # so the density-view invariant holds exactly enough for construction.
    mean = mean / float(np.sum(mean * np.diff(edges)))
    sizes = [h.sample_size for h in normalized]
    total = sum(s for s in sizes if s is not None) if any(s is not None for s in sizes) else None
    return Histogram(edges=edges, frequencies=mean, sample_size=total, is_density=True)


def read_histogram_csv(path) -> Histogram:
    """Read `bin_lower,bin_upper,frequency` rows into a Histogram.

    Bins must be contiguous and ascending; errors carry the line number.
    """
    lowers, uppers, freqs = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        got = tuple(reader.fieldnames or ())
        if got != HISTOGRAM_CSV_COLUMNS:
            raise ValueError(
                f"{path}: expected header {','.join(HISTOGRAM_CSV_COLUMNS)}, "
                f"got {','.join(got)}"
            )
        for lineno, row in enumerate(reader, start=2):
            try:
                lowers.append(float(row["bin_lower"]))
                uppers.append(float(row["bin_upper"]))
                freqs.append(float(row["frequency"]))
            except (TypeError, ValueError):
                raise ValueError(f"{path}: line {lineno}: non-numeric bin row") from None
    if len(lowers) < 2:
        raise ValueError(f"{path}: need at least 2 bins")
    for i in range(1, len(lowers)):
        if lowers[i] != uppers[i - 1]:
            raise ValueError(
                f"{path}: line {i + 2}: bins must be contiguous "
                f"(bin_lower {lowers[i]} != previous bin_upper {uppers[i - 1]})"
            )
    edges = np.array(lowers + [uppers[-1]], dtype=float)
    return Histogram(edges=edges, frequencies=np.array(freqs, dtype=float))


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTOGRAM_CSV_COLUMNS)
        for lo, hi, f in zip(hist.edges[:-1], hist.edges[1:], hist.frequencies):
            writer.writerow([repr(float(lo)), repr(float(hi)), repr(float(f))])
