"""Command-line front end.

Every subcommand is a thin shell over library calls, so numbers printed
here are bit-identical to what the same inputs produce in Python.  Exit
status: 0 on success, 1 on input problems (bad files, bad arguments), 2 on
numerical failures (unsolvable triples, degenerate bandwidths, failed
starts).  Set REFDIST_LOG to error, warn, info or debug to control logging
verbosity on stderr.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from .compare import (
    concordance,
    dfe,
    grid_distance,
    group_analysis,
    group_report_to_dict,
    read_distances_csv,
    read_predictions_csv,
)
from .distributions import params_from_dict, params_to_dict
from .errors import (
    BandwidthError,
    DegenerateSymmetricError,
    EmptyCohortError,
    LeftSkewUnsupportedError,
    RefdistError,
    SimplexInitError,
    SupportError,
)
from .fitting import fit_histogram
from .histogram import average_histograms, build_histogram, read_histogram_csv
from .kde import kde
from .quantiles import read_triples_csv, solve_lnorm3_from_triple
from .synth import (
    default_experiment_config,
    pipeline_experiment,
    read_experiment_config,
    write_report,
)

__all__ = ["main"]

log = logging.getLogger("refdist")

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}

_METRIC_NAMES = {"l1": "L1Grid", "l2": "L2Grid", "skl": "SymKL"}

# failures of the math, as opposed to failures of the input
_NUMERIC_ERRORS = (
    DegenerateSymmetricError,
    LeftSkewUnsupportedError,
    SimplexInitError,
    BandwidthError,
    SupportError,
    EmptyCohortError,
)


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; the contract here is
    # exit 1 for every input problem
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _json_text(payload) -> str:
    return json.dumps(payload, indent=2) + "\n"


def _load_entries(path) -> list:
    """Params JSON file: a bare object or an array of objects."""
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        return [data]
    if isinstance(data, list):
        return data
    raise ValueError(f"{path}: expected a JSON object or array of objects")


def _load_single_params(path):
    entries = _load_entries(path)
    if len(entries) != 1:
        raise ValueError(f"{path}: expected exactly one parameter object, got {len(entries)}")
    return params_from_dict(entries[0]), entries[0]


def _ids_of(entry: dict) -> dict:
    return {k: entry[k] for k in ("test_id", "gender", "dataset") if k in entry}


def _cmd_fit_triple(ns) -> int:
    rows = read_triples_csv(ns.triples)
    entries = []
    for row in rows:
        params = solve_lnorm3_from_triple(row["triple"])
        entries.append(
            {
                "test_id": row["test_id"],
                "gender": row["gender"],
                **params_to_dict(params),
            }
        )
    _emit(_json_text(entries), ns.out)
    return 0


def _fit_result_dict(result) -> dict:
    return {
        "family": result.params.family,
        "params": params_to_dict(result.params),
        "sse": result.sse,
        "iterations": result.iterations,
        "converged": result.converged,
        "restarts_used": result.restarts_used,
    }


def _fit_hist_file(args):
    path, family, seed, weight = args
    hist = read_histogram_csv(path)
    return fit_histogram(hist, family=family, seed=seed, weight_by_width=weight)


def _cmd_fit_hist(ns) -> int:
    if ns.batch:
        tasks = [(path, ns.family, ns.seed, ns.weight_by_width) for path in ns.histograms]
        if ns.jobs > 1:
            with ProcessPoolExecutor(max_workers=ns.jobs) as pool:
                results = list(pool.map(_fit_hist_file, tasks))
        else:
            results = [_fit_hist_file(task) for task in tasks]
        payload = [
            {"file": path, **_fit_result_dict(result)}
            for path, result in zip(ns.histograms, results)
        ]
        _emit(_json_text(payload), ns.out)
        return 0
    hists = [read_histogram_csv(path) for path in ns.histograms]
    hist = hists[0] if len(hists) == 1 else average_histograms(hists)
    result = fit_histogram(
        hist, family=ns.family, seed=ns.seed, weight_by_width=ns.weight_by_width
    )
    log.info(
        "fit %s: sse=%.6g converged=%s", ns.family, result.sse, result.converged
    )
    _emit(_json_text(_fit_result_dict(result)), ns.out)
    return 0


def _cmd_expect(ns) -> int:
    with open(ns.params) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        value = params_from_dict(data).expected_value()
        _emit(repr(value) + "\n", ns.out)
        return 0
    if not isinstance(data, list):
        raise ValueError(f"{ns.params}: expected a JSON object or array of objects")
    payload = [
        {**_ids_of(entry), "expected_value": params_from_dict(entry).expected_value()}
        for entry in data
    ]
    _emit(_json_text(payload), ns.out)
    return 0


def _cmd_dfe(ns) -> int:
    baseline_entries = _load_entries(ns.baseline)
    other_entries = _load_entries(ns.other)
    baselines = {}
    for entry in baseline_entries:
        key = (entry.get("test_id", ""), entry.get("gender", ""))
        if key in baselines:
            raise ValueError(f"{ns.baseline}: duplicate (test_id, gender) {key}")
        baselines[key] = entry
    records = []
    for entry in other_entries:
        key = (entry.get("test_id", ""), entry.get("gender", ""))
        if key not in baselines:
            raise ValueError(f"{ns.other}: no baseline row for (test_id, gender) {key}")
        base = baselines[key]
        records.append(
            dfe(
                params_from_dict(base),
                params_from_dict(entry),
                test_id=key[0],
                gender=key[1],
                baseline_dataset=base.get("dataset", ""),
                other_dataset=entry.get("dataset", ""),
            )
        )
    predictions = read_predictions_csv(ns.predictions)
    report = concordance(records, predictions)
    predicted = {(p.test_id, p.gender, p.dataset): p.predicted_direction for p in predictions}
    tie_keys = set(report.ties)
    match_keys = set(report.matches)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["test_id", "gender", "dataset", "direction", "predicted_direction", "outcome"]
    )
    for record in records:
        key = (record.test_id, record.gender, record.other_dataset)
        outcome = "tie" if key in tie_keys else ("match" if key in match_keys else "mismatch")
        writer.writerow(
            [record.test_id, record.gender, record.other_dataset,
             record.direction, predicted[key], outcome]
        )
    log.info(
        "concordance: %d matches, %d mismatches, coverage %.3f",
        len(report.matches), len(report.mismatches), report.coverage,
    )
    _emit(buf.getvalue(), ns.out)
    return 0


def _parse_range(text: str):
    if text == "auto":
        return "auto"
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(
            f"range must be 'auto' or 'lo,hi', got {text!r}"
        )
    try:
        return (float(parts[0]), float(parts[1]))
    except ValueError:
        raise argparse.ArgumentTypeError(f"range bounds must be numbers, got {text!r}")


def _cmd_distance(ns) -> int:
    params_a, entry_a = _load_single_params(ns.params_a)
    params_b, entry_b = _load_single_params(ns.params_b)
    record = grid_distance(
        params_a,
        params_b,
        metric=_METRIC_NAMES[ns.metric],
        n_points=ns.points,
        range=ns.range,
        dataset_a=entry_a.get("dataset", "a"),
        dataset_b=entry_b.get("dataset", "b"),
    )
    payload = {
        "test_id": record.test_id,
        "gender": record.gender,
        "dataset_a": record.dataset_a,
        "dataset_b": record.dataset_b,
        "metric": record.metric,
        "value": record.value,
        "n_points": record.n_points,
        "range": list(record.range),
        "raw_sum": record.raw_sum,
    }
    _emit(_json_text(payload), ns.out)
    return 0


def _near_pair(text: str):
    parts = tuple(part.strip() for part in text.split(","))
    if len(parts) != 2 or parts[0] == parts[1] or not all(parts):
        raise argparse.ArgumentTypeError(
            f"near pair must be two distinct names 'a,b', got {text!r}"
        )
    return parts


def _cmd_group(ns) -> int:
    records = read_distances_csv(ns.distances)
    report = group_analysis(records, ns.near)
    metadata = {"near_pairs": [sorted(pair) for pair in ns.near]}
    text = json.dumps(group_report_to_dict(report, metadata), indent=2, sort_keys=True)
    _emit(text + "\n", ns.out)
    return 0


def _cmd_synth_run(ns) -> int:
    if ns.config is not None:
        config = replace(read_experiment_config(ns.config), seed=ns.seed)
    else:
        config = default_experiment_config(
            seed=ns.seed,
            n_tests=ns.n_tests,
            n_per_cohort=ns.n_per_cohort,
            exclusion_percentile=ns.exclusion_percentile,
        )
    report = pipeline_experiment(config, jobs=ns.jobs)
    write_report(report, ns.out, config)
    log.info("report written to %s", ns.out)
    return 0


def _read_samples_file(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError:
                raise ValueError(
                    f"{path} line {lineno}: expected one number per line, got {text!r}"
                ) from None
    if not values:
        raise ValueError(f"{path}: no samples found")
    return np.asarray(values)


def _cmd_plot_data(ns) -> int:
    samples = _read_samples_file(ns.samples)
    density = kde(samples)
    pad = 3.0 * density.bandwidth_
    x = np.linspace(samples.min() - pad, samples.max() + pad, ns.points)
    hist = build_histogram(samples, bins=ns.bins)
    lnorm3_fit = fit_histogram(hist, family="lnorm3", seed=ns.seed)
    norm3_fit = fit_histogram(hist, family="norm3", seed=ns.seed)
    kde_curve = density.pdf(x)
    norm3_curve = norm3_fit.params.pdf(x)
    lnorm3_curve = lnorm3_fit.params.pdf(x)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x", "kde", "norm3", "lnorm3"])
    for row in zip(x, kde_curve, norm3_curve, lnorm3_curve):
        writer.writerow([repr(float(v)) for v in row])
    _emit(buf.getvalue(), ns.out)
    return 0


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="refdist",
        description="Reference distribution estimation and comparison for lab tests.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-triple", help="solve shifted-lognormal params from quantile triples")
    p.add_argument("triples", help="CSV: test_id,gender,lower,median,upper,alpha")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_fit_triple)

    p = sub.add_parser("fit-hist", help="least-squares family fit to histogram CSV(s)")
    p.add_argument("histograms", nargs="+", help="CSV: bin_lower,bin_upper,frequency")
    p.add_argument("--family", choices=("lnorm3", "norm3"), default="lnorm3")
    p.add_argument("--seed", type=int, default=0, help="restart jitter seed")
    p.add_argument("--weight-by-width", action="store_true",
                   help="weight squared errors by bin width")
    p.add_argument("--batch", action="store_true",
                   help="fit each file separately instead of averaging")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for --batch")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_fit_hist)

    p = sub.add_parser("expect", help="expected value of fitted parameters")
    p.add_argument("params", help="params JSON (object or array)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_expect)

    p = sub.add_parser("dfe", help="expected-value directions vs predictions")
    p.add_argument("baseline", help="baseline params JSON (array keyed by test_id,gender)")
    p.add_argument("other", help="comparison params JSON (array keyed by test_id,gender)")
    p.add_argument("predictions", help="CSV: test_id,gender,dataset,predicted_direction")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_dfe)

    p = sub.add_parser("distance", help="grid distance between two fitted pdfs")
    p.add_argument("params_a", help="params JSON (single object)")
    p.add_argument("params_b", help="params JSON (single object)")
    p.add_argument("--metric", choices=tuple(_METRIC_NAMES), default="l1")
    p.add_argument("--points", type=int, default=10_000)
    p.add_argument("--range", type=_parse_range, default="auto",
                   help="'auto' or explicit 'lo,hi'")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_distance)

    p = sub.add_parser("group", help="Welch test of Near vs Far distance groups")
    p.add_argument("distances", help="distances CSV as written by this tool")
    p.add_argument("--near", type=_near_pair, action="append", required=True,
                   metavar="A,B", help="dataset pair in the Near group (repeatable)")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_group)

    synth = sub.add_parser("synth", help="synthetic experiments")
    synth_sub = synth.add_subparsers(dest="synth_command", required=True)
    p = synth_sub.add_parser("run", help="run the four-cohort experiment")
    p.add_argument("--config", help="ExperimentConfig JSON (default: built-in layout)")
    p.add_argument("--seed", type=int, required=True,
                   help="experiment seed (required for reproducibility)")
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over tests")
    p.add_argument("--n-tests", type=int, default=20,
                   help="synthetic tests (built-in layout only)")
    p.add_argument("--n-per-cohort", type=int, default=10_000,
                   help="cohort size (built-in layout only)")
    p.add_argument("--exclusion-percentile", type=float, default=80.0,
                   help="upper-tail cut for screened cohorts; 100 disables")
    p.set_defaults(func=_cmd_synth_run)

    p = sub.add_parser("plot-data", help="kde/norm3/lnorm3 overlay curves as CSV")
    p.add_argument("samples", help="text file, one value per line")
    p.add_argument("--bins", type=int, default=50, help="bins for the fits")
    p.add_argument("--points", type=int, default=512, help="grid resolution")
    p.add_argument("--seed", type=int, default=0, help="restart jitter seed")
    p.add_argument("--out", help="output file (default stdout)")
    p.set_defaults(func=_cmd_plot_data)

    return parser


def _configure_logging() -> None:
    name = os.environ.get("REFDIST_LOG", "warn").lower()
    if name not in _LOG_LEVELS:
        raise ValueError(
            f"REFDIST_LOG must be one of {sorted(_LOG_LEVELS)}, got {name!r}"
        )
    logging.basicConfig(
        level=_LOG_LEVELS[name],
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )


def main(argv=None) -> int:
    try:
        _configure_logging()
        parser = _build_parser()
        ns = parser.parse_args(argv)
        return ns.func(ns)
    except _NUMERIC_ERRORS as exc:
        print(f"refdist: numerical failure: {exc}", file=sys.stderr)
        return 2
    except (RefdistError, ValueError, OSError) as exc:
        print(f"refdist: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
