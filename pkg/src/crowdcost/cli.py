"""Command-line interface.

Subcommands: simulate, estimate, run, benchmark, ingest, bounds,
diagnostics. Exit codes: 0 success, 2 configuration error, 3 numerical or
estimation error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import bench, estimate, pipeline, sim
from .core import lower_bound_no_prior, lower_bound_with_prior, optimal_class
from .errors import ConfigError, CrowdCostError, EstimationError, PipelineError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _cmd_simulate(args) -> int:
    instance = sim.load_instance(args.instance)
    truth = sim.sample_truth(instance.prior, args.items, args.seed)
    z = sim.explore_matrix(truth, instance, args.seed)
    names = [wc.name for wc in instance.classes]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item"] + names)
        for j in range(truth.n):
            writer.writerow([j] + [int(z[k, j]) for k in range(instance.m)])
    if args.truth_out:
        with open(args.truth_out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item", "label"])
            for j, label in enumerate(truth.labels):
                writer.writerow([j, int(label)])
    print(f"wrote {instance.m} x {truth.n} label matrix to {args.out}")
    return EXIT_OK


def _read_labels_csv(path: str) -> tuple[np.ndarray, list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "item":
            raise ConfigError(f"{path}: expected header starting with 'item'")
        names = header[1:]
        columns = []
        for i, row in enumerate(reader):
            try:
                columns.append([int(v) for v in row[1:]])
            except ValueError as exc:
                raise ConfigError(f"{path} line {i + 2}: {exc}") from exc
    if not columns:
        raise ConfigError(f"{path}: no label rows")
    return np.array(columns, dtype=np.int8).T, names


def _cmd_estimate(args) -> int:
    z, names = _read_labels_csv(args.labels)
    if args.method == "one-coin":
        result = estimate.one_coin_estimate(z)
    else:
        result = estimate.asym_estimate(z)
    print(f"method: {result.method}")
    for name, cm in zip(names, result.confusions):
        print(f"  {name}: c0={cm.c0:.4f} c1={cm.c1:.4f}")
    if result.prior is not None:
        print(f"  prior: w0={result.prior.w0:.4f} w1={result.prior.w1:.4f}")
    return EXIT_OK


def _cmd_run(args) -> int:
    instance = sim.load_instance(args.instance)
    truth = sim.sample_truth(instance.prior, args.items, args.seed)
    report = pipeline.run_algorithm(
        args.algo,
        truth,
        instance,
        args.alpha,
        args.seed,
        record_traces=bool(args.audit),
    )
    k_star = optimal_class(instance).k_star
    row = bench.report_to_row(report, args.instance, k_star)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=bench.RESULT_FIELDS)
        writer.writeheader()
        writer.writerow(row.as_record())
    if args.audit:
        _write_audit(report, args.audit)
    print(
        f"{report.algorithm}: accuracy={report.accuracy:.4f} "
        f"k_hat={report.k_hat} total_cost={report.total_cost:.2f} "
        f"mean_tau={report.mean_tau:.2f}"
    )
    return EXIT_OK


def _write_audit(report: pipeline.RunReport, path: str) -> None:
    """Per-item detail JSON plus a stopping-trace CSV next to it."""
    with open(path, "w") as fh:
        json.dump(report.detail_dict(), fh, indent=2)
        fh.write("\n")
    if report.traces is not None:
        trace_path = os.path.splitext(path)[0] + "_traces.csv"
        with open(trace_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["item", "t", "statistic", "threshold"])
            for j, trace in enumerate(report.traces):
                for t, stat, threshold in trace or ():
                    writer.writerow([j, t, repr(stat), repr(threshold)])


def _cmd_benchmark(args) -> int:
    try:
        with open(args.config) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.config} is not valid JSON: {exc}") from exc
    config = bench.BenchmarkConfig.from_dict(data)
    rows = bench.run_benchmark(config)
    os.makedirs(args.out, exist_ok=True)
    results_path = os.path.join(args.out, "results.csv")
    aggregate_path = os.path.join(args.out, "aggregate.csv")
    bench.write_results_csv(rows, results_path)
    bench.write_aggregate_csv(rows, aggregate_path)
    print(f"wrote {len(rows)} rows to {results_path}")
    print(f"wrote aggregates to {aggregate_path}")
    return EXIT_OK


def _cmd_ingest(args) -> int:
    records = sim.read_responses(args.responses)
    if not args.gold_included:
        raise ConfigError(
            "ingestion needs gold labels; pass --gold-included when the CSV "
            "has a populated gold column"
        )
    class_map = None
    if args.class_map:
        with open(args.class_map) as fh:
            class_map = json.load(fh)
    instance = sim.ingest_responses(records, class_map=class_map)
    sim.save_instance(instance, args.out, pricing="explicit")
    print(f"wrote instance with {instance.m} classes to {args.out}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    instance = sim.load_instance(args.instance)
    scores = optimal_class(instance)
    print(f"alpha={args.alpha}  k_star={scores.k_star}")
    print("class  price     c0     c1    score      gap  lb_no_prior(l=0/1)  lb_known(l=0/1)")
    for k, wc in enumerate(instance.classes):
        cm = wc.confusion
        def _fmt(fn, *a):
            try:
                return f"{fn(*a):.3f}"
            except (CrowdCostError, ValueError):
                return "inf"
        lb0 = _fmt(lower_bound_no_prior, cm.c0, args.alpha)
        lb1 = _fmt(lower_bound_no_prior, cm.c1, args.alpha)
        lk0 = _fmt(lower_bound_with_prior, cm.c0, cm.c1, 0, args.alpha)
        lk1 = _fmt(lower_bound_with_prior, cm.c0, cm.c1, 1, args.alpha)
        mark = "*" if k == scores.k_star else " "
        print(
            f"{k}{mark}  {wc.price:8.3f}  {cm.c0:.3f}  {cm.c1:.3f}  "
            f"{scores.scores[k]:8.3f}  {scores.gaps[k]:7.3f}  "
            f"{lb0}/{lb1}  {lk0}/{lk1}"
        )
    return EXIT_OK


def _fmt_const(value: float, log10_value: float) -> str:
    if math.isinf(log10_value):
        return "inf (infeasible)"
    if math.isinf(value):
        return f"overflow (log10 = {log10_value:.2f})"
    return f"{value:.4g} (log10 = {log10_value:.2f})"


def _cmd_diagnostics(args) -> int:
    instance = sim.load_instance(args.instance)
    if args.gamma is not None:
        diag = bench.n0_sym(instance, args.gamma)
        print(f"symmetric diagnostics, gamma={diag.gamma}")
        print(f"  kappa_bar={diag.kappa_bar:.4f}  kappa3={diag.kappa3:.4f}")
        for name, v, lg in (
            ("K1", diag.k1, diag.log10_k1),
            ("K2", diag.k2, diag.log10_k2),
            ("K3", diag.k3, diag.log10_k3),
        ):
            print(f"  {name} = {_fmt_const(v, lg)}")
        print(f"  N0 = {_fmt_const(diag.n0, diag.log10_n0)}")
        print(f"  misid_bound(10^6) = {diag.misid_bound(1e6):.3e}")
    elif args.gamma_a is not None and args.gamma_b is not None:
        diag = bench.n0_asym(instance, args.gamma_a, args.gamma_b)
        print(
            f"asymmetric diagnostics, gamma_a={diag.gamma_a} gamma_b={diag.gamma_b}"
        )
        print(
            f"  w_min={diag.w_min:.4f}  kappa={diag.kappa:.4f}  "
            f"sigma_L={diag.sigma_l:.6f}"
        )
        for name, v, lg in (
            ("K1", diag.k1, diag.log10_k1),
            ("K2", diag.k2, diag.log10_k2),
            ("K3", diag.k3, diag.log10_k3),
            ("K4", diag.k4, diag.log10_k4),
            ("K5", diag.k5, diag.log10_k5),
        ):
            print(f"  {name} = {_fmt_const(v, lg)}")
        print(f"  N0 = {_fmt_const(diag.n0, diag.log10_n0)}")
        print(f"  misid_bound(10^6) = {diag.misid_bound(1e6):.3e}")
    else:
        raise ConfigError("pass either --gamma or both --gamma-a and --gamma-b")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdcost",
        description="Cost-optimal unsupervised binary labeling on a simulated "
        "multi-class crowdsourcing platform.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a one-label-per-class matrix")
    p.add_argument("--instance", required=True, help="instance JSON or bundled name")
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="labels CSV path")
    p.add_argument("--truth-out", default=None, help="optional ground-truth CSV")
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("estimate", help="estimate confusion matrices from labels")
    p.add_argument("--labels", required=True, help="labels CSV from 'simulate'")
    p.add_argument("--method", choices=["one-coin", "spectral"], default="spectral")
    p.set_defaults(fn=_cmd_estimate)

    p = sub.add_parser("run", help="run one labeling algorithm end to end")
    p.add_argument("--algo", required=True, choices=sorted(pipeline.ALGORITHMS))
    p.add_argument("--instance", required=True)
    p.add_argument("--items", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="single-row results CSV")
    p.add_argument("--audit", default=None, help="per-item detail JSON (+traces CSV)")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("benchmark", help="run a Monte-Carlo benchmark grid")
    p.add_argument("--config", required=True, help="benchmark config JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=_cmd_benchmark)

    p = sub.add_parser("ingest", help="build an instance from gold-labeled responses")
    p.add_argument("--responses", required=True, help="worker_id,item_id,label,gold CSV")
    p.add_argument("--gold-included", action="store_true")
    p.add_argument("--class-map", default=None, help="optional worker->class JSON")
    p.add_argument("--out", required=True, help="instance JSON path")
    p.set_defaults(fn=_cmd_ingest)

    p = sub.add_parser("bounds", help="per-class scores and query lower bounds")
    p.add_argument("--instance", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(fn=_cmd_bounds)

    p = sub.add_parser("diagnostics", help="explore-phase sample thresholds")
    p.add_argument("--instance", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gamma-a", type=float, default=None)
    p.add_argument("--gamma-b", type=float, default=None)
    p.set_defaults(fn=_cmd_diagnostics)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (EstimationError, PipelineError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
