"""Command-line entry point wiring the toolkit together.

Exit codes: 0 success, 2 usage, 3 permission, 4 data, 5 internal. Output
files are written to a temp file in the destination directory and renamed
into place, so a failed command leaves no partial outputs.
"""

from __future__ import annotations

import argparse
import contextlib
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, collector, features, gbdt, simulator, tuner, wssprobe
from . import events as events_mod
from ._kernels import backend_name
from .errors import DataError, UnsupportedKernelError, UsageError, WsskitError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PERMISSION = 3
EXIT_DATA = 4
EXIT_INTERNAL = 5


@contextlib.contextmanager
def atomic_output(path):
    """Yield a temp path that is renamed onto ``path`` only on success."""
    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(prefix=".wsskit-", dir=directory)
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def _require_file(path, what):
    if not os.path.exists(path):
        raise DataError(f"{what} not found: {path}")
    return path


def _param_overrides(args) -> gbdt.GbdtParams:
    base = (
        gbdt.params_from_file(_require_file(args.params_file, "params file"))
        if getattr(args, "params_file", None)
        else gbdt.GbdtParams()
    )
    fields = {}
    for name in (
        "learning_rate",
        "max_depth",
        "num_leaves",
        "n_estimators",
        "min_child_samples",
        "colsample_bytree",
        "subsample",
        "random_state",
        "max_bins",
    ):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    if fields:
        from dataclasses import replace

        base = replace(base, **fields)
    return base


def _add_param_flags(parser):
    parser.add_argument("--params-file", help="key=value hyper-parameter file")
    parser.add_argument("--learning-rate", type=float, dest="learning_rate")
    parser.add_argument("--max-depth", type=int, dest="max_depth")
    parser.add_argument("--num-leaves", type=int, dest="num_leaves")
    parser.add_argument("--n-estimators", type=int, dest="n_estimators")
    parser.add_argument("--min-child-samples", type=int, dest="min_child_samples")
    parser.add_argument("--colsample-bytree", type=float, dest="colsample_bytree")
    parser.add_argument("--subsample", type=float)
    parser.add_argument("--random-state", type=int, dest="random_state")
    parser.add_argument("--max-bins", type=int, dest="max_bins")


def _prepare_splits(dataset, args):
    """Outlier policy, split, scaler fit on train; returns scaled splits."""
    rows = dataset.rows
    if getattr(args, "outliers", "none") == "iqr":
        rows = features.eliminate_outliers(rows)
    clean = features.Dataset(rows=rows, metadata=dict(dataset.metadata))
    splits = features.split_dataset(clean, ratios=args.ratios, seed=args.split_seed)
    scaler = features.fit_scaler(splits["train"], allow_constant=True)
    scaled = {k: features.apply_scaler(scaler, v) for k, v in splits.items()}
    return scaled, scaler


def _ratios(text):
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios")
    return tuple(parts)


# ------------------------------------------------------------------ commands


def cmd_collect(args) -> int:
    config = collector.CollectorConfig(
        comm_filter=args.comm or "",
        flush_threshold=args.threshold,
        min_value=args.min_value,
    )
    session = collector.attach(config, sink=args.out)
    deadline = time.monotonic() + args.duration
    total = 0
    try:
        while time.monotonic() < deadline:
            events = collector.poll(session, timeout_ms=100)
            if events:
                total += collector.write_events(events, args.out)
    finally:
        session.close()
    counters = session.counters
    print(
        f"collected {total} records ({counters['received']} received, "
        f"{counters['filtered_out']} below min-value, "
        f"{counters['dropped_kernel']} dropped kernel-side) -> {args.out}"
    )
    return EXIT_OK


def cmd_wss(args) -> int:
    if not wssprobe.probe_available(args.pid):
        raise UnsupportedKernelError(
            "referenced-flag probing needs /proc/<pid>/clear_refs and smaps "
            "(Linux only); cannot continue"
        )
    measurements, exited = wssprobe.groundtruth_loop(
        args.pid, cadence_s=args.cadence, duration_s=args.duration
    )
    wssprobe.write_wss_log(measurements, args.out)
    status = "target exited" if exited else "done"
    print(f"{len(measurements)} measurements -> {args.out} ({status})")
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = simulator.parse_spec_file(_require_file(args.spec, "workload spec"))
    dataset = simulator.emit_labeled_dataset(
        spec,
        capacity_pages=args.capacity_pages,
        flush_threshold=args.flush_threshold,
        label_window_ns=args.label_window_ns,
    )
    with atomic_output(args.out) as tmp:
        features.write_dataset_csv(dataset, tmp)
    meta = dict(dataset.metadata)
    meta["created_at"] = time.strftime("%Y-%m-%dT%H:%M:%S%z")
    features.write_metadata(args.out + ".meta", meta)
    print(f"{len(dataset)} rows -> {args.out}")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    events = events_mod.read_events(_require_file(args.events, "event log"))
    rows = features.compute_intervals(events)
    if args.labels:
        measurements = wssprobe.read_wss_log(_require_file(args.labels, "label log"))
        pairs = [(m.measured_at_ns, float(m.referenced_pages)) for m in measurements]
        rows, dropped = features.join_labels(rows, pairs, max_gap_s=args.max_gap)
    else:
        dropped = 0
    if args.outliers == "iqr":
        rows = features.eliminate_outliers(rows)
    dataset = features.Dataset(rows=rows, metadata={"source": "collector"})
    splits = features.split_dataset(dataset, ratios=args.ratios, seed=args.split_seed)
    scaler = features.fit_scaler(splits["train"], allow_constant=True)
    os.makedirs(args.out_dir, exist_ok=True)
    for name, part in splits.items():
        scaled = features.apply_scaler(scaler, part)
        path = os.path.join(args.out_dir, f"{name}.csv")
        with atomic_output(path) as tmp:
            features.write_dataset_csv(scaled, tmp)
    scaler_path = os.path.join(args.out_dir, "scaler.txt")
    with atomic_output(scaler_path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("\n".join(scaler.to_lines()) + "\n")
    sizes = {k: len(v) for k, v in splits.items()}
    print(
        f"splits {sizes['train']}/{sizes['valid']}/{sizes['test']} "
        f"({dropped} rows unmatched) -> {args.out_dir}"
    )
    return EXIT_OK


def cmd_train(args) -> int:
    params = _param_overrides(args)
    params.validate()
    dataset = features.read_dataset_csv(_require_file(args.data, "dataset CSV"))
    if not dataset.labeled or not dataset.rows:
        raise DataError("training needs a labeled, non-empty dataset")
    scaled, scaler = _prepare_splits(dataset, args)
    model = gbdt.train(scaled["train"], scaled["valid"], params, scaler=scaler)
    with atomic_output(args.out) as tmp:
        gbdt.save_model(model, tmp)
    test_x, test_y = scaled["test"].to_arrays()
    test_rmse = gbdt.rmse(gbdt.predict(model, test_x), test_y)
    print(
        f"train_rmse={model.metadata['train_rmse']:.6f} "
        f"valid_rmse={model.metadata['valid_rmse']:.6f} "
        f"test_rmse={test_rmse:.6f} model -> {args.out}"
    )
    return EXIT_OK


def cmd_predict(args) -> int:
    model = gbdt.load_model(_require_file(args.model, "model file"))
    events = events_mod.read_events(_require_file(args.events, "event log"))
    rows = features.compute_intervals(events)
    raw = np.array([(r.fault_count, r.delta_t_s) for r in rows], dtype=np.float64)
    if model.scaler is not None:
        x = np.column_stack(
            [
                model.scaler.scale("fault_count", raw[:, 0]),
                model.scaler.scale("delta_t_s", raw[:, 1]),
            ]
        )
    else:
        x = raw
    norm = gbdt.predict(model, x)
    pages = gbdt.predict_pages(model, x)
    with atomic_output(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("kernel_ts_ns,fault_count,delta_t_s,wss_pages_pred\n")
            for row, page in zip(rows, pages):
                fh.write(
                    f"{row.ts_ns},{row.fault_count!r},{row.delta_t_s!r},{float(page)!r}\n"
                )
    print(f"{len(rows)} estimates (mean {pages.mean():.1f} pages, "
          f"normalized mean {norm.mean():.4f}) -> {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = gbdt.load_model(_require_file(args.model, "model file"))
    dataset = features.read_dataset_csv(_require_file(args.data, "dataset CSV"))
    if not dataset.labeled or not dataset.rows:
        raise DataError("evaluation needs a labeled, non-empty dataset")
    x, y = dataset.to_arrays()
    if model.scaler is not None and not args.prescaled:
        x = np.column_stack(
            [
                model.scaler.scale("fault_count", x[:, 0]),
                model.scaler.scale("delta_t_s", x[:, 1]),
            ]
        )
        y = np.asarray(model.scaler.scale("wss_pages", y))
    preds = gbdt.predict(model, x)
    value = gbdt.rmse(preds, y)
    if args.report:
        with atomic_output(args.report) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write("prediction,label,residual\n")
                for p, t in zip(preds, y):
                    fh.write(f"{float(p)!r},{float(t)!r},{float(p - t)!r}\n")
    print(f"rmse={value:.6f} over {len(preds)} rows")
    return EXIT_OK


def cmd_sweep(args) -> int:
    dataset = features.read_dataset_csv(_require_file(args.data, "dataset CSV"))
    scaled, scaler = _prepare_splits(dataset, args)
    space = tuner.default_space(wide=args.wide)
    result = tuner.random_search(
        space,
        n_trials=args.trials,
        seed=args.seed,
        train_set=scaled["train"],
        valid_set=scaled["valid"],
        test_set=scaled["test"],
    )
    os.makedirs(args.out_dir, exist_ok=True)
    log_path = os.path.join(args.out_dir, "trials.log")
    with atomic_output(log_path) as tmp:
        tuner.write_trial_log(result, tmp)
    best_path = os.path.join(args.out_dir, "best_params.txt")
    with atomic_output(best_path) as tmp:
        gbdt.params_to_file(result.best.params, tmp)
    print(
        f"best trial={result.best.trial} valid_rmse={result.best.valid_rmse:.6f} "
        f"-> {best_path}"
    )
    return EXIT_OK


def cmd_bench_overhead(args) -> int:
    if args.live:
        return _bench_live(args)
    return _bench_sim(args)


def _bench_sim(args) -> int:
    """Ground-truth working-set measurement vs model inference, same windows."""
    spec = (
        simulator.parse_spec_file(args.spec)
        if args.spec
        else simulator.WorkloadSpec(
            pattern="sweep",
            array_len_elems=2**20,
            access_rate_hz=200_000.0,
            duration_s=5.0,
            seed=11,
        )
    )
    dataset = simulator.emit_labeled_dataset(
        spec, capacity_pages=args.capacity_pages, flush_threshold=args.flush_threshold
    )
    trace = simulator.generate_workload(spec)
    rows = dataset.rows
    scaler = features.fit_scaler(
        features.Dataset(rows=rows), allow_constant=True
    )
    scaled = features.apply_scaler(scaler, features.Dataset(rows=rows))
    params = gbdt.GbdtParams(n_estimators=50)
    model = gbdt.train(scaled, None, params, scaler=scaler)
    x, _ = scaled.to_arrays()

    scan_times = []
    infer_times = []
    ends = [r.ts_ns for r in rows]
    windows = [max(1, round(r.delta_t_s * 1e9)) for r in rows]
    for i in range(args.rounds):
        j = i % len(rows)
        t0 = time.perf_counter()
        simulator.exact_wss(trace, windows[j], ends[j])
        scan_times.append(time.perf_counter() - t0)
        t0 = time.perf_counter()
        gbdt.predict(model, x[j : j + 1])
        infer_times.append(time.perf_counter() - t0)
    scan_mean = sum(scan_times) / len(scan_times)
    infer_mean = sum(infer_times) / len(infer_times)
    ratio = scan_mean / infer_mean if infer_mean > 0 else float("inf")
    print(
        f"mode=sim rounds={args.rounds} scan_mean_s={scan_mean:.6f} "
        f"inference_mean_s={infer_mean:.6f} ratio={ratio:.1f}x"
    )
    return EXIT_OK


def _bench_live(args) -> int:
    if args.pid is None or args.model is None:
        raise UsageError("--live needs --pid and --model")
    if not wssprobe.probe_available(args.pid):
        raise UnsupportedKernelError(
            "live bench needs /proc clear_refs support; rerun without --live"
        )
    model = gbdt.load_model(_require_file(args.model, "model file"))
    fake_rows = np.array([[0.5, 0.5]], dtype=np.float64)
    scan_times = []
    infer_times = []
    interval = args.interval
    for _ in range(args.rounds):
        t0 = time.perf_counter()
        wssprobe.measure_wss(args.pid, interval)
        scan_times.append(time.perf_counter() - t0 - interval)
        t0 = time.perf_counter()
        gbdt.predict(model, fake_rows)
        infer_times.append(time.perf_counter() - t0)
    scan_mean = sum(scan_times) / len(scan_times)
    infer_mean = sum(infer_times) / len(infer_times)
    ratio = scan_mean / infer_mean if infer_mean > 0 else float("inf")
    print(
        f"mode=live rounds={args.rounds} scan_mean_s={scan_mean:.6f} "
        f"inference_mean_s={infer_mean:.6f} ratio={ratio:.1f}x"
    )
    return EXIT_OK


# ------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wsskit",
        description="Working-set-size estimation toolkit "
        f"(kernel backend: {backend_name()})",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("collect", help="attach the fault probe and log records")
    p.add_argument("--comm", help="trace only this process name (16 bytes max)")
    p.add_argument("--threshold", type=int, default=100, help="faults per record")
    p.add_argument("--min-value", type=int, default=1, dest="min_value")
    p.add_argument("--out", required=True, help="event log path (appended)")
    p.add_argument("--duration", type=float, default=10.0, help="seconds to run")
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("wss", help="referenced-flag ground-truth loop")
    p.add_argument("--pid", type=int, required=True)
    p.add_argument("--cadence", type=float, default=1.0)
    p.add_argument("--duration", type=float, default=10.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_wss)

    p = sub.add_parser("simulate", help="emit a labeled dataset from a workload spec")
    p.add_argument("--spec", required=True, help="workload spec file (key=value)")
    p.add_argument("--capacity-pages", type=int, default=0, dest="capacity_pages")
    p.add_argument("--flush-threshold", type=int, default=100, dest="flush_threshold")
    p.add_argument(
        "--label-window-ns", type=int, default=None, dest="label_window_ns",
        help="fixed label window; default = flush-to-flush interval",
    )
    p.add_argument("--out", required=True, help="dataset CSV path")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("preprocess", help="event+label logs to normalized splits")
    p.add_argument("--events", required=True)
    p.add_argument("--labels", help="wss log for labels (omit for unlabeled rows)")
    p.add_argument("--max-gap", type=float, default=0.5, dest="max_gap")
    p.add_argument("--outliers", choices=("iqr", "none"), default="iqr")
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--split-seed", type=int, default=0, dest="split_seed")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("train", help="train the estimator from a labeled CSV")
    p.add_argument("--data", required=True, help="raw labeled dataset CSV")
    p.add_argument("--outliers", choices=("iqr", "none"), default="none")
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--split-seed", type=int, default=0, dest="split_seed")
    p.add_argument("--out", required=True, help="model file path")
    _add_param_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="estimate WSS in pages from an event log")
    p.add_argument("--model", required=True)
    p.add_argument("--events", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="RMSE of a model on a labeled CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument(
        "--prescaled", action="store_true",
        help="data is already on the model's normalized scale",
    )
    p.add_argument("--report", help="per-row residual CSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="random hyper-parameter search")
    p.add_argument("--data", required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--wide", action="store_true", help="include suboptimal intervals")
    p.add_argument("--outliers", choices=("iqr", "none"), default="none")
    p.add_argument("--ratios", type=_ratios, default=(0.6, 0.2, 0.2))
    p.add_argument("--split-seed", type=int, default=0, dest="split_seed")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser(
        "bench-overhead",
        help="ground-truth scan time vs model inference time",
    )
    p.add_argument("--live", action="store_true", help="measure a real process")
    p.add_argument("--pid", type=int, help="target pid (live mode)")
    p.add_argument("--model", help="model file (live mode)")
    p.add_argument("--interval", type=float, default=0.1, help="settle time (live)")
    p.add_argument("--spec", help="workload spec (sim mode)")
    p.add_argument("--capacity-pages", type=int, default=128, dest="capacity_pages")
    p.add_argument("--flush-threshold", type=int, default=100, dest="flush_threshold")
    p.add_argument("--rounds", type=int, default=20)
    p.set_defaults(func=cmd_bench_overhead)

    return parser


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except PermissionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PERMISSION
    except (UsageError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, UnsupportedKernelError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except WsskitError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
