"""Dataset shaping: interval features, label joining, outlier removal,
min-max scaling, and deterministic splitting.

The model consumes two features per row, the fault count of a flushed record
and the interval to the previous record, plus an optional working-set label
in pages. Datasets round-trip through a small CSV format (header
``fault_count,delta_t_s,wss_pages``) with shortest-representation floats.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DataError,
    DegenerateColumnError,
    EmptyJoinError,
    InsufficientDataError,
    OverAggressiveFilterError,
)
from .prng import SplitMix64

FEATURE_NAMES = ("fault_count", "delta_t_s")
LABEL_NAME = "wss_pages"
CSV_HEADER = "fault_count,delta_t_s,wss_pages"


@dataclass(frozen=True)
class SampleRow:
    """One model row; ``ts_ns`` is carried for label joining only."""

    fault_count: float
    delta_t_s: float
    label_wss_pages: float | None = None
    ts_ns: int | None = None


@dataclass
class Dataset:
    rows: list[SampleRow]
    metadata: dict = field(default_factory=dict)
    feature_names: tuple[str, ...] = FEATURE_NAMES
    label_name: str = LABEL_NAME

    def __len__(self) -> int:
        return len(self.rows)

    @property
    def labeled(self) -> bool:
        return all(r.label_wss_pages is not None for r in self.rows)

    def to_arrays(self):
        """Feature matrix (n, 2) and label vector (n,) or None."""
        x = np.array(
            [(r.fault_count, r.delta_t_s) for r in self.rows], dtype=np.float64
        ).reshape(len(self.rows), 2)
        if self.rows and self.labeled:
            y = np.array([r.label_wss_pages for r in self.rows], dtype=np.float64)
        else:
            y = None
        return x, y


@dataclass(frozen=True)
class NormalizationParams:
    """Per-column min/max fitted on training data.

    A column with max == min is recorded but marked unscaled; whether fitting
    tolerates such columns is the caller's choice (``fit_scaler``).
    """

    columns: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def is_scaled(self, column: str) -> bool:
        i = self.columns.index(column)
        return self.maxs[i] > self.mins[i]

    def scale(self, column: str, values):
        i = self.columns.index(column)
        values = np.asarray(values, dtype=np.float64)
        span = self.maxs[i] - self.mins[i]
        if span == 0.0:
            return values - self.mins[i]
        return (values - self.mins[i]) / span

    def unscale(self, column: str, values):
        i = self.columns.index(column)
        values = np.asarray(values, dtype=np.float64)
        span = self.maxs[i] - self.mins[i]
        if span == 0.0:
            return values + self.mins[i]
        return values * span + self.mins[i]

    def to_lines(self) -> list[str]:
        lines = ["columns=" + ",".join(self.columns)]
        for name, lo, hi in zip(self.columns, self.mins, self.maxs):
            lines.append(f"min.{name}={lo!r}")
            lines.append(f"max.{name}={hi!r}")
        return lines

    @classmethod
    def from_lines(cls, lines) -> "NormalizationParams":
        kv = {}
        for line in lines:
            key, eq, value = line.strip().partition("=")
            if eq:
                kv[key] = value
        if "columns" not in kv:
            raise DataError("scaler block missing 'columns'")
        columns = tuple(c for c in kv["columns"].split(",") if c)
        try:
            mins = tuple(float(kv[f"min.{c}"]) for c in columns)
            maxs = tuple(float(kv[f"max.{c}"]) for c in columns)
        except KeyError as exc:
            raise DataError(f"scaler block missing {exc}") from exc
        return cls(columns=columns, mins=mins, maxs=maxs)


def _sorted_collapsed(events):
    """Events sorted by kernel timestamp with ties merged by summing counts."""
    ordered = sorted(events, key=lambda e: e.kernel_ts_ns)
    collapsed: list[tuple[int, int]] = []
    for event in ordered:
        ts = event.kernel_ts_ns
        if collapsed and collapsed[-1][0] == ts:
            collapsed[-1] = (ts, collapsed[-1][1] + event.fault_count)
        else:
            collapsed.append((ts, event.fault_count))
    return collapsed


def compute_intervals(events) -> list[SampleRow]:
    """Pair each event's count with the interval since the previous event.

    n events give n-1 rows; row i carries event i+1's count and
    delta_t = t_{i+1} - t_i in seconds. Events sharing a timestamp are merged
    (counts summed) before differencing.
    """
    collapsed = _sorted_collapsed(events)
    if len(collapsed) < 2:
        raise InsufficientDataError(
            f"need >= 2 distinct-timestamp events, got {len(collapsed)}"
        )
    rows = []
    for i in range(1, len(collapsed)):
        ts, count = collapsed[i]
        prev_ts = collapsed[i - 1][0]
        rows.append(
            SampleRow(
                fault_count=float(count),
                delta_t_s=(ts - prev_ts) / 1e9,
                ts_ns=ts,
            )
        )
    return rows


def join_labels(rows, labels, max_gap_s: float) -> tuple[list[SampleRow], int]:
    """Attach the nearest label within ``max_gap_s`` to each row.

    ``labels`` is a sequence of (ts_ns, value) pairs on a clock comparable to
    the rows' timestamps. Equidistant candidates resolve to the earlier
    label. Returns (labeled rows, dropped-row count); zero matches raise.
    """
    if not rows:
        raise DataError("no rows to join")
    pairs = sorted((int(ts), float(v)) for ts, v in labels)
    if not pairs:
        raise EmptyJoinError("no labels supplied")
    times = [p[0] for p in pairs]
    max_gap_ns = max_gap_s * 1e9
    out = []
    dropped = 0
    for row in rows:
        if row.ts_ns is None:
            raise DataError("row lacks a timestamp; cannot join")
        i = bisect.bisect_left(times, row.ts_ns)
        best = None
        for j in (i - 1, i):
            if 0 <= j < len(pairs):
                gap = abs(pairs[j][0] - row.ts_ns)
                # strict < keeps the earlier label on equidistant ties
                if best is None or gap < best[0]:
                    best = (gap, pairs[j][1])
        if best is not None and best[0] <= max_gap_ns:
            out.append(replace(row, label_wss_pages=best[1]))
        else:
            dropped += 1
    if not out:
        raise EmptyJoinError(
            f"no rows within {max_gap_s}s of any label "
            f"(rows span {rows[0].ts_ns}..{rows[-1].ts_ns}, "
            f"labels span {times[0]}..{times[-1]})"
        )
    return out, dropped


def _iqr_pass(rows, iqr_k: float):
    cols = [
        np.array([r.fault_count for r in rows]),
        np.array([r.delta_t_s for r in rows]),
    ]
    if all(r.label_wss_pages is not None for r in rows):
        cols.append(np.array([r.label_wss_pages for r in rows]))
    keep = np.ones(len(rows), dtype=bool)
    for col in cols:
        q1, q3 = np.percentile(col, [25.0, 75.0])
        iqr = q3 - q1
        keep &= (col >= q1 - iqr_k * iqr) & (col <= q3 + iqr_k * iqr)
    return [r for r, k in zip(rows, keep) if k]


def eliminate_outliers(rows, iqr_k: float = 3.0, max_drop_frac: float = 0.10):
    """Drop rows with any column outside [Q1 - k*IQR, Q3 + k*IQR].

    Quartiles use linear interpolation (numpy default) per column over
    fault_count, delta_t_s, and the label when present. The pass repeats on
    the retained set until stable, so the filter is idempotent. Refuses to
    drop more than ``max_drop_frac`` of the input, cumulatively.
    """
    if not rows:
        raise DataError("cannot filter an empty row list")
    total = len(rows)
    kept = list(rows)
    while True:
        filtered = _iqr_pass(kept, iqr_k)
        dropped = total - len(filtered)
        if dropped > max_drop_frac * total:
            raise OverAggressiveFilterError(
                f"outlier filter would drop {dropped}/{total} rows "
                f"(> {max_drop_frac:.0%}); inspect the data"
            )
        if len(filtered) == len(kept):
            return filtered
        kept = filtered


def fit_scaler(dataset: Dataset, allow_constant: bool = False) -> NormalizationParams:
    """Fit per-column min/max over features and label.

    A constant column raises ``DegenerateColumnError`` unless
    ``allow_constant`` is set, in which case the column is recorded as
    unscaled (it maps to 0.0, mirroring the common min-max scaler behaviour
    of replacing a zero range with 1).
    """
    if not dataset.rows:
        raise DataError("cannot fit a scaler on an empty dataset")
    x, y = dataset.to_arrays()
    columns = list(dataset.feature_names)
    mats = [x[:, 0], x[:, 1]]
    if y is not None:
        columns.append(dataset.label_name)
        mats.append(y)
    mins, maxs = [], []
    for name, col in zip(columns, mats):
        lo = float(np.min(col))
        hi = float(np.max(col))
        if hi == lo and not allow_constant:
            raise DegenerateColumnError(name)
        mins.append(lo)
        maxs.append(hi)
    return NormalizationParams(tuple(columns), tuple(mins), tuple(maxs))


def apply_scaler(params: NormalizationParams, dataset: Dataset) -> Dataset:
    """Scale every known column; values outside the fit range are not clamped."""
    x, y = dataset.to_arrays()
    fc = params.scale("fault_count", x[:, 0])
    dt = params.scale("delta_t_s", x[:, 1])
    labels = None
    if y is not None and LABEL_NAME in params.columns:
        labels = params.scale(LABEL_NAME, y)
    rows = []
    for i, row in enumerate(dataset.rows):
        rows.append(
            replace(
                row,
                fault_count=float(fc[i]),
                delta_t_s=float(dt[i]),
                label_wss_pages=None if labels is None else float(labels[i]),
            )
        )
    meta = dict(dataset.metadata)
    meta["scaler_applied"] = "true"
    return Dataset(rows=rows, metadata=meta)


def invert_scaler(params: NormalizationParams, values, column: str = LABEL_NAME):
    """Map scaled values back to original units (default: the label column)."""
    return params.unscale(column, values)


def split_dataset(dataset: Dataset, ratios=(0.6, 0.2, 0.2), seed: int = 0):
    """Deterministic shuffle-split into train/valid/test.

    Valid and test sizes are floors of their ratios; the remainder goes to
    train. Any empty split is an error.
    """
    if len(ratios) != 3 or any(r <= 0 for r in ratios):
        raise DataError("ratios must be three positive numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DataError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(dataset.rows)
    n_valid = int(ratios[1] * n)
    n_test = int(ratios[2] * n)
    n_train = n - n_valid - n_test
    if min(n_train, n_valid, n_test) <= 0:
        raise DataError(f"split of {n} rows at {ratios} leaves an empty part")
    order = list(range(n))
    SplitMix64(seed).shuffle(order)
    parts = {
        "train": order[:n_train],
        "valid": order[n_train : n_train + n_valid],
        "test": order[n_train + n_valid :],
    }
    out = {}
    for name, idx in parts.items():
        meta = dict(dataset.metadata)
        meta["split"] = name
        meta["split_seed"] = str(seed)
        out[name] = Dataset(rows=[dataset.rows[i] for i in idx], metadata=meta)
    return out


def write_dataset_csv(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in dataset.rows:
            label = (
                "" if row.label_wss_pages is None else repr(float(row.label_wss_pages))
            )
            fh.write(f"{float(row.fault_count)!r},{float(row.delta_t_s)!r},{label}\n")


def read_dataset_csv(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise DataError(f"unexpected CSV header {header!r}")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataError(f"line {lineno}: expected 3 fields")
            try:
                rows.append(
                    SampleRow(
                        fault_count=float(parts[0]),
                        delta_t_s=float(parts[1]),
                        label_wss_pages=float(parts[2]) if parts[2] else None,
                    )
                )
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
    return Dataset(rows=rows)


def write_metadata(path, metadata: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(metadata):
            fh.write(f"{key}={metadata[key]}\n")


def read_metadata(path) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, eq, value = line.rstrip("\n").partition("=")
            if eq:
                out[key] = value
    return out
