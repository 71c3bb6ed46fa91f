"""Deterministic demand-paging simulator and exact working-set oracle.

Produces the same record stream and dataset shapes as the live collector, so
the whole modelling pipeline runs without a kernel. A sweep workload touches
its footprint's pages in cyclic order at the configured access rate; a random
workload touches uniform pages; a phased workload is a sweep whose array
length changes at phase boundaries (the sweep position restarts each phase).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, features
from .errors import DataError, InsufficientDataError, UsageError
from .events import FaultEvent
from .prng import ALGORITHM as PRNG_ALGORITHM
from .prng import SplitMix64

DEFAULT_PAGE_SIZE = 4096
ARRAY_LEN_MIN = 2**7
ARRAY_LEN_MAX = 2**22

SIM_PID = 1
SIM_COMM = "simworkload"


@dataclass(frozen=True)
class Phase:
    array_len_elems: int
    duration_s: float


@dataclass(frozen=True)
class AccessTrace:
    """Timestamped virtual page accesses; times are non-decreasing."""

    times_ns: np.ndarray
    pages: np.ndarray
    page_size: int = DEFAULT_PAGE_SIZE

    def __len__(self) -> int:
        return len(self.times_ns)


@dataclass(frozen=True)
class WorkloadSpec:
    pattern: str = "sweep"  # sweep | random | phased
    array_len_elems: int = 2**12
    elem_bytes: int = 4
    access_rate_hz: float = 100_000.0
    duration_s: float = 1.0
    seed: int = 0
    page_size: int = DEFAULT_PAGE_SIZE
    phases: tuple[Phase, ...] = ()
    allow_out_of_range: bool = False

    def validate(self) -> None:
        if self.pattern not in ("sweep", "random", "phased"):
            raise UsageError(f"unknown pattern {self.pattern!r}")
        if self.elem_bytes < 1 or self.page_size < 1:
            raise UsageError("elem_bytes and page_size must be positive")
        lens = (
            [p.array_len_elems for p in self.phases]
            if self.pattern == "phased"
            else [self.array_len_elems]
        )
        if self.pattern == "phased" and not self.phases:
            raise UsageError("phased pattern needs at least one phase")
        if not self.allow_out_of_range:
            for n in lens:
                if not (ARRAY_LEN_MIN <= n <= ARRAY_LEN_MAX):
                    raise UsageError(
                        f"array_len_elems {n} outside [{ARRAY_LEN_MIN}, "
                        f"{ARRAY_LEN_MAX}]; set allow_out_of_range to override"
                    )


def footprint_pages(array_len_elems: int, elem_bytes: int, page_size: int) -> int:
    return max(1, math.ceil(array_len_elems * elem_bytes / page_size))


@dataclass
class SimulationResult:
    """Flush records plus the bookkeeping needed for fault conservation."""

    events: list[FaultEvent]
    fault_total: int
    residual: int
    flush_threshold: int

    @property
    def flushed_total(self) -> int:
        return sum(e.fault_count for e in self.events)


def generate_workload(spec: WorkloadSpec) -> AccessTrace:
    """Deterministic page-touch trace for a workload spec."""
    spec.validate()
    if spec.access_rate_hz <= 0:
        raise UsageError("access_rate_hz must be positive")
    period_scale = 1e9 / spec.access_rate_hz

    if spec.pattern == "phased":
        segments = [
            (footprint_pages(p.array_len_elems, spec.elem_bytes, spec.page_size),
             int(round(p.duration_s * spec.access_rate_hz)))
            for p in spec.phases
        ]
    else:
        segments = [
            (footprint_pages(spec.array_len_elems, spec.elem_bytes, spec.page_size),
             int(round(spec.duration_s * spec.access_rate_hz)))
        ]
    total = sum(n for _, n in segments)
    if total == 0:
        raise UsageError("zero access rate or duration produces an empty trace")

    pages = np.empty(total, dtype=np.int64)
    rng = SplitMix64(spec.seed)
    pos = 0
    for fp, n in segments:
        if n == 0:
            continue
        if spec.pattern == "random":
            seg = np.array([rng.randint(0, fp - 1) for _ in range(n)], dtype=np.int64)
        else:
            seg = np.arange(n, dtype=np.int64) % fp
        pages[pos : pos + n] = seg
        pos += n
    steps = np.arange(total, dtype=np.float64)
    times = (steps * period_scale).astype(np.uint64)
    return AccessTrace(times_ns=times, pages=pages, page_size=spec.page_size)


def simulate_paging(
    trace: AccessTrace,
    capacity_pages: int,
    flush_threshold: int = 100,
    pid: int = SIM_PID,
    comm: str = SIM_COMM,
) -> SimulationResult:
    """Replay a trace through demand paging with LRU eviction.

    A fault is recorded on first touch of a non-resident page; capacity 0
    means unbounded. Faults aggregate per the kernel probe's semantics: every
    ``flush_threshold`` faults one record is emitted at the faulting access's
    timestamp and the counter resets.
    """
    if len(trace) == 0:
        raise DataError("empty trace")
    if capacity_pages < 0:
        raise UsageError("capacity_pages must be >= 0")
    if flush_threshold < 1:
        raise UsageError("flush_threshold must be >= 1")
    _, dense = np.unique(trace.pages, return_inverse=True)
    flush_idx, fault_total = _kernels.lru_sim_flush(
        np.ascontiguousarray(dense, dtype=np.int64), capacity_pages, flush_threshold
    )
    events = []
    for i in flush_idx.tolist():
        ts = int(trace.times_ns[i])
        events.append(
            FaultEvent(
                pid=pid,
                comm=comm,
                fault_count=flush_threshold,
                kernel_ts_ns=ts,
                user_ts_ns=ts,
                session_elapsed_s=ts / 1e9,
            )
        )
    residual = fault_total - flush_threshold * len(events)
    return SimulationResult(
        events=events,
        fault_total=fault_total,
        residual=residual,
        flush_threshold=flush_threshold,
    )


def exact_wss(trace: AccessTrace, window_ns: int, at_ns: int) -> int:
    """Distinct pages accessed in the half-open window (at - window, at]."""
    if window_ns <= 0:
        raise UsageError("window_ns must be positive")
    times = trace.times_ns
    lo = int(np.searchsorted(times, at_ns - window_ns, side="right"))
    hi = int(np.searchsorted(times, at_ns, side="right"))
    if hi <= lo:
        return 0
    return int(np.unique(trace.pages[lo:hi]).size)


def _batch_wss(trace: AccessTrace, starts_ns, ends_ns) -> np.ndarray:
    """exact_wss for many windows whose starts and ends are non-decreasing."""
    uniq, dense = np.unique(trace.pages, return_inverse=True)
    return _kernels.window_distinct(
        np.ascontiguousarray(trace.times_ns, dtype=np.uint64),
        np.ascontiguousarray(dense, dtype=np.int64),
        int(uniq.size),
        np.ascontiguousarray(starts_ns, dtype=np.uint64),
        np.ascontiguousarray(ends_ns, dtype=np.uint64),
    )


def emit_labeled_dataset(
    spec: WorkloadSpec,
    capacity_pages: int,
    flush_threshold: int = 100,
    label_window_ns: int | None = None,
) -> features.Dataset:
    """Full synthetic pipeline: generate, simulate, label each flush.

    Rows pair each record's count with the interval to the previous record;
    the label is the exact working set over that same interval (or over a
    fixed window when ``label_window_ns`` is given), evaluated at the
    record's timestamp.
    """
    trace = generate_workload(spec)
    sim = simulate_paging(trace, capacity_pages, flush_threshold)
    if len(sim.events) < 2:
        raise InsufficientDataError(
            f"only {len(sim.events)} flushes; need >= 2 to form intervals"
        )
    rows = features.compute_intervals(sim.events)
    ends = np.array([r.ts_ns for r in rows], dtype=np.uint64)
    if label_window_ns is None:
        deltas = np.array([round(r.delta_t_s * 1e9) for r in rows], dtype=np.uint64)
        starts = ends - deltas
    else:
        if label_window_ns <= 0:
            raise UsageError("label_window_ns must be positive")
        window = np.uint64(label_window_ns)
        starts = np.where(ends >= window, ends - window, np.uint64(0))
    labels = _batch_wss(trace, starts, ends)
    labeled = [
        features.SampleRow(
            fault_count=r.fault_count,
            delta_t_s=r.delta_t_s,
            label_wss_pages=float(labels[i]),
            ts_ns=r.ts_ns,
        )
        for i, r in enumerate(rows)
    ]
    metadata = {
        "source": "simulator",
        "pattern": spec.pattern,
        "seed": str(spec.seed),
        "prng": PRNG_ALGORITHM,
        "page_size": str(spec.page_size),
        "capacity_pages": str(capacity_pages),
        "flush_threshold": str(flush_threshold),
        "label_window": "flush" if label_window_ns is None else str(label_window_ns),
        "fault_total": str(sim.fault_total),
    }
    return features.Dataset(rows=labeled, metadata=metadata)


def parse_spec_file(path) -> WorkloadSpec:
    """Read a workload spec from a key=value text file.

    Recognized keys: pattern, array_len_elems, elem_bytes, access_rate_hz,
    duration_s, seed, page_size, allow_out_of_range, and for phased patterns
    ``phases=<elems>:<seconds>,<elems>:<seconds>,...``.
    """
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, eq, value = line.partition("=")
            if not eq:
                raise DataError(f"{path}:{lineno}: expected key=value")
            kv[key.strip()] = value.strip()
    try:
        phases = ()
        if "phases" in kv and kv["phases"]:
            parts = kv["phases"].split(",")
            phases = tuple(
                Phase(array_len_elems=int(p.split(":")[0]),
                      duration_s=float(p.split(":")[1]))
                for p in parts
            )
        spec = WorkloadSpec(
            pattern=kv.get("pattern", "sweep"),
            array_len_elems=int(kv.get("array_len_elems", 2**12)),
            elem_bytes=int(kv.get("elem_bytes", 4)),
            access_rate_hz=float(kv.get("access_rate_hz", 100_000.0)),
            duration_s=float(kv.get("duration_s", 1.0)),
            seed=int(kv.get("seed", 0)),
            page_size=int(kv.get("page_size", DEFAULT_PAGE_SIZE)),
            phases=phases,
            allow_out_of_range=kv.get("allow_out_of_range", "false").lower()
            in ("1", "true", "yes"),
        )
    except (ValueError, IndexError) as exc:
        raise DataError(f"bad workload spec {path}: {exc}") from exc
    spec.validate()
    return spec


def write_spec_file(spec: WorkloadSpec, path) -> None:
    lines = [
        f"pattern={spec.pattern}",
        f"array_len_elems={spec.array_len_elems}",
        f"elem_bytes={spec.elem_bytes}",
        f"access_rate_hz={spec.access_rate_hz!r}",
        f"duration_s={spec.duration_s!r}",
        f"seed={spec.seed}",
        f"page_size={spec.page_size}",
    ]
    if spec.allow_out_of_range:
        lines.append("allow_out_of_range=true")
    if spec.phases:
        lines.append(
            "phases="
            + ",".join(f"{p.array_len_elems}:{p.duration_s!r}" for p in spec.phases)
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
