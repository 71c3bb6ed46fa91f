"""Probe loading, perf-channel draining, and event-log writing.

The live path loads a BCC program attached to the kernel's page-fault
handler; records flushed by the in-kernel threshold counter are drained with
``poll`` and stamped with a user-space receive time. Tests and kernel-less
environments substitute ``FakeChannel`` (scripted record batches) or
``ReferenceProbe`` (a user-space mirror of the kernel counter semantics) for
the real channel.
"""

from __future__ import annotations

import os
import time
from collections import deque
from dataclasses import dataclass, field

from .errors import DataError, UnsupportedKernelError
from .events import FaultEvent, parse_probe_record, write_events  # noqa: F401

KPROBE_ATTACH_POINT = "__handle_mm_fault"
DEFAULT_FLUSH_THRESHOLD = 100
COMM_MAX = 16

# BCC program implementing the probe contract: per-pid fault and frequency
# counters, single-slot config (threshold + comm filter), a dropped-record
# counter, and a perf channel carrying 40-byte records (see events module
# for the layout).
BPF_PROGRAM = r"""
#include <uapi/linux/ptrace.h>
#include <linux/sched.h>

struct record_t {
    u32 pid;
    char comm[16];
    u32 reserved;
    u64 count;
    u64 kernel_ts_ns;
};

struct config_t {
    u64 threshold;
    char comm_filter[16];
    u64 filter_enabled;
};

BPF_HASH(counts, u32, u64, 10240);
BPF_HASH(freq, u32, u64, 10240);
BPF_ARRAY(conf, struct config_t, 1);
BPF_ARRAY(dropped, u64, 1);
BPF_PERF_OUTPUT(events);

int on_fault(struct pt_regs *ctx) {
    u32 zero = 0;
    struct config_t *cfg = conf.lookup(&zero);
    if (cfg == 0)
        return 0;

    char comm[16];
    bpf_get_current_comm(&comm, sizeof(comm));
    if (cfg->filter_enabled) {
        if (__builtin_memcmp(comm, cfg->comm_filter, 16) != 0)
            return 0;
    }

    u32 pid = bpf_get_current_pid_tgid() >> 32;
    u64 zero64 = 0;
    u64 *count = counts.lookup_or_try_init(&pid, &zero64);
    u64 *frq = freq.lookup_or_try_init(&pid, &zero64);
    if (count == 0 || frq == 0) {
        u64 *drops = dropped.lookup(&zero);
        if (drops) lock_xadd(drops, 1);
        return 0;
    }
    lock_xadd(count, 1);
    lock_xadd(frq, 1);

    if (*frq >= cfg->threshold) {
        struct record_t rec = {};
        rec.pid = pid;
        __builtin_memcpy(&rec.comm, comm, 16);
        rec.reserved = 0;
        rec.count = *count;
        rec.kernel_ts_ns = bpf_ktime_get_ns();
        int rc = events.perf_submit(ctx, &rec, sizeof(rec));
        if (rc != 0) {
            u64 *drops = dropped.lookup(&zero);
            if (drops) lock_xadd(drops, 1);
        }
        counts.delete(&pid);
        freq.delete(&pid);
    }
    return 0;
}
"""


@dataclass(frozen=True)
class CollectorConfig:
    comm_filter: str = ""
    flush_threshold: int = DEFAULT_FLUSH_THRESHOLD
    min_value: int = 1

    def validate(self) -> None:
        if len(self.comm_filter.encode()) > COMM_MAX:
            raise DataError(f"comm filter longer than {COMM_MAX} bytes")
        if self.flush_threshold < 1:
            raise DataError("flush_threshold must be >= 1")
        if self.min_value < 0:
            raise DataError("min_value must be >= 0")


@dataclass(frozen=True)
class RawRecord:
    """One record as drained from a per-CPU channel."""

    cpu: int
    pid: int
    comm: str
    count: int
    kernel_ts_ns: int


class ReferenceProbe:
    """User-space mirror of the kernel program's counting semantics.

    Feed it fault invocations; it applies the comm filter, increments the
    per-pid counters, and emits a record every ``flush_threshold`` matching
    faults. A submit hook may be installed to simulate perf-channel failures;
    a failed submit drops the whole batch and bumps the drop counter, exactly
    like the kernel side.
    """

    def __init__(self, config: CollectorConfig, submit_ok=None):
        config.validate()
        self.config = config
        self.counts: dict[int, int] = {}
        self.freq: dict[int, int] = {}
        self.dropped = 0
        self.total_matching = 0
        self.emitted: list[RawRecord] = []
        self._submit_ok = submit_ok or (lambda record: True)

    def on_fault(self, pid: int, comm: str, ts_ns: int, cpu: int = 0) -> None:
        cfg = self.config
        if cfg.comm_filter and comm != cfg.comm_filter:
            return
        self.total_matching += 1
        self.counts[pid] = self.counts.get(pid, 0) + 1
        self.freq[pid] = self.freq.get(pid, 0) + 1
        if self.freq[pid] >= cfg.flush_threshold:
            record = RawRecord(
                cpu=cpu, pid=pid, comm=comm,
                count=self.counts[pid], kernel_ts_ns=ts_ns,
            )
            if self._submit_ok(record):
                self.emitted.append(record)
            else:
                self.dropped += 1
            del self.counts[pid]
            del self.freq[pid]

    def residual_total(self) -> int:
        return sum(self.counts.values())


class FakeChannel:
    """Scripted channel: batches of RawRecords, drained per-CPU in order."""

    def __init__(self, batches=None, kernel_drops: int = 0):
        self._queue = deque(batches or [])
        self._drops = kernel_drops

    def push(self, batch) -> None:
        self._queue.append(list(batch))

    def poll(self, timeout_ms: int):
        if not self._queue:
            return []
        return list(self._queue.popleft())

    def kernel_drops(self) -> int:
        return self._drops

    def close(self) -> None:
        self._queue.clear()


class BccChannel:
    """Live perf channel backed by a BCC-loaded kprobe."""

    def __init__(self, config: CollectorConfig):
        if hasattr(os, "geteuid") and os.geteuid() != 0:
            raise PermissionError(
                "loading a kprobe requires root (CAP_BPF + CAP_PERFMON)"
            )
        try:
            from bcc import BPF
        except ImportError as exc:
            raise UnsupportedKernelError(
                "bcc is not importable; install the BCC python bindings "
                "(package 'bpfcc' / 'bcc') on a kernel with BPF support"
            ) from exc
        try:
            self._bpf = BPF(text=BPF_PROGRAM)
        except Exception as exc:
            raise UnsupportedKernelError(
                f"BPF verifier or compiler rejected the probe: {exc}"
            ) from exc
        try:
            self._bpf.attach_kprobe(event=KPROBE_ATTACH_POINT, fn_name="on_fault")
        except Exception as exc:
            raise UnsupportedKernelError(
                f"cannot attach kprobe at {KPROBE_ATTACH_POINT}: {exc}"
            ) from exc
        self._configure(config)
        self._pending: list[RawRecord] = []
        self._lost = 0
        self._bpf["events"].open_perf_buffer(self._on_event, lost_cb=self._on_lost)

    def _configure(self, config: CollectorConfig) -> None:
        import ctypes

        class _Config(ctypes.Structure):
            _fields_ = [
                ("threshold", ctypes.c_uint64),
                ("comm_filter", ctypes.c_char * 16),
                ("filter_enabled", ctypes.c_uint64),
            ]

        conf = self._bpf["conf"]
        value = _Config()
        value.threshold = config.flush_threshold
        value.comm_filter = config.comm_filter.encode()[:16].ljust(16, b"\x00")
        value.filter_enabled = 1 if config.comm_filter else 0
        conf[ctypes.c_int(0)] = value

    def _on_event(self, cpu, data, size) -> None:
        import ctypes

        buf = ctypes.string_at(data, size)
        pid, comm, count, kts = parse_probe_record(buf)
        self._pending.append(
            RawRecord(cpu=cpu, pid=pid, comm=comm, count=count, kernel_ts_ns=kts)
        )

    def _on_lost(self, lost) -> None:
        self._lost += lost

    def poll(self, timeout_ms: int):
        self._bpf.perf_buffer_poll(timeout=timeout_ms)
        batch, self._pending = self._pending, []
        return batch

    def kernel_drops(self) -> int:
        drops = self._lost
        try:
            table = self._bpf["dropped"]
            drops += sum(v.value for v in table.values())
        except Exception:
            pass
        return drops

    def close(self) -> None:
        try:
            self._bpf.detach_kprobe(event=KPROBE_ATTACH_POINT)
        except Exception:
            pass
        self._bpf.cleanup()


@dataclass
class CollectorSession:
    config: CollectorConfig
    channel: object
    sink: str | None
    begin_time_ns: int
    counters: dict = field(
        default_factory=lambda: {"received": 0, "filtered_out": 0, "dropped_kernel": 0}
    )

    def close(self) -> None:
        close = getattr(self.channel, "close", None)
        if close:
            close()


def attach(
    config: CollectorConfig,
    sink: str | None = None,
    channel_factory=None,
) -> CollectorSession:
    """Load and attach the probe, returning a fresh session.

    ``channel_factory`` lets callers substitute a fake channel; the default
    builds the live BCC channel and raises descriptive errors when the kernel
    or privileges do not allow it.
    """
    config.validate()
    factory = channel_factory or BccChannel
    channel = factory(config)
    return CollectorSession(
        config=config,
        channel=channel,
        sink=sink,
        begin_time_ns=time.monotonic_ns(),
    )


def poll(session: CollectorSession, timeout_ms: int = 100) -> list[FaultEvent]:
    """Drain records arrived within the timeout into timestamped events.

    Records with count < min_value are discarded (counted). Per-CPU arrival
    order is preserved; cross-CPU total order is not guaranteed.
    """
    raw = session.channel.poll(timeout_ms)
    session.counters["dropped_kernel"] = session.channel.kernel_drops()
    events = []
    for record in raw:
        session.counters["received"] += 1
        if record.count < session.config.min_value:
            session.counters["filtered_out"] += 1
            continue
        user_ts = time.monotonic_ns()
        events.append(
            FaultEvent(
                pid=record.pid,
                comm=record.comm,
                fault_count=record.count,
                kernel_ts_ns=record.kernel_ts_ns,
                user_ts_ns=user_ts,
                session_elapsed_s=(user_ts - session.begin_time_ns) / 1e9,
            )
        )
    return events
