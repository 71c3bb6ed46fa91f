"""Ground-truth working-set measurement via the referenced-flag method.

Clear every page's accessed bit through the process's clear_refs control
file, wait a settle interval, then sum the "Referenced:" lines of its
per-mapping accounting file. Linux only; the measured value is the set of
pages the process touched during the interval.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

from .errors import DataError, ProcessGoneError, UsageError

DEFAULT_CADENCE_S = 1.0


def system_page_size() -> int:
    try:
        return os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return 4096


@dataclass(frozen=True)
class WssMeasurement:
    pid: int
    measured_at_ns: int
    interval_s: float
    referenced_pages: int
    referenced_bytes: int


def parse_referenced_kb(smaps_text: str) -> int:
    """Sum of Referenced: lines (kB) from an smaps-format document."""
    total = 0
    for line in smaps_text.splitlines():
        if line.startswith("Referenced:"):
            parts = line.split()
            total += int(parts[1])
    return total


def _clear_refs(pid: int) -> None:
    with open(f"/proc/{pid}/clear_refs", "w") as fh:
        fh.write("1")


def _read_referenced_bytes(pid: int) -> int:
    with open(f"/proc/{pid}/smaps", "r") as fh:
        return parse_referenced_kb(fh.read()) * 1024


def probe_available(pid: int | None = None) -> bool:
    target = pid if pid is not None else os.getpid()
    return os.path.exists(f"/proc/{target}/clear_refs") and os.path.exists(
        f"/proc/{target}/smaps"
    )


def measure_wss(
    pid: int, interval_s: float, page_size: int | None = None, sleep=time.sleep
) -> WssMeasurement:
    """Clear referenced flags, settle for ``interval_s``, count them back."""
    if interval_s <= 0:
        raise UsageError("interval_s must be positive")
    page_size = page_size or system_page_size()
    try:
        _clear_refs(pid)
        sleep(interval_s)
        ref_bytes = _read_referenced_bytes(pid)
    except (FileNotFoundError, ProcessLookupError) as exc:
        raise ProcessGoneError(f"pid {pid} vanished mid-measurement") from exc
    except PermissionError as exc:
        raise PermissionError(
            f"no permission to measure pid {pid}; need write access to its "
            f"clear_refs file (usually root)"
        ) from exc
    return WssMeasurement(
        pid=pid,
        measured_at_ns=time.monotonic_ns(),
        interval_s=interval_s,
        referenced_pages=ref_bytes // page_size,
        referenced_bytes=ref_bytes,
    )


def groundtruth_loop(
    pid: int,
    cadence_s: float = DEFAULT_CADENCE_S,
    duration_s: float = 10.0,
    page_size: int | None = None,
) -> tuple[list[WssMeasurement], bool]:
    """Measure at a fixed cadence until the duration elapses or the process
    exits; returns (measurements, process_exited)."""
    if cadence_s <= 0:
        raise UsageError("cadence_s must be positive")
    started = time.monotonic()
    out: list[WssMeasurement] = []
    exited = False
    while True:
        try:
            out.append(measure_wss(pid, cadence_s, page_size=page_size))
        except ProcessGoneError:
            exited = True
            break
        if time.monotonic() - started >= duration_s:
            break
    return out, exited


def format_wss_line(m: WssMeasurement) -> str:
    return (
        f"pid={m.pid} ts={m.measured_at_ns} interval={m.interval_s!r} "
        f"pages={m.referenced_pages}"
    )


def parse_wss_line(line: str, lineno: int = 0) -> WssMeasurement:
    fields = {}
    for part in line.strip().split():
        key, eq, value = part.partition("=")
        if not eq:
            raise DataError(f"line {lineno}: malformed field {part!r}")
        fields[key] = value
    try:
        pages = int(fields["pages"])
        return WssMeasurement(
            pid=int(fields["pid"]),
            measured_at_ns=int(fields["ts"]),
            interval_s=float(fields["interval"]),
            referenced_pages=pages,
            referenced_bytes=pages * system_page_size(),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def write_wss_log(measurements, path) -> int:
    written = 0
    with open(path, "a", encoding="utf-8") as fh:
        for m in measurements:
            fh.write(format_wss_line(m) + "\n")
            written += 1
    return written


def read_wss_log(path) -> list[WssMeasurement]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if line.strip():
                out.append(parse_wss_line(line, lineno))
    return out
