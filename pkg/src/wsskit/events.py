"""Fault-event records and the event-log line format.

One event per line, UTF-8, LF-terminated:

    pid=<u32> comm=<quoted> count=<u64> kts=<u64> uts=<u64> el=<f.9>

``comm`` is wrapped in double quotes with internal ``"`` and ``\\``
backslash-escaped. A partial (unterminated) final line is ignored on read, so
a crash mid-append loses at most one record.

The binary record layout shared with the kernel probe is parsed by
``parse_probe_record``: little-endian, pid u32 at offset 0, comm 16 bytes at
offset 4, 4 padding bytes, count u64 at offset 24, kernel timestamp u64 at
offset 32; 40 bytes total.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import DataError

PROBE_RECORD_STRUCT = struct.Struct("<I16s4xQQ")
PROBE_RECORD_SIZE = PROBE_RECORD_STRUCT.size  # 40


@dataclass(frozen=True)
class FaultEvent:
    """One flushed page-fault record, timestamped on receipt."""

    pid: int
    comm: str
    fault_count: int
    kernel_ts_ns: int
    user_ts_ns: int
    session_elapsed_s: float


def _quote(comm: str) -> str:
    return '"' + comm.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _unquote(field: str, lineno: int) -> tuple[str, str]:
    """Parse a leading quoted string; returns (value, rest-after-quote)."""
    if not field.startswith('"'):
        raise DataError(f"line {lineno}: comm field is not quoted")
    out = []
    i = 1
    while i < len(field):
        c = field[i]
        if c == "\\":
            if i + 1 >= len(field):
                raise DataError(f"line {lineno}: dangling escape in comm")
            out.append(field[i + 1])
            i += 2
        elif c == '"':
            return "".join(out), field[i + 1 :]
        else:
            out.append(c)
            i += 1
    raise DataError(f"line {lineno}: unterminated comm quote")


def format_event_line(event: FaultEvent) -> str:
    return (
        f"pid={event.pid} comm={_quote(event.comm)} count={event.fault_count} "
        f"kts={event.kernel_ts_ns} uts={event.user_ts_ns} "
        f"el={event.session_elapsed_s:.9f}"
    )


def parse_event_line(line: str, lineno: int = 0) -> FaultEvent:
    line = line.rstrip("\n")
    if not line.startswith("pid="):
        raise DataError(f"line {lineno}: missing pid field")
    rest = line[4:]
    pid_str, sep, rest = rest.partition(" comm=")
    if not sep:
        raise DataError(f"line {lineno}: missing comm field")
    comm, rest = _unquote(rest, lineno)
    fields = {}
    for part in rest.split():
        key, eq, value = part.partition("=")
        if not eq:
            raise DataError(f"line {lineno}: malformed field {part!r}")
        fields[key] = value
    try:
        return FaultEvent(
            pid=int(pid_str),
            comm=comm,
            fault_count=int(fields["count"]),
            kernel_ts_ns=int(fields["kts"]),
            user_ts_ns=int(fields["uts"]),
            session_elapsed_s=float(fields["el"]),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"line {lineno}: {exc}") from exc


def write_events(events, sink) -> int:
    """Append events to the log at path ``sink``; returns the number written."""
    written = 0
    with open(sink, "a", encoding="utf-8") as fh:
        for event in events:
            fh.write(format_event_line(event) + "\n")
            written += 1
        fh.flush()
    return written


def read_events(path) -> list[FaultEvent]:
    """Read an event log, ignoring a partial (unterminated) final line."""
    with open(path, "r", encoding="utf-8") as fh:
        data = fh.read()
    events = []
    lines = data.split("\n")
    # A file not ending in LF has a partial last element; drop it. (split
    # always yields a trailing "" when the file is LF-terminated.)
    complete, partial = lines[:-1], lines[-1]
    del partial
    for lineno, line in enumerate(complete, start=1):
        if not line:
            continue
        events.append(parse_event_line(line, lineno))
    return events


def parse_probe_record(buf: bytes) -> tuple[int, str, int, int]:
    """Decode one kernel probe record: (pid, comm, count, kernel_ts_ns)."""
    if len(buf) < PROBE_RECORD_SIZE:
        raise DataError(
            f"probe record too short: {len(buf)} bytes, need {PROBE_RECORD_SIZE}"
        )
    pid, comm_raw, count, kts = PROBE_RECORD_STRUCT.unpack_from(buf)
    comm = comm_raw.split(b"\x00", 1)[0].decode("utf-8", "replace")
    return pid, comm, count, kts


def pack_probe_record(pid: int, comm: str, count: int, kernel_ts_ns: int) -> bytes:
    """Encode a probe record; inverse of parse_probe_record (test fixture aid)."""
    return PROBE_RECORD_STRUCT.pack(pid, comm.encode()[:16], count, kernel_ts_ns)
