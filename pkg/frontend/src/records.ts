/**
 * Binary records flushed by the kernel probe, and the event-log line format
 * the user-space collector writes. Both layouts are contracts shared with
 * the collector; keep them byte-compatible.
 *
 * Record layout (little-endian, 40 bytes):
 *   offset  0  u32  pid
 *   offset  4  char comm[16]  NUL-padded
 *   offset 20  u32  reserved
 *   offset 24  u64  count
 *   offset 32  u64  kernel_ts_ns
 */

export const RECORD_SIZE = 40;
export const COMM_SIZE = 16;

export interface EmittedRecord {
  pid: number;
  comm: string;
  count: bigint;
  kernelTsNs: bigint;
}

export class RecordParseError extends Error {}

export function parseRecord(buf: Buffer): EmittedRecord {
  if (buf.length < RECORD_SIZE) {
    throw new RecordParseError(
      `probe record too short: ${buf.length} bytes, need ${RECORD_SIZE}`,
    );
  }
  const commRaw = buf.subarray(4, 4 + COMM_SIZE);
  const nul = commRaw.indexOf(0);
  const comm = commRaw.subarray(0, nul === -1 ? COMM_SIZE : nul).toString("utf8");
  return {
    pid: buf.readUInt32LE(0),
    comm,
    count: buf.readBigUInt64LE(24),
    kernelTsNs: buf.readBigUInt64LE(32),
  };
}

export function packRecord(record: EmittedRecord): Buffer {
  const buf = Buffer.alloc(RECORD_SIZE);
  buf.writeUInt32LE(record.pid >>> 0, 0);
  buf.write(record.comm.slice(0, COMM_SIZE), 4, "utf8");
  buf.writeBigUInt64LE(record.count, 24);
  buf.writeBigUInt64LE(record.kernelTsNs, 32);
  return buf;
}

/** One timestamped event as the collector logs it. */
export interface FaultEvent {
  pid: number;
  comm: string;
  count: bigint;
  kernelTsNs: bigint;
  userTsNs: bigint;
  sessionElapsedS: number;
}

function quoteComm(comm: string): string {
  return '"' + comm.replace(/\\/g, "\\\\").replace(/"/g, '\\"') + '"';
}

/**
 * Event-log line: `pid=<u32> comm=<quoted> count=<u64> kts=<u64> uts=<u64>
 * el=<f64, 9 decimals>`; byte-identical to the collector's writer.
 */
export function formatEventLine(event: FaultEvent): string {
  return (
    `pid=${event.pid} comm=${quoteComm(event.comm)} count=${event.count} ` +
    `kts=${event.kernelTsNs} uts=${event.userTsNs} ` +
    `el=${event.sessionElapsedS.toFixed(9)}`
  );
}

export function recordToEvent(
  record: EmittedRecord,
  userTsNs: bigint,
  sessionBeginNs: bigint,
): FaultEvent {
  return {
    pid: record.pid,
    comm: record.comm,
    count: record.count,
    kernelTsNs: record.kernelTsNs,
    userTsNs,
    sessionElapsedS: Number(userTsNs - sessionBeginNs) / 1e9,
  };
}
