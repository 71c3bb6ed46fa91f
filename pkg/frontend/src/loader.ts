/**
 * Probe loading. The C source ships with the package; loading needs the
 * node BCC bindings (`bpfcc`) plus a kernel with kprobe support, so the
 * import happens lazily and failure produces a remediation hint instead of
 * a module-load crash.
 */

import { readFileSync } from "fs";
import { join } from "path";

import { EmittedRecord, parseRecord } from "./records";

export const ATTACH_POINT = "__handle_mm_fault";
export const PROBE_FN = "on_fault";

export class ProbeUnsupportedError extends Error {}

export interface LoadOptions {
  threshold: bigint;
  commFilter?: string;
  onRecord: (cpu: number, record: EmittedRecord) => void;
  onLost?: (count: number) => void;
}

export interface LoadedProbe {
  poll(timeoutMs: number): void;
  kernelDrops(): bigint;
  detach(): void;
}

/** The eBPF C source as shipped (config is set through its map, not via
 * source substitution, so the text is static). */
export function probeSource(): string {
  return readFileSync(join(__dirname, "..", "..", "src", "probe.c"), "utf8");
}

function packConfig(threshold: bigint, commFilter: string): Buffer {
  // struct config_t { u64 threshold; char comm_filter[16]; u64 filter_enabled; }
  const buf = Buffer.alloc(32);
  buf.writeBigUInt64LE(threshold, 0);
  buf.write(commFilter.slice(0, 16), 8, "utf8");
  buf.writeBigUInt64LE(commFilter === "" ? 0n : 1n, 24);
  return buf;
}

export async function loadProbe(options: LoadOptions): Promise<LoadedProbe> {
  if (options.threshold < 1n) {
    throw new RangeError("threshold must be >= 1");
  }
  let bcc: any;
  try {
    bcc = await import("bpfcc" as string);
  } catch (err) {
    throw new ProbeUnsupportedError(
      "bpfcc bindings unavailable; install the 'bpfcc' package on a kernel " +
        "with BPF + kprobe support and run as root",
    );
  }
  if (typeof process.geteuid === "function" && process.geteuid() !== 0) {
    throw new ProbeUnsupportedError(
      "loading a kprobe requires root (CAP_BPF + CAP_PERFMON)",
    );
  }

  const bpf = bcc.loadSync(probeSource());
  bpf.attachKprobe(ATTACH_POINT, PROBE_FN);

  const rawConv = {
    parse: (buf: Buffer) => Buffer.from(buf),
    format: (buf: Buffer, x: Buffer) => x.copy(buf),
  };
  const u32Conv = {
    parse: (buf: Buffer) => buf.readUInt32LE(0),
    format: (buf: Buffer, x: number) => buf.writeUInt32LE(x, 0),
  };
  const conf = bpf.getMap("conf", u32Conv, rawConv);
  conf.set(0, packConfig(options.threshold, options.commFilter ?? ""));

  let lost = 0n;
  const dropped = bpf.getMap("dropped", u32Conv, {
    parse: (buf: Buffer) => buf.readBigUInt64LE(0),
    format: (buf: Buffer, x: bigint) => buf.writeBigUInt64LE(x, 0),
  });
  const perf = bpf.getPerfBuffer(
    "events",
    (cpu: number, data: Buffer) => options.onRecord(cpu, parseRecord(data)),
    (count: number) => {
      lost += BigInt(count);
      options.onLost?.(count);
    },
  );

  return {
    poll: (timeoutMs: number) => perf.poll(timeoutMs),
    kernelDrops: () => {
      let drops = lost;
      try {
        drops += dropped.get(0) ?? 0n;
      } catch {
        // map read failure is non-fatal for accounting
      }
      return drops;
    },
    detach: () => {
      bpf.detachKprobe(ATTACH_POINT);
      bpf.close?.();
    },
  };
}
