/**
 * User-space mirror of the kernel program's counting semantics, used to
 * validate threshold-flush behavior without a kernel: per-pid fault and
 * frequency counters, optional exact comm filter, flush at threshold, drop
 * accounting on failed submission.
 */

import { EmittedRecord } from "./records";

export interface ProbeConfig {
  threshold: bigint;
  commFilter: string; // empty = match all
}

export type SubmitFn = (record: EmittedRecord) => boolean;

export class ReferenceCounter {
  readonly config: ProbeConfig;
  readonly emitted: EmittedRecord[] = [];
  readonly counts = new Map<number, bigint>();
  private readonly freq = new Map<number, bigint>();
  dropped = 0n;
  totalMatching = 0n;
  private readonly submit: SubmitFn;

  constructor(config: ProbeConfig, submit?: SubmitFn) {
    if (config.threshold < 1n) {
      throw new RangeError("threshold must be >= 1");
    }
    if (Buffer.byteLength(config.commFilter) > 16) {
      throw new RangeError("comm filter longer than 16 bytes");
    }
    this.config = config;
    this.submit = submit ?? (() => true);
  }

  onFault(pid: number, comm: string, tsNs: bigint): void {
    const { commFilter, threshold } = this.config;
    if (commFilter !== "" && comm !== commFilter) {
      return;
    }
    this.totalMatching += 1n;
    const count = (this.counts.get(pid) ?? 0n) + 1n;
    const frq = (this.freq.get(pid) ?? 0n) + 1n;
    this.counts.set(pid, count);
    this.freq.set(pid, frq);
    if (frq >= threshold) {
      const record: EmittedRecord = { pid, comm, count, kernelTsNs: tsNs };
      if (this.submit(record)) {
        this.emitted.push(record);
      } else {
        this.dropped += 1n;
      }
      this.counts.delete(pid);
      this.freq.delete(pid);
    }
  }

  /** Faults still sitting in the in-map counters. */
  residualTotal(): bigint {
    let total = 0n;
    for (const value of this.counts.values()) {
      total += value;
    }
    return total;
  }

  /** Conservation check: emitted + residual + dropped batches == total. */
  accountedTotal(): bigint {
    let emitted = 0n;
    for (const record of this.emitted) {
      emitted += record.count;
    }
    return emitted + this.residualTotal() + this.dropped * this.config.threshold;
  }
}
