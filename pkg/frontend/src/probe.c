// Page-fault counting probe (BCC dialect).
//
// Attached as a kprobe at __handle_mm_fault. Per-pid fault and frequency
// counters live in hash maps; when a pid's frequency reaches the configured
// threshold, one record is pushed through the perf channel and both counters
// reset. A single-slot config map carries the threshold and an optional
// 16-byte comm filter (exact comparison; disabled when filter_enabled is 0).
// Submission failures and map-full conditions bump the dropped counter and
// never block the fault path.
//
// Record layout (little-endian, 40 bytes):
//   offset  0  u32  pid
//   offset  4  char comm[16]   NUL-padded
//   offset 20  u32  reserved   (alignment padding, always 0)
//   offset 24  u64  count      faults in this flush window
//   offset 32  u64  kernel_ts_ns  monotonic, taken at flush

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

static inline void bump_dropped() {
    u32 zero = 0;
    u64 *drops = dropped.lookup(&zero);
    if (drops)
        lock_xadd(drops, 1);
}

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
        bump_dropped();
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
        if (events.perf_submit(ctx, &rec, sizeof(rec)) != 0)
            bump_dropped();
        counts.delete(&pid);
        freq.delete(&pid);
    }
    return 0;
}
