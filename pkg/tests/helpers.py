"""Shared test fixtures: the ladder workloads the acceptance suite trains on.

Each workload alternates quiet phases (a sweep over an array drawn from a
log-spaced ladder of lengths, running long enough to cycle it several times)
with thrash bursts over a footprint larger than the cache capacity. Quiet
duration is proportional to footprint, so the interval to the first
post-quiet record encodes the quiet footprint while its label (distinct
pages over that same interval) measures it: a deterministic, learnable WSS
signal. Burst and refill records add a second, faster regime. The four
ladders plus the largest burst array span 2**7..2**22 elements.
"""

from dataclasses import dataclass

from wsskit.prng import SplitMix64
from wsskit.simulator import Phase, WorkloadSpec, footprint_pages

RATE_HZ = 100_000.0


@dataclass(frozen=True)
class LadderWorkload:
    name: str
    spec: WorkloadSpec
    capacity_pages: int
    flush_threshold: int


def ladder_workload(name, quiet_lo_elems, quiet_hi_elems, thrash_elems,
                    threshold, quiet_cycles, n_cycles, seed) -> LadderWorkload:
    capacity = footprint_pages(quiet_hi_elems, 4, 4096)
    rng = SplitMix64(seed)
    n_steps = 10
    ratio = (quiet_hi_elems / quiet_lo_elems) ** (1 / (n_steps - 1))
    ladder = sorted({round(quiet_lo_elems * ratio**i) for i in range(n_steps)})
    burst_accesses = capacity + 4 * threshold
    phases = []
    for _ in range(n_cycles):
        phases.append(Phase(thrash_elems, burst_accesses / RATE_HZ))
        elems = ladder[rng.randint(0, len(ladder) - 1)]
        pages = footprint_pages(elems, 4, 4096)
        phases.append(Phase(elems, quiet_cycles * pages / RATE_HZ))
    spec = WorkloadSpec(pattern="phased", access_rate_hz=RATE_HZ,
                        phases=tuple(phases), seed=seed)
    return LadderWorkload(name, spec, capacity, threshold)


def acceptance_workloads() -> list[LadderWorkload]:
    """Four workloads whose array lengths jointly span 2**7..2**22 elements."""
    return [
        ladder_workload("w1", 2**7, 2**13, 2**14, 8, 25, 340, seed=101),
        ladder_workload("w2", 2**13, 2**16, 2**17, 24, 15, 245, seed=202),
        ladder_workload("w3", 2**16, 2**19, 2**20, 64, 11, 120, seed=303),
        ladder_workload("w4", 2**19, 2**21, 2**22, 100, 6, 75, seed=404),
    ]
