import random

import pytest

import reallocsched as rs


def chain_requests(t):
    """Inserts that pack [0, 2^t) so a span-1 insert at slot 0 cascades
    through spans 2, 4, ..., 2^t under the naive rule: slot 0 holds the
    span-2 job, slot 1 the span-4 job, slots [2^(e-2), 2^(e-1)) the span-2^e
    jobs, and the top half is span-2^t jobs with one slot left empty."""
    reqs = []
    counter = 0

    def add(span, count):
        nonlocal counter
        for _ in range(count):
            reqs.append(rs.insert_request(f"c{counter}", 0, span))
            counter += 1

    add(2, 1)
    add(4, 1)
    for e in range(3, t):
        add(2 ** e, 2 ** (e - 2))
    add(2 ** t, 2 ** (t - 2) + 2 ** (t - 1) - 1)
    return reqs


def aligned_multiset(rng: random.Random, count: int, gamma: int, span_max: int = 1024):
    """Random recursively aligned job set that stays gamma-underallocated on
    one machine (prefix-closed under any insertion order by monotonicity)."""
    spans = [s for s in (8, 16, 32, 64, 128, 256, 512, 1024) if gamma <= s <= span_max]
    jobs = []
    while len(jobs) < count:
        span = rng.choice(spans)
        start = rng.randrange(0, max(1, 4096 // span)) * span
        cand = rs.Job(f"p{len(jobs)}", rs.Window(start, start + span))
        if rs.underallocated(jobs + [cand], 1, gamma):
            jobs.append(cand)
    return jobs


def single_machine_audit(machine, allow=()):
    """Audit one MachineSchedule as a single-machine fleet snapshot."""
    snap = rs.FleetSnapshot(
        kind="reservation",
        config=rs.Config(1, machine.gamma),
        nstar=machine.nstar,
        machines=[machine.snapshot()],
        original_windows={},
    )
    return [f for f in rs.audit(snap, "invariants") if f.invariant not in allow]


@pytest.fixture
def rng():
    return random.Random(20240817)
