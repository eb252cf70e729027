"""Brute-force feasibility oracles used as preconditions, audits, and test
oracles: EDF scanning, exact bipartite matching, and the grid-restricted
underallocation check."""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .core import Assignment, InstanceTooLarge, Job, Window

#: matching_feasible refuses instances with |jobs| * total span above this.
MATCHING_GUARD = 10**6


@dataclass(frozen=True)
class FeasibilityVerdict:
    feasible: bool
    #: Full valid schedule when feasible.
    witness: tuple[Assignment, ...] | None = None
    #: A violated time range (release, deadline) when infeasible.
    certificate: tuple[int, int] | None = None

    def __bool__(self) -> bool:
        return self.feasible


def edf_feasible(jobs, m: int) -> FeasibilityVerdict:
    """Earliest-deadline-first scan; optimal for unit jobs on m machines.

    Walks timeslots in increasing order, at each slot running up to m
    released, unscheduled jobs with the earliest deadlines.  Ties broken by
    job id for reproducible witnesses.
    """
    jobs = sorted(jobs, key=lambda j: (j.window.start, j.window.end, j.id))
    if not jobs:
        return FeasibilityVerdict(True, witness=())
    if m < 1:
        raise ValueError("machine count must be >= 1")
    witness = []
    pending: list[tuple[int, str, Job]] = []  # (deadline, id, job) min-heap
    i = 0
    t = jobs[0].window.start
    while i < len(jobs) or pending:
        if not pending and jobs[i].window.start > t:
            t = jobs[i].window.start
        while i < len(jobs) and jobs[i].window.start <= t:
            j = jobs[i]
            heapq.heappush(pending, (j.window.end, j.id, j))
            i += 1
        machine = 0
        while pending and machine < m:
            deadline, _, j = heapq.heappop(pending)
            if deadline <= t:
                return FeasibilityVerdict(False, certificate=(j.window.start, deadline))
            witness.append(Assignment(j.id, machine, t))
            machine += 1
        t += 1
    return FeasibilityVerdict(True, witness=tuple(witness))


def matching_feasible(jobs, m: int) -> FeasibilityVerdict:
    """Independent oracle: maximum bipartite matching of jobs against
    compatible (machine, slot) pairs, by augmenting paths."""
    jobs = sorted(jobs, key=lambda j: j.id)
    if not jobs:
        return FeasibilityVerdict(True, witness=())
    total_span = sum(j.window.span for j in jobs)
    if len(jobs) * total_span * m > MATCHING_GUARD:
        raise InstanceTooLarge(
            f"matching oracle guard exceeded: {len(jobs)} jobs x {total_span} span x {m} machines"
        )

    slots = sorted({(q, t) for j in jobs for t in range(j.window.start, j.window.end) for q in range(m)})
    slot_index = {s: k for k, s in enumerate(slots)}
    adj = [
        [slot_index[(q, t)] for t in range(j.window.start, j.window.end) for q in range(m)]
        for j in jobs
    ]

    matched_job: list[int | None] = [None] * len(slots)

    def augment(u: int, seen: list[bool]) -> bool:
        for v in adj[u]:
            if seen[v]:
                continue
            seen[v] = True
            if matched_job[v] is None or augment(matched_job[v], seen):
                matched_job[v] = u
                return True
        return False

    size = 0
    for u in range(len(jobs)):
        if augment(u, [False] * len(slots)):
            size += 1
    if size < len(jobs):
        unmatched = next(
            j for k, j in enumerate(jobs)
            if k not in {u for u in matched_job if u is not None}
        )
        return FeasibilityVerdict(
            False, certificate=(unmatched.window.start, unmatched.window.end)
        )
    witness = tuple(
        Assignment(jobs[u].id, slots[v][0], slots[v][1])
        for v, u in enumerate(matched_job)
        if u is not None
    )
    return FeasibilityVerdict(True, witness=witness)


def grid_jobs(jobs, gamma: int) -> list[Job] | None:
    """Map each window [a, d) onto the gamma-sized grid [ceil(a/g), floor(d/g)).

    Returns None if some window contains no whole grid slot (such an
    instance cannot be gamma-underallocated: the job has no room to run at
    length gamma).
    """
    out = []
    for j in jobs:
        a = -(-j.window.start // gamma)
        d = j.window.end // gamma
        if d <= a:
            return None
        out.append(Job(j.id, Window(a, d)))
    return out


def underallocated(jobs, m: int, gamma: int) -> bool:
    """Grid-restricted check that the set stays feasible with every job
    length multiplied by gamma: jobs are mapped to whole gamma-grid slots
    and the grid instance is EDF-checked.  Sufficient for slack-dependent
    guarantees; equals plain feasibility at gamma = 1."""
    if gamma < 1:
        raise ValueError("gamma must be an integer >= 1")
    jobs = list(jobs)
    if not jobs:
        return True
    gridded = grid_jobs(jobs, gamma)
    if gridded is None:
        return False
    return edf_feasible(gridded, m).feasible
