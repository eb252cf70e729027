"""Trace generation and serialization.

File format: an optional metadata header line of `# key=value ...`, then one
request per line, either `insert <id> <a> <d>` or `delete <id>`.  Windows
are half-open: the job runs in some slot of [a, d).  Round-trips are
byte-exact.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from pathlib import Path

from .alignment import floor_power_of_two
from .core import Job, Request, TraceFormatError, Window, delete_request, insert_request
from .feasibility import underallocated


@dataclass
class Trace:
    requests: list[Request] = field(default_factory=list)
    metadata: dict[str, str] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.requests)


def write_trace(trace: Trace) -> str:
    lines = []
    if trace.metadata:
        pairs = " ".join(f"{k}={v}" for k, v in trace.metadata.items())
        lines.append(f"# {pairs}")
    for req in trace.requests:
        if req.op == "insert":
            lines.append(f"insert {req.job_id} {req.window.start} {req.window.end}")
        else:
            lines.append(f"delete {req.job_id}")
    return "\n".join(lines) + "\n"


def read_trace(text: str) -> Trace:
    trace = Trace()
    active: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            for pair in line[1:].split():
                if "=" not in pair:
                    raise TraceFormatError(f"line {lineno}: bad metadata token {pair!r}")
                key, value = pair.split("=", 1)
                trace.metadata[key] = value
            continue
        parts = line.split()
        try:
            if parts[0] == "insert":
                if len(parts) != 4:
                    raise TraceFormatError(f"line {lineno}: insert needs id, start, end")
                _, job_id, a, d = parts
                if job_id in active:
                    raise TraceFormatError(f"line {lineno}: duplicate insert of {job_id!r}")
                trace.requests.append(insert_request(job_id, int(a), int(d)))
                active.add(job_id)
            elif parts[0] == "delete":
                if len(parts) != 2:
                    raise TraceFormatError(f"line {lineno}: delete needs exactly an id")
                job_id = parts[1]
                if job_id not in active:
                    raise TraceFormatError(f"line {lineno}: delete of inactive id {job_id!r}")
                trace.requests.append(delete_request(job_id))
                active.discard(job_id)
            else:
                raise TraceFormatError(f"line {lineno}: unknown op {parts[0]!r}")
        except (ValueError, TraceFormatError) as exc:
            if isinstance(exc, TraceFormatError):
                raise
            raise TraceFormatError(f"line {lineno}: {exc}") from exc
    return trace


def save_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_text(write_trace(trace))


def load_trace(path: str | Path) -> Trace:
    return read_trace(Path(path).read_text())


def _log_uniform_span(rng: random.Random, lo: int, hi: int) -> int:
    if hi <= lo:
        return lo
    return int(round(lo * (hi / lo) ** rng.random()))


def gen_random_underallocated(
    n_max: int,
    m: int,
    gamma: int,
    seed: int,
    *,
    length: int | None = None,
    span_max: int = 4096,
    aligned: bool = False,
    horizon: int | None = None,
) -> Trace:
    """Reproducible random insert/delete mix whose every prefix passes the
    underallocation check.  Inserts draw log-uniform ("power-law") spans and
    are rejection-sampled against the checker; deletions only ever shrink
    the instance, so prefixes stay underallocated by monotonicity.

    With `aligned=True`, windows are emitted recursively aligned
    (power-of-two spans at matching offsets).
    """
    if n_max < 0 or m < 1 or gamma < 1:
        raise ValueError("n_max must be >= 0 and m, gamma >= 1")
    rng = random.Random(seed)
    if length is None:
        length = 4 * n_max
    # Any window narrower than this cannot host a grid slot of size gamma.
    span_min = floor_power_of_two(max(gamma, 1)) if aligned else 2 * gamma
    if aligned and span_min < gamma:
        span_min *= 2
    span_max = max(span_max, span_min)
    if horizon is None:
        horizon = max(16 * gamma * max(n_max, 1), 4 * span_max)

    trace = Trace(
        metadata={
            "generator": "random",
            "seed": str(seed),
            "m": str(m),
            "gamma": str(gamma),
            "underallocated": "1",
            "n_max": str(n_max),
            "span_max": str(span_max),
            "aligned": str(int(aligned)),
        }
    )
    active: dict[str, Job] = {}
    order: list[str] = []
    counter = 0
    fresh = 0

    def candidate() -> Job | None:
        nonlocal counter, fresh
        for _ in range(30):
            span = _log_uniform_span(rng, span_min, span_max)
            if aligned:
                span = floor_power_of_two(max(span, span_min))
            span = max(span_min, min(span, span_max))
            start = rng.randrange(0, horizon - span + 1)
            if aligned:
                start -= start % span
            job = Job(f"j{counter}", Window(start, start + span))
            if underallocated(list(active.values()) + [job], m, gamma):
                counter += 1
                return job
        # Dense region: fall back to a fresh window past everything active.
        start = max((j.window.end for j in active.values()), default=0) + gamma * fresh
        start = -(-start // span_min) * span_min
        fresh += 1
        job = Job(f"j{counter}", Window(start, start + span_min))
        if underallocated(list(active.values()) + [job], m, gamma):
            counter += 1
            return job
        return None

    while len(trace.requests) < length:
        do_insert = not active or (len(active) < n_max and rng.random() < 0.6)
        if n_max == 0:
            break
        if do_insert:
            job = candidate()
            if job is None:
                continue
            active[job.id] = job
            order.append(job.id)
            trace.requests.append(insert_request(job.id, job.window.start, job.window.end))
        else:
            job_id = order.pop(rng.randrange(len(order)))
            del active[job_id]
            trace.requests.append(delete_request(job_id))
    return trace


def gen_realloc_adversary(s: int) -> Trace:
    """Expensive-rescheduling construction: eta = s/2 overlapping span-2
    jobs (job j in [j, j+2)), then eta rounds of toggle inserts/deletes at
    the two ends.  Each forced toggle makes every base job change slots
    under any schedule, so a repacking scheduler pays ~eta per round.
    Feasible after every request, but not underallocated."""
    if s < 4 or s % 2:
        raise ValueError("s must be even and >= 4")
    eta = s // 2
    trace = Trace(
        metadata={
            "generator": "realloc-adversary",
            "s": str(s),
            "underallocated": "0",
        }
    )
    for j in range(eta):
        trace.requests.append(insert_request(f"b{j}", j, j + 2))
    for i in range(eta):
        trace.requests.append(insert_request(f"t{i}lo", 0, 1))
        trace.requests.append(delete_request(f"t{i}lo"))
        trace.requests.append(insert_request(f"t{i}hi", eta, eta + 1))
        trace.requests.append(delete_request(f"t{i}hi"))
    return trace


def gen_migration_adversary(m: int, s: int, make_scheduler) -> Trace:
    """Forced-migration construction, adaptive against one deterministic
    scheduler.  Repeats s/(6m) rounds of: insert 2m span-2 jobs in [0, 2)
    (forcing two per machine); delete the m jobs currently sitting on the
    first m/2 machines; insert m span-1 jobs in [0, 1) (forcing one span-1
    plus one span-2 job per machine, so half the span-2 jobs must change
    machines); delete everything.

    `make_scheduler` builds the fresh scheduler the adversary adapts to;
    the emitted trace carries the concrete ids it chose, so it replays
    identically against that scheduler kind."""
    if m <= 1:
        raise ValueError("the migration adversary needs m > 1")
    if m % 2:
        raise ValueError("the migration adversary needs an even machine count")
    if s % (6 * m):
        raise ValueError(f"s must be a multiple of 6m = {6 * m}, got {s}")
    sched = make_scheduler()
    trace = Trace(
        metadata={
            "generator": "migration-adversary",
            "m": str(m),
            "s": str(s),
            "scheduler": getattr(sched, "kind", "unknown"),
            "underallocated": "0",
        }
    )

    def emit(req: Request) -> None:
        trace.requests.append(req)
        sched.apply(req)

    for rep in range(s // (6 * m)):
        for i in range(2 * m):
            emit(insert_request(f"a{rep}_{i}", 0, 2))
        placements = sched.assignments()
        doomed = sorted(
            (a.machine, a.slot, job_id)
            for job_id, a in placements.items()
            if a.machine < m // 2
        )
        for _, _, job_id in doomed:
            emit(delete_request(job_id))
        for i in range(m):
            emit(insert_request(f"b{rep}_{i}", 0, 1))
        for job_id in sorted(sched.assignments()):
            emit(delete_request(job_id))
    return trace
