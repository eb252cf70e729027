"""Exercise the brute-force oracles and the audit engine.

Two independent feasibility oracles (an EDF scan and a bipartite matcher)
agree everywhere; the underallocation check maps windows onto a
gamma-sized grid; and the auditor catches hand-corrupted snapshots.
"""

import random

import reallocsched as rs


def main():
    print("1. Feasibility oracles")
    jobs = [rs.Job("a", rs.Window(0, 1)), rs.Job("b", rs.Window(0, 2)),
            rs.Job("c", rs.Window(0, 2))]
    e = rs.edf_feasible(jobs, 1)
    b = rs.matching_feasible(jobs, 1)
    print(f"   three jobs crammed into two slots: edf={e.feasible} matching={b.feasible}")
    rng = random.Random(0)
    checked = 0
    for _ in range(2000):
        n = rng.randrange(0, 10)
        jobs = [
            rs.Job(f"j{i}", rs.Window(s := rng.randrange(0, 20), s + rng.randrange(1, 12)))
            for i in range(n)
        ]
        m = rng.randrange(1, 4)
        assert rs.edf_feasible(jobs, m).feasible == rs.matching_feasible(jobs, m).feasible
        checked += 1
    print(f"   {checked} random instances, zero disagreements\n")

    print("2. Underallocation = feasibility with gamma-times-longer jobs")
    four = [rs.Job(f"x{i}", rs.Window(0, 8)) for i in range(4)]
    five = [rs.Job(f"x{i}", rs.Window(0, 8)) for i in range(5)]
    print(f"   4 jobs in [0, 8) at gamma=2: {rs.underallocated(four, 1, 2)} "
          f"(4 grid slots of size 2)")
    print(f"   5 jobs in [0, 8) at gamma=2: {rs.underallocated(five, 1, 2)}\n")

    print("3. The auditor on a live fleet, then on a corrupted snapshot")
    fleet = rs.Fleet(rs.Config(2, 8))
    for i in range(6):
        fleet.apply(rs.insert_request(f"a{i}", 0, 64))
    snap = fleet.snapshot()
    print(f"   clean fleet: {len(rs.audit(snap, 'full-oracle'))} failures")
    machine = snap.machines[0]
    ids = sorted(machine.jobs)
    machine.jobs[ids[0]].slot = machine.jobs[ids[1]].slot  # two jobs, one slot
    failures = rs.audit(snap, "invariants")
    print(f"   after forcing two jobs into one slot: {len(failures)} failures,")
    print(f"   first: {failures[0].invariant}: {failures[0].detail}")


if __name__ == "__main__":
    main()
