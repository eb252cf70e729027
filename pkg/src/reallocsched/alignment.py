"""Alignment math: aligned windows, span levels, interval decomposition.

An aligned window has power-of-two span 2^i and starts at a multiple of 2^i.
Recursively aligned window sets are laminar: any two aligned windows are
equal, disjoint, or nested.

Spans are partitioned into levels by a tower-growing threshold sequence:
level 0 covers spans 1..32, and level l >= 1 covers spans in
(threshold(l), threshold(l+1)] where threshold(1) = 32 and
threshold(l+1) = 2 ** (threshold(l) // 4).  A level-l window decomposes into
aligned blocks of threshold(l) slots ("level-l intervals"), which is where
its reservations live.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import Window

#: Spans at or below this are level 0 and are scheduled by the naive cascade.
LEVEL0_SPAN_MAX = 32

#: Highest level the scheduler materializes.  threshold(3) = 2**64, so any
#: representable span at desk scale is level 2 or below.
LEVEL_CAP = 2


def is_power_of_two(x: int) -> bool:
    return x > 0 and x & (x - 1) == 0


def floor_power_of_two(x: int) -> int:
    """Largest power of two <= x (x >= 1)."""
    if x < 1:
        raise ValueError("no power of two <= 0")
    return 1 << (x.bit_length() - 1)


def level_threshold(level: int) -> int:
    """The span threshold L for a given level (level >= 1).

    threshold(1) = 32; threshold(l+1) = 2 ** (threshold(l) // 4).  This is
    also the size in slots of a level-`level` interval.
    """
    if level < 1:
        raise ValueError("thresholds are defined for level >= 1")
    size = LEVEL0_SPAN_MAX
    for _ in range(level - 1):
        size = 2 ** (size // 4)
    return size


def level_of(span: int) -> int:
    """Level of a window span: 0 for spans <= 32, else the unique l >= 1
    with threshold(l) < span <= threshold(l+1)."""
    if span < 1:
        raise ValueError("span must be >= 1")
    if span <= LEVEL0_SPAN_MAX:
        return 0
    level, hi = 0, LEVEL0_SPAN_MAX
    while span > hi:
        level += 1
        hi = 2 ** (hi // 4)
    return level


@dataclass(frozen=True)
class LevelParams:
    level: int
    span_min: int  # smallest span handled at this level
    span_max: int  # largest span handled at this level
    interval_size: int | None  # threshold(level); None at level 0


def level_params(level: int) -> LevelParams:
    if level < 0:
        raise ValueError("level must be >= 0")
    if level == 0:
        return LevelParams(0, 1, LEVEL0_SPAN_MAX, None)
    lo = level_threshold(level)
    return LevelParams(level, lo + 1, 2 ** (lo // 4), lo)


def distinct_spans(level: int) -> tuple[int, ...]:
    """All power-of-two spans a level-`level` aligned window can have."""
    p = level_params(level)
    spans = []
    s = 1
    while s < p.span_min:
        s *= 2
    while s <= p.span_max:
        spans.append(s)
        s *= 2
    return tuple(spans)


@dataclass(frozen=True, order=True)
class AlignedWindow:
    """Window of span 2^i starting at a multiple of 2^i."""

    start: int
    span: int

    def __post_init__(self):
        if self.start < 0:
            raise ValueError("aligned window start must be >= 0")
        if not is_power_of_two(self.span):
            raise ValueError(f"aligned span must be a power of two, got {self.span}")
        if self.start % self.span != 0:
            raise ValueError(
                f"aligned start must be a multiple of the span: {self.start} % {self.span} != 0"
            )

    @property
    def end(self) -> int:
        return self.start + self.span

    def as_window(self) -> Window:
        return Window(self.start, self.end)

    def __contains__(self, slot: object) -> bool:
        return isinstance(slot, int) and self.start <= slot < self.end


@dataclass(frozen=True, order=True)
class IntervalId:
    """The level-`level` aligned block covering slots
    [index * threshold(level), (index + 1) * threshold(level))."""

    level: int
    index: int

    def __post_init__(self):
        if self.level < 1:
            raise ValueError("intervals exist at level >= 1")
        if self.index < 0:
            raise ValueError("interval index must be >= 0")

    @property
    def size(self) -> int:
        return level_threshold(self.level)

    @property
    def start(self) -> int:
        return self.index * self.size

    @property
    def end(self) -> int:
        return self.start + self.size


def is_aligned(w: Window) -> bool:
    return is_power_of_two(w.span) and w.start % w.span == 0


def intervals_of(w: AlignedWindow) -> list[IntervalId]:
    """The level-l intervals covering a level-l window, left to right."""
    level = level_of(w.span)
    if level < 1:
        raise ValueError(f"span {w.span} is level 0; it has no interval decomposition")
    size = level_threshold(level)
    # Level-l spans exceed threshold(l) and both are powers of two, so the
    # window is an exact whole multiple of the interval size.
    first = w.start // size
    return [IntervalId(level, first + i) for i in range(w.span // size)]


def align_window(w: Window) -> AlignedWindow:
    """Largest aligned window contained in w, leftmost on ties.

    The result always has span >= span(w) / 4, and span-1 windows are their
    own alignment.
    """
    i = w.span.bit_length() - 1
    while True:
        size = 1 << i
        a = -(-w.start // size) * size  # smallest multiple of size >= start
        if a + size <= w.end:
            return AlignedWindow(a, size)
        i -= 1


def trim_window(w: AlignedWindow, max_span: int) -> AlignedWindow:
    """Leftmost aligned subwindow of span min(w.span, floor_pow2(max_span)).

    Aligned windows nest perfectly, so the leftmost child of the target span
    is itself aligned.
    """
    target = min(w.span, floor_power_of_two(max_span))
    if target == w.span:
        return w
    return AlignedWindow(w.start, target)


def audit_counting_bound(jobs, m: int, gamma: int) -> bool:
    """Necessary condition for gamma-underallocation of an aligned job set:
    every window W spanned by a job overlaps at most m*span(W)/gamma jobs of
    span <= span(W).

    `jobs` is an iterable of objects with a `.window` (all aligned).
    """
    jobs = list(jobs)
    windows = {(j.window.start, j.window.end) for j in jobs}
    for start, end in windows:
        span = end - start
        count = sum(
            1
            for j in jobs
            if j.window.span <= span and j.window.start < end and j.window.end > start
        )
        if count * gamma > m * span:
            return False
    return True
