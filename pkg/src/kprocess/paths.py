"""Piecewise-constant paths on {1, 2, ..., inf} and the machinery that builds them.

States are stored as int64 labels: positive integers for finite states,
``INF`` for the point at infinity and ``TAIL`` for time that belongs to
states beyond the stored prefix of an environment.  ``TAIL`` is never the
same thing as ``INF``.

Two builders share one notion of a *segment source*: an object with

``initial(rng, m)``
    ``None`` or a pair ``(lengths, labels)`` of shape ``(m, k0)`` giving the
    segments every replica starts with;
``draw(rng, rows)``
    a pair ``(lengths, labels)`` of shape ``(rows, k)``; row ``i`` is the
    next block of ``k`` consecutive segments of one replica.

:func:`build_trajectory` stacks successive rows of a single replica into a
:class:`Trajectory`; :func:`sample_at` runs many replicas side by side and
reports only the segments covering a set of target times.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, RangeError

INF = -1
TAIL = -2


def label_str(label: int) -> str:
    if label == INF:
        return "inf"
    if label == TAIL:
        return "tail"
    return str(int(label))


def parse_label(text: str) -> int:
    t = text.strip().lower()
    if t in ("inf", "infinity", "∞"):
        return INF
    if t == "tail":
        return TAIL
    try:
        x = int(t)
    except ValueError:
        raise ParameterError(f"not a state label: {text!r}") from None
    if x < 1:
        raise ParameterError(f"finite states are >= 1, got {x}")
    return x


def inverse_label(states) -> np.ndarray:
    """x -> 1/x with inf and TAIL both mapped to 0 (the metric |1/x - 1/y|)."""
    s = np.asarray(states)
    out = np.zeros(s.shape, dtype=np.float64)
    finite = s > 0
    out[finite] = 1.0 / s[finite]
    return out


def state_distance(x: int, y: int) -> float:
    return float(abs(inverse_label(x) - inverse_label(y)))


def accumulate(lengths: np.ndarray, origin: float = 0.0) -> np.ndarray:
    """Running sums of segment lengths.

    Accumulated in extended precision so the rounding error stays far below
    one double ulp per segment for horizons of ~1e6 segments.
    """
    acc = np.cumsum(np.asarray(lengths, dtype=np.longdouble)) + np.longdouble(origin)
    return acc.astype(np.float64)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Right-continuous step path on [0, horizon]."""

    horizon: float
    states: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    start_state: int

    def __post_init__(self):
        for name, dtype in (("states", np.int64), ("starts", np.float64), ("ends", np.float64)):
            arr = np.array(getattr(self, name), dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not self.states.size:
            raise ParameterError("a trajectory needs at least one segment")

    @classmethod
    def from_lengths(cls, lengths, labels, horizon: float, start_state: int) -> "Trajectory":
        """Lay segments end to end from time 0 and clip the last one at ``horizon``."""
        lengths = np.asarray(lengths, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        keep = lengths > 0.0
        lengths, labels = lengths[keep], labels[keep]
        ends = accumulate(lengths)
        if not ends.size or ends[-1] < horizon:
            raise ParameterError("segments do not reach the horizon")
        last = int(np.searchsorted(ends, horizon, side="left"))
        ends = ends[: last + 1].copy()
        ends[-1] = horizon
        starts = np.empty_like(ends)
        starts[0] = 0.0
        starts[1:] = ends[:-1]
        return cls(float(horizon), labels[: last + 1], starts, ends, start_state)

    def __len__(self):
        return int(self.states.size)

    @property
    def lengths(self) -> np.ndarray:
        return self.ends - self.starts

    def time_in(self, label: int) -> float:
        return float(self.lengths[self.states == label].sum())

    @property
    def tail_time(self) -> float:
        return self.time_in(TAIL)

    def segment_index(self, t: float) -> int:
        if not 0.0 <= t <= self.horizon:
            raise RangeError(f"t={t} outside [0, {self.horizon}]")
        return int(np.searchsorted(self.starts, t, side="right") - 1)

    def state_at(self, t: float) -> int:
        return int(self.states[self.segment_index(t)])

    def states_at(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=np.float64)
        if times.size and (times.min() < 0.0 or times.max() > self.horizon):
            raise RangeError(f"times outside [0, {self.horizon}]")
        return self.states[np.searchsorted(self.starts, times, side="right") - 1]

    def segments(self):
        for x, a, b in zip(self.states, self.starts, self.ends):
            yield int(x), float(a), float(b)

    def to_csv(self, fh=None) -> str | None:
        """Write ``state,start,end`` rows with 17 significant digits."""
        own = fh is None
        out = io.StringIO() if own else fh
        out.write("state,start,end\n")
        for x, a, b in self.segments():
            out.write(f"{label_str(x)},{a:.17g},{b:.17g}\n")
        return out.getvalue() if own else None

    @classmethod
    def from_csv(cls, fh, start_state: int | None = None) -> "Trajectory":
        rows = list(csv.DictReader(fh))
        if not rows:
            raise ParameterError("empty trajectory CSV")
        states = [parse_label(r["state"]) for r in rows]
        starts = [float(r["start"]) for r in rows]
        ends = [float(r["end"]) for r in rows]
        return cls(ends[-1], states, starts, ends, states[0] if start_state is None else start_state)


def build_trajectory(source, horizon: float, rng: np.random.Generator, start_state: int) -> Trajectory:
    """Draw rows from ``source`` until the path covers ``[0, horizon]``."""
    if not horizon > 0.0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    pieces_len, pieces_lab = [], []
    total = 0.0
    init = source.initial(rng, 1)
    if init is not None:
        pieces_len.append(init[0].ravel())
        pieces_lab.append(init[1].ravel())
        total += float(init[0].sum())
    rows = 64
    while total < horizon:
        lengths, labels = source.draw(rng, rows)
        pieces_len.append(lengths.ravel())
        pieces_lab.append(labels.ravel())
        total += float(lengths.sum())
        rows = min(rows * 2, 1 << 16)
    return Trajectory.from_lengths(
        np.concatenate(pieces_len), np.concatenate(pieces_lab), horizon, start_state
    )


def sample_at(source, targets, rng: np.random.Generator):
    """Segments covering given times, for many independent replicas at once.

    ``targets`` has shape ``(m, k)`` and must be non-decreasing along each
    row; row ``i`` belongs to replica ``i``.  Returns ``(states, lo, hi)``,
    each of shape ``(m, k)``: the label and the (unclipped) extent of the
    segment containing each target.  A target on a segment boundary belongs
    to the later segment.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    m, k = targets.shape
    states = np.empty((m, k), dtype=np.int64)
    seg_lo = np.empty((m, k))
    seg_hi = np.empty((m, k))
    clock = np.zeros(m)
    ptr = np.zeros(m, dtype=np.int64)
    active = np.arange(m)

    def absorb(lengths, labels):
        for j in range(lengths.shape[1]):
            lo = clock[active]
            hi = lo + lengths[:, j]
            clock[active] = hi
            sel = np.arange(active.size)
            while sel.size:
                rows = active[sel]
                p = ptr[rows]
                ok = p < k
                sel, rows, p = sel[ok], rows[ok], p[ok]
                hit = targets[rows, p] < hi[sel]
                sel, rows, p = sel[hit], rows[hit], p[hit]
                states[rows, p] = labels[sel, j]
                seg_lo[rows, p] = lo[sel]
                seg_hi[rows, p] = hi[sel]
                ptr[rows] = p + 1

    init = source.initial(rng, m)
    if init is not None:
        absorb(*init)
        active = active[ptr[active] < k]
    while active.size:
        absorb(*source.draw(rng, active.size))
        active = active[ptr[active] < k]
    return states, seg_lo, seg_hi
