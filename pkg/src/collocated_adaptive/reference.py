"""Piecewise reference trajectories for the collocated joints.

Segments are right-continuous: at a switch instant the new segment applies.
Sinusoids use absolute time, ``offset + amplitude * sin(2 pi f t + phase)``,
so a frequency change may make the reference jump at the switch.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConstantSegment:
    start: float
    value: np.ndarray


@dataclass(frozen=True)
class SinusoidSegment:
    start: float
    offset: np.ndarray
    amplitude: np.ndarray
    frequency: np.ndarray
    phase: np.ndarray


class PiecewiseReference:
    """Reference r(t) built from segments sorted by start time.

    Time before the first segment start uses the first segment; time past
    the last start extends the last segment.
    """

    def __init__(self, segments, m):
        if not segments:
            raise ValueError("a reference needs at least one segment")
        starts = [seg.start for seg in segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError(f"segment start times must be strictly increasing, got {starts}")
        self.segments = tuple(segments)
        self.starts = starts
        self.m = m

    def segment_at(self, t):
        i = bisect.bisect_right(self.starts, t) - 1
        return self.segments[max(i, 0)]

    def __call__(self, t):
        """Return ``(r, rdot, rddot)`` at time ``t``."""
        seg = self.segment_at(t)
        if isinstance(seg, ConstantSegment):
            z = np.zeros(self.m)
            return seg.value.copy(), z, z.copy()
        w = 2.0 * np.pi * seg.frequency
        arg = w * t + seg.phase
        sin, cos = np.sin(arg), np.cos(arg)
        r = seg.offset + seg.amplitude * sin
        rdot = seg.amplitude * w * cos
        rddot = -seg.amplitude * w * w * sin
        return r, rdot, rddot

    def switch_times(self):
        """Start times of every segment after the first."""
        return tuple(self.starts[1:])


def constant_piecewise(starts, values, m=1):
    segs = [ConstantSegment(float(t), _vec(v, m)) for t, v in zip(starts, values)]
    return PiecewiseReference(segs, m)


def sinusoid_piecewise(starts, offsets, amplitudes, frequencies, phases=None, m=1):
    if phases is None:
        phases = [0.0] * len(starts)
    segs = [
        SinusoidSegment(float(t), _vec(o, m), _vec(a, m), _vec(f, m), _vec(ph, m))
        for t, o, a, f, ph in zip(starts, offsets, amplitudes, frequencies, phases)
    ]
    return PiecewiseReference(segs, m)


def reference_eval(reference, t):
    if t < 0:
        raise ValueError(f"reference evaluated at negative time {t}")
    return reference(t)


def _vec(v, m):
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 1:
        v = np.full(m, float(v[0]))
    if v.size != m:
        raise ValueError(f"reference entry has {v.size} components, expected {m}")
    return v
