"""Time-sampled control records with cubic interpolation."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.interpolate import CubicSpline


class ScheduleError(ValueError):
    pass


@dataclass
class ControlSchedule:
    """Synthesized controls on a time grid.

    ``times``/``values`` are the synthesized samples, columns ordered as
    ``names``.  Between samples (and across the short gaps next to 0 and t_f
    that singular protocols leave unsampled) controls come from a not-a-knot
    cubic spline, extrapolated where needed.

    ``boundary`` holds the reference-Liouvillian records at ``0`` and ``t_f``;
    :meth:`record_at` returns them exactly at those two instants.  The
    propagator uses the continuous interpolant (:meth:`vector_at`) so a 0/0
    endpoint limit that differs from the boundary record cannot inject a jump
    into an integration stage.

    An optional ``tail = (t_switch, record)`` replaces the interpolant with a
    constant record for ``t >= t_switch`` (hand-over to reference controls).
    """

    names: tuple[str, ...]
    times: np.ndarray
    values: np.ndarray
    t_f: float
    boundary: dict = field(default_factory=dict)
    clamped: np.ndarray | None = None
    unphysical: np.ndarray | None = None
    tail: tuple[float, Mapping[str, float]] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.names = tuple(self.names)
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2 or self.values.shape != (len(self.times), len(self.names)):
            raise ScheduleError(f"values shape {self.values.shape} does not match "
                                f"{len(self.times)} times x {len(self.names)} controls")
        if len(self.times) < 4:
            raise ScheduleError("need at least 4 samples for cubic interpolation")
        if np.any(np.diff(self.times) <= 0):
            raise ScheduleError("sample times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            bad = self.times[~np.all(np.isfinite(self.values), axis=1)]
            raise ScheduleError(f"non-finite control values at t={bad[:3]}")
        if self.clamped is None:
            self.clamped = np.zeros(self.values.shape, dtype=bool)
        if self.unphysical is None:
            self.unphysical = np.zeros(self.values.shape, dtype=bool)
        self._spline = CubicSpline(self.times, self.values, axis=0, extrapolate=True)
        self._index = {n: k for k, n in enumerate(self.names)}
        if self.tail is not None:
            t_sw, rec = self.tail
            self._tail_vec = np.array([float(rec[n]) for n in self.names])

    # interpolation -------------------------------------------------------
    def covers(self, t0: float, t1: float) -> bool:
        return t0 >= -1e-12 * self.t_f and t1 <= self.t_f * (1 + 1e-12)

    def vector_at(self, t: float, names: Sequence[str] | None = None) -> np.ndarray:
        if self.tail is not None and t >= self.tail[0]:
            v = self._tail_vec
        else:
            v = self._spline(t)
        if names is None or tuple(names) == self.names:
            return v
        out = np.zeros(len(names))
        for j, n in enumerate(names):
            k = self._index.get(n)
            if k is None:
                raise ScheduleError(f"schedule has no control {n!r}")
            out[j] = v[k]
        return out

    def __call__(self, t: float) -> dict:
        return dict(zip(self.names, self.vector_at(t)))

    def record_at(self, t: float) -> dict:
        """Control record at ``t``; exact boundary records at ``0`` and ``t_f``."""
        if t == 0.0 and 0.0 in self.boundary:
            return dict(self.boundary[0.0])
        if t == self.t_f and "t_f" in self.boundary:
            return dict(self.boundary["t_f"])
        return self(t)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self._index[name]]

    def evaluate(self, ts) -> np.ndarray:
        """Interpolated controls at many times, shape ``(len(ts), n_controls)``."""
        return np.array([self.vector_at(float(t)) for t in np.atleast_1d(ts)])

    # diagnostics ---------------------------------------------------------
    @property
    def clamp_fraction(self) -> float:
        return float(np.mean(np.any(self.clamped, axis=1)))

    def boundary_defect(self, reference: Mapping[float | str, Mapping[str, float]]) -> float:
        """Max abs difference between boundary records and ``reference`` (same keys)."""
        worst = 0.0
        for key, ref in reference.items():
            rec = self.boundary.get(key)
            if rec is None:
                raise ScheduleError(f"no boundary record at {key!r}")
            for n, v in ref.items():
                worst = max(worst, abs(float(rec[n]) - float(v)))
        return worst
