"""Closed-form pulse and trajectory profiles with exact time derivatives.

Every shape is a small immutable object exposing ``value(t)`` and
``deriv(t)``; both accept scalars or arrays.  ``make_shape`` builds one from a
name and keyword parameters, which is how scenario configs refer to them.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class Shape:
    def value(self, t):
        raise NotImplementedError

    def deriv(self, t):
        raise NotImplementedError

    def __call__(self, t):
        return self.value(t)

    @property
    def identically_zero(self) -> bool:
        return False


@dataclass(frozen=True)
class Linear(Shape):
    """``amplitude * t / duration``; the simplest STIRAP mixing angle."""

    duration: float
    amplitude: float = np.pi / 2

    def value(self, t):
        return self.amplitude * np.asarray(t, dtype=float) / self.duration

    def deriv(self, t):
        return np.full_like(np.asarray(t, dtype=float), self.amplitude / self.duration)

    @property
    def identically_zero(self):
        return self.amplitude == 0


@dataclass(frozen=True)
class SineSquared(Shape):
    """``amplitude * sin(pi t / period)**2``.

    ``period = 2 tau`` gives a monotone 0 -> amplitude ramp over [0, tau],
    ``period = tau`` a bump that returns to zero at tau.
    """

    amplitude: float
    period: float

    def value(self, t):
        return self.amplitude * np.sin(np.pi * np.asarray(t, dtype=float) / self.period) ** 2

    def deriv(self, t):
        w = np.pi / self.period
        return self.amplitude * w * np.sin(2 * w * np.asarray(t, dtype=float))

    @property
    def identically_zero(self):
        return self.amplitude == 0


@dataclass(frozen=True)
class SineCubed(Shape):
    """``amplitude * sin(pi t / duration)**3``: zero value and slope at both ends."""

    amplitude: float
    duration: float

    def value(self, t):
        return self.amplitude * np.sin(np.pi * np.asarray(t, dtype=float) / self.duration) ** 3

    def deriv(self, t):
        w = np.pi / self.duration
        x = w * np.asarray(t, dtype=float)
        return 3 * self.amplitude * w * np.sin(x) ** 2 * np.cos(x)

    @property
    def identically_zero(self):
        return self.amplitude == 0


def smoothstep(t, duration):
    """``6 s^2 (1/2 - s/3)`` with ``s = t / duration``; 0 -> 1 with flat ends."""
    s = np.asarray(t, dtype=float) / duration
    return 6 * s * s * (0.5 - s / 3)


def smoothstep_deriv(t, duration):
    s = np.asarray(t, dtype=float) / duration
    return 6 * s * (1 - s) / duration


@dataclass(frozen=True)
class CubicRamp(Shape):
    """``start + (end - start) * smoothstep(t, duration)``."""

    start: float
    end: float
    duration: float

    def value(self, t):
        return self.start + (self.end - self.start) * smoothstep(t, self.duration)

    def deriv(self, t):
        return (self.end - self.start) * smoothstep_deriv(t, self.duration)

    @property
    def identically_zero(self):
        return self.start == 0 and self.end == 0


def make_shape(kind: str, **params) -> Shape:
    """Factory used by configs: ``linear``, ``sine2``, ``sine3``, ``ramp``."""
    table = {"linear": Linear, "sine2": SineSquared, "sine3": SineCubed, "ramp": CubicRamp}
    try:
        cls = table[kind]
    except KeyError:
        raise ShapeError(f"unknown shape {kind!r}; known: {sorted(table)}") from None
    try:
        return cls(**params)
    except TypeError as exc:
        raise ShapeError(f"bad parameters for shape {kind!r}: {exc}") from None


def mixing_angle(kind: str, tau: float) -> Shape:
    """STIRAP mixing angle running from 0 to pi/2 over ``[0, tau]``."""
    if kind == "linear":
        return Linear(tau)
    if kind == "sine2":
        return SineSquared(np.pi / 2, 2 * tau)
    raise ShapeError(f"unknown mixing-angle shape {kind!r}")
