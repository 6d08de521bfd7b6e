"""Two-direction forward-mode dual numbers.

A :class:`Dual2` carries a value together with its partial derivatives with
respect to ``x`` and ``y``.  Components may be Python floats or numpy arrays;
the arithmetic broadcasts, so the same code differentiates a single point or a
whole grid of points.
"""

from __future__ import annotations

import numpy as np


class Dual2:
    __slots__ = ("value", "dx", "dy")

    def __init__(self, value, dx=0.0, dy=0.0):
        self.value = value
        self.dx = dx
        self.dy = dy

    @staticmethod
    def lift(other) -> "Dual2":
        if isinstance(other, Dual2):
            return other
        return Dual2(other, 0.0, 0.0)

    def __repr__(self) -> str:
        return f"Dual2({self.value!r}, dx={self.dx!r}, dy={self.dy!r})"

    def __neg__(self) -> "Dual2":
        return Dual2(-self.value, -self.dx, -self.dy)

    def __add__(self, other) -> "Dual2":
        o = Dual2.lift(other)
        return Dual2(self.value + o.value, self.dx + o.dx, self.dy + o.dy)

    __radd__ = __add__

    def __sub__(self, other) -> "Dual2":
        o = Dual2.lift(other)
        return Dual2(self.value - o.value, self.dx - o.dx, self.dy - o.dy)

    def __rsub__(self, other) -> "Dual2":
        return Dual2.lift(other) - self

    def __mul__(self, other) -> "Dual2":
        o = Dual2.lift(other)
        return Dual2(
            self.value * o.value,
            self.dx * o.value + self.value * o.dx,
            self.dy * o.value + self.value * o.dy,
        )

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Dual2":
        o = Dual2.lift(other)
        q = self.value / o.value
        return Dual2(q, (self.dx - q * o.dx) / o.value, (self.dy - q * o.dy) / o.value)

    def __rtruediv__(self, other) -> "Dual2":
        return Dual2.lift(other) / self

    def ipow(self, n: int) -> "Dual2":
        """Integer power by repeated multiplication (negative ``n`` inverts)."""
        if n == 0:
            return Dual2(1.0 + 0.0 * self.value, 0.0 * self.dx, 0.0 * self.dy)
        acc = self
        for _ in range(abs(n) - 1):
            acc = acc * self
        if n < 0:
            return 1.0 / acc
        return acc

    def chain(self, value, slope) -> "Dual2":
        """Apply a scalar function with known value and derivative at self."""
        return Dual2(value, slope * self.dx, slope * self.dy)


def exp(u: Dual2) -> Dual2:
    v = np.exp(u.value)
    return u.chain(v, v)


def sin(u: Dual2) -> Dual2:
    return u.chain(np.sin(u.value), np.cos(u.value))


def cos(u: Dual2) -> Dual2:
    return u.chain(np.cos(u.value), -np.sin(u.value))


def sqrt(u: Dual2) -> Dual2:
    v = np.sqrt(u.value)
    return u.chain(v, 0.5 / v)


def atan(u: Dual2) -> Dual2:
    return u.chain(np.arctan(u.value), 1.0 / (1.0 + u.value * u.value))


def atan2(u: Dual2, v: Dual2) -> Dual2:
    r2 = u.value * u.value + v.value * v.value
    return Dual2(
        np.arctan2(u.value, v.value),
        (v.value * u.dx - u.value * v.dx) / r2,
        (v.value * u.dy - u.value * v.dy) / r2,
    )


def log(u: Dual2) -> Dual2:
    return u.chain(np.log(u.value), 1.0 / u.value)


def rpow(u: Dual2, b: float) -> Dual2:
    """``u ** b`` for a constant real exponent."""
    v = u.value ** b
    return u.chain(v, b * u.value ** (b - 1.0))


def variables(x, y) -> tuple[Dual2, Dual2]:
    """Seed dual numbers for the coordinate functions."""
    return Dual2(x, 1.0, 0.0), Dual2(y, 0.0, 1.0)
