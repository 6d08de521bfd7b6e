"""Poincare index along circles and constant perturbations of a field."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exprcore import BinOp, DomainError, FieldExpr, const
from .spectral import TOL_ZERO

MAX_SAMPLES = 2**20


class IndexComputationError(ArithmeticError):
    """Base for index computation failures."""


class ZeroOnCircle(IndexComputationError):
    pass


class NonConvergent(IndexComputationError):
    pass


@dataclass(frozen=True)
class CircleSpec:
    center: tuple
    radius: float
    samples: int = 64

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.samples < 16:
            raise ValueError("need at least 16 samples")


@dataclass(frozen=True)
class IndexResult:
    index: int
    min_norm_on_circle: float
    total_angle: float
    samples: int

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "min_norm_on_circle": self.min_norm_on_circle,
            "total_angle": self.total_angle,
            "samples": self.samples,
        }


def poincare_index(
    field: FieldExpr, circle: CircleSpec, tol_zero: float = TOL_ZERO, max_samples: int = MAX_SAMPLES
) -> IndexResult:
    """Winding number of X along a counterclockwise circle.

    Samples are doubled until every consecutive change of direction is below
    pi/2, so the discrete angle sum equals the continuous one.
    """
    cx, cy = circle.center
    n = circle.samples
    while True:
        t = 2.0 * math.pi * np.arange(n) / n
        xs = cx + circle.radius * np.cos(t)
        ys = cy + circle.radius * np.sin(t)
        f, g, valid = field.eval_many(xs, ys)
        if not valid.all():
            k = int(np.flatnonzero(~valid)[0])
            field.eval((xs[k], ys[k]))  # raises with the offending subexpression
            raise DomainError((xs[k], ys[k]), "field", "non-finite value")
        norms = np.hypot(f, g)
        min_norm = float(norms.min())
        if min_norm <= tol_zero:
            k = int(np.argmin(norms))
            raise ZeroOnCircle(f"|X| = {min_norm:.3e} at ({float(xs[k])!r}, {float(ys[k])!r}) on the circle")
        ang = np.arctan2(g, f)
        d = np.diff(np.append(ang, ang[0]))
        d = (d + math.pi) % (2.0 * math.pi) - math.pi
        if np.max(np.abs(d)) < math.pi / 2:
            total = float(np.sum(d))
            index = int(round(total / (2.0 * math.pi)))
            return IndexResult(index, min_norm, total, n)
        if n >= max_samples:
            raise NonConvergent(f"angle steps stay >= pi/2 with {n} samples")
        n *= 2


def perturb_constant(field: FieldExpr, omega) -> FieldExpr:
    """The field ``p -> X(p) - omega``; its Jacobian is that of X everywhere."""
    w0, w1 = float(omega[0]), float(omega[1])
    return FieldExpr.from_exprs(BinOp("-", field.fx, const(w0)), BinOp("-", field.fy, const(w1)))


def local_index(field: FieldExpr, z, radius: float, tol_zero: float = TOL_ZERO) -> IndexResult:
    return poincare_index(field, CircleSpec((float(z[0]), float(z[1])), radius, 64), tol_zero)
