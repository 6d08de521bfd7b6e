"""Locating and classifying zeros of a planar field."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, sparse, spatial
from scipy.sparse import csgraph

from .exprcore import FieldExpr
from .spectral import TOL_ZERO, Region, eigenvalues

TOL_ROOT = 1e-10
MAX_NEWTON = 50
CHAIN_MIN = 8


class LocalClass(str, enum.Enum):
    HYPERBOLIC_SINK = "HyperbolicSink"
    HYPERBOLIC_SOURCE = "HyperbolicSource"
    HYPERBOLIC_SADDLE = "HyperbolicSaddle"
    SIMPLE_CENTER_TYPE = "SimpleCenterType"
    SIMPLE_OTHER = "SimpleOther"
    DEGENERATE = "Degenerate"

    @property
    def hyperbolic(self) -> bool:
        return self.value.startswith("Hyperbolic")

    @property
    def simple(self) -> bool:
        return self is not LocalClass.DEGENERATE


class Trichotomy(str, enum.Enum):
    EMPTY = "Empty"
    ONE_POINT = "OnePoint"
    NON_DISCRETE_SUSPECTED = "NonDiscreteSuspected"
    MULTIPLE_ISOLATED = "MultipleIsolated"


class NotARoot(ValueError):
    pass


@dataclass(frozen=True)
class Singularity:
    location: tuple
    jacobian: tuple
    local_class: LocalClass
    newton_residual: float
    eigenvalues: tuple = ()

    @property
    def trace(self) -> float:
        return self.jacobian[0][0] + self.jacobian[1][1]

    @property
    def det(self) -> float:
        (a, b), (c, d) = self.jacobian
        return a * d - b * c

    @property
    def index(self):
        """Local index from the sign of det; None when degenerate."""
        if not self.local_class.simple:
            return None
        return 1 if self.det > 0 else -1

    def to_dict(self) -> dict:
        return {
            "location": list(self.location),
            "jacobian": [list(r) for r in self.jacobian],
            "local_class": self.local_class.value,
            "newton_residual": self.newton_residual,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "index_from_det": self.index,
        }


def local_class_of(J: np.ndarray, tol_zero: float = TOL_ZERO) -> tuple[LocalClass, tuple]:
    trace = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    ev = eigenvalues(trace, det)
    if all(abs(z.real) > tol_zero for z in ev):
        if det < 0:
            return LocalClass.HYPERBOLIC_SADDLE, ev
        return (LocalClass.HYPERBOLIC_SINK if ev[0].real < 0 else LocalClass.HYPERBOLIC_SOURCE), ev
    if abs(det) <= tol_zero:
        return LocalClass.DEGENERATE, ev
    if det > 0 and abs(trace) <= tol_zero:
        return LocalClass.SIMPLE_CENTER_TYPE, ev
    return LocalClass.SIMPLE_OTHER, ev


def classify_singularity(
    field: FieldExpr, z, tol_zero: float = TOL_ZERO, tol_root: float = TOL_ROOT
) -> Singularity:
    val = field.eval(z)
    res = math.hypot(*val)
    if res > tol_root:
        raise NotARoot(f"|X({z[0]!r}, {z[1]!r})| = {res:.3e} exceeds {tol_root:.1e}")
    J = field.jacobian(z)
    cls, ev = local_class_of(J, tol_zero)
    return Singularity((float(z[0]), float(z[1])), tuple(map(tuple, J.tolist())), cls, res, ev)


# ----------------------------------------------------------------- batch Newton


def newton_batch(field: FieldExpr, seeds: np.ndarray, max_iter: int = MAX_NEWTON):
    """Damped Newton on many seeds at once.

    Where the Jacobian is (numerically) singular or the Newton step does not
    decrease ||X||, a Cauchy step of gradient descent on ||X||^2 is used
    instead.  Iteration continues past convergence so that roots polish to
    machine precision.  Returns ``(points, residual_norms, ok)``.
    """
    P = np.array(seeds, dtype=float).reshape(-1, 2)
    n = len(P)
    alive = np.ones(n, dtype=bool)
    vals, jac, valid = field.jacobian_many(P[:, 0], P[:, 1])
    alive &= valid
    norm = np.linalg.norm(vals, axis=1)
    for _ in range(max_iter):
        idx = np.flatnonzero(alive & (norm > 0))
        if idx.size == 0:
            break
        F = vals[idx]
        J = jac[idx]
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        scale = np.sum(J * J, axis=(1, 2))
        regular = np.abs(det) > 1e-14 * scale
        safe = np.where(regular, det, 1.0)
        newton = np.column_stack(
            [
                -(J[:, 1, 1] * F[:, 0] - J[:, 0, 1] * F[:, 1]) / safe,
                -(-J[:, 1, 0] * F[:, 0] + J[:, 0, 0] * F[:, 1]) / safe,
            ]
        )
        grad = np.einsum("kji,kj->ki", J, F)  # J^T F
        Jg = np.einsum("kij,kj->ki", J, grad)
        denom = np.sum(Jg * Jg, axis=1)
        alpha = np.where(denom > 0, np.sum(grad * grad, axis=1) / np.where(denom > 0, denom, 1.0), 0.0)
        cauchy = -alpha[:, None] * grad
        moved = np.zeros(idx.size, dtype=bool)
        for step_kind in (0, 1):
            todo = ~moved if step_kind else (~moved & regular)
            step = cauchy if step_kind else newton
            t = np.ones(idx.size)
            for _ in range(30):
                k = np.flatnonzero(todo)
                if k.size == 0:
                    break
                trial = P[idx[k]] + t[k, None] * step[k]
                v2, j2, ok2 = field.jacobian_many(trial[:, 0], trial[:, 1])
                n2 = np.linalg.norm(v2, axis=1)
                better = ok2 & (n2 < norm[idx[k]])
                acc = k[better]
                P[idx[acc]] = trial[better]
                vals[idx[acc]] = v2[better]
                jac[idx[acc]] = j2[better]
                norm[idx[acc]] = n2[better]
                moved[acc] = True
                todo[acc] = False
                t[k[~better]] *= 0.5
        alive[idx[~moved]] = False  # stuck: no descent possible
    ok = valid & (norm <= TOL_ROOT) & np.isfinite(norm)
    return P, norm, ok


# ------------------------------------------------------------------ the search


@dataclass
class SingularityReport:
    isolated: list
    nondiscrete_suspected: bool
    nondiscrete_evidence: list
    trichotomy_class: Trichotomy
    seeds: int = 0
    converged: int = 0
    discarded: int = 0
    chain_points: list = field(default_factory=list, repr=False)
    boundary_candidates: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "isolated": [s.to_dict() for s in self.isolated],
            "nondiscrete_suspected": self.nondiscrete_suspected,
            "nondiscrete_evidence": self.nondiscrete_evidence,
            "trichotomy_class": self.trichotomy_class.value,
            "seeds": self.seeds,
            "converged": self.converged,
            "discarded": self.discarded,
            "boundary_candidates": [list(p) for p in self.boundary_candidates],
        }


def trichotomy_of(n_isolated: int, nondiscrete: bool) -> Trichotomy:
    if nondiscrete:
        return Trichotomy.NON_DISCRETE_SUSPECTED
    if n_isolated == 0:
        return Trichotomy.EMPTY
    if n_isolated == 1:
        return Trichotomy.ONE_POINT
    return Trichotomy.MULTIPLE_ISOLATED


def _seeds(field: FieldExpr, region: Region, n: int) -> np.ndarray:
    xs = np.linspace(region.xmin, region.xmax, n + 1)
    ys = np.linspace(region.ymin, region.ymax, n + 1)
    X, Y = np.meshgrid(xs, ys)
    f, g, valid = field.eval_many(X, Y)
    norm = np.hypot(f, g)
    seeds = []

    # cells where both components change sign among the corners
    sf, sg = np.sign(f), np.sign(g)

    def changes(s):
        c = np.stack([s[:-1, :-1], s[1:, :-1], s[:-1, 1:], s[1:, 1:]])
        return (np.nanmax(c, axis=0) >= 0) & (np.nanmin(c, axis=0) <= 0)

    cell_ok = valid[:-1, :-1] & valid[1:, :-1] & valid[:-1, 1:] & valid[1:, 1:]
    both = changes(sf) & changes(sg) & cell_ok
    cy, cx = np.nonzero(both)
    seeds.append(np.column_stack([0.5 * (xs[cx] + xs[cx + 1]), 0.5 * (ys[cy] + ys[cy + 1])]))

    # grid local minima of ||X||: along rows, along columns, or in 3x3 windows
    if np.any(valid):
        threshold = 0.1 * float(np.median(norm[valid]))
        big = np.where(valid, norm, np.inf)
        pad = np.pad(big, 1, constant_values=np.inf)
        c = pad[1:-1, 1:-1]
        row_min = (c <= pad[1:-1, :-2]) & (c <= pad[1:-1, 2:])
        col_min = (c <= pad[:-2, 1:-1]) & (c <= pad[2:, 1:-1])
        win_min = c <= ndimage.minimum_filter(big, size=3, mode="nearest")
        low = valid & (norm < threshold)
        my, mx = np.nonzero(low & (row_min | col_min | win_min))
        seeds.append(np.column_stack([X[my, mx], Y[my, mx]]))
    return np.concatenate(seeds) if seeds else np.zeros((0, 2))


def _dedupe(points: np.ndarray, radius: float) -> np.ndarray:
    order = np.lexsort((points[:, 1], points[:, 0]))
    kept: list = []
    for p in points[order]:
        if not any(np.hypot(*(p - q)) <= radius for q in kept):
            kept.append(p)
    return np.array(kept).reshape(-1, 2)


def _link(points: np.ndarray, radius: float) -> np.ndarray:
    """Connected-component labels of the graph joining points within ``radius``."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    pairs = spatial.cKDTree(points).query_pairs(radius, output_type="ndarray")
    graph = sparse.coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(points), len(points))
    )
    _, labels = csgraph.connected_components(graph, directed=False)
    return labels


def _is_regular(field: FieldExpr, z, region: Region, rel: float = 1e-3) -> bool:
    """The Jacobian must exist and vary continuously on a tiny ring around ``z``.

    Newton can converge onto the edge of an excluded set (e.g. a line where a
    component is undefined); such limit points are not zeros of a C1 field.
    """
    h = 1e-7 * region.diameter
    ang = np.linspace(0.0, 2.0 * math.pi, 8, endpoint=False)
    xs = np.concatenate([[z[0]], z[0] + h * np.cos(ang)])
    ys = np.concatenate([[z[1]], z[1] + h * np.sin(ang)])
    _, jac, valid = field.jacobian_many(xs, ys)
    if not valid.all():
        return False
    spread = np.max(np.abs(jac[1:] - jac[0]))
    return bool(spread <= rel * (1.0 + np.max(np.abs(jac[0]))))


def find_singularities(
    field: FieldExpr,
    region: Region,
    n: int = 200,
    tol_zero: float = TOL_ZERO,
    chain_min: int = CHAIN_MIN,
) -> SingularityReport:
    if n < 8:
        raise ValueError("grid must be at least 8")
    seeds = _seeds(field, region, n)
    P, norm, ok = newton_batch(field, seeds) if len(seeds) else (seeds, np.zeros(0), np.zeros(0, bool))
    margin = 1e-9 * region.diameter
    inside = np.array([region.contains(p, margin) for p in P], dtype=bool) if len(P) else np.zeros(0, bool)
    good = ok & inside
    roots = _dedupe(P[good], 1e-6 * region.diameter) if good.any() else np.zeros((0, 2))

    # roots closer than a couple of lattice cells are linked; long linked chains
    # indicate a curve of zeros rather than isolated points
    dx = (region.xmax - region.xmin) / n
    dy = (region.ymax - region.ymin) / n
    regular = np.array([_is_regular(field, p, region) for p in roots], dtype=bool)
    boundary = roots[~regular] if len(roots) else roots
    roots = roots[regular] if len(roots) else roots
    labels = _link(roots, 2.0 * math.hypot(dx, dy))
    counts = np.bincount(labels) if len(labels) else np.zeros(0, int)
    in_chain = counts[labels] >= chain_min if len(labels) else np.zeros(0, bool)

    evidence = []
    for lab in np.flatnonzero(counts >= chain_min):
        pts = roots[labels == lab]
        ii = np.clip(((pts[:, 0] - region.xmin) / dx).astype(int), 0, n - 1)
        jj = np.clip(((pts[:, 1] - region.ymin) / dy).astype(int), 0, n - 1)
        cells = sorted({(int(i), int(j)) for i, j in zip(ii, jj)})
        evidence.append(
            {
                "roots": int(len(pts)),
                "cells": [list(c) for c in cells],
                "bbox": [float(pts[:, 0].min()), float(pts[:, 0].max()), float(pts[:, 1].min()), float(pts[:, 1].max())],
            }
        )
    chain_labels = bool(evidence)

    isolated = []
    for p in roots[~in_chain] if len(roots) else []:
        isolated.append(classify_singularity(field, p, tol_zero))
    isolated.sort(key=lambda s: (round(s.location[0], 9), round(s.location[1], 9)))
    nondiscrete = chain_labels
    return SingularityReport(
        isolated=isolated,
        nondiscrete_suspected=nondiscrete,
        nondiscrete_evidence=evidence,
        trichotomy_class=trichotomy_of(len(isolated), nondiscrete),
        seeds=int(len(seeds)),
        converged=int(good.sum()),
        discarded=int(len(seeds) - good.sum()),
        chain_points=[tuple(p) for p in roots[in_chain]] if len(roots) else [],
        boundary_candidates=[tuple(map(float, p)) for p in boundary],
    )
