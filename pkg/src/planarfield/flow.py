"""Trajectories, omega-limits, flow rectangles and the Green identity.

Integration uses an embedded Runge-Kutta 5(4) pair with per-step error
control (scipy's ``RK45`` stepper) driven step by step, so that termination
can be decided after every accepted step:

* convergence to a zero of X (Newton-confirmed, then a distance test),
* escape beyond ``r_esc`` (or out of an optional bounding region),
* return to a Poincare section through the start point,
* exhaustion of the step/time budget, or a domain error.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import optimize
from scipy.integrate import RK45, solve_ivp

from .exprcore import DomainError, FieldExpr, Neg
from .singular import newton_batch
from .spectral import TAU_AE, TOL_ZERO, Region


# ----------------------------------------------------------------- derived fields


def orthogonal_field(field: FieldExpr) -> FieldExpr:
    """``X* = (-g, f)`` for ``X = (f, g)``."""
    fy = field.fy
    neg = fy.operand if isinstance(fy, Neg) else Neg(fy)
    return FieldExpr.from_exprs(neg, field.fx)


def rotate_field(field: FieldExpr) -> FieldExpr:
    """``R X`` with ``R(x, y) = (-y, x)``; the same field as :func:`orthogonal_field`."""
    return orthogonal_field(field)


def negate_field(field: FieldExpr) -> FieldExpr:
    return FieldExpr.from_exprs(Neg(field.fx), Neg(field.fy))


# ------------------------------------------------------------------- trajectories


class TerminalKind(str, enum.Enum):
    CONVERGED = "ConvergedToPoint"
    ESCAPED = "Escaped"
    PERIODIC = "PeriodicReturn"
    BUDGET = "BudgetExhausted"
    DOMAIN_ERROR = "DomainError"


@dataclass(frozen=True)
class Terminal:
    kind: TerminalKind
    point: tuple = None
    radius: float = None
    period: float = None
    note: str = ""

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        for k in ("point", "radius", "period"):
            v = getattr(self, k)
            if v is not None:
                d[k] = list(v) if k == "point" else v
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class FlowParams:
    rtol: float = 1e-8
    atol: float = 1e-10
    r_esc: float = 1e3
    conv_radius: float = 1e-6
    return_radius: float = 1e-4
    budget: int = 10**6
    conv_trigger: float = 1e-2
    stop_on_return: bool = True
    stop_on_convergence: bool = True
    bounds: Region = None
    max_step: float = math.inf
    known_roots: tuple = ()


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray
    direction: int
    terminal: Terminal
    steps: int

    @property
    def states(self):
        return list(zip(self.times.tolist(), map(tuple, self.points.tolist())))

    @property
    def end(self) -> tuple:
        return tuple(self.points[-1])


def _rhs(field: FieldExpr):
    def fun(t, z):
        return np.array(field.eval(z))

    return fun


def integrate(
    field: FieldExpr, p0, t_max: float = 1e12, params: FlowParams = None, direction: int = 1
) -> Trajectory:
    """Integrate ``p' = X(p)`` from ``p0`` forward (``direction=1``) or backward."""
    params = params or FlowParams()
    p0 = np.array(p0, dtype=float)
    times = [0.0]
    pts = [p0.copy()]
    roots = [np.array(q, dtype=float) for q in params.known_roots]

    def done(term, steps):
        return Trajectory(np.array(times), np.array(pts), direction, term, steps)

    try:
        x0 = np.array(field.eval(p0))
    except DomainError as e:
        return done(Terminal(TerminalKind.DOMAIN_ERROR, e.point, note=str(e)), 0)
    nx0 = float(np.linalg.norm(x0))
    normal = direction * x0 / nx0 if nx0 > TOL_ZERO else None

    def section(p):
        return float(np.dot(p - p0, normal))

    solver = RK45(
        _rhs(field),
        0.0,
        p0,
        direction * t_max,
        rtol=params.rtol,
        atol=params.atol,
        max_step=params.max_step,
    )
    last_newton = math.inf
    steps = 0
    s_prev = 0.0
    while True:
        if steps >= params.budget:
            return done(Terminal(TerminalKind.BUDGET, tuple(pts[-1]), note="step budget"), steps)
        try:
            msg = solver.step()
        except DomainError as e:
            return done(Terminal(TerminalKind.DOMAIN_ERROR, e.point, note=str(e)), steps)
        if solver.status == "failed":
            return done(Terminal(TerminalKind.BUDGET, tuple(pts[-1]), note=f"integrator: {msg}"), steps)
        steps += 1
        p = solver.y.copy()

        if params.stop_on_return and normal is not None:
            s_now = section(p)
            if s_prev < 0.0 <= s_now:
                dense = solver.dense_output()
                tc = optimize.brentq(lambda t: section(dense(t)), solver.t_old, solver.t, xtol=1e-14, rtol=1e-14)
                pc = dense(tc)
                if np.linalg.norm(pc - p0) <= params.return_radius:
                    times.append(tc)
                    pts.append(pc)
                    return done(Terminal(TerminalKind.PERIODIC, tuple(pc), period=abs(tc)), steps)
            s_prev = s_now

        times.append(solver.t)
        pts.append(p)

        r = float(np.hypot(p[0], p[1]))
        if r >= params.r_esc:
            return done(Terminal(TerminalKind.ESCAPED, tuple(p), radius=r), steps)
        if params.bounds is not None and not params.bounds.contains(p):
            return done(Terminal(TerminalKind.ESCAPED, tuple(p), radius=r, note="left region"), steps)

        if params.stop_on_convergence:
            for q in roots:
                if np.linalg.norm(p - q) <= params.conv_radius:
                    return done(Terminal(TerminalKind.CONVERGED, tuple(q)), steps)
            nx = float(np.linalg.norm(solver.f))
            if nx <= params.conv_trigger and nx <= 0.1 * last_newton:
                last_newton = nx
                P, _, ok = newton_batch(field, p[None, :])
                if ok[0] and not any(np.linalg.norm(P[0] - q) <= 1e-12 for q in roots):
                    roots.append(P[0])
                    if np.linalg.norm(p - P[0]) <= params.conv_radius:
                        return done(Terminal(TerminalKind.CONVERGED, tuple(P[0])), steps)

        if solver.status == "finished":
            return done(Terminal(TerminalKind.BUDGET, tuple(p), note="time limit"), steps)


class OmegaKind(str, enum.Enum):
    POINT = "point"
    EMPTY = "empty (numerical)"
    PERIODIC = "periodic orbit"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class OmegaLimit:
    kind: OmegaKind
    point: tuple = None
    trajectory: Trajectory = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        d = {"omega": self.kind.value}
        if self.point is not None:
            d["point"] = list(self.point)
        if self.trajectory is not None:
            d["terminal"] = self.trajectory.terminal.to_dict()
        return d


def classify_omega_limit(field: FieldExpr, p0, params: FlowParams = None, t_max: float = 1e12) -> OmegaLimit:
    traj = integrate(field, p0, t_max, params)
    kind = traj.terminal.kind
    if kind is TerminalKind.CONVERGED:
        return OmegaLimit(OmegaKind.POINT, traj.terminal.point, traj)
    if kind is TerminalKind.ESCAPED and traj.terminal.note != "left region":
        return OmegaLimit(OmegaKind.EMPTY, None, traj)
    if kind is TerminalKind.PERIODIC:
        return OmegaLimit(OmegaKind.PERIODIC, None, traj)
    return OmegaLimit(OmegaKind.UNDETERMINED, None, traj)


# ------------------------------------------------------------- flow rectangles

_TIGHT = dict(method="DOP853", rtol=1e-12, atol=1e-14)


def flow_map(field: FieldExpr, p, t: float) -> np.ndarray:
    if t == 0:
        return np.array(p, dtype=float)
    sol = solve_ivp(_rhs(field), (0.0, t), np.array(p, dtype=float), **_TIGHT)
    if not sol.success:
        raise FailedToClose(f"integration failed: {sol.message}")
    return sol.y[:, -1]


def flow_samples(field: FieldExpr, p, t: float, count: int) -> np.ndarray:
    """``count`` points of the trajectory from ``p`` at uniform times in [0, t]."""
    ts = np.linspace(0.0, t, count)
    sol = solve_ivp(_rhs(field), (0.0, t), np.array(p, dtype=float), t_eval=ts, **_TIGHT)
    if not sol.success:
        raise FailedToClose(f"integration failed: {sol.message}")
    return sol.y.T


class RectangleError(ArithmeticError):
    pass


class FailedToClose(RectangleError):
    pass


class ZeroNorm(RectangleError):
    pass


class DegenerateRectangle(RectangleError):
    pass


@dataclass
class Arc:
    """A trajectory arc sampled at ``2m+1`` uniform times over [0, duration]."""

    start: tuple
    duration: float
    points: np.ndarray
    orthogonal: bool


@dataclass
class FlowRectangle:
    p1: tuple
    p2: tuple
    q1: tuple
    q2: tuple
    flow_time: float
    transversal_time: float
    exit_time: float
    top_time: float
    bottom: Arc  # [p1, p2] along X
    top: Arc  # [q1, q2] along X
    entry: Arc  # [p1, q1]* along X*
    exit: Arc  # [p2, q2]* along X*
    corner_residual: float
    min_norm: float

    @property
    def diameter(self) -> float:
        loop = self.boundary_loop()
        return float(np.max(np.ptp(loop, axis=0)))

    def boundary_loop(self) -> np.ndarray:
        """Closed counter-clockwise-or-not loop p1 -> p2 -> q2 -> q1 -> p1 (endpoints not repeated)."""
        b, e, t, n = self.bottom.points, self.exit.points, self.top.points, self.entry.points
        return np.concatenate([b[:-1], e[:-1], t[::-1][:-1], n[::-1][:-1]])

    def to_dict(self) -> dict:
        return {
            "p1": list(self.p1),
            "p2": list(self.p2),
            "q1": list(self.q1),
            "q2": list(self.q2),
            "flow_time": self.flow_time,
            "transversal_time": self.transversal_time,
            "exit_time": self.exit_time,
            "top_time": self.top_time,
            "samples_per_arc": int(len(self.bottom.points)),
            "corner_residual": self.corner_residual,
            "min_norm": self.min_norm,
        }


def _first_crossing(a: np.ndarray, b: np.ndarray):
    """First segment of polyline ``a`` crossing polyline ``b``: (i, u, j, v) or None."""
    p = a[:-1][:, None, :]
    r = (a[1:] - a[:-1])[:, None, :]
    q = b[:-1][None, :, :]
    s = (b[1:] - b[:-1])[None, :, :]
    rxs = r[..., 0] * s[..., 1] - r[..., 1] * s[..., 0]
    qp = q - p
    with np.errstate(all="ignore"):
        u = (qp[..., 0] * s[..., 1] - qp[..., 1] * s[..., 0]) / rxs
        v = (qp[..., 0] * r[..., 1] - qp[..., 1] * r[..., 0]) / rxs
    hit = (rxs != 0) & (u >= 0) & (u <= 1) & (v >= 0) & (v <= 1)
    hit[0, :] &= u[0, :] > 1e-9  # ignore touching at the start of ``a``
    ii, jj = np.nonzero(hit)
    if ii.size == 0:
        return None
    k = np.lexsort((u[ii, jj], ii))[0]
    return int(ii[k]), float(u[ii[k], jj[k]]), int(jj[k]), float(v[ii[k], jj[k]])


def _inside(poly: np.ndarray, pt) -> bool:
    x, y = pt
    xs, ys = poly[:, 0], poly[:, 1]
    xn, yn = np.roll(xs, -1), np.roll(ys, -1)
    cond = (ys > y) != (yn > y)
    with np.errstate(all="ignore"):
        xc = xs + (y - ys) * (xn - xs) / (yn - ys)
    return bool(np.count_nonzero(cond & (x < xc)) % 2)


def _sample_arcs(field, xstar, p1, q1, p2, flow_time, transversal_time, exit_time, top_time, m):
    count = 2 * m + 1
    return (
        Arc(tuple(p1), flow_time, flow_samples(field, p1, flow_time, count), False),
        Arc(tuple(q1), top_time, flow_samples(field, q1, top_time, count), False),
        Arc(tuple(p1), transversal_time, flow_samples(xstar, p1, transversal_time, count), True),
        Arc(tuple(p2), exit_time, flow_samples(xstar, p2, exit_time, count), True),
    )


def build_rectangle(
    field: FieldExpr,
    p1,
    flow_time: float,
    transversal_time: float,
    m: int = 256,
    min_norm: float = 1e-8,
) -> FlowRectangle:
    """Compact rectangle bounded by two X-arcs and two X*-arcs.

    ``q1`` is the X*-image of ``p1`` after ``transversal_time`` (may be
    negative), ``p2`` the X-image after ``flow_time``.  The exit arc starts at
    ``p2`` along X* and ends where it meets the X-trajectory of ``q1``.
    """
    if flow_time <= 0:
        raise DegenerateRectangle("flow_time must be positive")
    if transversal_time == 0:
        raise DegenerateRectangle("transversal_time must be non-zero")
    xstar = orthogonal_field(field)
    p1 = np.array(p1, dtype=float)
    q1 = flow_map(xstar, p1, transversal_time)
    p2 = flow_map(field, p1, flow_time)

    guide = 400
    star = flow_samples(xstar, p2, 3.0 * transversal_time, guide)
    top_span = (-flow_time, 3.0 * flow_time)
    top_ts = np.linspace(*top_span, guide)
    sol = solve_ivp(_rhs(field), (0.0, top_span[1]), q1, t_eval=top_ts[top_ts >= 0], **_TIGHT)
    back = solve_ivp(_rhs(field), (0.0, top_span[0]), q1, t_eval=top_ts[top_ts < 0][::-1], **_TIGHT)
    top_poly = np.concatenate([back.y.T[::-1], sol.y.T])
    hit = _first_crossing(star, top_poly)
    if hit is None:
        raise FailedToClose("exit arc does not meet the X-trajectory through q1")
    i, u, j, v = hit
    star_ts = np.linspace(0.0, 3.0 * transversal_time, guide)
    s0 = star_ts[i] + u * (star_ts[i + 1] - star_ts[i])
    tau0 = top_ts[j] + v * (top_ts[j + 1] - top_ts[j])

    def gap(z):
        return flow_map(xstar, p2, z[0]) - flow_map(field, q1, z[1])

    res = optimize.root(gap, [s0, tau0], method="hybr", options={"xtol": 1e-14})
    exit_time, top_time = (float(res.x[0]), float(res.x[1]))
    if top_time <= 0 or exit_time * transversal_time <= 0:
        raise FailedToClose("crossing lies behind the starting corners")

    bottom, top, entry, exit_arc = _sample_arcs(
        field, xstar, p1, q1, p2, flow_time, transversal_time, exit_time, top_time, m
    )
    q2 = top.points[-1]
    residual = float(np.linalg.norm(exit_arc.points[-1] - q2))
    loop = np.concatenate([bottom.points[:-1], exit_arc.points[:-1], top.points[::-1][:-1], entry.points[::-1][:-1]])
    diam = float(np.max(np.ptp(loop, axis=0)))
    if residual > 1e-8 * diam:
        raise FailedToClose(f"corner residual {residual:.3e} exceeds {1e-8 * diam:.3e}")

    f, g, valid = field.eval_many(loop[:, 0], loop[:, 1])
    if not valid.all():
        raise ZeroNorm("field undefined on the rectangle boundary")
    norms = np.hypot(f, g)
    if norms.min() < min_norm:
        raise ZeroNorm(f"|X| = {norms.min():.3e} on the boundary")

    # inflow through [p1,q1]*, outflow through [p2,q2]*
    delta = 1e-3 * diam
    for arc, sgn, what in ((entry, 1.0, "enter"), (exit_arc, -1.0, "leave")):
        mid = arc.points[len(arc.points) // 2]
        xm = np.array(field.eval(mid))
        probe = mid + sgn * delta * xm / np.linalg.norm(xm)
        if not _inside(loop, probe):
            raise DegenerateRectangle(f"flow does not {what} the rectangle through the expected side")

    return FlowRectangle(
        p1=tuple(p1),
        p2=tuple(p2),
        q1=tuple(q1),
        q2=tuple(q2),
        flow_time=flow_time,
        transversal_time=transversal_time,
        exit_time=exit_time,
        top_time=top_time,
        bottom=bottom,
        top=top,
        entry=entry,
        exit=exit_arc,
        corner_residual=residual,
        min_norm=float(norms.min()),
    )


def resample(field: FieldExpr, rect: FlowRectangle, m: int) -> FlowRectangle:
    """Same rectangle, arcs sampled with ``2m+1`` points each."""
    xstar = orthogonal_field(field)
    bottom, top, entry, exit_arc = _sample_arcs(
        field, xstar, rect.p1, rect.q1, rect.p2, rect.flow_time, rect.transversal_time, rect.exit_time,
        rect.top_time, m,
    )
    return replace(rect, bottom=bottom, top=top, entry=entry, exit=exit_arc)


# ------------------------------------------------------------------- quadrature

# Dunavant degree-5 rule on the reference triangle (barycentric, weight)
_D7 = np.array(
    [
        [1 / 3, 1 / 3, 1 / 3, 0.225],
        [0.059715871789770, 0.470142064105115, 0.470142064105115, 0.132394152788506],
        [0.470142064105115, 0.059715871789770, 0.470142064105115, 0.132394152788506],
        [0.470142064105115, 0.470142064105115, 0.059715871789770, 0.132394152788506],
        [0.797426985353087, 0.101286507323456, 0.101286507323456, 0.125939180544827],
        [0.101286507323456, 0.797426985353087, 0.101286507323456, 0.125939180544827],
        [0.101286507323456, 0.101286507323456, 0.797426985353087, 0.125939180544827],
    ]
)


def _tri_rule(fn, A, B, C) -> float:
    """Sum of signed integrals of ``fn`` over triangles (A[k], B[k], C[k])."""
    area = 0.5 * ((B[:, 0] - A[:, 0]) * (C[:, 1] - A[:, 1]) - (B[:, 1] - A[:, 1]) * (C[:, 0] - A[:, 0]))
    pts = _D7[:, 0, None, None] * A + _D7[:, 1, None, None] * B + _D7[:, 2, None, None] * C
    vals = fn(pts[..., 0], pts[..., 1])
    return float(np.sum(area * np.tensordot(_D7[:, 3], vals, axes=1)))


def _subdivide(A, B, C):
    ab, bc, ca = 0.5 * (A + B), 0.5 * (B + C), 0.5 * (C + A)
    return (
        np.concatenate([A, ab, ca, ab]),
        np.concatenate([ab, B, bc, bc]),
        np.concatenate([ca, bc, C, ca]),
    )


def region_integral(fn, loop: np.ndarray, mids: np.ndarray, tol: float = 1e-13, max_level: int = 5) -> float:
    """Integral of ``fn`` over the region bounded by a closed curve.

    The curve is given by vertices ``loop`` (closed implicitly) and the
    curve points ``mids`` halfway (in parameter) along each edge.  The polygon
    part is a signed fan of triangles from the vertex centroid, refined until
    successive levels agree; each curved edge adds its parabolic segment
    (4/3 of the triangle spanned with its midpoint) weighted by ``fn`` at the
    segment centroid.  The result is made orientation-independent.
    """
    V0 = loop
    V1 = np.roll(loop, -1, axis=0)
    c = np.broadcast_to(loop.mean(axis=0), V0.shape)
    A, B, C = c.copy(), V0.copy(), V1.copy()
    prev = _tri_rule(fn, A, B, C)
    for _ in range(max_level):
        A, B, C = _subdivide(A, B, C)
        cur = _tri_rule(fn, A, B, C)
        if abs(cur - prev) <= tol * (1.0 + abs(cur)):
            prev = cur
            break
        prev = cur
    poly_int = prev

    seg_area = (2.0 / 3.0) * (
        (mids[:, 0] - V0[:, 0]) * (V1[:, 1] - V0[:, 1]) - (mids[:, 1] - V0[:, 1]) * (V1[:, 0] - V0[:, 0])
    )
    # positive when the bulge lies right of V0->V1, i.e. outward for a counter-clockwise loop
    cen = (V0 + V1 + mids) / 3.0
    curve_int = float(np.sum(seg_area * fn(cen[:, 0], cen[:, 1])))

    signed_area = 0.5 * float(np.sum(V0[:, 0] * V1[:, 1] - V1[:, 0] * V0[:, 1])) + float(np.sum(seg_area))
    total = poly_int + curve_int
    return total if signed_area >= 0 else -total


def _arc_flux(field: FieldExpr, arc: Arc) -> float:
    """L of an X*-arc: |integral of ||X*|| ds| = |integral of ||X||^2 dt| (composite Simpson)."""
    f, g, valid = field.eval_many(arc.points[:, 0], arc.points[:, 1])
    if not valid.all():
        raise ZeroNorm("field undefined along an arc")
    w = f * f + g * g
    n = len(w) - 1
    h = abs(arc.duration) / n
    return float(h / 3.0 * (w[0] + w[-1] + 4.0 * w[1:-1:2].sum() + 2.0 * w[2:-1:2].sum()))


@dataclass(frozen=True)
class GreenCheckResult:
    L_out: float
    L_in: float
    area_integral: float
    residual: float

    def to_dict(self) -> dict:
        return {
            "L_out": self.L_out,
            "L_in": self.L_in,
            "difference": self.L_out - self.L_in,
            "area_integral": self.area_integral,
            "residual": self.residual,
        }


def _curve_nodes(rect: FlowRectangle):
    """Even samples as loop vertices and odd samples as edge midpoints, in loop order."""
    arcs = [rect.bottom.points, rect.exit.points, rect.top.points[::-1], rect.entry.points[::-1]]
    verts = np.concatenate([a[:-1:2] for a in arcs])
    mids = np.concatenate([a[1::2] for a in arcs])
    return verts, mids


def green_check(field: FieldExpr, rect: FlowRectangle) -> GreenCheckResult:
    L_in = _arc_flux(field, rect.entry)
    L_out = _arc_flux(field, rect.exit)

    def trace(xs, ys):
        _, jac, valid = field.jacobian_many(xs, ys)
        if not valid.all():
            raise ZeroNorm("trace undefined inside the rectangle")
        return jac[..., 0, 0] + jac[..., 1, 1]

    verts, mids = _curve_nodes(rect)
    area = region_integral(trace, verts, mids)
    return GreenCheckResult(L_out, L_in, area, abs((L_out - L_in) - area))


# -------------------------------------------------------------------- structure


@dataclass(frozen=True)
class StructureReport:
    hamiltonian: bool
    gradient: bool
    trace_zero_fraction: float
    symmetric_fraction: float

    def to_dict(self) -> dict:
        return {
            "hamiltonian": self.hamiltonian,
            "gradient": self.gradient,
            "trace_zero_fraction": self.trace_zero_fraction,
            "symmetric_fraction": self.symmetric_fraction,
        }


def detect_structure(
    field: FieldExpr, region: Region, n: int = 200, tol_zero: float = TOL_ZERO, tau_ae: float = TAU_AE
) -> StructureReport:
    """Hamiltonian: trace(DX) vanishes; gradient: DX is symmetric (on 1 - tau_ae of the lattice)."""
    X, Y = region.midpoints(n)
    _, jac, valid = field.jacobian_many(X, Y)
    nvalid = int(valid.sum())
    if nvalid == 0:
        return StructureReport(False, False, 0.0, 0.0)
    tr = np.abs(jac[..., 0, 0] + jac[..., 1, 1])
    asym = np.abs(jac[..., 0, 1] - jac[..., 1, 0])
    tz = float(np.count_nonzero(valid & (tr <= tol_zero))) / nvalid
    sy = float(np.count_nonzero(valid & (asym <= tol_zero))) / nvalid
    return StructureReport(tz >= 1.0 - tau_ae, sy >= 1.0 - tau_ae, tz, sy)
