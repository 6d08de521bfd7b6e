import math

import numpy as np
import pytest

from planarfield.exprcore import parse_field
from planarfield.flow import (
    DegenerateRectangle,
    FailedToClose,
    FlowParams,
    OmegaKind,
    TerminalKind,
    ZeroNorm,
    build_rectangle,
    classify_omega_limit,
    detect_structure,
    green_check,
    integrate,
    orthogonal_field,
    region_integral,
    resample,
    rotate_field,
)
from planarfield.exprcore import to_source
from planarfield.spectral import Region

LN2 = math.log(2.0)
R3 = Region(-3, 3, -3, 3)


# ------------------------------------------------------------- orthogonal field


def test_orthogonal_of_radial(radial):
    o = orthogonal_field(radial)
    assert (to_source(o.fx), to_source(o.fy)) == ("y", "-x")


def test_orthogonality_and_norm(F, rng):
    o = orthogonal_field(F)
    for p in rng.uniform(-2, 2, (100, 2)):
        a, b = np.array(F.eval(p)), np.array(o.eval(p))
        assert abs(a @ b) <= 1e-12 * (1 + a @ a)
        assert abs(np.linalg.norm(a) - np.linalg.norm(b)) <= 1e-12 * (1 + np.linalg.norm(a))


def test_rotate_is_orthogonal(F, rng):
    r, o = rotate_field(F), orthogonal_field(F)
    for p in rng.uniform(-2, 2, (100, 2)):
        assert r.eval(p) == o.eval(p)


# ------------------------------------------------------------- trajectories


def test_radial_converges(radial):
    tr = integrate(radial, (1, 1), 20.0)
    assert tr.terminal.kind is TerminalKind.CONVERGED
    assert tr.terminal.point == pytest.approx((0, 0), abs=1e-12)
    # the exact solution is exp(-t) (1, 1)
    assert np.allclose(tr.points, np.exp(-tr.times)[:, None] * [1, 1], rtol=1e-6, atol=1e-9)


def test_table2_X_periodic(fields):
    tr = integrate(fields["X_table2"], (0.5, 0.0), 100.0)
    assert tr.terminal.kind is TerminalKind.PERIODIC
    assert math.dist(tr.end, (0.5, 0.0)) <= 1e-4
    assert 0 < tr.terminal.period < 100


def test_line_field_converges(fields):
    # on y = 0, x' = -x^3 decays to 0
    tr = integrate(fields["Y_line"], (1.0, 0.0), math.inf)
    assert tr.terminal.kind is TerminalKind.CONVERGED
    assert abs(tr.terminal.point[0]) < 1e-6 and tr.terminal.point[1] == 0


def test_converged_invariant(F):
    tr = integrate(F, (2.0, -1.0), 1e4)
    q = np.array(tr.terminal.point)
    assert math.hypot(*F.eval(q)) <= 1e-10
    assert np.linalg.norm(tr.points[-1] - q) <= 1e-6


def test_times_strictly_monotone(F):
    fwd = integrate(F, (1.0, 1.0), 10.0)
    assert np.all(np.diff(fwd.times) > 0)
    back = integrate(parse_field("x", "y"), (0.1, 0.0), 50.0, direction=-1)
    assert np.all(np.diff(back.times) < 0)
    assert back.terminal.kind is TerminalKind.CONVERGED


def test_escape_and_backward_escape(radial):
    tr = integrate(parse_field("x", "y"), (1.0, 0.0), 100.0)
    assert tr.terminal.kind is TerminalKind.ESCAPED and tr.terminal.radius >= 1e3
    tr = integrate(radial, (1.0, 0.0), 100.0, direction=-1)
    assert tr.terminal.kind is TerminalKind.ESCAPED


def test_leaving_bounds(radial):
    tr = integrate(parse_field("1", "0"), (0.0, 0.0), 100.0, FlowParams(bounds=Region(-1, 1, -1, 1)))
    assert tr.terminal.kind is TerminalKind.ESCAPED and tr.end[0] > 1


def test_budget_and_time_limit(fields):
    X = fields["X_table2"]
    tr = integrate(X, (0.5, 0.0), 1e9, FlowParams(budget=10, stop_on_return=False))
    assert tr.terminal.kind is TerminalKind.BUDGET and tr.steps == 10
    tr = integrate(X, (0.5, 0.0), 0.5)
    assert tr.terminal.kind is TerminalKind.BUDGET and tr.times[-1] == pytest.approx(0.5)


def test_domain_error_terminal():
    tr = integrate(parse_field("1", "sqrt(1-x)"), (0.0, 0.0), 10.0)
    assert tr.terminal.kind is TerminalKind.DOMAIN_ERROR


def test_slow_spiral_is_not_periodic():
    weak = parse_field("-y-0.001*x", "x-0.001*y")
    tr = integrate(weak, (1.0, 0.0), 1e5)
    assert tr.terminal.kind is TerminalKind.CONVERGED


def test_energy_conservation(fields):
    X = fields["X_table2"]

    def h(p):
        x, y = p[..., 0], p[..., 1]
        return (x - 1) ** 4 / 4 + x + (y - 1) ** 4 / 4 + y

    p0 = np.array([0.5, 0.0])
    tr = integrate(X, p0, 50.0, FlowParams(stop_on_return=False, stop_on_convergence=False))
    assert tr.times[-1] == pytest.approx(50.0)
    drift = np.max(np.abs(h(tr.points) - h(p0))) / abs(h(p0))
    assert drift <= 1e-6


# ------------------------------------------------------------- omega limits


def test_omega_F(F):
    om = classify_omega_limit(F, (2, 2))
    assert om.kind is OmegaKind.POINT and om.point == pytest.approx((0, 0), abs=1e-12)


def test_omega_expanding_is_empty():
    assert classify_omega_limit(parse_field("x", "y"), (1, 0)).kind is OmegaKind.EMPTY


def test_omega_Z_on_stable_manifold(fields):
    # (0.1, 0.1) lies on the diagonal x = y, which is invariant and carries the origin's stable manifold
    om = classify_omega_limit(fields["Z_table2"], (0.1, 0.1))
    assert om.kind is OmegaKind.POINT and om.point == pytest.approx((0, 0), abs=1e-12)


def test_omega_Z_near_center_is_periodic(fields):
    om = classify_omega_limit(fields["Z_table2"], (0.15, 1 / math.sqrt(2)))
    assert om.kind is OmegaKind.PERIODIC


def test_omega_undetermined_on_budget(fields):
    om = classify_omega_limit(fields["X_table2"], (0.5, 0), FlowParams(budget=5))
    assert om.kind is OmegaKind.UNDETERMINED


# ------------------------------------------------------------- rectangles


@pytest.fixture(scope="module")
def radial_rect():
    radial = parse_field("-x", "-y")
    return radial, build_rectangle(radial, (1.0, 0.0), LN2, -math.pi / 2)


def test_radial_rectangle_corners(radial_rect):
    _, r = radial_rect
    # X*-orbits are circles and X-orbits are rays
    assert r.p2 == pytest.approx((0.5, 0.0), abs=1e-10)
    assert r.q1 == pytest.approx((0.0, 1.0), abs=1e-10)
    assert r.q2 == pytest.approx((0.0, 0.5), abs=1e-10)
    assert r.corner_residual <= 1e-8
    for arc, start in ((r.bottom, r.p1), (r.entry, r.p1), (r.top, r.q1), (r.exit, r.p2)):
        assert np.linalg.norm(arc.points[0] - start) <= 1e-8 * r.diameter


def test_F_rectangle_closes(F):
    r = build_rectangle(F, (1.0, 1.0), 0.05, 0.05)
    assert r.corner_residual <= 1e-8 * r.diameter
    assert r.min_norm > 1


def test_degenerate_rectangles(F):
    with pytest.raises(DegenerateRectangle):
        build_rectangle(F, (1.0, 1.0), 0.0, 0.1)
    with pytest.raises(DegenerateRectangle):
        build_rectangle(F, (1.0, 1.0), 0.1, 0.0)


def test_rectangle_failures(F, radial):
    with pytest.raises(FailedToClose):
        build_rectangle(F, (1.0, 1.0), 0.3, 0.2)
    with pytest.raises(ZeroNorm):
        build_rectangle(radial, (1.0, 0.0), LN2, -math.pi / 2, min_norm=0.6)


def test_green_radial_closed_form(radial_rect):
    radial, r = radial_rect
    g = green_check(radial, r)
    # L = r^2 * pi/2 on circular arcs; trace is -2 over an area of 3 pi / 16
    assert g.L_in == pytest.approx(math.pi / 2, abs=1e-9)
    assert g.L_out == pytest.approx(math.pi / 8, abs=1e-9)
    assert g.L_out - g.L_in == pytest.approx(-3 * math.pi / 8, abs=1e-9)
    assert g.area_integral == pytest.approx(-3 * math.pi / 8, abs=1e-9)
    assert g.residual <= 1e-6
    assert g.residual == abs((g.L_out - g.L_in) - g.area_integral)


def _orders(field, rect, ms):
    res = [green_check(field, resample(field, rect, m)).residual for m in ms]
    return res, [a / b for a, b in zip(res, res[1:]) if a > 1e-10]


def test_green_radial_convergence_order(radial_rect):
    radial, r = radial_rect
    res, ratios = _orders(radial, r, [2, 4, 8, 16, 32])
    assert ratios and all(q >= 4 for q in ratios), res


def test_green_F_small_rectangle(F):
    r = build_rectangle(F, (1.0, 1.0), 0.1, 0.1)
    assert green_check(F, r).residual <= 1e-4
    res, ratios = _orders(F, r, [4, 8, 16, 32])
    assert ratios and all(q >= 4 for q in ratios), res


def test_green_hamiltonian(fields):
    X = fields["X_table2"]
    r = build_rectangle(X, (0.5, 0.0), 0.3, 0.2)
    g = green_check(X, r)
    assert abs(g.area_integral) <= 1e-12
    assert g.L_out == pytest.approx(g.L_in, rel=1e-8)


@pytest.mark.parametrize("name,p1", [("F", (1.0, 1.0)), ("F", (-2.0, 0.5)), ("radial", (2.0, 1.0)),
                                     ("G", (1.0, 0.5)), ("Y_line", (-1.0, 2.0))])
def test_trace_sign_consequence(fields, name, p1):
    f = fields[name]
    for ft, tt in ((0.02, 0.02), (0.02, -0.02), (0.05, 0.01)):
        g = green_check(f, build_rectangle(f, p1, ft, tt))
        assert g.L_out < g.L_in


def test_region_integral_disc():
    n = 64
    t = np.linspace(0, 2 * np.pi, 2 * n + 1)[:-1]
    pts = np.c_[np.cos(t), np.sin(t)]
    v, m = pts[::2], pts[1::2]
    # integral of 1 + x^2 over the unit disc is pi + pi/4
    assert region_integral(lambda x, y: 1 + x * x + 0 * y, v, m) == pytest.approx(1.25 * math.pi, abs=1e-5)
    # the reversed loop pairs each edge with its own midpoint
    vr = v[::-1]
    mr = np.roll(m[::-1], -1, axis=0)
    assert region_integral(lambda x, y: 1 + 0 * x, vr, mr) == pytest.approx(math.pi, abs=1e-5)


# ------------------------------------------------------------- structure


def test_structure_examples(fields, radial):
    s = detect_structure(fields["X_table2"], R3)
    assert s.hamiltonian and not s.gradient
    s = detect_structure(fields["gradient_3x2"], R3)
    assert s.gradient and not s.hamiltonian
    s = detect_structure(radial, R3)
    assert s.gradient and not s.hamiltonian


def test_rotated_gradient_is_hamiltonian(fields, radial):
    for f in (fields["gradient_3x2"], radial):
        assert detect_structure(rotate_field(f), R3).hamiltonian
