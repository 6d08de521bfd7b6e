"""End-to-end acceptance criteria, each at its stated tolerance and time limit."""

import json
import math
import time

import numpy as np
import pytest

from planarfield import corpus
from planarfield.cli import main
from planarfield.exprcore import DomainError, parse, to_source
from planarfield.flow import FlowParams, TerminalKind, build_rectangle, green_check, integrate, resample
from planarfield.singular import Trichotomy, find_singularities
from planarfield.spectral import FieldClass, Region, injectivity_evidence, spectral_survey
from planarfield.topo import CircleSpec, perturb_constant, poincare_index
from planarfield.verdict import Conclusion, check_corollaries, check_theorem_A, check_theorem_B, check_theorem_C

pytestmark = pytest.mark.acceptance

TABLE_FIELDS = ["F", "G", "H", "X_table2", "Y_table2", "Z_table2"]
R3 = Region(-3, 3, -3, 3)


def test_criterion_1_table_oracles(record):
    t0 = time.perf_counter()
    worst = {}
    for name in TABLE_FIELDS:
        err = corpus.oracle_errors(corpus.get(name), count=1000, seed=42)
        assert err["points"] == 1000 and err["valid"]
        worst[name] = max(err["trace_max_rel_err"], err["det_max_rel_err"])
    elapsed = time.perf_counter() - t0
    ok = max(worst.values()) <= 1e-9 and elapsed < 5
    record(1, ok, f"max rel err {max(worst.values()):.2e} (<= 1e-9), {elapsed:.2f}s (< 5s)")
    assert ok, worst


def test_criterion_2_corpus_verdicts(record):
    t0 = time.perf_counter()
    F, X, Y = (corpus.get(n).field() for n in ("F", "X_table2", "Y_line"))
    a = check_theorem_A(F, R3)
    c = check_theorem_C(X, R3)
    cor = check_corollaries(X, R3)
    b = check_theorem_B(Y, Region(-2, 2, -2, 2))
    elapsed = time.perf_counter() - t0
    ok = (
        a.conclusion is Conclusion.GAS
        and c.conclusion is Conclusion.CENTER
        and cor.conclusion is Conclusion.CENTER
        and b.trichotomy == Trichotomy.NON_DISCRETE_SUSPECTED.value
        and elapsed < 60
    )
    record(2, ok, f"F {a.label}, X {c.label}, Y_line {b.label}, {elapsed:.2f}s (< 60s)")
    assert ok


def test_criterion_3_trichotomy(record):
    hurwitz = []
    for e in corpus.ENTRIES:
        f, region = e.field(), Region(*e.region)
        if spectral_survey(f, region).field_class is FieldClass.HURWITZ_AE:
            tri = find_singularities(f, region).trichotomy_class
            hurwitz.append((e.name, tri))
    ok_b = bool(hurwitz) and all(t is not Trichotomy.MULTIPLE_ISOLATED for _, t in hurwitz)
    Y = corpus.get("Y_table2").field()
    sv = spectral_survey(Y, R3)
    roots = find_singularities(Y, R3).isolated
    ok_y = (
        sv.field_class is FieldClass.MIXED
        and sv.det_negative_samples > 0
        and sv.det_positive_samples > 0
        and len(roots) == 2
        and sorted(round(s.location[0], 9) for s in roots) == [round(-1 / math.sqrt(2), 9), round(1 / math.sqrt(2), 9)]
    )
    ok = ok_b and ok_y
    names = ",".join(f"{n}:{t.value}" for n, t in hurwitz)
    record(3, ok, f"HurwitzAE fields {names}; Y_table2 {sv.field_class.value} with det of both signs")
    assert ok


def test_criterion_4_index_suite(record):
    t0 = time.perf_counter()
    radial = corpus.get("radial").field()
    F = corpus.get("F").field()
    Z = corpus.get("Z_table2").field()
    checks = {
        "radial": poincare_index(radial, CircleSpec((0, 0), 1.0)).index == 1,
        "F": poincare_index(F, CircleSpec((0, 0), 0.5)).index == 1,
        "Z origin": poincare_index(Z, CircleSpec((0, 0), 0.3)).index == -1,
    }
    big = poincare_index(Z, CircleSpec((0, 0), 2.0)).index
    s = 1 / math.sqrt(2)
    local = [poincare_index(Z, CircleSpec((a, b), 0.1)).index for a in (-s, 0, s) for b in (-s, 0, s)]
    checks["Z additivity"] = big == -1 == sum(local)
    rng = np.random.default_rng(42)
    stable = True
    for _ in range(50):
        w = rng.uniform(-1, 1, 2)
        w *= rng.uniform(0, 0.01) / np.linalg.norm(w)
        stable &= poincare_index(perturb_constant(F, w), CircleSpec((0, 0), 0.5)).index == 1
    checks["perturbation"] = stable
    elapsed = time.perf_counter() - t0
    ok = all(checks.values()) and elapsed < 10
    record(4, ok, f"{sum(checks.values())}/{len(checks)} index checks, {elapsed:.2f}s (< 10s)")
    assert ok, checks


def test_criterion_5_green_identity(record):
    radial = corpus.get("radial").field()
    rect = build_rectangle(radial, (1.0, 0.0), math.log(2), -math.pi / 2)
    g = green_check(radial, rect)
    target = -3 * math.pi / 8
    ok_r = (
        abs((g.L_out - g.L_in) - target) <= 1e-6 and abs(g.area_integral - target) <= 1e-6 and g.residual <= 1e-6
    )
    F = corpus.get("F").field()
    rf = build_rectangle(F, (1.0, 1.0), 0.1, 0.1)
    gf = green_check(F, rf)
    res = [green_check(F, resample(F, rf, m)).residual for m in (4, 8, 16, 32)]
    orders = [math.log2(a / b) for a, b in zip(res, res[1:]) if a > 1e-10]
    ok_f = gf.residual <= 1e-4 and bool(orders) and min(orders) >= 2
    signs = []
    for name, p1 in (("F", (1.0, 1.0)), ("F", (-2.0, 0.5)), ("G", (1.0, 0.5)), ("Y_line", (-1.0, 2.0)),
                     ("radial", (2.0, 1.0)), ("H", (1.0, 0.5))):
        f = corpus.get(name).field()
        for ft, tt in ((0.02, 0.02), (0.02, -0.02)):
            gg = green_check(f, build_rectangle(f, p1, ft, tt))
            signs.append(gg.L_out < gg.L_in)
    ok = ok_r and ok_f and all(signs)
    record(5, ok, f"radial residual {g.residual:.1e}; F residual {gf.residual:.1e}, observed order "
                  f"{min(orders):.2f}; L_out < L_in on {sum(signs)}/{len(signs)} rectangles")
    assert ok


def test_criterion_6_center_corroboration(record):
    X = corpus.get("X_table2").field()
    gaps = []
    for r in (0.25, 0.5, 1.0):
        tr = integrate(X, (r, 0.0), 1e4)
        gaps.append(math.dist(tr.end, (r, 0.0)) if tr.terminal.kind is TerminalKind.PERIODIC else math.inf)

    def h(p):
        x, y = p[..., 0], p[..., 1]
        return (x - 1) ** 4 / 4 + x + (y - 1) ** 4 / 4 + y

    p0 = np.array([0.5, 0.0])
    tr = integrate(X, p0, 50.0, FlowParams(stop_on_return=False, stop_on_convergence=False))
    drift = float(np.max(np.abs(h(tr.points) - h(p0))) / abs(h(p0)))
    ok = max(gaps) <= 1e-4 and drift <= 1e-6 and tr.times[-1] == pytest.approx(50.0)
    record(6, ok, f"return gaps max {max(gaps):.1e} (<= 1e-4); energy drift {drift:.1e} (<= 1e-6)")
    assert ok


def test_criterion_7_attractor_corroboration(record):
    F = corpus.get("F").field()
    rng = np.random.default_rng(42)
    angles = rng.uniform(0, 2 * math.pi, 20)
    params = FlowParams()
    dists = []
    for a in angles:
        tr = integrate(F, (2 * math.cos(a), 2 * math.sin(a)), math.inf, params)
        ok_kind = tr.terminal.kind is TerminalKind.CONVERGED and tr.steps <= params.budget
        dists.append(math.hypot(*tr.end) if ok_kind else math.inf)
    ok = max(dists) <= 1e-6
    record(7, ok, f"converged {sum(d <= 1e-6 for d in dists)}/20, max distance {max(dists):.1e}")
    assert ok


def test_criterion_8_injectivity(record):
    F = corpus.get("F").field()
    ev = injectivity_evidence(F, R3, n=5000, seed=42)
    ok = ev["collisions"] == []
    record(8, ok, f"{ev['samples']} samples with det > tol, {len(ev['collisions'])} collisions")
    assert ok


def test_criterion_9_hygiene(record, tmp_path):
    worst = 0.0
    for e in corpus.ENTRIES:
        f = e.field()
        P = corpus.domain_points(f, Region(*e.region), 1000, np.random.default_rng(42))
        h = 1e-5
        for p in P:
            try:
                cols = [
                    (np.array(f.eval((p[0] + dx, p[1] + dy))) - np.array(f.eval((p[0] - dx, p[1] - dy)))) / (2 * h)
                    for dx, dy in ((h, 0), (0, h))
                ]
            except DomainError:
                continue
            ad = f.jacobian(p)
            worst = max(worst, float(np.max(np.abs(ad - np.column_stack(cols)) / (1 + np.abs(ad)))))
    ok_ad = worst <= 1e-5
    srcs = [s for e in corpus.ENTRIES for s in (e.fx, e.fy, e.trace, e.det)]
    ok_rt = all(parse(to_source(parse(s))) == parse(s) for s in srcs)
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for out in (a, b):
        assert main(["analyze", "--field", "F", "--seed", "42", "--out", str(out)]) == 0
    ok_bytes = a.read_bytes() == b.read_bytes() and json.loads(a.read_text())["parameters"]["seed"] == 42
    ok = ok_ad and ok_rt and ok_bytes
    record(9, ok, f"AD vs FD worst {worst:.1e} (<= 1e-5); round trip {ok_rt}; byte-stable report {ok_bytes}")
    assert ok
