"""Theorem-backed conclusions with explicit hypothesis checklists.

Every conclusion other than ``Inconclusive`` rests on hypotheses that are
either checked pointwise (``pass``) or supported by a finite survey
(``numerical``); no finite computation certifies an almost-everywhere
condition, so verdicts always carry ``status = "numerical"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exprcore import FieldExpr
from .flow import (
    FlowParams,
    StructureReport,
    TerminalKind,
    detect_structure,
    integrate,
    rotate_field,
)
from .singular import LocalClass, SingularityReport, Trichotomy, find_singularities
from .spectral import TAU_AE, TOL_ZERO, FieldClass, FieldSpectralReport, Region, spectral_survey
from .topo import IndexComputationError, local_index


class Theorem(str, enum.Enum):
    A = "TheoremA"
    B = "TheoremB"
    C = "TheoremC"
    COR_HAMILTONIAN = "Corollary5_1"
    COR_GRADIENT = "Corollary5_2"
    NONE = "None"


class Conclusion(str, enum.Enum):
    GAS = "GloballyAsymptoticallyStable"
    CENTER = "GlobalCenter"
    TRICHOTOMY = "TrichotomyClass"
    INCONCLUSIVE = "Inconclusive"


PASS, FAIL, NUMERICAL = "pass", "fail", "numerical"
VIOLATION_B = "VIOLATION-OF-THEOREM-B"


@dataclass(frozen=True)
class Hypothesis:
    name: str
    status: str
    evidence: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.status in (PASS, NUMERICAL)

    def to_dict(self) -> dict:
        return {"name": self.name, "status": self.status, "evidence": self.evidence}


@dataclass(frozen=True)
class Verdict:
    theorem: Theorem
    hypotheses: tuple
    conclusion: Conclusion
    corroboration: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.conclusion is not Conclusion.INCONCLUSIVE and not all(h.holds for h in self.hypotheses):
            raise ValueError("a definite conclusion needs every hypothesis to hold")

    @property
    def trichotomy(self):
        return self.details.get("trichotomy")

    @property
    def label(self) -> str:
        if self.conclusion is Conclusion.TRICHOTOMY:
            return f"TrichotomyClass({self.trichotomy})"
        return self.conclusion.value

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem.value,
            "conclusion": self.label,
            "status": "numerical",
            "hypotheses": [h.to_dict() for h in self.hypotheses],
            "corroboration": self.corroboration,
            "details": self.details,
        }


@dataclass
class VerdictParams:
    grid: int = 200
    tol_zero: float = TOL_ZERO
    tau_ae: float = TAU_AE
    seed: int = 42
    k_traj: int = 20
    t_max: float = 1e4
    budget: int = 200_000
    index_radius: float = None  # default: 1e-2 of the region diameter
    flow: FlowParams = field(default_factory=FlowParams)


class Evidence:
    """Lazily computed survey, singularity and structure reports for one field."""

    def __init__(self, field: FieldExpr, region: Region, params: VerdictParams = None):
        self.field = field
        self.region = region
        self.params = params or VerdictParams()

    @cached_property
    def survey(self) -> FieldSpectralReport:
        p = self.params
        return spectral_survey(self.field, self.region, p.grid, p.tau_ae, p.tol_zero)

    @cached_property
    def singularities(self) -> SingularityReport:
        return find_singularities(self.field, self.region, self.params.grid, self.params.tol_zero)

    @cached_property
    def structure(self) -> StructureReport:
        p = self.params
        return detect_structure(self.field, self.region, p.grid, p.tol_zero, p.tau_ae)

    @property
    def unique(self):
        s = self.singularities
        return s.isolated[0] if s.trichotomy_class is Trichotomy.ONE_POINT else None


def _evidence(field, region, params, evidence) -> Evidence:
    if evidence is not None:
        return evidence
    return Evidence(field, region, params)


# ------------------------------------------------------------------ hypotheses


def _h_field_class(ev: Evidence, wanted: FieldClass) -> Hypothesis:
    s = ev.survey
    ok = s.field_class is wanted
    return Hypothesis(
        wanted.value,
        NUMERICAL if ok else FAIL,
        {"field_class": s.field_class.value, "failing_fraction": s.failing_fraction, "tau_ae": s.tau_ae},
    )


def _h_unique(ev: Evidence) -> Hypothesis:
    s = ev.singularities
    ev_dict = {"trichotomy": s.trichotomy_class.value, "isolated": len(s.isolated)}
    if ev.unique is not None:
        ev_dict["location"] = list(ev.unique.location)
    return Hypothesis("singularity_exists", NUMERICAL if ev.unique is not None else FAIL, ev_dict)


def _h_local(ev: Evidence, name: str, test) -> Hypothesis:
    z = ev.unique
    if z is None:
        return Hypothesis(name, FAIL, {"reason": "no unique singularity"})
    return Hypothesis(name, PASS if test(z.local_class) else FAIL, {"local_class": z.local_class.value})


def _h_det_positive(ev: Evidence) -> Hypothesis:
    s = ev.survey
    ok = s.det_positive_fraction >= 1.0 - s.tau_ae
    return Hypothesis(
        "det_positive_ae", NUMERICAL if ok else FAIL, {"det_positive_fraction": s.det_positive_fraction}
    )


# -------------------------------------------------------------- corroboration


def _ring_seeds(center, region: Region, k: int, seed: int, radii=None) -> np.ndarray:
    """``k`` seeds split over two rings around ``center`` with seeded angular jitter."""
    half = 0.5 * min(region.xmax - region.xmin, region.ymax - region.ymin)
    if radii is None:
        radii = (half / 3.0, 2.0 * half / 3.0)
    rng = np.random.default_rng(seed)
    counts = [k // len(radii) + (1 if i < k % len(radii) else 0) for i in range(len(radii))]
    out = []
    for r, m in zip(radii, counts):
        phase = rng.uniform(0.0, 2.0 * math.pi)
        t = phase + 2.0 * math.pi * np.arange(m) / max(m, 1)
        out.append(np.c_[center[0] + r * np.cos(t), center[1] + r * np.sin(t)])
    return np.concatenate(out) if out else np.zeros((0, 2))


def attractor_corroboration(field: FieldExpr, target, seeds: np.ndarray, params: VerdictParams) -> dict:
    fp = FlowParams(**{**params.flow.__dict__, "known_roots": (tuple(target),), "stop_on_return": False})
    fp.budget = params.budget
    reached, outcomes = 0, []
    for p in seeds:
        tr = integrate(field, p, params.t_max, fp)
        dist = float(np.linalg.norm(np.array(tr.end) - np.array(target)))
        ok = tr.terminal.kind is TerminalKind.CONVERGED and dist <= fp.conv_radius
        reached += ok
        outcomes.append(
            {"seed": [float(p[0]), float(p[1])], "terminal": tr.terminal.kind.value, "steps": tr.steps, "distance": dist}
        )
    return {"trajectories": len(seeds), "converged": int(reached), "all_converged": reached == len(seeds),
            "outcomes": outcomes}


def center_corroboration(field: FieldExpr, center, radii, params: VerdictParams) -> dict:
    fp = FlowParams(**{**params.flow.__dict__, "known_roots": (), "stop_on_convergence": False})
    fp.budget = params.budget
    rng = np.random.default_rng(params.seed)
    returned, outcomes = 0, []
    for r in radii:
        a = rng.uniform(0.0, 2.0 * math.pi)
        p = (center[0] + r * math.cos(a), center[1] + r * math.sin(a))
        tr = integrate(field, p, params.t_max, fp)
        ok = tr.terminal.kind is TerminalKind.PERIODIC
        returned += ok
        d = {"radius": float(r), "terminal": tr.terminal.kind.value, "steps": tr.steps}
        if ok:
            d["period"] = tr.terminal.period
            d["return_gap"] = float(np.linalg.norm(np.array(tr.end) - np.array(p)))
        outcomes.append(d)
    return {"trajectories": len(radii), "periodic": int(returned), "all_periodic": returned == len(radii),
            "outcomes": outcomes}


def _index_radius(ev: Evidence) -> float:
    return ev.params.index_radius or 1e-2 * ev.region.diameter


def _center_radii(center, region: Region, k: int) -> np.ndarray:
    reach = min(center[0] - region.xmin, region.xmax - center[0], center[1] - region.ymin, region.ymax - center[1])
    return reach * np.arange(1, k + 1) / (k + 1)


# ---------------------------------------------------------------- theorems


def check_theorem_A(field: FieldExpr, region: Region, params: VerdictParams = None, evidence: Evidence = None) -> Verdict:
    """Hurwitz a.e. plus a unique hyperbolic singularity gives a global attractor."""
    ev = _evidence(field, region, params, evidence)
    hyps = (
        _h_field_class(ev, FieldClass.HURWITZ_AE),
        _h_unique(ev),
        _h_local(ev, "singularity_hyperbolic", lambda c: c.hyperbolic),
    )
    details = {"trichotomy": ev.singularities.trichotomy_class.value}
    if not all(h.holds for h in hyps):
        return Verdict(Theorem.A, hyps, Conclusion.INCONCLUSIVE, {}, details)
    z = ev.unique.location
    seeds = _ring_seeds(z, region, ev.params.k_traj, ev.params.seed)
    corr = attractor_corroboration(field, z, seeds, ev.params)
    if not corr["all_converged"]:
        details["note"] = "hypotheses hold numerically but not every trajectory converged"
        return Verdict(Theorem.A, hyps, Conclusion.INCONCLUSIVE, corr, details)
    return Verdict(Theorem.A, hyps, Conclusion.GAS, corr, details)


def check_theorem_B(field: FieldExpr, region: Region, params: VerdictParams = None, evidence: Evidence = None) -> Verdict:
    """Singularity set of a Hurwitz a.e. field: empty, one point, or non-discrete."""
    ev = _evidence(field, region, params, evidence)
    hyp = _h_field_class(ev, FieldClass.HURWITZ_AE)
    tri = ev.singularities.trichotomy_class
    details = {"trichotomy": tri.value, "isolated": len(ev.singularities.isolated)}
    if not hyp.holds:
        if tri is Trichotomy.MULTIPLE_ISOLATED:
            details["note"] = "several isolated singularities, therefore not Hurwitz a.e."
        return Verdict(Theorem.B, (hyp,), Conclusion.INCONCLUSIVE, {}, details)
    if tri is Trichotomy.MULTIPLE_ISOLATED:
        details["flags"] = [VIOLATION_B]
        details["note"] = "Hurwitz a.e. survey with several isolated singularities: numerical artifact"
        return Verdict(Theorem.B, (hyp,), Conclusion.INCONCLUSIVE, {}, details)
    return Verdict(Theorem.B, (hyp,), Conclusion.TRICHOTOMY, {}, details)


def check_theorem_C(field: FieldExpr, region: Region, params: VerdictParams = None, evidence: Evidence = None) -> Verdict:
    """Purely imaginary spectrum a.e. plus a simple singularity gives a global center."""
    ev = _evidence(field, region, params, evidence)
    hyps = (
        _h_field_class(ev, FieldClass.PURELY_IMAGINARY_AE),
        _h_unique(ev),
        _h_local(ev, "singularity_simple", lambda c: c.simple),
    )
    details = {"trichotomy": ev.singularities.trichotomy_class.value}
    if not all(h.holds for h in hyps):
        return Verdict(Theorem.C, hyps, Conclusion.INCONCLUSIVE, {}, details)
    return _center_verdict(Theorem.C, field, region, ev, hyps, details)


def _center_verdict(theorem, field, region, ev: Evidence, hyps, details) -> Verdict:
    z = ev.unique.location
    corr = center_corroboration(field, z, _center_radii(z, region, ev.params.k_traj), ev.params)
    try:
        idx = local_index(field, z, _index_radius(ev), ev.params.tol_zero)
        corr["index"] = idx.index
    except IndexComputationError as e:
        corr["index"] = None
        corr["index_error"] = str(e)
    if not corr["all_periodic"] or corr["index"] != 1:
        details["note"] = "hypotheses hold numerically but the center corroboration failed"
        return Verdict(theorem, hyps, Conclusion.INCONCLUSIVE, corr, details)
    return Verdict(theorem, hyps, Conclusion.CENTER, corr, details)


def check_corollaries(field: FieldExpr, region: Region, params: VerdictParams = None, evidence: Evidence = None) -> Verdict:
    """Hamiltonian or gradient fields with positive Jacobian determinant a.e."""
    ev = _evidence(field, region, params, evidence)
    st = ev.structure
    details = {"structure": st.to_dict(), "trichotomy": ev.singularities.trichotomy_class.value}
    det_pos = _h_det_positive(ev)
    if st.hamiltonian:
        hyps = (
            Hypothesis("hamiltonian", NUMERICAL, {"trace_zero_fraction": st.trace_zero_fraction}),
            det_pos,
            _h_unique(ev),
            _h_local(ev, "singularity_simple", lambda c: c.simple),
        )
        if not all(h.holds for h in hyps):
            return Verdict(Theorem.COR_HAMILTONIAN, hyps, Conclusion.INCONCLUSIVE, {}, details)
        return _center_verdict(Theorem.COR_HAMILTONIAN, field, region, ev, hyps, details)
    if st.gradient:
        # the rotated field must look Hamiltonian
        rot = detect_structure(rotate_field(field), region, ev.params.grid, ev.params.tol_zero, ev.params.tau_ae)
        details["rotated_hamiltonian"] = rot.hamiltonian
        hyps = (
            Hypothesis("gradient", NUMERICAL, {"symmetric_fraction": st.symmetric_fraction}),
            det_pos,
            _h_unique(ev),
            _h_local(ev, "singularity_hyperbolic", lambda c: c.hyperbolic),
            _h_local(ev, "singularity_attracting", lambda c: c is LocalClass.HYPERBOLIC_SINK),
        )
        if not all(h.holds for h in hyps) or not rot.hamiltonian:
            if ev.unique is not None and ev.unique.local_class is LocalClass.HYPERBOLIC_SOURCE:
                details["note"] = "hyperbolic source: the time-reversed field is the attracting one"
            return Verdict(Theorem.COR_GRADIENT, hyps, Conclusion.INCONCLUSIVE, {}, details)
        z = ev.unique.location
        corr = attractor_corroboration(field, z, _ring_seeds(z, region, ev.params.k_traj, ev.params.seed), ev.params)
        if not corr["all_converged"]:
            details["note"] = "hypotheses hold numerically but not every trajectory converged"
            return Verdict(Theorem.COR_GRADIENT, hyps, Conclusion.INCONCLUSIVE, corr, details)
        return Verdict(Theorem.COR_GRADIENT, hyps, Conclusion.GAS, corr, details)
    hyps = (Hypothesis("hamiltonian_or_gradient", FAIL, st.to_dict()),)
    return Verdict(Theorem.NONE, hyps, Conclusion.INCONCLUSIVE, {}, details)


def all_verdicts(field: FieldExpr, region: Region, params: VerdictParams = None, evidence: Evidence = None) -> dict:
    ev = _evidence(field, region, params, evidence)
    return {
        "theorem_A": check_theorem_A(field, region, evidence=ev),
        "theorem_B": check_theorem_B(field, region, evidence=ev),
        "theorem_C": check_theorem_C(field, region, evidence=ev),
        "corollaries": check_corollaries(field, region, evidence=ev),
    }


def overall(verdicts: dict) -> str:
    """Single global classification: the first definite phase-portrait conclusion."""
    labels = {v.conclusion for v in verdicts.values()}
    if Conclusion.GAS in labels and Conclusion.CENTER in labels:
        raise AssertionError("contradictory verdicts")
    for c in (Conclusion.GAS, Conclusion.CENTER):
        if c in labels:
            return c.value
    b = verdicts.get("theorem_B")
    if b is not None and b.conclusion is Conclusion.TRICHOTOMY and b.trichotomy == Trichotomy.NON_DISCRETE_SUSPECTED.value:
        return "NonDiscreteSingularitySetSuspected"
    return Conclusion.INCONCLUSIVE.value
