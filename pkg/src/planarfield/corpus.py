"""Built-in example fields with closed-form trace/det oracles and expected outcomes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exprcore import FieldExpr, parse, parse_field
from .singular import Trichotomy
from .spectral import FieldClass, Region
from .verdict import Evidence, VerdictParams, all_verdicts, overall

ORACLE_RTOL = 1e-9
ORACLE_POINTS = 1000
ROOT_ATOL = 1e-8


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    fx: str
    fy: str
    trace: str
    det: str
    field_class: FieldClass
    trichotomy: Trichotomy
    singularities: tuple = ()
    verdict: str = "Inconclusive"
    region: tuple = (-3.0, 3.0, -3.0, 3.0)
    note: str = ""

    def field(self) -> FieldExpr:
        return parse_field(self.fx, self.fy)

    def oracle(self) -> FieldExpr:
        """The oracle pair packed as a field: (trace, det)."""
        return FieldExpr(parse(self.trace), parse(self.det), (self.trace, self.det))


_R2 = 1.0 / math.sqrt(2.0)

ENTRIES = (
    CorpusEntry(
        "F", "-(x+1)^3+1", "-(x+1)^2*(y+1)+1", "-4*(x+1)^2", "3*(x+1)^4",
        FieldClass.HURWITZ_AE, Trichotomy.ONE_POINT, ((0.0, 0.0),), "GloballyAsymptoticallyStable",
        note="Hurwitz off the line x=-1, which maps onto (1,1)",
    ),
    CorpusEntry(
        "G", "-x^3/(1+x^2)", "-y*x^2/(1+x^2)", "-2*x^2*(2+x^2)/(1+x^2)^2", "x^4*(3+x^2)/(1+x^2)^3",
        FieldClass.HURWITZ_AE, Trichotomy.NON_DISCRETE_SUSPECTED, (), "NonDiscreteSingularitySetSuspected",
        note="zeros along x=0",
    ),
    CorpusEntry(
        "H", "(-1 + (2/pi)*atan(y/x))*x", "(-1 + (2/pi)*atan(y/x))*y",
        "-2+(4/pi)*atan(y/x)", "(pi-2*atan(y/x))^2/pi^2",
        FieldClass.HURWITZ_AE, Trichotomy.EMPTY, (), "Inconclusive",
        note="undefined on x=0; no zeros on its natural domain",
    ),
    CorpusEntry(
        "X_table2", "-(y-1)^3-1", "(x-1)^3+1", "0", "9*(x-1)^2*(y-1)^2",
        FieldClass.PURELY_IMAGINARY_AE, Trichotomy.ONE_POINT, ((0.0, 0.0),), "GlobalCenter",
        note="Hamiltonian h = (x-1)^4/4 + x + (y-1)^4/4 + y",
    ),
    CorpusEntry(
        "Y_table2", "-2*exp(-(x^2+y^2))*x*y", "(2*x^2-1)*exp(-(x^2+y^2))",
        "0", "-4*(2*x^4+y^2+x^2*(-3+2*y^2))*exp(-2*(x^2+y^2))",
        FieldClass.MIXED, Trichotomy.MULTIPLE_ISOLATED, ((-_R2, 0.0), (_R2, 0.0)), "Inconclusive",
        note="two zeros, so the determinant must change sign",
    ),
    CorpusEntry(
        "Z_table2", "-2*y+4*y^3", "-2*x+4*x^3", "0", "-4*(-1+6*x^2)*(-1+6*y^2)",
        FieldClass.MIXED, Trichotomy.MULTIPLE_ISOLATED,
        tuple((a, b) for a in (-_R2, 0.0, _R2) for b in (-_R2, 0.0, _R2)), "Inconclusive",
        note="saddle/center lattice",
    ),
    CorpusEntry(
        "Y_line", "-x^3", "-x^2*y", "-4*x^2", "3*x^4",
        FieldClass.HURWITZ_AE, Trichotomy.NON_DISCRETE_SUSPECTED, (), "NonDiscreteSingularitySetSuspected",
        note="singular set is the line x=0",
    ),
    CorpusEntry(
        "radial", "-x", "-y", "-2", "1",
        FieldClass.HURWITZ_AE, Trichotomy.ONE_POINT, ((0.0, 0.0),), "GloballyAsymptoticallyStable",
    ),
    CorpusEntry(
        "gradient_3x2", "3*x^2", "-3*y^2", "6*x-6*y", "-36*x*y",
        FieldClass.MIXED, Trichotomy.ONE_POINT, ((0.0, 0.0),), "Inconclusive",
        note="gradient field that is not dissipative",
    ),
)

BY_NAME = {e.name: e for e in ENTRIES}


def get(name: str) -> CorpusEntry:
    try:
        return BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown corpus field {name!r}; choose from {', '.join(BY_NAME)}") from None


def domain_points(field: FieldExpr, region: Region, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` uniform points of ``region`` where the Jacobian is defined."""
    out = np.zeros((0, 2))
    while len(out) < count:
        P = rng.uniform([region.xmin, region.ymin], [region.xmax, region.ymax], size=(2 * count, 2))
        _, _, ok = field.jacobian_many(P[:, 0], P[:, 1])
        out = np.concatenate([out, P[ok]])
    return out[:count]


def oracle_errors(entry: CorpusEntry, count: int = ORACLE_POINTS, seed: int = 42) -> dict:
    """Relative errors of AD trace/det against the closed-form oracle.

    The scale is the larger of the oracle magnitude and the magnitude of the
    Jacobian terms that sum to it, so exact cancellation (zero trace of a
    Hamiltonian field) is measured against the size of what cancels.
    """
    X = entry.field()
    region = Region(*entry.region)
    P = domain_points(X, region, count, np.random.default_rng(seed))
    _, J, ok = X.jacobian_many(P[:, 0], P[:, 1])
    ot, od, ook = entry.oracle().eval_many(P[:, 0], P[:, 1])
    ot = np.broadcast_to(ot, P[:, 0].shape)
    od = np.broadcast_to(od, P[:, 0].shape)
    a, b, c, d = J[:, 0, 0], J[:, 0, 1], J[:, 1, 0], J[:, 1, 1]
    tr, det = a + d, a * d - b * c
    t_scale = np.maximum(np.abs(ot), np.abs(a) + np.abs(d))
    d_scale = np.maximum(np.abs(od), np.abs(a * d) + np.abs(b * c))
    with np.errstate(all="ignore"):
        t_err = np.where(t_scale > 0, np.abs(tr - ot) / t_scale, np.abs(tr - ot))
        d_err = np.where(d_scale > 0, np.abs(det - od) / d_scale, np.abs(det - od))
    return {
        "points": int(len(P)),
        "valid": bool(ok.all() and np.all(ook)),
        "trace_max_rel_err": float(np.max(t_err)),
        "det_max_rel_err": float(np.max(d_err)),
        "trace": tr,
        "det": det,
        "oracle_trace": ot,
        "oracle_det": od,
        "P": P,
    }


def _match_roots(found, expected, atol=ROOT_ATOL) -> bool:
    if len(found) != len(expected):
        return False
    used = set()
    for e in expected:
        hit = [i for i, f in enumerate(found) if i not in used and math.dist(f, e) <= atol]
        if not hit:
            return False
        used.add(hit[0])
    return True


@dataclass
class EntryResult:
    name: str
    checks: dict = field(default_factory=dict)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "checks": self.checks, "info": self.info}


def run_entry(entry: CorpusEntry, params: VerdictParams = None, seed: int = 42) -> EntryResult:
    params = params or VerdictParams(seed=seed)
    res = EntryResult(entry.name)
    try:
        err = oracle_errors(entry, seed=seed)
    except Exception as e:  # a broken oracle is a failed check, not a crash
        res.checks["oracle"] = False
        res.info["oracle_error"] = f"{type(e).__name__}: {e}"
        err = None
    if err is not None:
        res.checks["oracle"] = bool(
            err["valid"] and err["trace_max_rel_err"] <= ORACLE_RTOL and err["det_max_rel_err"] <= ORACLE_RTOL
        )
        res.info["trace_max_rel_err"] = err["trace_max_rel_err"]
        res.info["det_max_rel_err"] = err["det_max_rel_err"]

    X = entry.field()
    region = Region(*entry.region)
    ev = Evidence(X, region, params)
    verdicts = all_verdicts(X, region, evidence=ev)
    res.checks["field_class"] = ev.survey.field_class is entry.field_class
    res.info["field_class"] = ev.survey.field_class.value
    sing = ev.singularities
    res.checks["trichotomy"] = sing.trichotomy_class is entry.trichotomy
    res.info["trichotomy"] = sing.trichotomy_class.value
    if entry.singularities:
        found = [s.location for s in sing.isolated]
        res.checks["singularities"] = _match_roots(found, entry.singularities)
        res.info["singularities"] = [list(p) for p in found]
    label = overall(verdicts)
    res.checks["verdict"] = label == entry.verdict
    res.info["verdict"] = label
    return res


def run_corpus(names=None, entries=ENTRIES, params: VerdictParams = None, seed: int = 42) -> list:
    chosen = [e for e in entries if names is None or e.name in names]
    return [run_entry(e, params, seed) for e in chosen]
