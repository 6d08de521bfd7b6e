"""Assembly of the JSON analysis report."""

from __future__ import annotations

import json
import math
import time

import numpy as np

from . import __version__
from .exprcore import FieldExpr
from .spectral import Region
from .topo import IndexComputationError, local_index
from .verdict import Evidence, VerdictParams, all_verdicts, overall


def _jsonable(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    if hasattr(o, "to_dict"):
        return o.to_dict()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable, allow_nan=True) + "\n"


def index_radius(z, others, region: Region) -> float:
    """Circle radius around ``z`` that keeps every other known zero well outside."""
    r = 1e-2 * region.diameter
    for q in others:
        d = math.dist(z, q)
        if d > 0:
            r = min(r, 0.4 * d)
    return r


def singularity_indices(field: FieldExpr, ev: Evidence) -> list:
    sing = ev.singularities
    pts = [s.location for s in sing.isolated]
    extra = [tuple(p) for p in sing.chain_points] + [tuple(p) for p in sing.boundary_candidates]
    out = []
    for s in sing.isolated:
        r = index_radius(s.location, pts + extra, ev.region)
        entry = {"location": list(s.location), "radius": r, "expected": s.index}
        try:
            res = local_index(field, s.location, r, ev.params.tol_zero)
            entry.update(res.to_dict())
        except IndexComputationError as e:
            entry["index"] = None
            entry["error"] = f"{type(e).__name__}: {e}"
        out.append(entry)
    return out


def build_report(
    field: FieldExpr, region: Region, params: VerdictParams = None, timing: bool = False
) -> dict:
    params = params or VerdictParams()
    t0 = time.perf_counter()
    ev = Evidence(field, region, params)
    verdicts = all_verdicts(field, region, evidence=ev)
    report = {
        "tool": "planarfield",
        "version": __version__,
        "field": {"fx": field.source_strings[0], "fy": field.source_strings[1]},
        "parameters": {
            "region": region.as_list(),
            "grid": params.grid,
            "tol_zero": params.tol_zero,
            "tau_ae": params.tau_ae,
            "seed": params.seed,
            "k_traj": params.k_traj,
        },
        "spectral": ev.survey.to_dict(),
        "singularities": ev.singularities.to_dict(),
        "structure": ev.structure.to_dict(),
        "indices": singularity_indices(field, ev),
        "verdicts": {k: v.to_dict() for k, v in verdicts.items()},
        "conclusion": overall(verdicts),
    }
    if timing:
        report["wall_time"] = time.perf_counter() - t0
    return report
