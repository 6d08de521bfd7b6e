"""SVG phase portraits: streamlines plus singularity markers."""

from __future__ import annotations

import xml.etree.ElementTree as ET

import numpy as np

from .exprcore import FieldExpr
from .flow import FlowParams, integrate
from .singular import LocalClass, SingularityReport, find_singularities
from .spectral import Region

SVG_NS = "http://www.w3.org/2000/svg"

COLORS = {
    LocalClass.HYPERBOLIC_SINK: "#1f77b4",
    LocalClass.HYPERBOLIC_SOURCE: "#d62728",
    LocalClass.HYPERBOLIC_SADDLE: "#ff7f0e",
    LocalClass.SIMPLE_CENTER_TYPE: "#2ca02c",
    LocalClass.SIMPLE_OTHER: "#9467bd",
    LocalClass.DEGENERATE: "#7f7f7f",
}


class ViewMap:
    """Affine map from the region to SVG user units (y axis flipped)."""

    def __init__(self, region: Region, width: float):
        self.region = region
        self.width = width
        self.scale = width / (region.xmax - region.xmin)
        self.height = self.scale * (region.ymax - region.ymin)

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        u = (pts[:, 0] - self.region.xmin) * self.scale
        v = (self.region.ymax - pts[:, 1]) * self.scale
        return np.c_[u, v]


def streamlines(
    field: FieldExpr, region: Region, seeds_per_side: int = 10, t_max: float = 20.0, max_steps: int = 400
) -> list:
    """Forward and backward trajectories from a midpoint seed grid, clipped to ``region``."""
    params = FlowParams(bounds=region, budget=max_steps, rtol=1e-6, atol=1e-9)
    X, Y = region.midpoints(seeds_per_side)
    lines = []
    for p in zip(X.ravel(), Y.ravel()):
        for direction in (1, -1):
            tr = integrate(field, p, t_max, params, direction)
            if len(tr.points) >= 2:
                lines.append(tr.points)
    return lines


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".") if v != 0 else "0"


def render_svg(
    field: FieldExpr,
    region: Region,
    singularities: SingularityReport = None,
    width: float = 600.0,
    seeds_per_side: int = 10,
) -> str:
    vm = ViewMap(region, width)
    ET.register_namespace("", SVG_NS)
    root = ET.Element(
        f"{{{SVG_NS}}}svg",
        {
            "viewBox": f"0 0 {_fmt(vm.width)} {_fmt(vm.height)}",
            "width": _fmt(vm.width),
            "height": _fmt(vm.height),
        },
    )
    ET.SubElement(root, f"{{{SVG_NS}}}rect", {"x": "0", "y": "0", "width": _fmt(vm.width),
                                               "height": _fmt(vm.height), "fill": "white"})
    clip = ET.SubElement(ET.SubElement(root, f"{{{SVG_NS}}}defs"), f"{{{SVG_NS}}}clipPath", {"id": "frame"})
    ET.SubElement(clip, f"{{{SVG_NS}}}rect", {"x": "0", "y": "0", "width": _fmt(vm.width), "height": _fmt(vm.height)})
    g = ET.SubElement(root, f"{{{SVG_NS}}}g", {"fill": "none", "stroke": "#333", "stroke-width": "0.8",
                                                 "class": "streamlines", "clip-path": "url(#frame)"})
    for pts in streamlines(field, region, seeds_per_side):
        uv = vm(pts)
        d = "M" + " L".join(f"{_fmt(a)} {_fmt(b)}" for a, b in uv)
        ET.SubElement(g, f"{{{SVG_NS}}}path", {"d": d})

    if singularities is None:
        singularities = find_singularities(field, region, 100)
    gs = ET.SubElement(root, f"{{{SVG_NS}}}g", {"class": "singularities", "stroke": "black", "stroke-width": "0.5"})
    for s in singularities.isolated:
        (u, v), = vm(np.array(s.location))
        ET.SubElement(gs, f"{{{SVG_NS}}}circle", {"cx": _fmt(u), "cy": _fmt(v), "r": "4",
                                                    "fill": COLORS[s.local_class], "class": s.local_class.value})
    for p in singularities.chain_points:
        (u, v), = vm(np.array(p))
        ET.SubElement(gs, f"{{{SVG_NS}}}circle", {"cx": _fmt(u), "cy": _fmt(v), "r": "1.5",
                                                    "fill": COLORS[LocalClass.DEGENERATE], "class": "nondiscrete"})
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"
