"""Jacobian spectra: pointwise classes, lattice surveys and norm bounds."""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage, optimize, spatial

from .exprcore import DomainError, FieldExpr

TOL_ZERO = 1e-9
TAU_AE = 0.01


class SpectralClass(str, enum.Enum):
    HURWITZ = "Hurwitz"
    PURELY_IMAGINARY = "PurelyImaginary"
    SADDLE_TYPE = "SaddleType"
    EXPANDING = "Expanding"
    DEGENERATE = "Degenerate"


class FieldClass(str, enum.Enum):
    HURWITZ_AE = "HurwitzAE"
    PURELY_IMAGINARY_AE = "PurelyImaginaryAE"
    MIXED = "Mixed"


def classify_trace_det(trace: float, det: float, tol_zero: float = TOL_ZERO) -> SpectralClass:
    if det < -tol_zero:
        return SpectralClass.SADDLE_TYPE
    if det > tol_zero:
        if trace < -tol_zero:
            return SpectralClass.HURWITZ
        if trace > tol_zero:
            return SpectralClass.EXPANDING
        return SpectralClass.PURELY_IMAGINARY
    return SpectralClass.DEGENERATE


# integer codes for the vectorised path, in enum order
_CODES = list(SpectralClass)


def classify_arrays(trace: np.ndarray, det: np.ndarray, tol_zero: float = TOL_ZERO) -> np.ndarray:
    code = np.full(np.shape(trace), _CODES.index(SpectralClass.DEGENERATE), dtype=np.int8)
    pos = det > tol_zero
    code[det < -tol_zero] = _CODES.index(SpectralClass.SADDLE_TYPE)
    code[pos & (trace < -tol_zero)] = _CODES.index(SpectralClass.HURWITZ)
    code[pos & (trace > tol_zero)] = _CODES.index(SpectralClass.EXPANDING)
    code[pos & (np.abs(trace) <= tol_zero)] = _CODES.index(SpectralClass.PURELY_IMAGINARY)
    return code


def eigenvalues(trace: float, det: float) -> tuple[complex, complex]:
    """Roots of ``l^2 - trace*l + det``; the smaller real root via Vieta to avoid cancellation."""
    disc = trace * trace - 4.0 * det
    if disc < 0:
        s = cmath.sqrt(disc)
        return complex((trace + s) / 2), complex((trace - s) / 2)
    s = math.sqrt(disc)
    big = (trace + math.copysign(s, trace)) / 2
    if big == 0.0:
        return 0j, 0j
    small = det / big
    return (complex(big), complex(small)) if big >= small else (complex(small), complex(big))


@dataclass(frozen=True)
class SpectralSample:
    p: tuple
    trace: float
    det: float
    eigenvalues: tuple
    spectral_class: SpectralClass

    def to_dict(self) -> dict:
        return {
            "p": list(self.p),
            "trace": self.trace,
            "det": self.det,
            "eigenvalues": [[z.real, z.imag] for z in self.eigenvalues],
            "class": self.spectral_class.value,
        }


def classify_point(field: FieldExpr, p, tol_zero: float = TOL_ZERO) -> SpectralSample:
    J = field.jacobian(p)
    trace = float(J[0, 0] + J[1, 1])
    det = float(J[0, 0] * J[1, 1] - J[0, 1] * J[1, 0])
    return SpectralSample(
        (float(p[0]), float(p[1])), trace, det, eigenvalues(trace, det), classify_trace_det(trace, det, tol_zero)
    )


@dataclass(frozen=True)
class Region:
    xmin: float
    xmax: float
    ymin: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ValueError(f"degenerate region {self}")

    @classmethod
    def parse(cls, text: str) -> "Region":
        parts = [float(t) for t in text.split(",")]
        if len(parts) != 4:
            raise ValueError("region needs xmin,xmax,ymin,ymax")
        return cls(*parts)

    @property
    def diameter(self) -> float:
        return math.hypot(self.xmax - self.xmin, self.ymax - self.ymin)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    def contains(self, p, margin: float = 0.0) -> bool:
        return (
            self.xmin - margin <= p[0] <= self.xmax + margin and self.ymin - margin <= p[1] <= self.ymax + margin
        )

    def midpoints(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Offset lattice: cell midpoints of an n-by-n partition, as (Y, X) meshes."""
        dx = (self.xmax - self.xmin) / n
        dy = (self.ymax - self.ymin) / n
        xs = self.xmin + (np.arange(n) + 0.5) * dx
        ys = self.ymin + (np.arange(n) + 0.5) * dy
        X, Y = np.meshgrid(xs, ys)
        return X, Y

    def shifted(self, shift) -> "Region":
        return Region(self.xmin + shift[0], self.xmax + shift[0], self.ymin + shift[1], self.ymax + shift[1])

    def as_list(self) -> list:
        return [self.xmin, self.xmax, self.ymin, self.ymax]


@dataclass
class FieldSpectralReport:
    region: Region
    grid: int
    counts: dict
    unknown: int
    field_class: FieldClass
    failing_fraction: float
    failing_boxes: list
    tau_ae: float
    tol_zero: float
    hurwitz_failing_fraction: float
    imaginary_failing_fraction: float
    det_positive_fraction: float
    det_negative_samples: int
    det_positive_samples: int
    # raw lattice data for downstream modules; not serialised
    trace: np.ndarray = field(default=None, repr=False)
    det: np.ndarray = field(default=None, repr=False)
    codes: np.ndarray = field(default=None, repr=False)

    @property
    def valid(self) -> int:
        return self.grid * self.grid - self.unknown

    def to_dict(self) -> dict:
        return {
            "region": self.region.as_list(),
            "grid": self.grid,
            "counts": {k.value: v for k, v in self.counts.items()},
            "unknown": self.unknown,
            "field_class": self.field_class.value,
            "failing_fraction": self.failing_fraction,
            "failing_boxes": self.failing_boxes,
            "tau_ae": self.tau_ae,
            "tol_zero": self.tol_zero,
            "hurwitz_failing_fraction": self.hurwitz_failing_fraction,
            "imaginary_failing_fraction": self.imaginary_failing_fraction,
            "det_positive_fraction": self.det_positive_fraction,
        }


def _boxes(bad: np.ndarray, region: Region, n: int, limit: int = 64) -> list:
    labels, count = ndimage.label(bad)
    if count == 0:
        return []
    dx = (region.xmax - region.xmin) / n
    dy = (region.ymax - region.ymin) / n
    out = []
    for sl in ndimage.find_objects(labels)[:limit]:
        rows, cols = sl
        out.append(
            [
                region.xmin + cols.start * dx,
                region.xmin + cols.stop * dx,
                region.ymin + rows.start * dy,
                region.ymin + rows.stop * dy,
            ]
        )
    return out


def classify_field(codes: np.ndarray, valid: np.ndarray, tau_ae: float) -> tuple[FieldClass, float, float]:
    nvalid = int(valid.sum())
    if nvalid == 0:
        return FieldClass.MIXED, 1.0, 1.0
    hur = _CODES.index(SpectralClass.HURWITZ)
    imag = _CODES.index(SpectralClass.PURELY_IMAGINARY)
    h_fail = float(np.count_nonzero(valid & (codes != hur))) / nvalid
    i_fail = float(np.count_nonzero(valid & (codes != imag))) / nvalid
    if h_fail <= tau_ae:
        return FieldClass.HURWITZ_AE, h_fail, i_fail
    if i_fail <= tau_ae:
        return FieldClass.PURELY_IMAGINARY_AE, h_fail, i_fail
    return FieldClass.MIXED, h_fail, i_fail


def spectral_survey(
    field: FieldExpr, region: Region, n: int = 200, tau_ae: float = TAU_AE, tol_zero: float = TOL_ZERO
) -> FieldSpectralReport:
    """Classify DX on the n-by-n midpoint lattice of ``region``."""
    if n < 2:
        raise ValueError("grid must be at least 2")
    X, Y = region.midpoints(n)
    _, jac, valid = field.jacobian_many(X, Y)
    trace = jac[..., 0, 0] + jac[..., 1, 1]
    det = jac[..., 0, 0] * jac[..., 1, 1] - jac[..., 0, 1] * jac[..., 1, 0]
    codes = classify_arrays(np.where(valid, trace, 0.0), np.where(valid, det, 0.0), tol_zero)
    counts = {c: int(np.count_nonzero(valid & (codes == i))) for i, c in enumerate(_CODES)}
    field_class, h_fail, i_fail = classify_field(codes, valid, tau_ae)
    if field_class is FieldClass.PURELY_IMAGINARY_AE:
        target, failing = _CODES.index(SpectralClass.PURELY_IMAGINARY), i_fail
    else:
        target, failing = _CODES.index(SpectralClass.HURWITZ), h_fail
    nvalid = int(valid.sum())
    det_pos = int(np.count_nonzero(valid & (det > tol_zero)))
    return FieldSpectralReport(
        region=region,
        grid=n,
        counts=counts,
        unknown=int(n * n - nvalid),
        field_class=field_class,
        failing_fraction=failing,
        failing_boxes=_boxes(valid & (codes != target), region, n),
        tau_ae=tau_ae,
        tol_zero=tol_zero,
        hurwitz_failing_fraction=h_fail,
        imaginary_failing_fraction=i_fail,
        det_positive_fraction=det_pos / nvalid if nvalid else 0.0,
        det_negative_samples=int(np.count_nonzero(valid & (det < -tol_zero))),
        det_positive_samples=det_pos,
        trace=np.where(valid, trace, np.nan),
        det=np.where(valid, det, np.nan),
        codes=np.where(valid, codes, -1),
    )


def norm_infimum(field: FieldExpr, rho: float, r_max: float, m: int = 200, seed: int = 42) -> float:
    """Estimate inf ||X(p)|| over the annulus rho <= ||p|| <= r_max.

    Random starting points are each refined by a bounded least-squares descent
    on ``X`` in polar coordinates; the smallest refined norm is returned.
    """
    if not 0 < rho < r_max:
        raise ValueError("need 0 < rho < r_max")
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(rho * rho, r_max * r_max, m))
    th = rng.uniform(0.0, 2.0 * math.pi, m)

    def resid(z):
        return np.array(field.eval((z[0] * math.cos(z[1]), z[0] * math.sin(z[1]))))

    def jac(z):
        c, s = math.cos(z[1]), math.sin(z[1])
        J = field.jacobian((z[0] * c, z[0] * s))
        return J @ np.array([[c, -z[0] * s], [s, z[0] * c]])

    best = math.inf
    for r0, t0 in zip(r, th):
        try:
            start = float(np.linalg.norm(resid((r0, t0))))
        except DomainError:
            continue
        best = min(best, start)
        try:
            sol = optimize.least_squares(
                resid,
                np.array([r0, t0]),
                jac=jac,
                bounds=([rho, -np.inf], [r_max, np.inf]),
                xtol=1e-15,
                ftol=1e-15,
                gtol=1e-15,
                max_nfev=200,
                method="trf",
            )
            best = min(best, float(np.linalg.norm(resid(sol.x))))
        except DomainError:
            continue
    return best


def injectivity_evidence(
    field: FieldExpr,
    region: Region,
    n: int = 5000,
    seed: int = 42,
    tol_det: float = TOL_ZERO,
    image_radius: float = 1e-9,
    point_radius: float = 1e-6,
) -> dict:
    """Sampled no-collision test for X restricted to {det DX > tol_det}.

    Returns the number of image pairs closer than ``image_radius`` whose
    preimages are farther apart than ``point_radius``.  Not a proof.
    """
    rng = np.random.default_rng(seed)
    xs = rng.uniform(region.xmin, region.xmax, n)
    ys = rng.uniform(region.ymin, region.ymax, n)
    vals, jac, valid = field.jacobian_many(xs, ys)
    det = jac[:, 0, 0] * jac[:, 1, 1] - jac[:, 0, 1] * jac[:, 1, 0]
    keep = valid & (det > tol_det)
    pts = np.column_stack([xs, ys])[keep]
    imgs = vals[keep]
    pairs = spatial.cKDTree(imgs).query_pairs(image_radius, output_type="ndarray")
    collisions = [
        (int(i), int(j)) for i, j in pairs if np.linalg.norm(pts[i] - pts[j]) > point_radius
    ]
    return {"samples": int(keep.sum()), "close_image_pairs": int(len(pairs)), "collisions": collisions}
