"""Initial-pressure phantoms: indicator functions and their rasterization.

Phantoms are symbolic and evaluated pointwise; boxes are half-open
([lo, hi) on both axes) so that a tiling partition covers every point
exactly once.  The ellipse indicator uses the strict interior.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ParameterError
from .geometry import EllipseDomain


@dataclass(frozen=True)
class SquareIndicator:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float

    def __post_init__(self):
        if self.x_hi <= self.x_lo or self.y_hi <= self.y_lo:
            raise ParameterError("box extents must be positive")

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        x, y = pts[..., 0], pts[..., 1]
        inside = (x >= self.x_lo) & (x < self.x_hi) & (y >= self.y_lo) & (y < self.y_hi)
        return inside.astype(float)

    def bounding_box(self):
        return (self.x_lo, self.x_hi, self.y_lo, self.y_hi)


@dataclass(frozen=True)
class EllipseIndicator:
    center: tuple
    semi_a: float
    semi_b: float
    rotation: float = 0.0

    def __post_init__(self):
        if self.semi_a <= 0 or self.semi_b <= 0:
            raise ParameterError("ellipse semi-axes must be positive")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        dx = pts[..., 0] - self.center[0]
        dy = pts[..., 1] - self.center[1]
        # rotate by -rotation into the axis-aligned frame
        u = c * dx + s * dy
        v = -s * dx + c * dy
        q = (u / self.semi_a) ** 2 + (v / self.semi_b) ** 2
        return (q < 1.0).astype(float)

    def bounding_box(self):
        c, s = np.cos(self.rotation), np.sin(self.rotation)
        ex = np.hypot(self.semi_a * c, self.semi_b * s)
        ey = np.hypot(self.semi_a * s, self.semi_b * c)
        x0, y0 = self.center
        return (x0 - ex, x0 + ex, y0 - ey, y0 + ey)


@dataclass(frozen=True)
class WeightedSum:
    """Flat linear combination of indicator phantoms."""

    terms: tuple  # of (coefficient, SquareIndicator | EllipseIndicator)

    def __post_init__(self):
        flat = []
        for coef, p in self.terms:
            if isinstance(p, WeightedSum):
                flat.extend((coef * c2, p2) for c2, p2 in p.terms)
            else:
                flat.append((float(coef), p))
        object.__setattr__(self, "terms", tuple(flat))

    def evaluate(self, points):
        pts = np.asarray(points, dtype=float)
        out = np.zeros(pts.shape[:-1], dtype=float)
        for coef, p in self.terms:
            out += coef * p.evaluate(pts)
        return out

    def bounding_box(self):
        boxes = [p.bounding_box() for coef, p in self.terms if coef != 0.0]
        if not boxes:
            return (0.0, 0.0, 0.0, 0.0)
        b = np.array(boxes)
        return (b[:, 0].min(), b[:, 1].max(), b[:, 2].min(), b[:, 3].max())


Phantom = Union[SquareIndicator, EllipseIndicator, WeightedSum]


def eval_phantom(p: Phantom, points) -> np.ndarray:
    """Evaluate a phantom at points of shape (..., 2); returns shape (...)."""
    return p.evaluate(points)


def bounding_circle(p: Phantom):
    """(center, radius) of a circle containing the support (from the bounding box)."""
    x_lo, x_hi, y_lo, y_hi = p.bounding_box()
    cx, cy = 0.5 * (x_lo + x_hi), 0.5 * (y_lo + y_hi)
    return np.array([cx, cy]), 0.5 * np.hypot(x_hi - x_lo, y_hi - y_lo)


def distance_to_support(p: Phantom, point) -> float:
    """Euclidean distance from point to the phantom support (0 if inside).

    Exact for boxes; computed on a dense boundary sampling plus local
    refinement for ellipses; the minimum over nonzero terms for sums.
    """
    pt = np.asarray(point, dtype=float)
    if isinstance(p, SquareIndicator):
        dx = max(p.x_lo - pt[0], 0.0, pt[0] - p.x_hi)
        dy = max(p.y_lo - pt[1], 0.0, pt[1] - p.y_hi)
        return float(np.hypot(dx, dy))
    if isinstance(p, EllipseIndicator):
        if p.evaluate(pt) > 0:
            return 0.0
        psi = np.linspace(0.0, 2.0 * np.pi, 8192, endpoint=False)
        c, s = np.cos(p.rotation), np.sin(p.rotation)
        bx = p.center[0] + p.semi_a * np.cos(psi) * c - p.semi_b * np.sin(psi) * s
        by = p.center[1] + p.semi_a * np.cos(psi) * s + p.semi_b * np.sin(psi) * c
        d = np.hypot(bx - pt[0], by - pt[1])
        # refine around the discrete minimum with a parabolic step
        k = int(np.argmin(d))
        dk = d[(k - 1) % len(d)], d[k], d[(k + 1) % len(d)]
        denom = dk[0] - 2 * dk[1] + dk[2]
        if denom > 0:
            shift = 0.5 * (dk[0] - dk[2]) / denom
            dpsi = psi[1] - psi[0]
            p_ref = psi[k] + shift * dpsi
            bxr = p.center[0] + p.semi_a * np.cos(p_ref) * c - p.semi_b * np.sin(p_ref) * s
            byr = p.center[1] + p.semi_a * np.cos(p_ref) * s + p.semi_b * np.sin(p_ref) * c
            return float(min(dk[1], np.hypot(bxr - pt[0], byr - pt[1])))
        return float(dk[1])
    if isinstance(p, WeightedSum):
        dists = [distance_to_support(q, pt) for coef, q in p.terms if coef != 0.0]
        return float(min(dists)) if dists else np.inf
    raise ParameterError(f"unknown phantom type {type(p)!r}")


def sup_norm(p: Phantom) -> float:
    """Sup norm of the phantom; exact when the summed supports are disjoint."""
    if isinstance(p, (SquareIndicator, EllipseIndicator)):
        return 1.0
    coefs = np.array([c for c, _ in p.terms])
    if coefs.size == 0:
        return 0.0
    # disjoint-support assumption; conservative upper bound otherwise
    return float(np.max(np.abs(coefs)))


def training_partition(box, n_w: int, n_h: int):
    """Tile a half-open box into n_w*n_h half-open squares (indicator phantoms).

    Index order follows column-major numbering: start at the bottom-left cell,
    go bottom to top within a column, then move one column to the right.
    Adjacent cells share identical edge coordinates, so every point of the box
    activates exactly one indicator.
    """
    x_lo, x_hi, y_lo, y_hi = (float(v) for v in box)
    if n_w < 1 or n_h < 1:
        raise ParameterError("partition counts must be >= 1")
    if x_hi <= x_lo or y_hi <= y_lo:
        raise ParameterError("degenerate box")
    x_edges = x_lo + (x_hi - x_lo) * np.arange(n_w + 1) / n_w
    y_edges = y_lo + (y_hi - y_lo) * np.arange(n_h + 1) / n_h
    x_edges[0], x_edges[-1] = x_lo, x_hi
    y_edges[0], y_edges[-1] = y_lo, y_hi
    cells = []
    for col in range(n_w):
        for row in range(n_h):
            cells.append(SquareIndicator(
                x_lo=x_edges[col], x_hi=x_edges[col + 1],
                y_lo=y_edges[row], y_hi=y_edges[row + 1],
            ))
    return cells


@dataclass(frozen=True)
class GridSpec:
    """Cartesian evaluation grid: nodes origin + (i*h, j*h), 0 <= i < nx, 0 <= j < ny."""

    origin: tuple
    h: float
    nx: int
    ny: int
    domain: EllipseDomain | None = None

    def __post_init__(self):
        if self.h <= 0 or self.nx < 1 or self.ny < 1:
            raise ParameterError("invalid grid spec")
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    def points(self) -> np.ndarray:
        """All grid nodes as an (nx, ny, 2) array."""
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        out = np.empty((self.nx, self.ny, 2))
        out[..., 0] = x[:, None]
        out[..., 1] = y[None, :]
        return out

    def mask(self) -> np.ndarray:
        if self.domain is None:
            return np.ones((self.nx, self.ny), dtype=bool)
        return self.domain.contains(self.points())


@dataclass
class ImageField:
    """Scalar field sampled on a GridSpec; masked-out cells carry no meaning."""

    origin: tuple
    h: float
    values: np.ndarray
    domain_mask: np.ndarray

    def __post_init__(self):
        if self.values.shape != self.domain_mask.shape:
            raise ParameterError("values and mask shapes differ")

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    def same_grid(self, other: "ImageField") -> bool:
        return (self.values.shape == other.values.shape
                and self.origin == other.origin
                and self.h == other.h
                and bool(np.array_equal(self.domain_mask, other.domain_mask)))


def rasterize(p: Phantom, grid: GridSpec) -> ImageField:
    """Pointwise phantom evaluation on the grid nodes."""
    pts = grid.points()
    return ImageField(
        origin=grid.origin,
        h=grid.h,
        values=eval_phantom(p, pts),
        domain_mask=grid.mask(),
    )


def phantom_to_dict(p: Phantom) -> dict:
    if isinstance(p, SquareIndicator):
        return {"type": "square", "x_lo": p.x_lo, "x_hi": p.x_hi,
                "y_lo": p.y_lo, "y_hi": p.y_hi}
    if isinstance(p, EllipseIndicator):
        return {"type": "ellipse", "center": list(p.center), "semi_a": p.semi_a,
                "semi_b": p.semi_b, "rotation": p.rotation}
    if isinstance(p, WeightedSum):
        return {"type": "sum",
                "terms": [[c, phantom_to_dict(q)] for c, q in p.terms]}
    raise ParameterError(f"unknown phantom type {type(p)!r}")


def phantom_from_dict(spec: dict) -> Phantom:
    kind = spec.get("type")
    if kind == "square":
        return SquareIndicator(spec["x_lo"], spec["x_hi"], spec["y_lo"], spec["y_hi"])
    if kind == "ellipse":
        return EllipseIndicator(tuple(spec["center"]), spec["semi_a"],
                                spec["semi_b"], spec.get("rotation", 0.0))
    if kind == "sum":
        return WeightedSum(tuple((c, phantom_from_dict(q)) for c, q in spec["terms"]))
    raise ParameterError(f"unknown phantom spec type {kind!r}")
