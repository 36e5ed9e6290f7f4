"""Elliptical domain, boundary discretization, and observed/unobserved boundary split.

The boundary of the ellipse (a1*cos(theta), a2*sin(theta)) is discretized with
nodes equidistant in arc length.  Arc lengths are computed by adaptive
quadrature of the parametrization speed; node angles are found by Newton
iteration on the cumulative arc-length function.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.spatial import ConvexHull

from .errors import ParameterError

TWO_PI = 2.0 * np.pi

# Newton tolerance for arc-length node placement.
_ARC_TOL = 1e-10


@dataclass(frozen=True)
class EllipseDomain:
    """Ellipse centered at the origin with semi-axes a1 (x) and a2 (y)."""

    a1: float
    a2: float

    def __post_init__(self):
        if self.a1 <= 0 or self.a2 <= 0:
            raise ParameterError("semi-axes must be positive")

    def boundary_point(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.a1 * np.cos(theta), self.a2 * np.sin(theta)], axis=-1)

    def boundary_speed(self, theta):
        """|d/dtheta (a1 cos, a2 sin)|, the arc-length density."""
        theta = np.asarray(theta, dtype=float)
        return np.sqrt((self.a1 * np.sin(theta)) ** 2 + (self.a2 * np.cos(theta)) ** 2)

    def outward_normal(self, theta):
        theta = np.asarray(theta, dtype=float)
        raw = np.stack([np.cos(theta) / self.a1, np.sin(theta) / self.a2], axis=-1)
        return raw / np.linalg.norm(raw, axis=-1, keepdims=True)

    def contains(self, points, margin: float = 0.0):
        """Strict interior test, vectorized over trailing point axis."""
        pts = np.asarray(points, dtype=float)
        q = (pts[..., 0] / self.a1) ** 2 + (pts[..., 1] / self.a2) ** 2
        return q < 1.0 - margin

    def perimeter(self) -> float:
        val, _ = quad(self.boundary_speed, -np.pi, np.pi, epsabs=1e-12, epsrel=1e-12, limit=200)
        return val


@dataclass(frozen=True)
class BoundaryGeometry:
    """Arc-length-equidistant boundary nodes plus the shared time grid.

    positions/normals are (N, 2); thetas/weights are (N,).  Weights are the
    uniform midpoint-rule arc weights perimeter/N.  Samples of boundary data
    live on times k*dt for k = 1..n_time, with t_max = n_time*dt.
    """

    domain: EllipseDomain
    thetas: np.ndarray
    positions: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    spacing_target: float
    dt: float
    n_time: int

    @property
    def n_nodes(self) -> int:
        return self.thetas.shape[0]

    @property
    def t_max(self) -> float:
        return self.n_time * self.dt

    @property
    def times(self) -> np.ndarray:
        """Sample times k*dt, k = 1..n_time."""
        return self.dt * np.arange(1, self.n_time + 1)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(struct.pack(
            "<ddddq", self.domain.a1, self.domain.a2,
            self.spacing_target, self.dt, self.n_time,
        ))
        h.update(np.ascontiguousarray(self.thetas).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class BoundarySplit:
    """Partition of boundary nodes into observed (gamma1) and missing (gamma2) parts.

    gamma2 is the set of nodes whose angle lies in [theta_lo, theta_hi) after
    wrapping to [-pi, pi).  The detection region is cached as the convex hull
    of the gamma1 node positions (CCW vertex list).
    """

    geometry: BoundaryGeometry
    theta_lo: float
    theta_hi: float
    gamma1_idx: np.ndarray
    gamma2_idx: np.ndarray
    hull_vertices: np.ndarray = field(repr=False)

    @property
    def gamma2_node_fraction(self) -> float:
        return len(self.gamma2_idx) / self.geometry.n_nodes

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(self.geometry.fingerprint().encode())
        h.update(struct.pack("<dd", self.theta_lo, self.theta_hi))
        return h.hexdigest()[:16]


def _cumulative_arc(domain: EllipseDomain, theta_a: float, theta_b: float) -> float:
    val, _ = quad(domain.boundary_speed, theta_a, theta_b, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def build_boundary(domain: EllipseDomain, spacing_target: float, dt: float,
                   t_max: float) -> BoundaryGeometry:
    """Discretize the ellipse boundary with nodes equidistant in arc length.

    The node count is round(perimeter / spacing_target); every node carries
    the uniform weight perimeter / count.  The time grid has
    n_time = round(t_max / dt) samples at k*dt, k >= 1.
    """
    if spacing_target <= 0 or dt <= 0:
        raise ParameterError("spacing_target and dt must be positive")
    if t_max < dt:
        raise ParameterError("t_max must be at least dt")

    perimeter = domain.perimeter()
    n_nodes = int(round(perimeter / spacing_target))
    if n_nodes < 3:
        raise ParameterError("spacing_target too coarse: fewer than 3 nodes")
    ds = perimeter / n_nodes

    thetas = np.empty(n_nodes)
    thetas[0] = -np.pi
    theta_prev = -np.pi
    arc_prev = 0.0  # cumulative arc length at the previous node
    for k in range(1, n_nodes):
        target = k * ds
        theta = theta_prev + ds / domain.boundary_speed(theta_prev)
        for _ in range(60):
            arc = arc_prev + _cumulative_arc(domain, theta_prev, theta)
            resid = arc - target
            if abs(resid) < _ARC_TOL:
                break
            theta -= resid / domain.boundary_speed(theta)
        else:
            raise RuntimeError("arc-length Newton iteration did not converge")
        thetas[k] = theta
        arc_prev = arc
        theta_prev = theta

    # wrap to [-pi, pi)
    thetas = (thetas + np.pi) % TWO_PI - np.pi

    n_time = int(round(t_max / dt))
    return BoundaryGeometry(
        domain=domain,
        thetas=thetas,
        positions=domain.boundary_point(thetas),
        normals=domain.outward_normal(thetas),
        weights=np.full(n_nodes, ds),
        spacing_target=spacing_target,
        dt=dt,
        n_time=n_time,
    )


def split_boundary(geom: BoundaryGeometry, theta_interval) -> BoundarySplit:
    """Split boundary nodes into gamma1 (observed) and gamma2 (missing).

    theta_interval is a half-open [lo, hi) in radians; its length must lie
    strictly between 0 and 2*pi.  Membership is evaluated after wrapping
    angles to [-pi, pi).
    """
    theta_lo, theta_hi = float(theta_interval[0]), float(theta_interval[1])
    length = theta_hi - theta_lo
    if not 0.0 < length < TWO_PI:
        raise ParameterError("interval length must be in (0, 2*pi)")

    offset = (geom.thetas - theta_lo) % TWO_PI
    in_gamma2 = offset < length
    gamma2_idx = np.flatnonzero(in_gamma2)
    gamma1_idx = np.flatnonzero(~in_gamma2)
    if len(gamma1_idx) < 3:
        raise ParameterError("gamma1 has fewer than 3 nodes; hull undefined")

    hull = ConvexHull(geom.positions[gamma1_idx])
    hull_vertices = geom.positions[gamma1_idx][hull.vertices]  # CCW for 2D

    return BoundarySplit(
        geometry=geom,
        theta_lo=theta_lo,
        theta_hi=theta_hi,
        gamma1_idx=gamma1_idx,
        gamma2_idx=gamma2_idx,
        hull_vertices=hull_vertices,
    )


def detection_region_contains(split: BoundarySplit, point) -> bool:
    """True iff point lies strictly inside the convex hull of the gamma1 nodes."""
    p = np.asarray(point, dtype=float)
    v = split.hull_vertices
    edges = np.roll(v, -1, axis=0) - v
    rel = p[None, :] - v
    cross = edges[:, 0] * rel[:, 1] - edges[:, 1] * rel[:, 0]
    return bool(np.all(cross > 0.0))
