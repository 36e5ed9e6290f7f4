"""Discrete norms and error factors: boundary-time inner products, the grid
L2 reconstruction error, and distances to training-function spans."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve
from scipy.linalg.lapack import dpotrf

from .errors import DataMismatchError, ParameterError, SingularTrainingSetError
from .forward import WaveData
from .geometry import BoundaryGeometry
from .phantoms import GridSpec, ImageField, Phantom, rasterize


def boundary_time_inner(u: WaveData, v: WaveData, geom: BoundaryGeometry) -> float:
    """Discrete L2(boundary x time) inner product: sum w_i * dt * u_i(t) * v_i(t)."""
    if u.part is not v.part or u.samples.shape != v.samples.shape:
        raise DataMismatchError("inner product requires matching parts and shapes")
    if u.fingerprint != v.fingerprint:
        raise DataMismatchError("inner product across different geometries")
    w = geom.weights[u.node_idx] * u.dt
    return float(np.sum((u.samples * v.samples) * w[:, None]))


def boundary_time_norm(u: WaveData, geom: BoundaryGeometry) -> float:
    return float(np.sqrt(max(boundary_time_inner(u, u, geom), 0.0)))


def e2_error(fhat: ImageField, f: ImageField) -> float:
    """Grid L2 distance sqrt(sum_masked |f - fhat|^2 * h^2)."""
    if not fhat.same_grid(f):
        raise DataMismatchError("error between fields on different grids")
    diff = (f.values - fhat.values)[f.domain_mask]
    return float(np.sqrt(np.sum(diff * diff) * fhat.h ** 2))


def grid_norm(f: ImageField) -> float:
    vals = f.values[f.domain_mask]
    return float(np.sqrt(np.sum(vals * vals) * f.h ** 2))


def subspace_distance(f: Phantom, training, grid: GridSpec) -> float:
    """Distance from f to the span of the training phantoms in the grid norm.

    Computed from the residual of the orthogonal projection: rasterize
    everything on the grid, solve the image-space Gram system (weight h^2
    over masked-in cells), and take the norm of f minus its projection.
    An empty training list gives the norm of f itself.
    """
    f_field = rasterize(f, grid)
    mask = f_field.domain_mask
    h2 = grid.h ** 2
    rf = f_field.values[mask]
    training = list(training)
    if not training:
        return float(np.sqrt(np.sum(rf * rf) * h2))

    basis = np.stack([rasterize(g, grid).values[mask] for g in training])
    gram = h2 * (basis @ basis.T)
    gram = 0.5 * (gram + gram.T)
    c, info = dpotrf(gram, lower=1)
    if info == 0:
        d = np.diagonal(c)
        if d.min() ** 2 <= len(training) * np.finfo(float).eps * d.max() ** 2:
            info = int(np.argmin(d)) + 1
    if info != 0:
        raise SingularTrainingSetError(minor_index=int(info), ridge=0.0)
    rhs = h2 * (basis @ rf)
    coeffs = cho_solve((np.tril(c), True), rhs)
    residual = rf - coeffs @ basis
    return float(np.sqrt(np.sum(residual * residual) * h2))


@dataclass
class ErrorReport:
    """Per-variant reconstruction errors and span-distance factors.

    e2_per_variant maps variant name (e.g. "full", "zero", "8x4") to its grid
    error; e_n_factors maps training-set size n to the distance from the test
    phantom to that training span (n = 0 meaning the norm of the phantom).
    metadata carries the variant -> n association and run parameters.
    """

    e2_per_variant: dict
    e_n_factors: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for label, val in {**self.e2_per_variant, **self.e_n_factors}.items():
            if not np.isfinite(val) or val < 0:
                raise ParameterError(f"error value for {label!r} must be finite and >= 0")
