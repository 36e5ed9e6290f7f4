"""Exact circular means of indicator phantoms, vectorized over radii.

The circular mean of an indicator equals (angular measure of the circle arcs
inside the support) / (2*pi).  Crossing angles are computed in closed form:
per-edge arccos/arcsin clipping for boxes, and the roots of a degree-4
polynomial in z = exp(i*beta) (batched companion eigenvalues, then Newton
polishing) for ellipses.  Weighted sums combine term measures linearly, so
linear combinations of phantoms produce exactly linear wave data.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .phantoms import EllipseIndicator, Phantom, SquareIndicator, WeightedSum

TWO_PI = 2.0 * np.pi

# max crossing count kept per radius: 8 for a box (2 per edge), 4 for an ellipse
_BOX_SLOTS = 8
_ELL_SLOTS = 4


def _measures_from_candidates(cand: np.ndarray, inside_fn, center, radii) -> np.ndarray:
    """Total arc measure inside the support from per-radius crossing angles.

    cand is (n, slots) with NaN marking unused slots.  Arcs between
    consecutive crossings are classified by testing their midpoints.
    """
    n, slots = cand.shape
    cnt = np.sum(~np.isnan(cand), axis=1)
    s = np.sort(np.where(np.isnan(cand), np.inf, cand), axis=1)
    nxt = np.concatenate([s[:, 1:], np.full((n, 1), np.inf)], axis=1)
    j = np.arange(slots)[None, :]
    is_last = j == (cnt[:, None] - 1)
    nxt = np.where(is_last, s[:, :1] + TWO_PI, nxt)
    valid = j < cnt[:, None]
    s = np.where(valid, s, 0.0)
    nxt = np.where(valid, nxt, 0.0)
    gaps = nxt - s
    mids = s + 0.5 * gaps

    pts = np.empty((n, slots, 2))
    pts[..., 0] = center[0] + radii[:, None] * np.cos(mids)
    pts[..., 1] = center[1] + radii[:, None] * np.sin(mids)
    inside = inside_fn(pts) & valid
    measure = np.sum(np.where(inside, gaps, 0.0), axis=1)

    # radii with no crossings: the whole circle is inside or outside
    none = cnt == 0
    if np.any(none):
        probe = np.empty((int(none.sum()), 2))
        probe[:, 0] = center[0] + radii[none]
        probe[:, 1] = center[1]
        measure[none] = np.where(inside_fn(probe), TWO_PI, 0.0)
    return measure


def _box_arc_measures(sq: SquareIndicator, center, radii: np.ndarray) -> np.ndarray:
    cx, cy = center
    r = radii
    cand = np.full((len(r), _BOX_SLOTS), np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        col = 0
        for x_edge in (sq.x_lo, sq.x_hi):
            c = np.where(r > 0, (x_edge - cx) / np.where(r > 0, r, 1.0), np.inf)
            ok = np.abs(c) <= 1.0
            base = np.arccos(np.clip(c, -1.0, 1.0))
            for psi in (base, -base):
                y = cy + r * np.sin(psi)
                hit = ok & (y >= sq.y_lo) & (y <= sq.y_hi)
                cand[:, col] = np.where(hit, psi % TWO_PI, np.nan)
                col += 1
        for y_edge in (sq.y_lo, sq.y_hi):
            sv = np.where(r > 0, (y_edge - cy) / np.where(r > 0, r, 1.0), np.inf)
            ok = np.abs(sv) <= 1.0
            base = np.arcsin(np.clip(sv, -1.0, 1.0))
            for psi in (base, np.pi - base):
                x = cx + r * np.cos(psi)
                hit = ok & (x >= sq.x_lo) & (x <= sq.x_hi)
                cand[:, col] = np.where(hit, psi % TWO_PI, np.nan)
                col += 1

    def inside(pts):
        return sq.evaluate(pts) > 0.0

    return _measures_from_candidates(cand, inside, center, radii)


def _ellipse_arc_measures(el: EllipseIndicator, center, radii: np.ndarray) -> np.ndarray:
    """Crossings of circles with the ellipse via the unit-circle quartic.

    In the ellipse frame (offset v, semi-axes a, b) the crossing condition is
    A cos^2(beta) + B cos(beta) + C sin(beta) + D = 0; with z = exp(i*beta)
    this becomes A z^4 + (2B - 2iC) z^3 + (2A + 4D) z^2 + (2B + 2iC) z + A = 0,
    whose unit-modulus roots are the crossing angles.
    """
    ca, sa = np.cos(el.rotation), np.sin(el.rotation)
    dx, dy = center[0] - el.center[0], center[1] - el.center[1]
    v1 = ca * dx + sa * dy
    v2 = -sa * dx + ca * dy
    ia2, ib2 = 1.0 / el.semi_a ** 2, 1.0 / el.semi_b ** 2

    r = radii
    A = r * r * (ia2 - ib2)
    B = 2.0 * v1 * r * ia2
    C = 2.0 * v2 * r * ib2
    D = v1 * v1 * ia2 + v2 * v2 * ib2 + r * r * ib2 - 1.0

    cand = np.full((len(r), _ELL_SLOTS), np.nan)
    scale = np.maximum.reduce([np.abs(A), np.abs(B), np.abs(C), np.abs(D), np.full_like(A, 1e-300)])
    quartic = np.abs(A) > 1e-12 * scale

    if np.any(quartic):
        idx = np.flatnonzero(quartic)
        a4 = A[idx].astype(complex)
        comp = np.zeros((len(idx), 4, 4), dtype=complex)
        comp[:, 1, 0] = 1.0
        comp[:, 2, 1] = 1.0
        comp[:, 3, 2] = 1.0
        comp[:, 0, 3] = -A[idx] / a4
        comp[:, 1, 3] = -(2.0 * B[idx] + 2.0j * C[idx]) / a4
        comp[:, 2, 3] = -(2.0 * A[idx] + 4.0 * D[idx]) / a4
        comp[:, 3, 3] = -(2.0 * B[idx] - 2.0j * C[idx]) / a4
        roots = np.linalg.eigvals(comp)
        on_circle = np.abs(np.abs(roots) - 1.0) < 1e-6
        beta = np.where(on_circle, np.angle(roots), np.nan)
        # Newton polish on g(beta) to remove companion rounding
        An, Bn, Cn, Dn = (A[idx, None], B[idx, None], C[idx, None], D[idx, None])
        for _ in range(3):
            cb, sb = np.cos(beta), np.sin(beta)
            g = An * cb * cb + Bn * cb + Cn * sb + Dn
            gp = -2.0 * An * cb * sb - Bn * sb + Cn * cb
            step = np.where(np.abs(gp) > 1e-300, g / gp, 0.0)
            beta = beta - np.clip(step, -0.1, 0.1)
        # beta is the angle in the ellipse frame; world angle adds the rotation
        cand[idx] = (beta + el.rotation) % TWO_PI

    lin = ~quartic & (r > 0)
    if np.any(lin):
        # nearly circular support: B cos + C sin + D = 0
        idx = np.flatnonzero(lin)
        amp = np.hypot(B[idx], C[idx])
        gamma = np.arctan2(C[idx], B[idx])
        ratio = np.where(amp > 0, -D[idx] / np.where(amp > 0, amp, 1.0), 2.0)
        ok = np.abs(ratio) <= 1.0
        delta = np.arccos(np.clip(ratio, -1.0, 1.0))
        cand[idx, 0] = np.where(ok, (gamma + delta + el.rotation) % TWO_PI, np.nan)
        cand[idx, 1] = np.where(ok, (gamma - delta + el.rotation) % TWO_PI, np.nan)

    def inside(pts):
        return el.evaluate(pts) > 0.0

    return _measures_from_candidates(cand, inside, center, radii)


def exact_mean_table(p: Phantom, center, radii: np.ndarray) -> np.ndarray:
    """Exact circular means of the phantom at all radii about center."""
    c = np.asarray(center, dtype=float)
    r = np.asarray(radii, dtype=float)
    if isinstance(p, SquareIndicator):
        return _box_arc_measures(p, c, r) / TWO_PI
    if isinstance(p, EllipseIndicator):
        return _ellipse_arc_measures(p, c, r) / TWO_PI
    if isinstance(p, WeightedSum):
        out = np.zeros_like(r)
        for coef, q in p.terms:
            if coef != 0.0:
                out += coef * exact_mean_table(q, c, r)
        return out
    raise ParameterError(f"unknown phantom type {type(p)!r}")
