"""Argument-principle winding numbers on rectangular contours."""
from __future__ import annotations

import numpy as np

from .errors import ContourError


def box_contour(box, per_edge: int = 64) -> np.ndarray:
    """Counter-clockwise closed polygon around ``(re0, re1, im0, im1)``."""
    re0, re1, im0, im1 = box
    t = np.linspace(0.0, 1.0, per_edge, endpoint=False)
    bottom = re0 + (re1 - re0) * t + 1j * im0
    right = re1 + 1j * (im0 + (im1 - im0) * t)
    top = re1 - (re1 - re0) * t + 1j * im1
    left = re0 + 1j * (im1 - (im1 - im0) * t)
    z = np.concatenate([bottom, right, top, left])
    return np.append(z, z[0])


def winding_number(f, box, per_edge: int = 64, max_phase_step: float = np.pi / 4,
                   max_points: int = 200_000, int_tol: float = 1e-3, zero_tol: float = 1e-13) -> int:
    """Winding number of ``f`` around the boundary of ``box`` (zeros minus poles).

    Edges are refined by midpoint insertion until no phase step exceeds
    ``max_phase_step``; the result must then be an integer within ``int_tol``
    and must not change under one further uniform refinement.
    """
    z = box_contour(box, per_edge)
    vals = np.asarray(f(z), dtype=complex)
    scale = max(float(np.max(np.abs(vals))), 1e-300)
    previous = None
    while True:
        if not np.all(np.isfinite(vals)):
            raise ContourError("function is singular on the contour; shift the box")
        if float(np.min(np.abs(vals))) <= zero_tol * scale:
            raise ContourError("contour passes too close to a zero; shift the box")
        steps = np.angle(vals[1:] / vals[:-1])
        bad = np.abs(steps) > max_phase_step
        if not bad.any():
            total = float(np.sum(steps)) / (2 * np.pi)
            n = int(round(total))
            if abs(total - n) <= int_tol and previous == n:
                return n
            previous = n if abs(total - n) <= int_tol else None
            bad = np.ones_like(bad)
        if z.size > max_points:
            raise ContourError("winding number did not stabilize; shift or shrink the box")
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (z[idx] + z[idx + 1])
        mid_vals = np.asarray(f(mids), dtype=complex)
        z = np.insert(z, idx + 1, mids)
        vals = np.insert(vals, idx + 1, mid_vals)


def split_box(box):
    """Bisect a box across its longer side."""
    re0, re1, im0, im1 = box
    if (re1 - re0) >= (im1 - im0):
        m = 0.5 * (re0 + re1)
        return (re0, m, im0, im1), (m, re1, im0, im1)
    m = 0.5 * (im0 + im1)
    return (re0, re1, im0, m), (re0, re1, m, im1)
