"""Plane geometry on closed polylines stored as complex vertex arrays."""

from __future__ import annotations

import numpy as np

_CHUNK = 1 << 20  # segment-point pairs per block


def _as_points(z) -> np.ndarray:
    return np.atleast_1d(np.asarray(z, dtype=complex))


def inside_polygon(poly: np.ndarray, z) -> np.ndarray:
    """Crossing-number parity of each point against the closed polygon ``poly``.

    The closing edge from the last vertex back to the first is implied.
    """
    a = np.asarray(poly, dtype=complex)
    b = np.roll(a, -1)
    pts = _as_points(z)
    out = np.zeros(pts.shape, dtype=bool)
    step = max(1, _CHUNK // max(len(a), 1))
    ax, ay, bx, by = a.real, a.imag, b.real, b.imag
    for lo in range(0, pts.size, step):
        p = pts[lo:lo + step, None]
        px, py = p.real, p.imag
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (py - ay) * (bx - ax) / (by - ay)
        hits = straddle & (px < xcross)
        out[lo:lo + step] = (hits.sum(axis=1) % 2).astype(bool)
    return out


def distance_to_polyline(poly: np.ndarray, z, closed: bool = True) -> np.ndarray:
    """Euclidean distance from each point to the polyline (closed by default)."""
    a = np.asarray(poly, dtype=complex)
    if closed:
        b = np.roll(a, -1)
    else:
        a, b = a[:-1], a[1:]
    pts = _as_points(z)
    out = np.empty(pts.shape)
    seg = b - a
    L2 = np.abs(seg) ** 2
    step = max(1, _CHUNK // max(len(a), 1))
    for lo in range(0, pts.size, step):
        p = pts[lo:lo + step, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(L2 > 0, ((p - a) * seg.conj()).real / L2, 0.0)
        t = np.clip(t, 0.0, 1.0)
        out[lo:lo + step] = np.abs(p - (a + t * seg)).min(axis=1)
    return out
