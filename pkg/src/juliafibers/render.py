"""Deterministic SVG pictures: escape-time shading, rays, the G0 equipotential
and puzzle leaves.

The viewBox is in complex-plane units with the imaginary axis flipped (SVG y
grows downward), so the point a + bi is drawn at (a, -b). Every number is
written with six decimals, so equal inputs give byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .angles import Angle
from .dynamics import DEFAULT_SETTINGS, Map, RayBundle, TraceSettings, escape_counts, trace_rays
from .lamination import Leaf

SHADES = 8


def _f(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


@dataclass(frozen=True)
class RenderSpec:
    map: Map
    center: complex = 0j
    width: float = 4.0
    resolution: int = 256
    rays: tuple[Angle, ...] = ()
    leaves: tuple[Leaf, ...] = ()
    puzzle_depth: int | None = None
    max_iter: int = 200
    G0: float | None = None
    equipotential: bool = True

    def __post_init__(self):
        if self.resolution < 16:
            raise ValueError(f"resolution must be >= 16, got {self.resolution}")
        if not self.width > 0:
            raise ValueError(f"width must be positive, got {self.width}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        object.__setattr__(self, "center", complex(self.center))


@dataclass
class _Overlay:
    angle: Angle
    points: np.ndarray
    landed: bool
    reason: str | None = None
    css: str = "ray"


def _pixel_grid(spec: RenderSpec) -> tuple[np.ndarray, float]:
    n = spec.resolution
    px = spec.width / n
    x0 = spec.center.real - spec.width / 2
    y1 = spec.center.imag + spec.width / 2
    xs = x0 + (np.arange(n) + 0.5) * px
    ys = y1 - (np.arange(n) + 0.5) * px
    return xs[None, :] + 1j * ys[:, None], px


def shade_levels(spec: RenderSpec) -> np.ndarray:
    """Per-pixel shade index: 0 for points that never escape, 1..SHADES otherwise
    (darker = slower escape)."""
    grid, _ = _pixel_grid(spec)
    counts = escape_counts(spec.map, grid, spec.max_iter)
    out = np.zeros(counts.shape, dtype=int)
    esc = counts < spec.max_iter
    out[esc] = 1 + np.minimum(counts[esc], SHADES - 1)
    return out


def _gray(level: int) -> str:
    if level == 0:
        return "#000000"
    v = 255 - (level - 1) * (255 - 96) // (SHADES - 1)
    return f"#{v:02x}{v:02x}{v:02x}"


def _polyline(points: np.ndarray) -> str:
    return " ".join(f"{_f(z.real)},{_f(-z.imag)}" for z in points)


def _overlays(spec: RenderSpec, settings: TraceSettings) -> list[_Overlay]:
    want: dict[Angle, str] = {}
    for a in spec.rays:
        want.setdefault(a, "ray")
    for l in spec.leaves:
        want.setdefault(l.a, "leaf")
        want.setdefault(l.b, "leaf")
    if spec.puzzle_depth is not None:
        from .fibers import depth_angles, find_alpha

        alpha = find_alpha(spec.map, G0=spec.G0, settings=settings)
        for a in depth_angles(alpha.angles, spec.puzzle_depth, spec.map.d):
            want.setdefault(a, "puzzle")
    if not want:
        return []
    rays = trace_rays(spec.map, list(want), spec.G0, settings=settings)
    out = []
    for a in sorted(want):
        r = rays[a]
        pts = r.points if r.landing_point is None else np.append(r.points, r.landing_point)
        out.append(_Overlay(a, pts, r.landed, r.fail_reason, want[a]))
    return out


def _equipotential(spec: RenderSpec, settings: TraceSettings, n: int = 256) -> np.ndarray:
    angles = [Angle.of(j, n) for j in range(n)]
    bundle = RayBundle(spec.map, angles, spec.G0, settings)
    pts = bundle.points_at_level(0)
    return pts[[bundle.index[a] for a in angles]]


def render_svg(spec: RenderSpec, settings: TraceSettings = DEFAULT_SETTINGS) -> str:
    grid_levels = shade_levels(spec)
    n = spec.resolution
    px = spec.width / n
    x0 = spec.center.real - spec.width / 2
    y1 = spec.center.imag + spec.width / 2
    stroke = spec.width / 400

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{_f(x0)} {_f(-y1)} {_f(spec.width)} {_f(spec.width)}" '
        f'width="{n}" height="{n}" shape-rendering="crispEdges">',
        f"<!-- f(z) = z^{spec.map.d} + ({_f(spec.map.c.real)}{'+' if spec.map.c.imag >= 0 else '-'}"
        f"{_f(abs(spec.map.c.imag))}i), max_iter {spec.max_iter} -->",
        "<style>.ray{stroke:#d62728}.leaf{stroke:#1f77b4}.puzzle{stroke:#2ca02c}"
        ".eq{stroke:#ff7f0e}.failed{stroke-dasharray:4,3}</style>",
        '<g id="shading" stroke="none">',
    ]
    # one rect per run of equal shade along each row
    for i in range(n):
        row = grid_levels[i]
        j = 0
        while j < n:
            k = j
            while k + 1 < n and row[k + 1] == row[j]:
                k += 1
            lines.append(
                f'<rect x="{_f(x0 + j * px)}" y="{_f(-y1 + i * px)}" width="{_f((k - j + 1) * px)}" '
                f'height="{_f(px)}" fill="{_gray(int(row[j]))}"/>'
            )
            j = k + 1
    lines.append("</g>")

    style = f'fill="none" stroke-width="{_f(stroke)}"'
    if spec.equipotential:
        eq = _equipotential(spec, settings)
        lines.append(f'<polygon class="eq" {style} points="{_polyline(eq)}"/>')

    warnings = []
    lines.append('<g id="rays">')
    for ov in _overlays(spec, settings):
        css = ov.css if ov.landed else f"{ov.css} failed"
        if ov.points.size < 2:
            warnings.append(f"ray {ov.angle}: no polyline ({ov.reason})")
            continue
        lines.append(f'<polyline class="{css}" {style} data-angle="{ov.angle}" points="{_polyline(ov.points)}"/>')
        if not ov.landed:
            warnings.append(f"ray {ov.angle} did not land ({ov.reason})")
    lines.append("</g>")
    for k, w in enumerate(warnings):
        y = -y1 + (k + 1) * spec.width / 30
        lines.append(f'<text x="{_f(x0 + spec.width / 100)}" y="{_f(y)}" font-size="{_f(spec.width / 40)}" '
                     f'fill="#ff0000">warning: {w}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
