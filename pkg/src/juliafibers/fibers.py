"""Separation curves built from ray pairs, the puzzle generated by the rays at
the alpha fixed point, and diameter diagnostics for fibers.

A leaf whose two rays land together gives a Jordan curve: ray a, the landing
point, ray b backwards, and an arc of the circle of radius ``closure_radius``
through the angles of the leaf's short arc. Points enclosed by that curve are
on side A (the short-arc side).

Puzzle pieces are built combinatorially. All depth-n angles (n-fold preimages
of the alpha angles) are grouped by landing point; each group is a polygon on
the circle, the polygons do not cross, and the complementary regions of the
disk are the pieces. Geometry enters only through the traced rays and the
equipotential samples used for diameters.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from shapely.geometry import LinearRing

from .angles import Angle, angles_with_denominator_at_most, orbit, preimages
from .dynamics import (
    DEFAULT_SETTINGS, Map, RayBundle, TracedRay, TraceSettings, _r, cluster_points,
    diameter, periodic_points, potential, ray_pairs, trace_rays,
)
from .errors import NoAlphaPair, NotAPair, OnBoundary, PointOnCurve, UnlandedRay
from .geometry import distance_to_polyline, inside_polygon
from .lamination import Leaf
from .symbolic import CharacteristicAngle, landing_classes

GUARD = 1e-7


# --------------------------------------------------------------------- separation curves


def _clean_ray(points: np.ndarray, landing: complex, cut: float) -> np.ndarray:
    """Ray polyline truncated where it first enters the ball of radius ``cut``
    around the landing point, with consecutive duplicates removed."""
    pts = np.asarray(points, dtype=complex)
    near = np.flatnonzero(np.abs(pts - landing) < cut)
    if near.size:
        pts = pts[:near[0]]
    if pts.size > 1:
        keep = np.concatenate([[True], np.abs(np.diff(pts)) > 1e-13])
        pts = pts[keep]
    return pts


def _unwrap(arg_turns: float, target: Fraction) -> float:
    """The representative of arg_turns (mod 1) closest to target."""
    t = float(target)
    return t + ((arg_turns - t + 0.5) % 1.0 - 0.5)


@dataclass(frozen=True, eq=False)
class SeparationCurve:
    leaf: Leaf
    rays: tuple[TracedRay, TracedRay]
    closure_radius: float
    landing_point: complex
    vertices: np.ndarray  # closed polygon, side A inside

    def side_a(self, z, guard: float = GUARD) -> np.ndarray:
        """True where z lies on the short-arc side. Raises PointOnCurve within guard."""
        pts = np.atleast_1d(np.asarray(z, dtype=complex))
        dist = distance_to_polyline(self.vertices, pts)
        if (dist < guard).any():
            bad = complex(pts[int(np.argmin(dist))])
            raise PointOnCurve(f"point {bad} is {dist.min():.3g} from the curve of leaf {self.leaf}")
        return inside_polygon(self.vertices, pts)

    def distance(self, z) -> np.ndarray:
        return distance_to_polyline(self.vertices, z)

    def to_json(self) -> dict:
        return {
            "leaf": str(self.leaf),
            "landing": [_r(self.landing_point.real), _r(self.landing_point.imag)],
            "closure_radius": _r(self.closure_radius),
            "vertices": [[_r(z.real), _r(z.imag)] for z in self.vertices],
        }


def assemble_curve(leaf: Leaf, ray_a: TracedRay, ray_b: TracedRay, closure_radius: float,
                   tol: float = 1e-6, check_simple: bool = True) -> SeparationCurve:
    """Close two landed rays into a Jordan curve (see module docstring)."""
    for r in (ray_a, ray_b):
        if not r.landed:
            raise UnlandedRay([r.angle], {r.angle: r.fail_reason})
    gap = abs(ray_a.landing_point - ray_b.landing_point)
    if gap > tol:
        raise NotAPair(f"rays {leaf.a} and {leaf.b} land {gap:.3g} apart (tol {tol:g})")
    land = (ray_a.landing_point + ray_b.landing_point) / 2
    cut = max(gap, 1e-9)
    pa = _clean_ray(ray_a.points, land, cut)
    pb = _clean_ray(ray_b.points, land, cut)
    if pa.size == 0 or pb.size == 0:
        raise NotAPair(f"leaf {leaf} has an empty ray polyline")

    # arc from the outer end of b back to the outer end of a, through the short arc
    start, end = leaf.short_arc
    length = float(leaf.length)
    ta = _unwrap(np.angle(pa[0]) / (2 * np.pi), leaf.a.value)
    tb = _unwrap(np.angle(pb[0]) / (2 * np.pi), leaf.b.value)
    if start == leaf.a:
        # short arc runs counterclockwise a -> b, so we go clockwise from b to a
        while tb < ta:
            tb += 1.0
        while tb - ta > 1.0:
            tb -= 1.0
    else:
        # short arc runs counterclockwise b -> a
        while ta < tb:
            ta += 1.0
        while ta - tb > 1.0:
            ta -= 1.0
    k = max(8, int(math.ceil(512 * length)))
    ts = np.linspace(tb, ta, k + 1)
    # the rays start near |z| = e^G0, which can exceed the requested radius
    radius = max(closure_radius, 1.01 * float(max(np.abs(pa).max(), np.abs(pb).max())))
    arc = radius * np.exp(2j * np.pi * ts)

    verts = np.concatenate([pa, [land], pb[::-1], arc])
    keep = np.abs(verts - np.roll(verts, 1)) > 1e-13
    verts = verts[keep]
    if check_simple and not LinearRing(np.column_stack([verts.real, verts.imag])).is_simple:
        raise NotAPair(f"curve for leaf {leaf} is not simple")
    return SeparationCurve(leaf, (ray_a, ray_b), radius, complex(land), verts)


def separation_curve(m: Map, leaf: Leaf, tol: float = 1e-6, G0: float | None = None,
                     closure_radius: float | None = None,
                     settings: TraceSettings = DEFAULT_SETTINGS) -> SeparationCurve:
    rays = trace_rays(m, [leaf.a, leaf.b], G0, settings=settings)
    R = m.escape_radius if closure_radius is None else float(closure_radius)
    return assemble_curve(leaf, rays[leaf.a], rays[leaf.b], R, tol)


def separates(sc: SeparationCurve, z1: complex, z2: complex, guard: float = GUARD) -> bool:
    s = sc.side_a([z1, z2], guard)
    return bool(s[0] != s[1])


# --------------------------------------------------------------------- alpha


@dataclass(frozen=True)
class AlphaInfo:
    alpha: complex
    multiplier: complex
    angles: tuple[Angle, ...]
    beta: complex

    def to_json(self) -> dict:
        return {
            "point": [_r(self.alpha.real), _r(self.alpha.imag)],
            "multiplier": [_r(self.multiplier.real), _r(self.multiplier.imag)],
            "angles": [str(a) for a in self.angles],
            "beta": [_r(self.beta.real), _r(self.beta.imag)],
        }


def find_alpha(m: Map, tol: float = 1e-6, max_q: int = 10, G0: float | None = None,
               settings: TraceSettings = DEFAULT_SETTINGS) -> AlphaInfo:
    """The repelling fixed point that is not the landing point of a fixed ray,
    together with every angle of period <= max_q whose ray lands there.

    Raises NoAlphaPair when no such fixed point is repelling or fewer than two
    of the scanned rays land at it.
    """
    d = m.d
    fixed_angles = [Angle.of(k, d - 1) for k in range(d - 1)]
    fixed_rays = trace_rays(m, fixed_angles, G0, settings=settings, record=False)
    landed = [r.landing_point for r in fixed_rays.values() if r.landed]
    if len(landed) < len(fixed_angles):
        raise NoAlphaPair("a fixed ray did not land")
    candidates = [p for p in periodic_points(m, 1)
                  if min(abs(p.z - w) for w in landed) > tol]
    repelling = [p for p in candidates if p.kind == "repelling"]
    if not repelling:
        kinds = ", ".join(p.kind for p in candidates) or "none"
        raise NoAlphaPair(f"no repelling fixed point besides the fixed-ray landings ({kinds})")
    rec = max(repelling, key=lambda p: abs(p.multiplier))
    for q in range(1, max_q + 1):
        N = d ** q - 1
        cands = [Angle.of(k, N) for k in range(N) if orbit(Angle.of(k, N), d).period == q]
        if not cands:
            continue
        rays = trace_rays(m, cands, G0, settings=settings, record=False)
        hit = [a for a in cands if rays[a].landed and abs(rays[a].landing_point - rec.z) < tol]
        if len(hit) >= 2:
            return AlphaInfo(rec.z, rec.multiplier, tuple(sorted(hit)), landed[0])
    raise NoAlphaPair(f"fewer than two rays of period <= {max_q} land at {rec.z:.6g}")


# --------------------------------------------------------------------- puzzle


def depth_angles(base: Sequence[Angle], depth: int, d: int) -> list[Angle]:
    """All angles phi with d^depth * phi in ``base``."""
    cur = set(base)
    for _ in range(depth):
        cur = {p for a in cur for p in preimages(a, d)}
    return sorted(cur)


def noncrossing(groups: Sequence[Sequence[Angle]]) -> bool:
    """Exact test that the polygons spanned by disjoint angle groups do not cross."""
    label = {a: i for i, g in enumerate(groups) for a in g}
    remaining = [len(g) for g in groups]
    opened: set[int] = set()
    stack: list[int] = []
    for a in sorted(label):
        g = label[a]
        if g in opened:
            if stack[-1] != g:
                return False
        else:
            opened.add(g)
            stack.append(g)
        remaining[g] -= 1
        if remaining[g] == 0:
            stack.pop()
    return True


def _mid(s: Angle, e: Angle) -> Fraction:
    length = (e.value - s.value) % 1 or Fraction(1)
    return (s.value + length / 2) % 1


def _in_short_arc(x: Fraction, leaf: Leaf) -> bool:
    s, e = leaf.short_arc
    return 0 < (x - s.value) % 1 < (e.value - s.value) % 1


@dataclass(frozen=True)
class Region:
    """A complementary region of the angle polygons: circle arcs (start, end),
    the leaves crossed to get from one arc to the next, and on which side of
    each leaf the region lies (True = short-arc side)."""

    arcs: tuple[tuple[Angle, Angle], ...]
    leaves: tuple[Leaf, ...]
    sides: tuple[bool, ...]

    @property
    def arc_length(self) -> Fraction:
        return sum(((e.value - s.value) % 1 or Fraction(1) for s, e in self.arcs), Fraction(0))

    def contains_angle(self, x: Fraction) -> bool:
        for s, e in self.arcs:
            length = (e.value - s.value) % 1 or Fraction(1)
            if 0 < (x - s.value) % 1 < length:
                return True
        return False


def regions(groups: Sequence[Sequence[Angle]]) -> list[Region]:
    """Regions of the disk cut out by non-crossing angle polygons.

    Walk an arc counterclockwise to its end y, cross to the previous vertex of
    y's polygon, continue from there; the closed walk bounds one region. There
    are 1 + sum(k - 1) regions for polygons with k vertices.
    """
    groups = [tuple(sorted(g)) for g in groups]
    allv = sorted(a for g in groups for a in g)
    if not allv:
        return []
    nxt = {allv[i]: allv[(i + 1) % len(allv)] for i in range(len(allv))}
    prev_in = {}
    for g in groups:
        for i, a in enumerate(g):
            prev_in[a] = g[i - 1]
    seen: set[Angle] = set()
    out = []
    for x in allv:
        if x in seen:
            continue
        arcs, leaves = [], []
        cur = x
        while True:
            seen.add(cur)
            y = nxt[cur]
            arcs.append((cur, y))
            p = prev_in[y]
            if p != y:
                leaves.append(Leaf(p, y))
            cur = p
            if cur == x:
                break
        mid = _mid(*arcs[0])
        out.append(Region(tuple(arcs), tuple(leaves), tuple(_in_short_arc(mid, l) for l in leaves)))
    return out


@dataclass(frozen=True, eq=False)
class PuzzlePiece:
    depth: int
    boundary_leaves: tuple[Leaf, ...]
    equipotential_G: float
    vertex_points: tuple[complex, ...]
    sample_diameter: float
    arcs: tuple[tuple[Angle, Angle], ...] = ()

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "boundary_leaves": [str(l) for l in self.boundary_leaves],
            "arcs": [[str(s), str(e)] for s, e in self.arcs],
            "equipotential_G": _r(self.equipotential_G),
            "vertex_points": [[_r(z.real), _r(z.imag)] for z in self.vertex_points],
            "sample_diameter": _r(self.sample_diameter),
        }


def _sample_angles(region: Region, resolution: int, d: int) -> list[Angle]:
    """About ``resolution`` angles inside the region's arcs, spread by arc length,
    with denominators a power of d (so their orbits stay small)."""
    total = region.arc_length
    shortest = min((e.value - s.value) % 1 or Fraction(1) for s, e in region.arcs)
    M = min(60, max(1, math.ceil(math.log(4 * resolution / float(shortest), d))))
    den = d ** M
    out = set()
    for s, e in region.arcs:
        length = (e.value - s.value) % 1 or Fraction(1)
        k = max(1, round(resolution * length / total))
        for j in range(k):
            x = s.value + length * Fraction(2 * j + 1, 2 * k)
            out.add(Angle.of(round(x * den), den))
    return sorted(a for a in out if region.contains_angle(a.value))


class Puzzle:
    """Angle sets, traced rays and regions of the puzzle up to ``max_depth``."""

    def __init__(self, m: Map, max_depth: int, G0: float | None = None, tol: float = 1e-6,
                 alpha: AlphaInfo | None = None, guard: float = GUARD, resolution: int = 128,
                 settings: TraceSettings = DEFAULT_SETTINGS):
        if max_depth < 0:
            raise ValueError("depth must be >= 0")
        if resolution < 1:
            raise ValueError("resolution must be >= 1")
        self.m = m
        self.max_depth = max_depth
        self.G0 = m.default_G0 if G0 is None else float(G0)
        self.tol = tol
        self.guard = guard
        self.resolution = resolution
        self.settings = settings
        self.alpha = alpha or find_alpha(m, tol, G0=self.G0, settings=settings)
        self.closure_radius = max(m.escape_radius, math.exp(self.G0))

        top = depth_angles(self.alpha.angles, max_depth, m.d)
        self.rays = trace_rays(m, top, self.G0, settings=settings)
        bad = [a for a in top if not self.rays[a].landed]
        if bad:
            raise UnlandedRay(bad, {a: self.rays[a].fail_reason for a in bad})
        pts = [self.rays[a].landing_point for a in top]
        groups = [tuple(sorted(top[i] for i in g)) for g in cluster_points(pts, tol)]
        self.group_of = {a: g for g in groups for a in g}
        self._curves: dict[Leaf, SeparationCurve] = {}
        self._regions: dict[int, list[Region]] = {}

    def angles(self, depth: int) -> list[Angle]:
        self._check_depth(depth)
        return depth_angles(self.alpha.angles, depth, self.m.d)

    def groups(self, depth: int) -> list[tuple[Angle, ...]]:
        """Depth-n angles grouped by common landing point."""
        members = set(self.angles(depth))
        out = {tuple(a for a in self.group_of[x] if a in members) for x in members}
        return sorted(out)

    def regions(self, depth: int) -> list[Region]:
        if depth not in self._regions:
            groups = self.groups(depth)
            if not noncrossing(groups):
                raise RuntimeError(f"depth-{depth} ray groups cross; clustering tolerance too loose?")
            self._regions[depth] = regions(groups)
        return self._regions[depth]

    def leaves(self, depth: int) -> list[Leaf]:
        return sorted({l for r in self.regions(depth) for l in r.leaves}, key=lambda l: (l.a, l.b))

    def equipotential(self, depth: int) -> float:
        return self.G0 / self.m.d ** depth

    def curve(self, leaf: Leaf) -> SeparationCurve:
        if leaf not in self._curves:
            self._curves[leaf] = assemble_curve(leaf, self.rays[leaf.a], self.rays[leaf.b],
                                                self.closure_radius, self.tol)
        return self._curves[leaf]

    def locate(self, z: complex, depth: int, candidates: Sequence[Region] | None = None) -> Region:
        """The depth-n region containing z. Raises OnBoundary near a boundary curve."""
        pool = self.regions(depth) if candidates is None else candidates
        sides: dict[Leaf, bool] = {}

        def side(l: Leaf) -> bool:
            if l not in sides:
                try:
                    sides[l] = bool(self.curve(l).side_a(z, self.guard)[0])
                except PointOnCurve as e:
                    raise OnBoundary(str(e)) from None
            return sides[l]

        for r in pool:
            if all(side(l) == s for l, s in zip(r.leaves, r.sides)):
                return r
        raise OnBoundary(f"no depth-{depth} piece contains {z}")

    def _check_depth(self, depth: int) -> None:
        if not 0 <= depth <= self.max_depth:
            raise ValueError(f"depth {depth} outside 0..{self.max_depth}")

    def _boundary_points(self, region: Region, depth: int) -> tuple[list[complex], list[np.ndarray]]:
        S = self.settings.substeps
        verts, chunks = [], []
        for s, e in region.arcs:
            for a in (s, e):
                chunks.append(self.rays[a].points[depth * S:])
        for l in region.leaves:
            for a in (l.a, l.b):
                w = self.rays[a].landing_point
                if all(abs(w - v) > self.tol for v in verts):
                    verts.append(w)
        if not region.leaves:
            verts = [self.rays[s].landing_point for s, _ in region.arcs]
        return verts, chunks

    def pieces(self, depth: int, which: Sequence[Region] | None = None) -> list[PuzzlePiece]:
        """Pieces for the given regions (all regions at this depth by default)."""
        self._check_depth(depth)
        regs = self.regions(depth) if which is None else list(which)
        samples = [_sample_angles(r, self.resolution, self.m.d) for r in regs]
        flat = sorted({a for s in samples for a in s})
        eq = {}
        if flat:
            bundle = RayBundle(self.m, flat, self.G0, self.settings)
            level = bundle.points_at_level(depth)
            eq = {a: level[bundle.index[a]] for a in flat}
        out = []
        for r, s in zip(regs, samples):
            verts, chunks = self._boundary_points(r, depth)
            cloud = np.concatenate(chunks + [np.array([eq[a] for a in s], dtype=complex),
                                             np.array(verts, dtype=complex)])
            out.append(PuzzlePiece(depth, r.leaves, self.equipotential(depth), tuple(verts),
                                   diameter(cloud), r.arcs))
        return out

    def to_json(self, depth: int, pieces: Sequence[PuzzlePiece] | None = None) -> dict:
        pieces = self.pieces(depth) if pieces is None else pieces
        return {
            "map": {"d": self.m.d, "c": [self.m.c.real, self.m.c.imag]},
            "depth": depth,
            "G0": _r(self.G0),
            "alpha": self.alpha.to_json(),
            "boundary_angles": [str(a) for a in self.angles(depth)],
            "pieces": [p.to_json() for p in pieces],
        }


def puzzle_build(m: Map, depth: int, G0: float | None = None, tol: float = 1e-6,
                 resolution: int = 128, settings: TraceSettings = DEFAULT_SETTINGS) -> list[PuzzlePiece]:
    return Puzzle(m, depth, G0, tol, resolution=resolution, settings=settings).pieces(depth)


# --------------------------------------------------------------------- fiber diagnostics


@dataclass(frozen=True)
class FiberDiagnostic:
    target: complex
    bounds: tuple[tuple[int, float], ...]  # (depth, running minimum of piece diameters)
    raw: tuple[float, ...]  # per-depth sampled piece diameters
    verdict: str  # "shrinking" | "stalled"
    threshold: float = 0.2

    @property
    def ratio(self) -> float:
        first = self.bounds[0][1]
        return self.bounds[-1][1] / first if first > 0 else 0.0

    def to_json(self) -> dict:
        return {
            "target": [_r(self.target.real), _r(self.target.imag)],
            "bounds": [[k, _r(v)] for k, v in self.bounds],
            "raw": [_r(v) for v in self.raw],
            "ratio": _r(self.ratio),
            "verdict": self.verdict,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["depth", "diameter"])
        for k, v in self.bounds:
            w.writerow([k, f"{v:.12g}"])
        return buf.getvalue()


def fiber_diameter_bound(m: Map, z: complex, max_depth: int, G0: float | None = None,
                         tol: float = 1e-6, guard: float = GUARD, resolution: int = 128,
                         threshold: float = 0.2, puzzle: Puzzle | None = None,
                         settings: TraceSettings = DEFAULT_SETTINGS) -> FiberDiagnostic:
    """Diameters of the puzzle pieces around z for depths 0..max_depth.

    Pieces are nested, so each depth's bound is the minimum of the sampled
    diameters so far. The verdict is "shrinking" when the last bound is below
    ``threshold`` times the first.
    """
    z = complex(z)
    pz = puzzle or Puzzle(m, max_depth, G0, tol, guard=guard, resolution=resolution, settings=settings)
    if pz.max_depth < max_depth:
        raise ValueError("puzzle is shallower than max_depth")
    if potential(m, z) >= pz.G0:
        raise ValueError(f"{z} lies outside the G0 equipotential")
    raw, bounds = [], []
    parent: Region | None = None
    for n in range(max_depth + 1):
        pool = None
        if parent is not None:
            # children sit inside the parent's arcs
            pool = [r for r in pz.regions(n) if parent.contains_angle(_mid(*r.arcs[0]))]
        reg = pz.locate(z, n, pool)
        piece = pz.pieces(n, [reg])[0]
        raw.append(piece.sample_diameter)
        best = min(bounds[-1][1], piece.sample_diameter) if bounds else piece.sample_diameter
        bounds.append((n, best))
        parent = reg
    ratio = bounds[-1][1] / bounds[0][1] if bounds[0][1] > 0 else 0.0
    verdict = "shrinking" if ratio < threshold else "stalled"
    return FiberDiagnostic(z, tuple(bounds), tuple(raw), verdict, threshold)


# --------------------------------------------------------------------- branch census


@dataclass(frozen=True)
class BranchPoint:
    angles: tuple[Angle, ...]
    landing: complex
    ray_count: int
    kinds: tuple[str, ...]  # "periodic" | "preperiodic" per angle

    @property
    def eventually_periodic(self) -> bool:
        return all(k in ("periodic", "preperiodic") for k in self.kinds)

    def to_json(self) -> dict:
        return {
            "angles": [str(a) for a in self.angles],
            "landing": [_r(self.landing.real), _r(self.landing.imag)],
            "ray_count": self.ray_count,
            "kinds": list(self.kinds),
        }


@dataclass(frozen=True)
class BranchCensus:
    points: tuple[BranchPoint, ...]
    max_den: int
    agrees_with_itineraries: bool | None = None
    mismatched: tuple[tuple[Angle, ...], ...] = ()

    def to_json(self) -> dict:
        out = {
            "max_den": self.max_den,
            "branch_points": [p.to_json() for p in self.points],
            "agrees_with_itineraries": self.agrees_with_itineraries,
        }
        if self.mismatched:
            out["mismatched"] = [[str(a) for a in cls] for cls in self.mismatched]
        return out


def branch_census(m: Map, max_den: int, ca: CharacteristicAngle | None = None, tol: float = 1e-6,
                  G0: float | None = None, settings: TraceSettings = DEFAULT_SETTINGS) -> BranchCensus:
    """Landing points of three or more rays among angles with denominator <= max_den.

    With ``ca`` the numerical partition is also compared with the itinerary
    partition; disagreement is reported, not raised.
    """
    angles = angles_with_denominator_at_most(max_den)
    table = ray_pairs(m, angles, tol, G0, settings)
    pts = []
    for cls in table.classes:
        if len(cls) < 3:
            continue
        kinds = tuple("periodic" if orbit(a, m.d).is_periodic else "preperiodic" for a in cls)
        pts.append(BranchPoint(cls, table.landing[cls[0]], len(cls), kinds))
    agrees, mismatched = None, ()
    if ca is not None:
        if ca.d != m.d:
            raise ValueError("characteristic angle degree differs from the map degree")
        comb = {tuple(c) for c in landing_classes(angles, ca)}
        num = set(table.classes)
        agrees = comb == num
        mismatched = tuple(sorted(num ^ comb))
    return BranchCensus(tuple(pts), max_den, agrees, mismatched)
