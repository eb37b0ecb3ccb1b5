"""Numerics for f_c(z) = z^d + c: Green's potential, external rays, landing
points, ray-pair clustering, impressions and periodic points."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from .angles import Angle, circ_dist, closure_under, times_d
from .errors import AmbiguousClustering, UnlandedRay


@dataclass(frozen=True)
class Map:
    d: int = 2
    c: complex = 0j

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"degree must be >= 2, got {self.d}")
        object.__setattr__(self, "c", complex(self.c))

    def __call__(self, z):
        return z ** self.d + self.c

    def derivative(self, z):
        return self.d * z ** (self.d - 1)

    def iterate(self, z, n: int):
        for _ in range(n):
            z = z ** self.d + self.c
        return z

    @property
    def escape_radius(self) -> float:
        return max(2.0, abs(self.c) ** (1 / (self.d - 1)) + 1)

    @property
    def default_G0(self) -> float:
        return math.log(self.escape_radius)

    def __str__(self) -> str:
        return f"z^{self.d} + ({format_complex(self.c)})"


def parse_complex(text: str) -> complex:
    """Parse "a+bi" style literals ("-1", "0.25+0.5i", "i", "-i", "2j")."""
    s = text.strip().replace(" ", "").replace("I", "i").replace("J", "j")
    if not s:
        raise ValueError("empty complex literal")
    s = s.replace("i", "j")
    if s.endswith("j"):
        # bare "j", "+j", "-j", "a+j", "a-j"
        if s[:-1] in ("", "+", "-") or s[-2] in "+-":
            s = s[:-1] + "1j"
    try:
        return complex(s)
    except ValueError:
        raise ValueError(f"cannot parse complex number {text!r}") from None


def format_complex(z: complex) -> str:
    return f"{z.real:.12g}{'+' if z.imag >= 0 else '-'}{abs(z.imag):.12g}i"


# --------------------------------------------------------------------- potential


def potential(m: Map, z: complex, max_iter: int = 2000, bailout: float = 1e10) -> float:
    """Green's function G(z) = lim d^-n log|f^n(z)|.

    Iterates until |z| passes ``bailout`` (where the next correction is below
    1e-12 relative), then applies one correction term. Returns 0.0 when the
    orbit stays bounded for ``max_iter`` steps.
    """
    d, c = m.d, m.c
    bailout = min(bailout, 10 ** (250 / d))
    z = complex(z)
    scale = 1.0
    for _ in range(max_iter):
        if abs(z) > bailout:
            return scale * (math.log(abs(z)) + math.log(abs(1 + c / z ** d)) / d)
        z = z ** d + c
        scale /= d
    return 0.0


def potential_grid(m: Map, zs: np.ndarray, max_iter: int = 2000, bailout: float = 1e10) -> np.ndarray:
    """Vectorized :func:`potential` (0 for points that do not escape)."""
    d, c = m.d, m.c
    bailout = min(bailout, 10 ** (250 / d))
    z = np.array(zs, dtype=complex)
    out = np.zeros(z.shape)
    active = np.ones(z.shape, dtype=bool)
    scale = 1.0
    for _ in range(max_iter):
        esc = active & (np.abs(z) > bailout)
        if esc.any():
            ze = z[esc]
            out[esc] = scale * (np.log(np.abs(ze)) + np.log(np.abs(1 + c / ze ** d)) / d)
            active &= ~esc
        if not active.any():
            break
        z = np.where(active, z ** d + c, 0)
        scale /= d
    return out


def escape_counts(m: Map, zs: np.ndarray, max_iter: int) -> np.ndarray:
    """Iterations needed to leave the escape disk; ``max_iter`` for points that stay."""
    r2 = m.escape_radius ** 2
    z = np.array(zs, dtype=complex)
    counts = np.full(z.shape, max_iter, dtype=int)
    active = np.ones(z.shape, dtype=bool)
    for n in range(max_iter):
        esc = active & ((z.real ** 2 + z.imag ** 2) > r2)
        counts[esc] = n
        active &= ~esc
        if not active.any():
            break
        z = np.where(active, z ** m.d + m.c, 0)
    return counts


# --------------------------------------------------------------------- rays


@dataclass(frozen=True)
class TraceSettings:
    """Tolerances for the ray pullback.

    A ray has landed once three consecutive level steps are below
    ``landing_tol``. Rays whose landing point is precritical cannot get there in
    double precision (the square root near the critical point amplifies
    rounding to about 1e-8), so for them a landing is also accepted once steps
    sit below ``floor_tol`` and stop decreasing; such rays carry
    ``precision_limited``.
    """

    landing_tol: float = 1e-9
    floor_tol: float = 1e-6
    depth: int = 600
    substeps: int = 8
    continuity_factor: float = 10.0
    continuity_floor: float = 1e-3
    min_decisiveness: float = 0.25
    seed_potential: float = 30.0
    stall_window: int = 16


DEFAULT_SETTINGS = TraceSettings()


@dataclass(frozen=True, eq=False)
class TracedRay:
    angle: Angle
    points: np.ndarray
    potentials: np.ndarray
    landed: bool
    landing_point: complex | None
    fail_reason: str | None = None
    precision_limited: bool = False
    landing_level: int | None = None

    def to_json(self) -> dict:
        out = {
            "angle": str(self.angle),
            "points": [[_r(z.real), _r(z.imag), _r(g)] for z, g in zip(self.points, self.potentials)],
            "landed": self.landed,
            "landing": None if self.landing_point is None
            else [_r(self.landing_point.real), _r(self.landing_point.imag)],
        }
        if self.fail_reason:
            out["fail_reason"] = self.fail_reason
        return out


def _r(x: float) -> float:
    return float(f"{x:.12g}")


_RUNNING, _LANDED, _FAILED = 0, 1, 2


class RayBundle:
    """Pulls back all rays of a forward-closed angle set together.

    The point at potential G on the ray at angle t is the d-th root of
    (point at potential dG on the ray at angle dt) - c that lies nearest the
    previous point of the same ray. Every level G0 / d^k carries ``substeps``
    interleaved phases, so consecutive polyline points are close and the
    nearest-root choice is stable. Seeds sit at potential >= seed_potential,
    where the Boettcher map is the identity up to O(c / w^(d-1)).
    """

    def __init__(self, m: Map, angles: Iterable[Angle], G0: float | None = None,
                 settings: TraceSettings = DEFAULT_SETTINGS):
        self.m = m
        self.settings = settings
        self.G0 = m.default_G0 if G0 is None else float(G0)
        if self.G0 <= 0:
            raise ValueError("G0 must be positive")
        self.angles = closure_under(angles, m.d)
        self.index = {a: i for i, a in enumerate(self.angles)}
        self.nxt = np.array([self.index[times_d(a, m.d)] for a in self.angles], dtype=np.intp)
        self.theta = np.array([float(a) for a in self.angles])
        self.K = max(0, math.ceil(math.log(settings.seed_potential / self.G0, m.d)))
        self.omega = np.exp(2j * np.pi * np.arange(m.d) / m.d)

    def level_potential(self, t: int) -> float:
        """Potential carried by polyline index t (t = 0 is level 0, i.e. G0)."""
        S = self.settings.substeps
        return self.G0 * float(self.m.d) ** (-t / S)

    def _seed(self, G: float) -> np.ndarray:
        d, c = self.m.d, self.m.c
        w = np.exp(G + 2j * np.pi * self.theta)
        return w - c / (d * w ** (d - 1))

    def _roots(self, w: np.ndarray, ref: np.ndarray):
        """Nearest root of z^d = w - c to ref, the step to it, and how decisive the
        choice was: (runner-up distance - nearest distance) / distance between
        the two roots, 1 when ref lies beyond the chosen root on their line and
        0 when ref is equidistant."""
        d = self.m.d
        r0 = np.sqrt(w - self.m.c) if d == 2 else np.power(w - self.m.c, 1.0 / d)
        cands = r0[None, :] * self.omega[:, None]
        dist = np.abs(cands - ref[None, :])
        order = np.argsort(dist, axis=0, kind="stable")
        best, second = order[0], order[1]
        cols = np.arange(w.size)
        z = cands[best, cols]
        s1 = dist[best, cols]
        sep = np.abs(cands[second, cols] - z)
        with np.errstate(divide="ignore", invalid="ignore"):
            decisive = np.where(sep > 0, (dist[second, cols] - s1) / sep, 0.0)
        return z, s1, decisive

    def run(self, track: Sequence[Angle] | None = None, record: bool = True,
            depth: int | None = None, stop_level: int | None = None) -> dict[Angle, TracedRay]:
        """Pull back until every tracked ray has landed or failed.

        With ``stop_level`` the run instead halts after that level and the
        returned rays simply end there (``landed`` reflects the state then).
        """
        st = self.settings
        S, d = st.substeps, self.m.d
        depth = st.depth if depth is None else depth
        if depth < 1:
            raise ValueError("depth must be >= 1")
        n = len(self.angles)
        track = list(self.angles) if track is None else list(track)
        tidx = np.array([self.index[a] for a in track], dtype=np.intp)

        status = np.zeros(n, dtype=np.int8)
        reason = np.zeros(n, dtype=np.int8)  # 1 ambiguity, 2 discontinuity, 3 no-convergence
        landing = np.zeros(n, dtype=complex)
        landing_t = np.full(n, -1)
        landing_level = np.full(n, -1)
        limited = np.zeros(n, dtype=bool)
        noisy = np.zeros(n, dtype=bool)
        n_small = np.zeros(n, dtype=int)
        n_floor = np.zeros(n, dtype=int)
        W = st.stall_window
        logsteps = np.zeros((2 * W, n))

        buf = np.empty((S, n), dtype=complex)
        top = self.K * S
        for s in range(S):
            buf[s] = self._seed(self.G0 * float(d) ** (self.K - s / S))
        last = buf[S - 1].copy()
        last_step = np.abs(buf[S - 1] - buf[S - 2]) if S > 1 else np.abs(buf[0])
        level_prev = buf[0].copy() if self.K == 0 else None

        rec_z: list[np.ndarray] = []
        if record and self.K == 0:
            rec_z.extend(buf[s][tidx].copy() for s in range(S))
        t_end = (self.K + depth) * S + 1
        if stop_level is not None:
            t_end = min(t_end, (self.K + stop_level) * S + 1)
        t = S
        while t < t_end:
            slot = t % S
            w = buf[slot][self.nxt]
            z, s1, decisive = self._roots(w, last)
            running = status == _RUNNING
            thr = np.maximum(st.continuity_factor * last_step, st.continuity_floor)
            ambiguous = running & (decisive < st.min_decisiveness)
            if ambiguous.any():
                floor_land = ambiguous & (n_floor >= 3)
                if floor_land.any():
                    status[floor_land] = _LANDED
                    landing[floor_land] = last[floor_land]
                    landing_t[floor_land] = t - 1 - top
                    landing_level[floor_land] = (t - 1) // S - self.K
                    limited[floor_land] = True
                    noisy[floor_land] = True
                fail = ambiguous & ~floor_land
                status[fail] = _FAILED
                reason[fail] = 1
                landing_t[fail] = t - 1 - top
            jump = (status == _RUNNING) & (s1 > thr)
            if jump.any():
                status[jump] = _FAILED
                reason[jump] = 2
                landing_t[jump] = t - 1 - top
            last_step = s1
            last = z
            buf[slot] = z
            if record and t >= top:
                rec_z.append(z[tidx].copy())

            if slot == 0 and t >= top:
                k = t // S - self.K
                if level_prev is not None:
                    step = np.abs(z - level_prev)
                    running = status == _RUNNING
                    n_small = np.where(step < st.landing_tol, n_small + 1, 0)
                    n_floor = np.where(step < st.floor_tol, n_floor + 1, 0)
                    logsteps[k % (2 * W)] = np.log(np.maximum(step, 1e-300))
                    done = running & (n_small >= 3)
                    status[done] = _LANDED
                    landing[done] = z[done]
                    landing_t[done] = t - top
                    landing_level[done] = k
                    noisy |= noisy[self.nxt]
                    if k >= 2 * W:
                        idx_new = [(k - j) % (2 * W) for j in range(W)]
                        idx_old = [(k - W - j) % (2 * W) for j in range(W)]
                        stalled = (logsteps[idx_new].mean(axis=0)
                                   > logsteps[idx_old].mean(axis=0) + math.log(0.8))
                        stall_land = (status == _RUNNING) & noisy & (n_floor >= 3) & stalled
                        status[stall_land] = _LANDED
                        landing[stall_land] = z[stall_land]
                        landing_t[stall_land] = t - top
                        landing_level[stall_land] = k
                        limited[stall_land] = True
                level_prev = z.copy()
                if stop_level is None and not (status[tidx] == _RUNNING).any():
                    break
            t += 1

        reason[(status == _RUNNING)] = 3
        names = {1: "branch-ambiguity", 2: "discontinuity", 3: "no-convergence"}
        out: dict[Angle, TracedRay] = {}
        if record and rec_z:
            poly = np.stack(rec_z, axis=0)
            pots = np.array([self.level_potential(j) for j in range(len(rec_z))])
        for col, a in enumerate(track):
            i = self.index[a]
            if record and rec_z:
                end = len(rec_z) if landing_t[i] < 0 else landing_t[i] + 1
                pts, gs = poly[:end, col].copy(), pots[:end]
            else:
                pts = np.array([landing[i]]) if status[i] == _LANDED else np.empty(0, complex)
                gs = np.empty(len(pts))
            landed = bool(status[i] == _LANDED)
            out[a] = TracedRay(
                angle=a,
                points=pts,
                potentials=gs,
                landed=landed,
                landing_point=complex(landing[i]) if landed else None,
                fail_reason=None if landed or (stop_level is not None and status[i] == _RUNNING)
                else names[int(reason[i])],
                precision_limited=bool(limited[i]),
                landing_level=int(landing_level[i]) if landed else None,
            )
        return out

    def points_at_level(self, level: int) -> np.ndarray:
        """Phase-0 points of every ray in the bundle at potential G0 / d^level."""
        st = self.settings
        S, d = st.substeps, self.m.d
        buf = np.empty((S, len(self.angles)), dtype=complex)
        for s in range(S):
            buf[s] = self._seed(self.G0 * float(d) ** (self.K - s / S))
        last = buf[S - 1].copy()
        t_target = (self.K + level) * S
        if t_target < S:
            return buf[t_target].copy()
        for t in range(S, t_target + 1):
            slot = t % S
            z, _, _ = self._roots(buf[slot][self.nxt], last)
            buf[slot] = z
            last = z
        return last.copy()


def trace_rays(m: Map, angles: Iterable[Angle], G0: float | None = None, depth: int | None = None,
               settings: TraceSettings = DEFAULT_SETTINGS, record: bool = True) -> dict[Angle, TracedRay]:
    angles = list(dict.fromkeys(angles))
    bundle = RayBundle(m, angles, G0, settings)
    return bundle.run(track=angles, record=record, depth=depth)


def trace_ray(m: Map, theta: Angle, G0: float | None = None, depth: int | None = None,
              settings: TraceSettings = DEFAULT_SETTINGS) -> TracedRay:
    """External ray at angle theta from potential G0 down to its landing point.

    The polyline starts at potential G0 (default: log of the escape radius)
    and carries ``settings.substeps`` points per halving (for d = 2) of the
    potential. It stops at the level where landing is declared.
    """
    return trace_rays(m, [theta], G0, depth, settings)[theta]


# --------------------------------------------------------------------- ray pairs


@dataclass(frozen=True, eq=False)
class LandingTable:
    map: Map
    angles: tuple[Angle, ...]
    classes: tuple[tuple[Angle, ...], ...]
    tol: float
    provenance: str
    landing: dict = field(default_factory=dict)

    def class_of(self, a: Angle) -> tuple[Angle, ...]:
        for cls in self.classes:
            if a in cls:
                return cls
        raise KeyError(a)

    def to_json(self) -> dict:
        out = {
            "map": {"d": self.map.d, "c": [self.map.c.real, self.map.c.imag]},
            "tol": self.tol,
            "provenance": self.provenance,
            "classes": [[str(a) for a in cls] for cls in self.classes],
        }
        if self.landing:
            out["landing"] = [[_r(self.landing[cls[0]].real), _r(self.landing[cls[0]].imag)]
                              for cls in self.classes]
        return out


def cluster_points(points: Sequence[complex], tol: float) -> list[list[int]]:
    """Single-linkage clusters at threshold ``tol``.

    Raises :class:`AmbiguousClustering` if two clusters come within [tol, 2 tol].
    """
    pts = np.array([[p.real, p.imag] for p in points], dtype=float).reshape(-1, 2)
    n = len(pts)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    tree = cKDTree(pts)
    near = tree.query_pairs(2 * tol, output_type="ndarray")
    if len(near):
        dist = np.hypot(*(pts[near[:, 0]] - pts[near[:, 1]]).T)
        for (i, j), r in zip(near, dist):
            if r < tol:
                parent[find(i)] = find(j)
        for (i, j), r in zip(near, dist):
            if r >= tol and find(i) != find(j):
                raise AmbiguousClustering(
                    f"landing points {i} and {j} are {r:.3g} apart, inside [tol, 2 tol] for tol={tol:g}")
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def table_from_landings(m: Map, landing: dict[Angle, complex], tol: float) -> LandingTable:
    angles = sorted(landing)
    groups = cluster_points([landing[a] for a in angles], tol)
    classes = sorted((tuple(angles[i] for i in g) for g in groups), key=lambda cl: cl[0])
    return LandingTable(m, tuple(angles), tuple(classes), tol, "numerical", dict(landing))


def ray_pairs(m: Map, angles: Iterable[Angle], tol: float = 1e-6, G0: float | None = None,
              settings: TraceSettings = DEFAULT_SETTINGS) -> LandingTable:
    """Group angles whose rays land at a common point (single linkage at ``tol``)."""
    angles = sorted(set(angles))
    rays = trace_rays(m, angles, G0, settings=settings, record=False)
    bad = [a for a in angles if not rays[a].landed]
    if bad:
        raise UnlandedRay(bad, {a: rays[a].fail_reason for a in bad})
    return table_from_landings(m, {a: rays[a].landing_point for a in angles}, tol)


# --------------------------------------------------------------------- impressions


def diameter(points: np.ndarray) -> float:
    pts = np.asarray(points, dtype=complex).ravel()
    if pts.size < 2:
        return 0.0
    xy = np.column_stack([pts.real, pts.imag])
    if pts.size > 64:
        try:
            hull = ConvexHull(xy, qhull_options="QJ")
            xy = xy[np.unique(hull.vertices)]
        except (QhullError, ValueError):
            # degenerate (collinear) cloud: extreme points along the principal axis suffice
            centered = xy - xy.mean(axis=0)
            axis = np.linalg.svd(centered, full_matrices=False)[2][0]
            proj = centered @ axis
            xy = xy[[int(np.argmin(proj)), int(np.argmax(proj))]]
    diff = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((diff ** 2).sum(axis=-1)).max())


@dataclass(frozen=True, eq=False)
class ImpressionSample:
    angle: Angle
    eps: float
    delta: float
    sample_angles: tuple[Angle, ...]
    points: np.ndarray
    diameter: float
    partial: bool
    failed: tuple[Angle, ...] = ()

    def to_json(self) -> dict:
        return {
            "angle": str(self.angle),
            "eps": self.eps,
            "delta": self.delta,
            "n_angles": len(self.sample_angles),
            "n_points": int(self.points.size),
            "diameter": _r(self.diameter),
            "partial": self.partial,
            "failed": [str(a) for a in self.failed],
        }


def impression_angles(theta: Angle, eps: float, n_angles: int, d: int = 2) -> list[Angle]:
    """``n_angles`` angles theta + j / d^M with |j| / d^M < eps.

    After M steps each of them joins the orbit of theta, so the rays can be
    traced together with theta's own orbit.
    """
    if eps <= 0 or n_angles < 1:
        raise ValueError("eps and n_angles must be positive")
    M = max(1, math.ceil(math.log(max(n_angles, 2) / eps, d)))
    jmax = math.ceil(eps * d ** M) - 1
    js = sorted({round(x) for x in np.linspace(-jmax, jmax, n_angles)})
    out = [Angle.of(theta.num * d ** M + j * theta.den, theta.den * d ** M) for j in js]
    return [a for a in out if circ_dist(a, theta) < eps]


def impression_sample(m: Map, theta: Angle, eps: float, delta: float, n_angles: int = 33,
                      G0: float | None = None, settings: TraceSettings = DEFAULT_SETTINGS) -> ImpressionSample:
    """Points with potential below ``delta`` on rays within ``eps`` of theta, and
    the diameter of that cloud."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    sample = impression_angles(theta, eps, n_angles, m.d)
    rays = trace_rays(m, sample, G0, settings=settings)
    chunks, failed = [], []
    for a in sample:
        r = rays[a]
        if not r.landed:
            failed.append(a)
        sel = r.points[r.potentials < delta]
        chunks.append(sel)
        if r.landed:
            chunks.append(np.array([r.landing_point]))
    pts = np.concatenate(chunks) if chunks else np.empty(0, complex)
    return ImpressionSample(theta, eps, delta, tuple(sample), pts, diameter(pts), bool(failed), tuple(failed))


# --------------------------------------------------------------------- periodic points


@dataclass(frozen=True)
class PeriodicPointRec:
    z: complex
    period: int
    multiplier: complex
    kind: str  # repelling | attracting | indifferent | superattracting


def _classify(lam: complex, tol: float = 1e-6) -> str:
    r = abs(lam)
    if r < 1e-9:
        return "superattracting"
    if r < 1 - tol:
        return "attracting"
    if r <= 1 + tol:
        return "indifferent"
    return "repelling"


def _fn_minus_id(m: Map, z: np.ndarray, n: int):
    """f^n(z) - z and its derivative."""
    w = z.copy()
    dw = np.ones_like(z)
    with np.errstate(over="ignore", invalid="ignore"):
        for _ in range(n):
            dw = m.d * w ** (m.d - 1) * dw
            w = w ** m.d + m.c
    return w - z, dw - 1


def _log_residual(m: Map, z: np.ndarray, n: int, big: float = 1e100) -> np.ndarray:
    """Complex log of f^n(z) - z, safe for orbits that would overflow.

    Once |f^k(z)| > big the remaining iterations are pure powers to working
    accuracy, so log f^n(z) = d^(n-k) log f^k(z) and z is negligible.
    """
    w = z.copy()
    out = np.empty_like(z)
    done = np.zeros(z.shape, dtype=bool)
    for k in range(n):
        w = np.where(done, 0, w ** m.d + m.c)
        esc = ~done & (np.abs(w) > big)
        out[esc] = float(m.d) ** (n - k - 1) * np.log(w[esc])
        done |= esc
    with np.errstate(divide="ignore"):
        out[~done] = np.log(w[~done] - z[~done])
    return out


def _dk_seeds(m: Map, n: int) -> np.ndarray:
    """Equally spaced points (in external angle) on an equipotential around K.

    On the level curve G = G0 / d^(n-3) the polynomial f^n(z) - z is close to
    phi(z)^(d^n), so Weierstrass corrections start small; a round circle would
    instead throw the first iterate far out for large n.
    """
    N = m.d ** n
    angles = [Angle.of(j, N) for j in range(N)]
    bundle = RayBundle(m, angles)
    pts = bundle.points_at_level(max(n - 3, 0))
    order = [bundle.index[a] for a in angles]
    return pts[order]


class PeriodicPointsNotConverged(RuntimeError):
    def __init__(self, partial):
        self.partial = partial
        super().__init__("Durand-Kerner iteration did not converge")


def periodic_points(m: Map, n: int, tol: float = 1e-12, max_iter: int = 1000,
                    cap: int = 4096) -> list[PeriodicPointRec]:
    """All d^n solutions of f^n(z) = z, labelled with exact period and multiplier.

    Roots are found simultaneously by Weierstrass (Durand-Kerner) iteration on
    the monic polynomial f^n(z) - z, evaluated through the iteration itself
    rather than from expanded coefficients, then polished by Newton. Points of
    a cycle appear consecutively; cycles are ordered by period.

    Raises :class:`PeriodicPointsNotConverged` (carrying the partial labelled
    set) when some root is still moving after the iteration cap.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    N = m.d ** n
    if N > cap:
        raise ValueError(f"d^n = {N} roots exceeds the cap of {cap}")
    z = _dk_seeds(m, n)
    best, stale = np.inf, 0
    for _ in range(max_iter):
        diff = z[:, None] - z[None, :]
        np.fill_diagonal(diff, 1.0)
        with np.errstate(over="ignore", invalid="ignore"):
            corr = np.exp(_log_residual(m, z, n) - np.log(diff).sum(axis=1))
        corr[~np.isfinite(corr)] = 0
        z = z - corr
        err = float(np.max(np.abs(corr)))
        if err < tol * (1 + float(np.max(np.abs(z)))):
            break
        # stop once corrections sit at the rounding floor
        if err < 0.5 * best:
            best, stale = err, 0
        else:
            stale += 1
            if best < 1e-8 and stale >= 10:
                break
    for _ in range(4):
        p, dp = _fn_minus_id(m, z, n)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = p / dp
        step[~np.isfinite(step)] = 0
        z = z - step
    p, dp = _fn_minus_id(m, z, n)
    with np.errstate(divide="ignore", invalid="ignore"):
        moving = np.abs(p / dp) > 1e-8 * (1 + np.abs(z))

    recs = _label_cycles(m, z, n)
    if moving.any():
        raise PeriodicPointsNotConverged(recs)
    return recs


def _label_cycles(m: Map, roots: np.ndarray, n: int) -> list[PeriodicPointRec]:
    divisors = [k for k in range(1, n + 1) if n % k == 0]
    used = np.zeros(len(roots), dtype=bool)
    cycles = []
    order = np.lexsort((-roots.imag, -roots.real))
    for i in order:
        if used[i]:
            continue
        z0 = complex(roots[i])
        scale = 1 + abs(z0)
        period = n
        for k in divisors:
            if abs(m.iterate(z0, k) - z0) < 1e-7 * scale:
                period = k
                break
        orbit_pts = [z0]
        for _ in range(period - 1):
            orbit_pts.append(orbit_pts[-1] ** m.d + m.c)
        lam = complex(np.prod([m.derivative(w) for w in orbit_pts]))
        kind = _classify(lam)
        # claim the closest unused root for every orbit point
        members = []
        for w in orbit_pts:
            free = np.flatnonzero(~used)
            if free.size == 0:
                break
            j = free[np.argmin(np.abs(roots[free] - w))]
            used[j] = True
            members.append(PeriodicPointRec(complex(roots[j]), period, lam, kind))
        cycles.append(members)
    cycles.sort(key=lambda cyc: (cyc[0].period, -cyc[0].z.real, -cyc[0].z.imag))
    return [r for cyc in cycles for r in cyc]


def group_cycles(recs: Sequence[PeriodicPointRec]) -> list[list[PeriodicPointRec]]:
    """Split the output of :func:`periodic_points` back into cycles."""
    out, i = [], 0
    while i < len(recs):
        p = recs[i].period
        out.append(list(recs[i:i + p]))
        i += p
    return out


def hyperbolic_center(period: int, seed: complex, d: int = 2, tol: float = 1e-14,
                      max_iter: int = 100) -> complex:
    """Root of f_c^period(0) = 0 by Newton's method in c, from ``seed``."""
    c = complex(seed)
    for _ in range(max_iter):
        z, dz = 0j, 0j
        for _ in range(period):
            dz = d * z ** (d - 1) * dz + 1
            z = z ** d + c
        step = z / dz
        c -= step
        if abs(step) < tol:
            return c
    raise RuntimeError("Newton iteration for the center did not converge")


C_RABBIT = hyperbolic_center(3, -0.12 + 0.75j)
C_BASILICA = -1 + 0j
