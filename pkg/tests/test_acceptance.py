"""Acceptance criteria 1-11.

Each check returns (passed, detail). Under pytest every criterion is one test
that logs "ACCEPTANCE k: PASS|FAIL ..." (collected into the terminal summary)
and then asserts. Run this file directly to print the same lines without pytest:

    python tests/test_acceptance.py
"""

from __future__ import annotations

import json
import math
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from itertools import combinations
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from juliafibers.angles import Angle, angles_with_denominator_at_most, orbit, times_d  # noqa: E402
from juliafibers.dynamics import C_RABBIT, Map, impression_sample, ray_pairs, trace_ray, trace_rays  # noqa: E402
from juliafibers.fibers import branch_census, fiber_diameter_bound  # noqa: E402
from juliafibers.lamination import (  # noqa: E402
    Leaf, Polygon, classify_triangles, leaf_image, min_triangle_area, packing_bound, triangle_orbit,
    wandering_report,
)
from juliafibers.symbolic import CharacteristicAngle, landing_classes  # noqa: E402
from oracles import (  # noqa: E402
    brute_orbit, chebyshev_landing, disk_landing, functional_graph, quadratic_fixed_points,
    rabbit_parameter, triangles_cross,
)

CRITERIA: dict[int, tuple[str, callable]] = {}


def criterion(k: int, title: str):
    def wrap(fn):
        CRITERIA[k] = (title, fn)
        return fn
    return wrap


# ------------------------------------------------------------------ 1


@criterion(1, "orbits of all angles with denominator <= 512, d in {2,3}, < 5 s")
def check_orbits():
    fails, elapsed, count = 0, 0.0, 0
    for d in (2, 3):
        angles = [(p, q) for q in range(1, 513) for p in range(q) if math.gcd(p, q) == 1]
        t = time.perf_counter()
        got = [orbit(Angle(p, q), d) for p, q in angles]
        pp = [(i.preperiod, i.period) for i in got]
        elapsed += time.perf_counter() - t
        count += len(angles)
        graphs = {q: functional_graph(q, d) for q in range(1, 513)}
        for (p, q), (pre, per) in zip(angles, pp):
            if (graphs[q][0][p], graphs[q][1][p]) != (pre, per):
                fails += 1
        # full orbit lists against brute-force iteration
        for (p, q), info in zip(angles, got):
            if q > 128:
                continue
            b_pre, b_per, seq = brute_orbit(p, q, d)
            if [x.value for x in info.orbit] != seq or (b_pre, b_per) != (info.preperiod, info.period):
                fails += 1
    ok = fails == 0 and elapsed < 5.0
    return ok, f"{count} angles, {fails} mismatches, orbit() time {elapsed:.2f} s"


# ------------------------------------------------------------------ 2


@criterion(2, "leaf-length law on 10,000 random leaves")
def check_leaf_law():
    rng = random.Random(20240601)
    fails = 0
    tested = 0
    while tested < 10_000:
        d = rng.choice((2, 3, 4))
        q1, q2 = rng.randint(2, 10**6), rng.randint(2, 10**6)
        a = Angle.of(rng.randrange(q1), q1)
        b = Angle.of(rng.randrange(q2), q2)
        if a == b:
            continue
        leaf = Leaf(a, b)
        s = leaf.length
        if s >= Fraction(1, d):
            continue
        tested += 1
        img = leaf_image(leaf, d)
        # image length from the raw endpoint images, not through the library
        x, y = (d * a.value) % 1, (d * b.value) % 1
        direct = min((x - y) % 1, (y - x) % 1)
        formula = min(d * s, 1 - d * s)
        if img is None or img.length != formula or direct != formula:
            fails += 1
    return fails == 0, f"{tested} leaves, {fails} failures"


# ------------------------------------------------------------------ 3


@criterion(3, "no wandering triangles, denominators <= 63, growth rule, < 10 s")
def check_triangles():
    t = time.perf_counter()
    batches = [classify_triangles(q, 2) for q in range(1, 64)]
    elapsed = time.perf_counter() - t
    total = sum(len(b.vertices) for b in batches)
    bad_class = sum(int(((b.classification < 0) | (b.classification > 2)).sum()) for b in batches)
    bad_rule = sum(int((~b.rule_holds).sum()) for b in batches)
    counts = [sum(int((b.classification == k).sum()) for b in batches) for k in range(3)]

    # the scalar functions agree with the batch on a fixed sample
    rng = random.Random(7)
    mismatch = 0
    for b in batches:
        if not len(b.vertices):
            continue
        for i in rng.sample(range(len(b.vertices)), min(40, len(b.vertices))):
            tri = Polygon(tuple(Angle.of(int(x), b.den) for x in b.vertices[i]))
            r = triangle_orbit(tri, 2)
            w = wandering_report(tri, 2, max(1, len(r.sets)))
            if r.classification != b.label(i) or w.rule_holds != bool(b.rule_holds[i]):
                mismatch += 1
    ok = bad_class == 0 and bad_rule == 0 and mismatch == 0 and elapsed < 10.0
    return ok, (f"{total} triangles (periodic {counts[0]}, preperiodic {counts[1]}, collapse {counts[2]}), "
                f"rule failures {bad_rule}, scalar mismatches {mismatch}, {elapsed:.2f} s")


# ------------------------------------------------------------------ 4


def greedy_packing(eps: Fraction) -> int:
    n = round(2 / eps)
    grid = [Fraction(k, n) for k in range(n)]

    def gap_ok(tri):
        return all(min((x - y) % 1, (y - x) % 1) >= eps for x, y in combinations(tri, 2))

    cands = [t for t in combinations(grid, 3) if gap_ok(t)]
    # smallest triangles first: the most economical packing the greedy can find
    cands.sort(key=lambda t: (sorted(((t[1] - t[0]), (t[2] - t[1]), 1 - (t[2] - t[0])))[::-1], t))
    chosen = []
    for t in cands:
        if all(not triangles_cross(t, u) and set(t) != set(u) for u in chosen):
            chosen.append(t)
    return len(chosen)


@criterion(4, "greedy packings never exceed packing_bound; min area at 1/3 is 3*sqrt(3)/4")
def check_packing():
    parts, ok = [], True
    for eps in (Fraction(1, 3), Fraction(1, 6), Fraction(1, 12)):
        got, bound = greedy_packing(eps), packing_bound(float(eps))
        ok &= got <= bound
        parts.append(f"eps={eps}: {got} <= {bound}")
    area = min_triangle_area(1 / 3)
    err = abs(area - 3 * math.sqrt(3) / 4)
    ok &= err < 1e-6
    return ok, "; ".join(parts) + f"; area error {err:.1e}"


# ------------------------------------------------------------------ 5


@criterion(5, "ray oracles for c = 0, c = -2 and the basilica alpha, each trace < 100 ms")
def check_ray_oracles():
    worst_t, errs = 0.0, {}

    def timed(m, a):
        nonlocal worst_t
        t = time.perf_counter()
        r = trace_ray(m, a)
        worst_t = max(worst_t, time.perf_counter() - t)
        return r

    rng = random.Random(5)
    disk_angles = rng.sample(angles_with_denominator_at_most(100), 64)
    e = 0.0
    for a in disk_angles:
        r = timed(Map(2, 0), a)
        e = max(e, abs(r.landing_point - disk_landing(a.value)) if r.landed else math.inf)
    errs["c=0"] = (e, 1e-6)
    e = 0.0
    for a in angles_with_denominator_at_most(32):
        r = timed(Map(2, -2), a)
        e = max(e, abs(r.landing_point - chebyshev_landing(a.value)) if r.landed else math.inf)
    errs["c=-2"] = (e, 1e-4)
    alpha = quadratic_fixed_points(-1)[1]
    e = 0.0
    for a in (Angle(1, 3), Angle(2, 3)):
        r = timed(Map(2, -1), a)
        e = max(e, abs(r.landing_point - alpha) if r.landed else math.inf)
    errs["alpha"] = (e, 1e-6)
    ok = all(v < tol for v, tol in errs.values()) and worst_t < 0.1
    detail = ", ".join(f"{k} max error {v:.1e}" for k, (v, _) in errs.items())
    return ok, f"{detail}, slowest trace {worst_t * 1e3:.1f} ms"


# ------------------------------------------------------------------ 6


@criterion(6, "equivariance |f(landing(t)) - landing(2t)| < 1e-6, denominators <= 63")
def check_equivariance():
    angles = angles_with_denominator_at_most(63)
    ok, parts = True, []
    for name, c in (("-1", -1), ("i", 1j), ("rabbit", rabbit_parameter())):
        m = Map(2, c)
        rays = trace_rays(m, angles, record=False)
        worst, n = 0.0, 0
        for a in angles:
            r, r2 = rays[a], rays[times_d(a, 2)]
            if r.landed and r2.landed:
                n += 1
                worst = max(worst, abs(m(r.landing_point) - r2.landing_point))
        ok &= worst < 1e-6
        parts.append(f"c={name}: {n}/{len(angles)} landed pairs, max {worst:.1e}")
    return ok, "; ".join(parts)


# ------------------------------------------------------------------ 7


@criterion(7, "c = i: itinerary classes equal numerical ray pairs, denominators <= 63")
def check_dendrite():
    angles = angles_with_denominator_at_most(63)
    comb = {tuple(c) for c in landing_classes(angles, CharacteristicAngle(Angle(1, 6)))}
    num = set(ray_pairs(Map(2, 1j), angles).classes)
    diff = len(comb ^ num)
    return diff == 0, f"{len(num)} numerical classes, {len(comb)} itinerary classes, {diff} differ"


# ------------------------------------------------------------------ 8


@criterion(8, "rabbit branch census, denominators <= 127")
def check_census():
    census = branch_census(Map(2, C_RABBIT), 127)
    classes = [p.angles for p in census.points]
    alpha_cls = (Angle(1, 7), Angle(2, 7), Angle(4, 7))
    ok = alpha_cls in classes and all(p.eventually_periodic for p in census.points)
    # no other class holds any of the alpha angles
    ok &= sum(1 for c in classes if set(c) & set(alpha_cls)) == 1
    sizes = sorted({p.ray_count for p in census.points})
    return ok, f"{len(classes)} branch points (ray counts {sizes}), alpha class present: {alpha_cls in classes}"


# ------------------------------------------------------------------ 9


@criterion(9, "basilica fibers: beta shrinking (ratio < 0.2), Fatou interior stalled, < 30 s")
def check_fibers():
    beta = quadratic_fixed_points(-1)[0]
    t = time.perf_counter()
    at_beta = fiber_diameter_bound(Map(2, -1), beta, 10)
    interior = fiber_diameter_bound(Map(2, -1), 0.1, 10)
    elapsed = time.perf_counter() - t
    ok = (at_beta.verdict == "shrinking" and at_beta.ratio < 0.2
          and interior.verdict == "stalled" and elapsed < 30)
    return ok, (f"beta ratio {at_beta.ratio:.2e} ({at_beta.verdict}), "
                f"z=0.1 ratio {interior.ratio:.3f} ({interior.verdict}), {elapsed:.1f} s")


# ------------------------------------------------------------------ 10


@criterion(10, "impression of 1/3 at c = -1 shrinks along eps = delta in {1e-2, 1e-3, 1e-4}")
def check_impression():
    ds = [impression_sample(Map(2, -1), Angle(1, 3), e, e).diameter for e in (1e-2, 1e-3, 1e-4)]
    ok = all(b <= 1.1 * a for a, b in zip(ds, ds[1:]))
    return ok, "diameters " + ", ".join(f"{x:.4g}" for x in ds)


# ------------------------------------------------------------------ 11


CLI_RUNS = [
    ["orbit", "--angle", "1/7"],
    ["trace", "--angle", "1/3"],
    ["pairs", "--max-den", "9"],
    ["itinerary", "--theta-v", "1/6", "--angles", "1/7,3/7,1/12"],
    ["wandering", "--triangle", "1/7,2/7,4/7"],
    ["puzzle", "--depth", "2"],
    ["puzzle", "--depth", "4", "--fiber", "1.618033988749895", "--csv", "--out", "{dir}/fiber.csv"],
    ["impression", "--angle", "1/3", "--eps", "1e-3", "--delta", "1e-3"],
    ["census", "--max-den", "15"],
    ["render", "--depth", "1", "--angles", "0,1/2", "--out", "{dir}/pic.svg"],
]


def _cli_outputs(workdir: Path, cfg: Path, seed: str) -> list[bytes]:
    env = dict(os.environ, PYTHONHASHSEED=seed)
    outs = []
    for args in CLI_RUNS:
        argv = [a.format(dir=workdir) for a in args]
        res = subprocess.run([sys.executable, "-m", "juliafibers.cli", *argv, "--config", str(cfg), "--json"],
                             capture_output=True, env=env, check=True)
        outs.append(res.stdout)
        for name in ("fiber.csv", "pic.svg"):
            f = workdir / name
            if f.exists():
                outs.append(f.read_bytes())
                f.unlink()
    return outs


@criterion(11, "CLI reruns with a fixed config are byte-identical")
def check_determinism():
    import tempfile
    with tempfile.TemporaryDirectory() as d:
        d = Path(d)
        cfg = d / "run.cfg"
        cfg.write_text("d = 2\nc = -1\ntol = 1e-6\nresolution = 48\nmax_iter = 100\n")
        first = _cli_outputs(d, cfg, "1")
        second = _cli_outputs(d, cfg, "2")
    same = sum(a == b for a, b in zip(first, second))
    # stdout is JSON for every run
    valid = all(isinstance(json.loads(o), dict) for o in first if o.startswith(b"{"))
    return same == len(first) and valid, f"{same}/{len(first)} outputs identical across processes"


# ------------------------------------------------------------------ runners


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_acceptance(k, acceptance_log):
    title, fn = CRITERIA[k]
    ok, detail = fn()
    line = f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {title} - {detail}"
    acceptance_log.append(line)
    print(line)
    assert ok, line


def main() -> int:
    failed = 0
    for k in sorted(CRITERIA):
        title, fn = CRITERIA[k]
        ok, detail = fn()
        failed += not ok
        print(f"ACCEPTANCE {k}: {'PASS' if ok else 'FAIL'} - {title} - {detail}", flush=True)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
