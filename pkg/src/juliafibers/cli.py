"""Command-line front end: ``juliafibers <command> [flags]``.

Every command prints a short text summary, or JSON with ``--json``. ``--out``
writes the result to a file instead of stdout. Settings come from defaults,
then the ``--config`` file (key=value lines), then explicit flags.

Exit codes: 0 success, 1 operation error (a ray failed, no alpha pair, ...),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .angles import Angle, angles_with_denominator_at_most, base_d_digits, orbit
from .dynamics import (
    DEFAULT_SETTINGS, Map, PeriodicPointsNotConverged, format_complex, impression_sample,
    parse_complex, ray_pairs, trace_ray,
)
from .errors import FiberError
from .fibers import Puzzle, branch_census, fiber_diameter_bound
from .lamination import Leaf, OrbitExhausted, Polygon, triangle_orbit, wandering_report
from .render import RenderSpec, render_svg
from .symbolic import CharacteristicAngle, itinerary

SCHEMA_VERSION = 1

# documented config keys and their types
CONFIG_KEYS = {
    "d": int,
    "c": str,
    "tol": float,
    "depth": int,
    "landing_tol": float,
    "floor_tol": float,
    "substeps": int,
    "G0": float,
    "escape_radius_factor": float,
    "resolution": int,
    "max_iter": int,
    "guard": float,
    "max_den": int,
}


class UsageError(Exception):
    pass


def load_config(path: str | None) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    if not path:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_KEYS[key](val.strip('"').strip("'"))
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from None
    return out


def _pick(args, cfg: dict, key: str, default=None):
    v = getattr(args, key, None)
    if v is not None:
        return v
    return cfg.get(key, default)


def _angle(text: str) -> Angle:
    try:
        return Angle.parse(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


def _angles(text: str) -> list[Angle]:
    return [_angle(t) for t in text.split(",") if t.strip()]


def _complex(text: str) -> complex:
    try:
        return parse_complex(text)
    except ValueError as e:
        raise UsageError(str(e)) from None


class Context:
    """Resolved settings for one invocation."""

    def __init__(self, args, cfg: dict):
        self.args = args
        self.cfg = cfg
        d = _pick(args, cfg, "d", 2)
        if d < 2:
            raise UsageError("--d must be >= 2")
        self.d = d
        c = _pick(args, cfg, "c", "0")
        self.map = Map(d, _complex(c) if isinstance(c, str) else complex(c))
        self.tol = _pick(args, cfg, "tol", 1e-6)
        settings = DEFAULT_SETTINGS
        for key in ("landing_tol", "floor_tol", "substeps"):
            if key in cfg:
                settings = replace(settings, **{key: cfg[key]})
        depth = _pick(args, cfg, "depth", None)
        if depth is not None and getattr(args, "command", "") in ("trace", "pairs", "impression", "census"):
            if depth < 1:
                raise UsageError("--depth must be >= 1")
            settings = replace(settings, depth=depth)
        self.settings = settings
        G0 = cfg.get("G0")
        factor = cfg.get("escape_radius_factor")
        if G0 is None and factor is not None:
            G0 = math.log(self.map.escape_radius * factor)
        self.G0 = G0


def _map_json(m: Map) -> dict:
    return {"d": m.d, "c": [m.c.real, m.c.imag]}


# --------------------------------------------------------------------- commands


def cmd_orbit(ctx: Context):
    a = _angle(ctx.args.angle)
    info = orbit(a, ctx.d)
    js = {
        "angle": str(a),
        "d": ctx.d,
        "preperiod": info.preperiod,
        "period": info.period,
        "orbit": [str(x) for x in info.orbit],
        "digits": base_d_digits(a, ctx.d, info.preperiod + info.period) if ctx.d <= 36 else None,
    }
    text = (f"{a} under x{ctx.d}: preperiod {info.preperiod}, period {info.period}\n"
            f"orbit: {' -> '.join(str(x) for x in info.orbit)}")
    return js, text


def cmd_trace(ctx: Context):
    a = _angle(ctx.args.angle)
    ray = trace_ray(ctx.map, a, ctx.G0, settings=ctx.settings)
    js = {"map": _map_json(ctx.map), **ray.to_json(),
          "precision_limited": ray.precision_limited, "landing_level": ray.landing_level}
    if ray.landed:
        text = (f"ray {a} for {ctx.map} lands at {format_complex(ray.landing_point)} "
                f"(level {ray.landing_level}, {len(ray.points)} points)")
    else:
        text = f"ray {a} for {ctx.map} did not land: {ray.fail_reason}"
    return js, text, (0 if ray.landed else 1)


def _angle_set(ctx: Context) -> list[Angle]:
    if ctx.args.angles:
        return _angles(ctx.args.angles)
    max_den = _pick(ctx.args, ctx.cfg, "max_den", None)
    if max_den is None:
        raise UsageError("give --angles or --max-den")
    return angles_with_denominator_at_most(max_den)


def cmd_pairs(ctx: Context):
    table = ray_pairs(ctx.map, _angle_set(ctx), ctx.tol, ctx.G0, ctx.settings)
    js = table.to_json()
    rows = []
    for cls in table.classes:
        z = table.landing[cls[0]]
        rows.append(f"{{{', '.join(str(a) for a in cls)}}} -> {format_complex(z)}")
    return js, f"{len(table.classes)} landing classes\n" + "\n".join(rows)


def cmd_itinerary(ctx: Context):
    if ctx.args.theta_v is None:
        raise UsageError("--theta-v is required")
    ca = CharacteristicAngle(_angle(ctx.args.theta_v), ctx.d)
    angles = _angles(ctx.args.angles) if ctx.args.angles else [_angle(ctx.args.angle or "")]
    items = [(a, itinerary(a, ca)) for a in angles]
    js = {
        "theta_v": str(ca.theta_v),
        "d": ctx.d,
        "itineraries": [{"angle": str(a), **it.to_json(), "text": str(it)} for a, it in items],
    }
    return js, "\n".join(f"{a}: {it}" for a, it in items)


def cmd_wandering(ctx: Context):
    try:
        tri = Polygon.parse(ctx.args.triangle)
    except ValueError as e:
        raise UsageError(str(e)) from None
    if len(tri.vertices) != 3:
        raise UsageError("--triangle needs exactly three angles")
    rep = triangle_orbit(tri, ctx.d, ctx.args.max_steps)
    steps = ctx.args.steps if ctx.args.steps is not None else max(1, len(rep.sets))
    wr = wandering_report(tri, ctx.d, steps)
    js = {
        "triangle": [str(v) for v in tri.vertices],
        "d": ctx.d,
        "classification": rep.classification,
        "preperiod": rep.preperiod,
        "period": rep.period,
        "collapse_step": rep.collapse_step,
        "steps": [s.to_json() for s in wr.steps],
        "collapsed_at": wr.collapsed_at,
        "growth_rule_holds": wr.rule_holds,
    }
    if rep.classification == "critical-collapse":
        text = f"{tri}: critical collapse after {rep.collapse_step} steps"
    else:
        text = f"{tri}: {rep.classification} (preperiod {rep.preperiod}, period {rep.period})"
    text += f"\ngrowth rule holds on {len(wr.steps)} steps: {wr.rule_holds}"
    return js, text


def cmd_puzzle(ctx: Context):
    depth = _pick(ctx.args, ctx.cfg, "depth", 0)
    if depth < 0:
        raise UsageError("--depth must be >= 0")
    resolution = ctx.cfg.get("resolution", 128)
    guard = ctx.cfg.get("guard", 1e-7)
    pz = Puzzle(ctx.map, depth, ctx.G0, ctx.tol, guard=guard, resolution=resolution, settings=ctx.settings)
    if ctx.args.fiber is not None:
        diag = fiber_diameter_bound(ctx.map, _complex(ctx.args.fiber), depth, puzzle=pz)
        js = {"map": _map_json(ctx.map), **diag.to_json()}
        if ctx.args.csv:
            return js, diag.to_csv().rstrip("\n"), 0, diag.to_csv()
        text = "\n".join(f"depth {k}: {v:.6g}" for k, v in diag.bounds)
        return js, f"{text}\nverdict: {diag.verdict} (ratio {diag.ratio:.3g})"
    pieces = pz.pieces(depth)
    js = pz.to_json(depth, pieces)
    rows = [f"alpha {format_complex(pz.alpha.alpha)} with rays "
            f"{', '.join(str(a) for a in pz.alpha.angles)}",
            f"depth {depth}: {len(pieces)} pieces"]
    for p in pieces:
        rows.append(f"  [{' '.join(str(l) for l in p.boundary_leaves)}] diameter {p.sample_diameter:.6g}")
    return js, "\n".join(rows)


def cmd_impression(ctx: Context):
    a = _angle(ctx.args.angle)
    s = impression_sample(ctx.map, a, ctx.args.eps, ctx.args.delta, ctx.args.n_angles, ctx.G0, ctx.settings)
    js = {"map": _map_json(ctx.map), **s.to_json()}
    text = f"impression of {a} (eps {ctx.args.eps:g}, delta {ctx.args.delta:g}): diameter {s.diameter:.6g}"
    if s.partial:
        text += f" [partial: {len(s.failed)} rays failed]"
    return js, text


def cmd_census(ctx: Context):
    max_den = _pick(ctx.args, ctx.cfg, "max_den", 63)
    ca = CharacteristicAngle(_angle(ctx.args.theta_v), ctx.d) if ctx.args.theta_v else None
    bc = branch_census(ctx.map, max_den, ca, ctx.tol, ctx.G0, ctx.settings)
    js = {"map": _map_json(ctx.map), **bc.to_json()}
    rows = [f"{len(bc.points)} branch points among denominators <= {max_den}"]
    for p in bc.points:
        rows.append(f"  {p.ray_count} rays {{{', '.join(str(a) for a in p.angles)}}} "
                    f"at {format_complex(p.landing)}")
    if bc.agrees_with_itineraries is not None:
        rows.append(f"itinerary partition agrees: {bc.agrees_with_itineraries}")
    return js, "\n".join(rows)


def cmd_render(ctx: Context):
    a = ctx.args
    try:
        spec = RenderSpec(
            map=ctx.map,
            center=_complex(a.center),
            width=a.width,
            resolution=_pick(a, ctx.cfg, "resolution", 256),
            rays=tuple(_angles(a.angles)) if a.angles else (),
            leaves=tuple(Leaf.parse(t) for t in a.leaves.split(",")) if a.leaves else (),
            puzzle_depth=_pick(a, ctx.cfg, "depth", None),
            max_iter=_pick(a, ctx.cfg, "max_iter", 200),
            G0=ctx.G0,
        )
    except ValueError as e:
        raise UsageError(str(e)) from None
    svg = render_svg(spec, ctx.settings)
    js = {"map": _map_json(ctx.map), "bytes": len(svg.encode()), "out": a.out}
    return js, svg.rstrip("\n"), 0, svg


COMMANDS = {
    "orbit": cmd_orbit,
    "trace": cmd_trace,
    "pairs": cmd_pairs,
    "itinerary": cmd_itinerary,
    "wandering": cmd_wandering,
    "puzzle": cmd_puzzle,
    "impression": cmd_impression,
    "census": cmd_census,
    "render": cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--d", type=int, help="degree (default 2)")
    common.add_argument("--c", help="parameter, e.g. -1, i, -0.12+0.74i")
    common.add_argument("--tol", type=float, help="landing clustering tolerance (default 1e-6)")
    common.add_argument("--depth", type=int, help="trace depth in levels, or puzzle depth")
    common.add_argument("--config", help="key=value settings file")
    common.add_argument("--json", action="store_true", help="print JSON")
    common.add_argument("--out", help="write output to this file")

    p = argparse.ArgumentParser(prog="juliafibers", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("orbit", parents=[common], help="period and preperiod of an angle")
    s.add_argument("--angle", required=True)

    s = sub.add_parser("trace", parents=[common], help="trace one external ray")
    s.add_argument("--angle", required=True)

    s = sub.add_parser("pairs", parents=[common], help="group rays by landing point")
    s.add_argument("--angles")
    s.add_argument("--max-den", dest="max_den", type=int)

    s = sub.add_parser("itinerary", parents=[common], help="itineraries for a characteristic angle")
    s.add_argument("--theta-v", dest="theta_v")
    s.add_argument("--angle")
    s.add_argument("--angles")

    s = sub.add_parser("wandering", parents=[common], help="orbit and side lengths of a triangle")
    s.add_argument("--triangle", required=True, help="three angles a,b,c")
    s.add_argument("--steps", type=int, help="steps in the side-length report")
    s.add_argument("--max-steps", dest="max_steps", type=int, help="budget for the orbit search")

    s = sub.add_parser("puzzle", parents=[common], help="puzzle pieces, or a fiber diagnostic")
    s.add_argument("--fiber", help="point whose nested pieces to measure")
    s.add_argument("--csv", action="store_true", help="with --fiber, emit depth,diameter CSV")

    s = sub.add_parser("impression", parents=[common], help="sampled impression diameter")
    s.add_argument("--angle", required=True)
    s.add_argument("--eps", type=float, default=1e-3)
    s.add_argument("--delta", type=float, default=1e-3)
    s.add_argument("--n-angles", dest="n_angles", type=int, default=33)

    s = sub.add_parser("census", parents=[common], help="points where three or more rays land")
    s.add_argument("--max-den", dest="max_den", type=int)
    s.add_argument("--theta-v", dest="theta_v")

    s = sub.add_parser("render", parents=[common], help="SVG picture")
    s.add_argument("--center", default="0")
    s.add_argument("--width", type=float, default=4.0)
    s.add_argument("--resolution", type=int)
    s.add_argument("--max-iter", dest="max_iter", type=int)
    s.add_argument("--angles", help="rays to overlay")
    s.add_argument("--leaves", help="leaves to overlay, a-b,c-d")
    return p


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


_VALUE_FLAGS = ("--c", "--center", "--fiber")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """Turn ``--c -1+0i`` into ``--c=-1+0i`` so argparse does not read the
    value as an option."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    args = parser.parse_args(_glue_negative_values(argv))
    try:
        ctx = Context(args, load_config(args.config))
        res = COMMANDS[args.command](ctx)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (FiberError, OrbitExhausted, PeriodicPointsNotConverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2

    js, text = res[0], res[1]
    code = res[2] if len(res) > 2 else 0
    raw = res[3] if len(res) > 3 else None
    payload = json.dumps({"schema": f"{args.command}/v{SCHEMA_VERSION}", **js}, indent=2)
    if raw is not None and args.out:
        # the file gets the SVG or CSV itself; --json then reports on stdout
        Path(args.out).write_text(raw)
        if args.json:
            _emit(payload, None)
    elif args.json:
        _emit(payload, args.out)
    else:
        _emit(text, args.out)
    return code


if __name__ == "__main__":
    sys.exit(main())
