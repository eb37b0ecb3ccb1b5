"""Exact angle dynamics, external rays, puzzles and fiber diagnostics for
unicritical polynomials z^d + c."""

__version__ = "0.1.0"

from .angles import Angle, OrbitInfo, orbit, preimages, times_d
from .dynamics import Map, LandingTable, TracedRay, periodic_points, ray_pairs, trace_ray, trace_rays
from .errors import (
    AmbiguousClustering, FiberError, NoAlphaPair, NotAPair, OnBoundary, PointOnCurve, UnlandedRay,
)
from .fibers import (
    FiberDiagnostic, PuzzlePiece, SeparationCurve, branch_census, fiber_diameter_bound,
    puzzle_build, separates, separation_curve,
)
from .lamination import Leaf, Polygon, classify_triangles, leaf_image, triangle_orbit, wandering_report
from .symbolic import CharacteristicAngle, Itinerary, itinerary, landing_classes

__all__ = [
    "Angle", "OrbitInfo", "orbit", "preimages", "times_d",
    "Map", "LandingTable", "TracedRay", "periodic_points", "ray_pairs", "trace_ray", "trace_rays",
    "AmbiguousClustering", "FiberError", "NoAlphaPair", "NotAPair", "OnBoundary", "PointOnCurve",
    "UnlandedRay",
    "FiberDiagnostic", "PuzzlePiece", "SeparationCurve", "branch_census", "fiber_diameter_bound",
    "puzzle_build", "separates", "separation_curve",
    "Leaf", "Polygon", "classify_triangles", "leaf_image", "triangle_orbit", "wandering_report",
    "CharacteristicAngle", "Itinerary", "itinerary", "landing_classes",
]
