class FiberError(Exception):
    """Base class for operation-level failures."""


class UnlandedRay(FiberError):
    def __init__(self, angles, reasons=None):
        self.angles = list(angles)
        self.reasons = dict(reasons or {})
        shown = ", ".join(str(a) for a in self.angles[:8])
        more = "" if len(self.angles) <= 8 else f" (+{len(self.angles) - 8} more)"
        super().__init__(f"rays did not land: {shown}{more}")


class AmbiguousClustering(FiberError):
    pass


class NotAPair(FiberError):
    pass


class PointOnCurve(FiberError):
    pass


class OnBoundary(FiberError):
    pass


class NoAlphaPair(FiberError):
    pass
