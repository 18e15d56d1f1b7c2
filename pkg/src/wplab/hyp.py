"""Upper half-plane primitives.

Isometries are real unit-determinant matrices modulo sign, geodesics are
pairs of boundary points (``math.inf`` is the point at infinity).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import NonPositiveLength, NotHyperbolic, SharedEndpoint, StepTooLarge

INF = math.inf
TRACE_TOL = 1e-10


class Kind(enum.Enum):
    ELLIPTIC = "elliptic"
    PARABOLIC = "parabolic"
    HYPERBOLIC = "hyperbolic"


@dataclass(frozen=True)
class Isometry:
    """Element of PSL(2,R), rescaled to unit determinant with canonical sign."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        a, b, c, d = (float(x) for x in (self.a, self.b, self.c, self.d))
        det = a * d - b * c
        if not det > 0.0 or not math.isfinite(det):
            raise ValueError(f"matrix must have positive finite determinant, got {det!r}")
        s = 1.0 / math.sqrt(det)
        if a < 0.0 or (a == 0.0 and b < 0.0):
            s = -s
        for name, v in zip("abcd", (a, b, c, d)):
            object.__setattr__(self, name, v * s)

    @classmethod
    def identity(cls) -> Isometry:
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def diag(cls, lam: float) -> Isometry:
        return cls(lam, 0.0, 0.0, 1.0 / lam)

    @property
    def entries(self) -> tuple[float, float, float, float]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: Isometry) -> Isometry:
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return Isometry(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> Isometry:
        return Isometry(self.d, -self.b, -self.c, self.a)

    def conjugate(self, s: Isometry) -> Isometry:
        """Return S T S^-1."""
        return s @ self @ s.inverse()

    def __call__(self, z):
        """Moebius action on a point of H or on a boundary point."""
        a, b, c, d = self.entries
        if isinstance(z, complex):
            return (a * z + b) / (c * z + d)
        if z == INF:
            return INF if c == 0.0 else a / c
        den = c * z + d
        if den == 0.0:
            return INF
        return (a * z + b) / den

    def close_to(self, other: Isometry, tol: float = 1e-9) -> bool:
        scale = max(1.0, *(abs(x) for x in self.entries))
        return max(abs(x - y) for x, y in zip(self.entries, other.entries)) <= tol * scale


@dataclass(frozen=True)
class GeodesicLine:
    """Unoriented geodesic; endpoints stored sorted with infinity last."""

    endpoints: tuple[float, float]

    def __post_init__(self):
        p, q = (INF if math.isinf(x) else float(x) for x in self.endpoints)
        if p == q:
            raise ValueError("geodesic endpoints must be distinct")
        object.__setattr__(self, "endpoints", (min(p, q), max(p, q)))

    @classmethod
    def of(cls, p: float, q: float) -> GeodesicLine:
        return cls((p, q))

    def image(self, t: Isometry) -> GeodesicLine:
        return GeodesicLine(tuple(t(x) for x in self.endpoints))


IMAGINARY_AXIS = GeodesicLine((0.0, INF))


def classify(t: Isometry, tol: float = TRACE_TOL) -> Kind:
    tr = abs(t.trace)
    if tr > 2.0 + tol:
        return Kind.HYPERBOLIC
    if abs(tr - 2.0) <= tol:
        return Kind.PARABOLIC
    return Kind.ELLIPTIC


def _require_hyperbolic(t: Isometry) -> None:
    if classify(t) is not Kind.HYPERBOLIC:
        raise NotHyperbolic(f"|trace| = {abs(t.trace)!r} is not > 2")


def translation_length(t: Isometry) -> float:
    _require_hyperbolic(t)
    return 2.0 * math.acosh(abs(t.trace) / 2.0)


def fixed_points(t: Isometry) -> tuple[float, float]:
    """Return (repelling, attracting) fixed points of a hyperbolic element."""
    _require_hyperbolic(t)
    a, b, c, d = t.entries
    if c == 0.0:
        finite = b / (d - a)
        # z -> (a/d) z + b/d; infinity attracts iff |a| > |d|
        return (finite, INF) if abs(a) > abs(d) else (INF, finite)
    disc = (a - d) ** 2 + 4.0 * b * c
    root = math.sqrt(max(disc, 0.0))
    # stable roots of c z^2 + (d - a) z - b = 0
    bb = d - a
    q = -0.5 * (bb + math.copysign(root, bb))
    z1, z2 = q / c, -b / q
    if abs(c * z1 + d) > 1.0:
        return z2, z1
    return z1, z2


def axis(t: Isometry) -> GeodesicLine:
    return GeodesicLine(fixed_points(t))


def normalizer(p: float, q: float) -> Isometry:
    """Isometry sending p to 0 and q to infinity."""
    if q == INF:
        return Isometry(1.0, -p, 0.0, 1.0)
    if p == INF:
        return Isometry(0.0, -1.0, 1.0, -q)
    if p < q:
        return Isometry(-1.0, p, 1.0, -q)
    return Isometry(1.0, -p, 1.0, -q)


def dist_point_to_geodesic(z: complex, g: GeodesicLine) -> float:
    """Hyperbolic distance from an interior point to a geodesic."""
    z = complex(z)
    if not z.imag > 0.0:
        raise ValueError("point must lie in the upper half-plane")
    w = normalizer(*g.endpoints)(z)
    # log(csc t + |cot t|) for t = arg w
    return math.asinh(abs(w.real) / w.imag)


class UInvariant(NamedTuple):
    u: float
    crossing: bool

    @property
    def distance(self) -> float:
        """Distance between disjoint geodesics (0 when crossing)."""
        return math.acosh(self.u) if not self.crossing else 0.0

    @property
    def angle(self) -> float:
        """Unsigned intersection angle in [0, pi/2] for crossing geodesics."""
        return math.acos(self.u) if self.crossing else math.nan


def u_invariant(g1: GeodesicLine, g2: GeodesicLine) -> UInvariant:
    """Cosine of the crossing angle, or cosh of the distance."""
    m = normalizer(*g1.endpoints)
    a, b = (m(x) for x in g2.endpoints)
    if a == INF or b == INF or a == 0.0 or b == 0.0:
        raise SharedEndpoint(f"geodesics {g1.endpoints} and {g2.endpoints} share an endpoint")
    u = abs(a + b) / abs(a - b)
    if abs(u - 1.0) < 1e-12:
        raise SharedEndpoint(f"u = {u!r} is numerically 1")
    return UInvariant(u, a * b < 0.0)


@dataclass(frozen=True)
class CollarData:
    length: float
    width: float


def collar_width(length: float) -> CollarData:
    if not length > 0.0:
        raise NonPositiveLength(f"length must be positive, got {length!r}")
    return CollarData(length, math.asinh(1.0 / math.sinh(length / 2.0)))


def mean_value_eigenfunction(x: float, y: float) -> float:
    """u(z) = 1 - arg(z) cot(arg z)."""
    t = math.atan2(y, x)
    return 1.0 - t / math.tan(t)


def eigenfunction_residual(theta: float, h: float) -> float:
    """y^2 * Laplacian(u) - 2u at e^{i theta} by the five-point stencil."""
    if theta < 10.0 * h or theta > math.pi - 10.0 * h:
        raise StepTooLarge(f"theta = {theta!r} is within 10h of the boundary")
    x, y = math.cos(theta), math.sin(theta)
    f = mean_value_eigenfunction
    u0 = f(x, y)
    lap = (f(x + h, y) + f(x - h, y) + f(x, y + h) + f(x, y - h) - 4.0 * u0) / (h * h)
    return y * y * lap - 2.0 * u0
