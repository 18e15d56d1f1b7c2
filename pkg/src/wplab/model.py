"""The model metric 4 dr^2 + r^6 dtheta^2 on the punctured plane.

The completion point r = 0 is not a ModelPoint; it is the sentinel
``STRATUM`` and distances to it are 2r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import integrate, optimize

from .errors import DegenerateTriple, HitSingularStratum, InputError, NoConvergence

R_MIN = 1e-6


@dataclass(frozen=True)
class ModelPoint:
    r: float
    theta: float

    def __post_init__(self):
        if not self.r > 0.0:
            raise InputError(f"model points need r > 0, got {self.r!r}")


class _Stratum:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "STRATUM"


STRATUM = _Stratum()
Point = Union[ModelPoint, _Stratum]


@dataclass(frozen=True)
class ModelState:
    point: ModelPoint
    rdot: float
    thetadot: float

    @property
    def energy(self) -> float:
        r = self.point.r
        return 4.0 * self.rdot ** 2 + r ** 6 * self.thetadot ** 2

    @property
    def angular_momentum(self) -> float:
        return self.point.r ** 6 * self.thetadot


# ------------------------------------------------------------ local geometry


def metric_eval(p: ModelPoint, v: Sequence[float], w: Sequence[float]) -> float:
    return 4.0 * v[0] * w[0] + p.r ** 6 * v[1] * w[1]


def metric_matrix(r: float) -> np.ndarray:
    return np.array([[4.0, 0.0], [0.0, r ** 6]])


def connection_coeffs(p: ModelPoint) -> np.ndarray:
    """Christoffel symbols G[k, i, j] = Gamma^k_{ij}; index 0 is r, 1 is theta."""
    r = p.r
    g = np.zeros((2, 2, 2))
    g[1, 0, 1] = g[1, 1, 0] = 3.0 / r
    g[0, 1, 1] = -0.75 * r ** 5
    return g


def connection_coeffs_dr(p: ModelPoint) -> np.ndarray:
    """Radial derivative of ``connection_coeffs`` (nothing depends on theta)."""
    r = p.r
    g = np.zeros((2, 2, 2))
    g[1, 0, 1] = g[1, 1, 0] = -3.0 / r ** 2
    g[0, 1, 1] = -3.75 * r ** 4
    return g


def christoffel_from_metric(p: ModelPoint, h: float = 1e-5) -> np.ndarray:
    """Koszul formula with metric derivatives taken by central differences
    of ``metric_eval``."""
    basis = ((1.0, 0.0), (0.0, 1.0))

    def g_at(r, i, j):
        return metric_eval(ModelPoint(r, p.theta), basis[i], basis[j])

    # only r-derivatives can be non-zero; theta-derivatives vanish identically
    dg = np.zeros((2, 2, 2))  # dg[k, i, j] = d_k g_ij
    for i in range(2):
        for j in range(2):
            dg[0, i, j] = (g_at(p.r + h, i, j) - g_at(p.r - h, i, j)) / (2.0 * h)
            dg[1, i, j] = (metric_eval(ModelPoint(p.r, p.theta + h), basis[i], basis[j])
                           - metric_eval(ModelPoint(p.r, p.theta - h), basis[i], basis[j])) / (2.0 * h)
    ginv = np.linalg.inv(metric_matrix(p.r))
    out = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                out[k, i, j] = 0.5 * sum(ginv[k, m] * (dg[i, m, j] + dg[j, m, i] - dg[m, i, j])
                                         for m in range(2))
    return out


def curvature_tensor(p: ModelPoint) -> np.ndarray:
    """R[k, l, i, j] = component k of R(d_i, d_j) d_l."""
    g = connection_coeffs(p)
    dg = np.zeros((2, 2, 2, 2))  # dg[m, k, i, j] = d_m Gamma^k_ij
    dg[0] = connection_coeffs_dr(p)
    out = np.zeros((2, 2, 2, 2))
    for k in range(2):
        for l in range(2):
            for i in range(2):
                for j in range(2):
                    v = dg[i, k, j, l] - dg[j, k, i, l]
                    for m in range(2):
                        v += g[k, i, m] * g[m, j, l] - g[k, j, m] * g[m, i, l]
                    out[k, l, i, j] = v
    return out


def sectional_curvature(p: ModelPoint) -> float:
    """<R(d_r, d_theta) d_theta, d_r> / |d_r ^ d_theta|^2 from the assembled tensor."""
    rt = curvature_tensor(p)[:, 1, 0, 1]
    num = metric_eval(p, rt, (1.0, 0.0))
    area = 2.0 * p.r ** 3
    return num / area ** 2


def curvature_closed_form(r: float) -> float:
    return -1.5 / r ** 2


def _transport_rhs(r, v, dx):
    g = connection_coeffs(ModelPoint(r, 0.0))
    return -np.einsum("kij,i,j->k", g, dx, v)


def holonomy_angle(r0: float, dr: float, dtheta: float, steps: int = 400,
                   theta0: float = 0.0) -> float:
    """Rotation of a vector parallel transported once around the coordinate
    rectangle [r0, r0 + dr] x [theta0, theta0 + dtheta], counter-clockwise
    in the (r, theta) orientation."""
    corners = [(r0, theta0), (r0 + dr, theta0), (r0 + dr, theta0 + dtheta),
               (r0, theta0 + dtheta), (r0, theta0)]
    v = np.array([0.5, 0.0])  # unit vector along d_r
    for (ra, ta), (rb, tb) in zip(corners[:-1], corners[1:]):
        dx = np.array([rb - ra, tb - ta])
        hh = 1.0 / steps
        for n in range(steps):
            s = n * hh
            r1 = ra + s * dx[0]
            k1 = _transport_rhs(r1, v, dx)
            k2 = _transport_rhs(r1 + 0.5 * hh * dx[0], v + 0.5 * hh * k1, dx)
            k3 = _transport_rhs(r1 + 0.5 * hh * dx[0], v + 0.5 * hh * k2, dx)
            k4 = _transport_rhs(r1 + hh * dx[0], v + hh * k3, dx)
            v = v + hh * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
    # components in the orthonormal frame (d_r / 2, d_theta / r^3)
    return math.atan2(r0 ** 3 * v[1], 2.0 * v[0])


def rectangle_area(r0: float, dr: float, dtheta: float) -> float:
    return dtheta * ((r0 + dr) ** 4 - r0 ** 4) / 2.0


# ------------------------------------------------------------ geodesic flow


@dataclass(frozen=True)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # columns r, theta, rdot, thetadot

    @property
    def energy(self) -> np.ndarray:
        r, _, rd, td = self.states.T
        return 4.0 * rd ** 2 + r ** 6 * td ** 2

    @property
    def angular_momentum(self) -> np.ndarray:
        r, _, _, td = self.states.T
        return r ** 6 * td

    def final(self) -> ModelState:
        r, th, rd, td = self.states[-1]
        return ModelState(ModelPoint(r, th), rd, td)

    def rows(self):
        e, lm = self.energy, self.angular_momentum
        for i, t in enumerate(self.t):
            yield (t, *self.states[i], e[i], lm[i])


def _rhs(r, rd, td):
    return rd, td, 0.75 * r ** 5 * td * td, -6.0 * rd * td / r


def geodesic_flow(s0: ModelState, T: float, h: float = 1e-4, sample_every: int = 1,
                  r_min: float = R_MIN) -> Trajectory:
    """Classical RK4 with n = ceil(T / h) equal steps."""
    if not T >= 0.0 or not h > 0.0:
        raise InputError("need T >= 0 and h > 0")
    n = max(1, math.ceil(T / h - 1e-9)) if T > 0 else 0
    dt = T / n if n else 0.0
    r, th, rd, td = s0.point.r, s0.point.theta, s0.rdot, s0.thetadot
    ts, rows = [0.0], [(r, th, rd, td)]
    for i in range(1, n + 1):
        a1, b1, c1, d1 = _rhs(r, rd, td)
        r2, rd2, td2 = r + 0.5 * dt * a1, rd + 0.5 * dt * c1, td + 0.5 * dt * d1
        if r2 < r_min:
            raise _stratum_hit(ts, rows, (i - 0.5) * dt)
        a2, b2, c2, d2 = _rhs(r2, rd2, td2)
        r3, rd3, td3 = r + 0.5 * dt * a2, rd + 0.5 * dt * c2, td + 0.5 * dt * d2
        if r3 < r_min:
            raise _stratum_hit(ts, rows, (i - 0.5) * dt)
        a3, b3, c3, d3 = _rhs(r3, rd3, td3)
        r4, rd4, td4 = r + dt * a3, rd + dt * c3, td + dt * d3
        if r4 < r_min:
            raise _stratum_hit(ts, rows, i * dt)
        a4, b4, c4, d4 = _rhs(r4, rd4, td4)
        r += dt * (a1 + 2.0 * a2 + 2.0 * a3 + a4) / 6.0
        th += dt * (b1 + 2.0 * b2 + 2.0 * b3 + b4) / 6.0
        rd += dt * (c1 + 2.0 * c2 + 2.0 * c3 + c4) / 6.0
        td += dt * (d1 + 2.0 * d2 + 2.0 * d3 + d4) / 6.0
        if r < r_min:
            raise _stratum_hit(ts, rows, i * dt)
        if i % sample_every == 0 or i == n:
            ts.append(i * dt if i < n else T)
            rows.append((r, th, rd, td))
    return Trajectory(np.array(ts), np.array(rows))


def _stratum_hit(ts, rows, t):
    traj = Trajectory(np.array(ts), np.array(rows))
    return HitSingularStratum(f"geodesic reaches r < {R_MIN} near t = {t:.6g}", t, traj)


# ------------------------------------------------------------ distances
#
# With the Clairaut constant L = r^6 dtheta/ds and unit speed, substituting
# sin(phi) = L / r^3 turns the swept angle and the arc length between radii
# into (2/3) r_m^-2 int sin^(2/3) and (2/3) r_m int sin^(-4/3), where
# r_m = L^(1/3).  Endpoints are tracked by c = pi/2 - phi so that the
# integrals stay well conditioned near turning points.

_QUAD = dict(epsabs=0.0, epsrel=1e-13, limit=200)
_Q4 = math.pi / 4.0


def _log_sinc(s: float) -> float:
    if s < 1e-2:
        s2 = s * s
        return -s2 * (1.0 / 6.0 + s2 * (1.0 / 180.0 + s2 / 2835.0))
    return math.log(math.sin(s) / s)


def _sin_pow_lo(a, p1, p2):
    """int_{p1}^{p2} sin^a for 0 <= p1 <= p2 <= pi/4 (power singularity at 0
    removed analytically)."""
    if p2 <= p1:
        return 0.0
    def f(u):
        # s = u^3 makes the remainder smooth at the origin
        if u <= 0.0:
            return 0.0
        x = u ** 3
        return 3.0 * u * u * x ** a * math.expm1(a * _log_sinc(x))

    body = integrate.quad(f, p1 ** (1.0 / 3.0), p2 ** (1.0 / 3.0), **_QUAD)[0]
    b = a + 1.0
    if p1 == 0.0:
        return body + p2 ** b / b
    return body + (p2 ** b - p1 ** b) / b


def _cos_pow(a, c1, c2):
    """int_{c1}^{c2} cos^a for 0 <= c1 <= c2 <= pi/4."""
    if c2 <= c1:
        return 0.0
    return integrate.quad(lambda s: math.cos(s) ** a, c1, c2, **_QUAD)[0]


def _segment(a, near, far):
    """int sin^a over [phi_far, phi_near]; endpoints are (phi, c) pairs with
    c = pi/2 - phi, each side used where it is the better conditioned."""
    (p_near, c_near), (p_far, c_far) = near, far
    if c_far <= c_near:
        return 0.0
    total = 0.0
    if c_near < _Q4:
        total += _cos_pow(a, c_near, min(c_far, _Q4))
    if p_far < _Q4:
        total += _sin_pow_lo(a, p_far, min(p_near, _Q4))
    return total


_TOP = (math.pi / 2.0, 0.0)


def _outer_end(one_minus_kappa: float, p_lo: float, c_lo: float):
    """(phi, c) with sin phi = kappa sin p_lo, computed without cancellation."""
    kappa = 1.0 - one_minus_kappa
    phi = math.asin(kappa * math.sin(p_lo))
    x = one_minus_kappa + 2.0 * kappa * math.sin(0.5 * c_lo) ** 2
    c = 2.0 * math.asin(min(1.0, math.sqrt(max(x, 0.0) / 2.0)))
    return phi, c


@dataclass(frozen=True)
class _Pair:
    lo: float               # smaller normalized radius
    hi: float               # larger normalized radius (= 1)
    one_minus_kappa: float  # 1 - (lo/hi)^3

    @property
    def equal(self) -> bool:
        return self.one_minus_kappa == 0.0


def _branch_values(pair: _Pair, s: float) -> tuple[float, float]:
    """(swept angle, length) along the family parameter s in [0, 2).

    s in [0, 1] are monotone arcs with Clairaut radius r_m = lo sin(phi_lo)^(1/3)
    from the radial path (s = 0) to the one tangent at the inner point
    (s = 1); s in (1, 2) turn at r_m < lo, approaching the path through the
    stratum as s -> 2.
    """
    half = math.pi / 2.0
    if s <= 1.0:
        end_lo = (half * s, half * (1.0 - s))
    else:
        end_lo = (half * (2.0 - s), half * (s - 1.0))
    rm = pair.lo * math.sin(end_lo[0]) ** (1.0 / 3.0)
    if rm == 0.0:
        return 0.0, 2.0 * (pair.hi - pair.lo)
    end_hi = _outer_end(pair.one_minus_kappa, *end_lo)
    if s <= 1.0:
        ang = _segment(2.0 / 3.0, end_lo, end_hi)
        length = _segment(-4.0 / 3.0, end_lo, end_hi)
    else:
        ang = _segment(2.0 / 3.0, _TOP, end_lo) + _segment(2.0 / 3.0, _TOP, end_hi)
        length = _segment(-4.0 / 3.0, _TOP, end_lo) + _segment(-4.0 / 3.0, _TOP, end_hi)
    return (2.0 / 3.0) * rm ** -2 * ang, (2.0 / 3.0) * rm * length


def _family_grid(pair: _Pair) -> np.ndarray:
    turn = np.concatenate([np.linspace(1.0, 1.9, 46)[:-1], 2.0 - 0.1 * np.logspace(0, -11, 45)])
    if pair.equal:
        return turn
    return np.concatenate([np.linspace(0.0, 1.0, 41)[:-1], turn])


def _shoot(pair: _Pair, target: float) -> list[float]:
    """Lengths of all geodesics in the family sweeping exactly ``target``."""
    grid = _family_grid(pair)
    vals = [(_branch_values(pair, s)[0] - target) for s in grid]
    lengths = []
    for i in range(len(grid) - 1):
        f0, f1 = vals[i], vals[i + 1]
        if f0 == 0.0:
            lengths.append(_branch_values(pair, grid[i])[1])
        elif f0 * f1 < 0.0:
            s = optimize.brentq(lambda x: _branch_values(pair, x)[0] - target,
                                grid[i], grid[i + 1], xtol=1e-15, rtol=1e-15, maxiter=200)
            lengths.append(_branch_values(pair, s)[1])
    if not lengths and vals[-1] < 0.0:
        raise NoConvergence(f"swept angle {target!r} beyond the sampled family",
                            bracket=(grid[-1], 2.0))
    return lengths


def distance_to_stratum(p: ModelPoint) -> float:
    return 2.0 * p.r


def _point_distance(p: ModelPoint, q: ModelPoint) -> float:
    lam = max(p.r, q.r)
    lo = min(p.r, q.r) / lam
    dtheta = q.theta - p.theta
    through = 2.0 * (p.r + q.r)
    k0 = round(-dtheta / (2.0 * math.pi))
    best = through
    pair = _Pair(lo, 1.0, -math.expm1(3.0 * math.log(lo)) if lo < 1.0 else 0.0)
    for k in (k0 - 1, k0, k0 + 1):
        target = abs(dtheta + 2.0 * math.pi * k) * lam * lam
        if target == 0.0:
            best = min(best, 2.0 * abs(p.r - q.r))
            continue
        for length in _shoot(pair, target):
            best = min(best, lam * length)
    return best


def distance(p: Point, q: Point) -> float:
    """Geodesic distance; either argument may be ``STRATUM``."""
    if p is STRATUM and q is STRATUM:
        return 0.0
    if p is STRATUM:
        return distance_to_stratum(q)
    if q is STRATUM:
        return distance_to_stratum(p)
    if p.theta == q.theta:
        return 2.0 * abs(p.r - q.r)
    return _point_distance(p, q)


def comparison_angle_from_distances(d_pq: float, d_pr: float, d_qr: float) -> float:
    """Euclidean comparison angle at p.

    Uses the half-angle form sin^2(A/2) = (d_qr^2 - (d_pq - d_pr)^2) / (4 d_pq d_pr),
    algebraically the clamped law of cosines but free of cancellation for
    thin triangles.
    """
    if d_pq < 1e-14 or d_pr < 1e-14:
        raise DegenerateTriple("comparison angle needs both sides from p > 1e-14")
    tol = 1e-12 * max(d_pq, d_pr, d_qr)
    if d_qr > d_pq + d_pr + tol or d_pq > d_pr + d_qr + tol or d_pr > d_pq + d_qr + tol:
        raise DegenerateTriple("distances violate the triangle inequality")
    x = (d_qr - (d_pq - d_pr)) * (d_qr + (d_pq - d_pr)) / (4.0 * d_pq * d_pr)
    x = min(1.0, max(0.0, x))
    return 2.0 * math.asin(math.sqrt(x))


def comparison_angle(p: Point, q: Point, r: Point) -> float:
    return comparison_angle_from_distances(distance(p, q), distance(p, r), distance(q, r))


@dataclass(frozen=True)
class Geodesic:
    """Unit-speed geodesic t -> point with base point at t = 0."""

    base: Point
    at: Callable[[float], Point]

    def __call__(self, t: float) -> Point:
        return self.at(t)


def radial_geodesic(theta: float, r0: float = 0.0, direction: int = 1) -> Geodesic:
    """The radial line at angle theta, unit speed, from r0 (0 = the stratum)."""
    base = STRATUM if r0 == 0.0 else ModelPoint(r0, theta)
    return Geodesic(base, lambda t: ModelPoint(r0 + direction * 0.5 * t, theta))


@dataclass(frozen=True)
class AlexandrovEstimate:
    angle: float
    ts: tuple[float, ...]
    comparison_angles: tuple[float, ...]
    monotone: bool


def alexandrov_angle(g0: Geodesic, g1: Geodesic, ts: Sequence[float],
                     tol: float = 1e-8) -> AlexandrovEstimate:
    """Comparison angles along ``ts`` and their quadratic extrapolation to t = 0."""
    if g0.base is not g1.base and g0.base != g1.base:
        raise InputError("geodesics must share their base point")
    ts = sorted(float(t) for t in ts)
    angles = []
    for t in ts:
        a, b = g0(t), g1(t)
        d = distance(a, b)
        angles.append(comparison_angle_from_distances(t, t, d) if d > 0.0 else 0.0)
    monotone = all(angles[i] <= angles[i + 1] + tol for i in range(len(angles) - 1))
    deg = min(2, len(ts) - 1)
    est = float(np.polyval(np.polyfit(ts, angles, deg), 0.0)) if deg > 0 else angles[0]
    est = min(math.pi, max(0.0, est))
    return AlexandrovEstimate(est, tuple(ts), tuple(angles), monotone)


# ------------------------------------------------------------ dictionary


@dataclass(frozen=True)
class ConeVector:
    """Tangent-cone vector: orthant part (one entry per short curve) and a
    stratum part (empty for the two-dimensional model)."""

    orthant_part: tuple[float, ...]
    stratum_part: tuple[float, ...] = ()

    def __post_init__(self):
        if any(not x >= 0.0 for x in self.orthant_part):
            raise InputError("orthant entries must be non-negative")

    @property
    def norm(self) -> float:
        return math.hypot(*self.orthant_part, *self.stratum_part)


def radial_cone_vector(r: float) -> ConeVector:
    """Image of the unit-speed radial geodesic through radius r."""
    return ConeVector((lambda_dictionary(r)["unit_speed_check"],))


def lambda_dictionary(r: float) -> dict:
    if not r > 0.0:
        raise InputError("radius must be positive")
    l = 2.0 * math.pi ** 2 * r * r
    d_stratum = math.pi ** 1.5 * 2.0 * r
    # unit WP speed along the radial line: pi^{3/2} * 2 * rdot = 1
    rdot = 1.0 / (2.0 * math.pi ** 1.5)
    dsqrt_l_dr = (4.0 * math.pi ** 2 * r) / (2.0 * math.sqrt(l))
    unit = math.sqrt(2.0 * math.pi) * dsqrt_l_dr * rdot
    return {"l": l, "d_stratum_wp": d_stratum, "unit_speed_check": unit}


def kahler_identity_check(r: float) -> float:
    """Relative difference of 2 r^3 and (4 pi^4)^-1 l dl/dr under l = 2 pi^2 r^2."""
    lhs = 2.0 * r ** 3
    l = 2.0 * math.pi ** 2 * r * r
    rhs = l * (4.0 * math.pi ** 2 * r) / (4.0 * math.pi ** 4)
    return (lhs - rhs) / lhs
