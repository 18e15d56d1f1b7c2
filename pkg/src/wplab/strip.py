"""Strip/annulus Fourier model for the variations of geodesic-length.

A quadratic differential on the annulus {1 < |z| < e^l} / <z -> e^l z> is
phi = sum_n a_n z^{eps n} (dz/z)^2 with eps = 2 pi i / l.  In the strip
coordinate zeta = log z = x + i y, with 0 <= x < l and 0 < y < pi, each mode
is e^{alpha_n zeta} with alpha_n = i t_n and t_n = 2 pi n / l, so
|z^{alpha_n}|^2 = e^{-2 t_n y}.  The mode parameter t_n is signed.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Mapping

import numpy as np

from .errors import GridTooCoarse, InputError, NonPositiveLength

MAX_MODE = 64
SMALL_A = 1e-8


@dataclass(frozen=True)
class FourierQD:
    l: float
    coeffs: tuple[tuple[int, complex], ...]

    def __post_init__(self):
        if not self.l > 0.0 or not math.isfinite(self.l):
            raise NonPositiveLength(f"length must be positive, got {self.l!r}")
        merged: dict[int, complex] = {}
        for n, a in self.coeffs:
            if int(n) != n:
                raise InputError(f"mode index {n!r} is not an integer")
            n = int(n)
            if abs(n) > MAX_MODE:
                raise InputError(f"mode {n} exceeds the support cap {MAX_MODE}")
            merged[n] = merged.get(n, 0j) + complex(a)
        object.__setattr__(self, "coeffs", tuple(sorted(merged.items())))

    @classmethod
    def from_map(cls, l: float, coeffs: Mapping[int, complex]) -> FourierQD:
        return cls(l, tuple(coeffs.items()))

    @property
    def eps(self) -> complex:
        return 2j * math.pi / self.l

    def t(self, n: int) -> float:
        return 2.0 * math.pi * n / self.l

    def coeff(self, n: int) -> complex:
        return dict(self.coeffs).get(n, 0j)

    @property
    def support(self) -> frozenset[int]:
        return frozenset(n for n, a in self.coeffs if a != 0)

    def to_dict(self) -> dict:
        return {"l": self.l, "coeffs": [[n, a.real, a.imag] for n, a in self.coeffs]}

    @classmethod
    def from_dict(cls, obj: dict) -> FourierQD:
        try:
            return cls(float(obj["l"]), tuple((int(n), complex(re, im)) for n, re, im in obj["coeffs"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"malformed FourierQD {obj!r}: {exc}") from exc


@dataclass(frozen=True)
class VariationReport:
    first: float
    first_rot: float
    second: float
    complex_hessian: float
    Q: float
    QS: float

    def to_dict(self) -> dict:
        return asdict(self)


def eichler_raw_coeffs(n: int, l: float) -> tuple[complex, complex]:
    """Coefficients of z^alpha in zA and in z^-1 C for the single mode n."""
    alpha = 2j * math.pi * n / l
    return 1.0 / (alpha - 1.0), 1.0 / (alpha + 1.0)


def eichler_combined_coeff(n: int, l: float) -> float:
    """Coefficient of z^alpha in zA - z^-1 C, equal to -2 / (1 + t^2)."""
    t = 2.0 * math.pi * n / l
    return -2.0 / (1.0 + t * t)


def _scaled_expm1(a: float, den: float) -> float:
    """-expm1(-2 pi a) / den, returning inf once the float range is exceeded."""
    try:
        return -math.expm1(-2.0 * math.pi * a) / den
    except OverflowError:
        return math.inf


def strip_integral_sin2(a: float) -> float:
    """int_0^pi e^{-2 a y} sin^2 y dy."""
    a = float(a)
    if abs(a) < SMALL_A:
        return math.pi / 2.0 - a * math.pi ** 2 / 2.0
    return _scaled_expm1(a, 4.0 * a * (a * a + 1.0))


def strip_integral_sin4(a: float) -> float:
    """int_0^pi e^{-2 a y} sin^4 y dy."""
    a = float(a)
    if abs(a) < SMALL_A:
        return 3.0 * math.pi / 8.0 - a * 3.0 * math.pi ** 2 / 8.0
    return 0.75 * _scaled_expm1(a, a * (a * a + 1.0) * (a * a + 4.0))


def q_form(phi: FourierQD) -> float:
    """Q(zA, zA) = l sum |a_n|^2 S2(t_n) / (1 + t_n^2)."""
    terms = []
    for n, a in phi.coeffs:
        if a == 0:
            continue
        t = phi.t(n)
        terms.append(abs(a) ** 2 * strip_integral_sin2(t) / (1.0 + t * t))
    return phi.l * math.fsum(terms)


def qs_form(phi: FourierQD) -> float:
    """QS(phi, phi) = l sum |a_n|^2 S4(t_n)."""
    return phi.l * math.fsum(abs(a) ** 2 * strip_integral_sin4(phi.t(n))
                                  for n, a in phi.coeffs if a != 0)


def bilinear_form(phi: FourierQD) -> complex:
    """Q(zA, conj zA) = (pi l / 2) sum a_n a_{-n} / (1 + t_n^2)."""
    c = dict(phi.coeffs)
    acc = 0j
    for n, a in phi.coeffs:
        b = c.get(-n)
        if b is None:
            continue
        t = phi.t(n)
        acc += a * b / (1.0 + t * t)
    return 0.5 * math.pi * phi.l * acc


def first_variation(phi: FourierQD) -> tuple[float, float]:
    a0 = phi.coeff(0)
    return -4.0 * phi.l * a0.real, -4.0 * phi.l * a0.imag


def second_variation(phi: FourierQD) -> VariationReport:
    q = q_form(phi)
    b = bilinear_form(phi)
    d1, d1r = first_variation(phi)
    second = (32.0 / math.pi) * q - (16.0 / math.pi) * b.real
    return VariationReport(d1, d1r, second, (16.0 / math.pi) * q, q, qs_form(phi))


def _y_nodes(phi: FourierQD, ny: int, rule: str):
    if rule == "trapezoid":
        y = np.linspace(0.0, math.pi, ny + 1)
        w = np.full(ny + 1, math.pi / ny)
        w[0] = w[-1] = 0.5 * math.pi / ny
        return y, w
    if rule != "gauss":
        raise InputError(f"unknown quadrature rule {rule!r}")
    tmax = max((abs(phi.t(n)) for n, _ in phi.coeffs), default=0.0)
    # panels narrow enough that e^{-2 t y} varies by at most e^10 across each
    panels = max(1, math.ceil(2.0 * tmax * math.pi / 10.0))
    g, gw = np.polynomial.legendre.leggauss(ny)
    edges = np.linspace(0.0, math.pi, panels + 1)
    ys, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        ys.append(0.5 * (hi - lo) * g + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * gw)
    return np.concatenate(ys), np.concatenate(ws)


def quadrature_oracle(phi: FourierQD, grid: tuple[int, int] = (64, 64),
                      rule: str = "gauss") -> VariationReport:
    """Pointwise evaluation of mu and the deformation field on the strip,
    integrated by the periodic trapezoid rule in x and ``rule`` in y."""
    nx, ny = grid
    if nx < 64 or ny < 64:
        raise GridTooCoarse(f"grid {grid} is below 64 x 64")
    l = phi.l
    nmax = max((abs(n) for n, _ in phi.coeffs), default=0)
    nx = max(nx, 4 * nmax + 2)
    x = np.arange(nx) * (l / nx)
    wx = l / nx
    y, wy = _y_nodes(phi, ny, rule)
    zeta = x[:, None] + 1j * y[None, :]
    phi_s = np.zeros(zeta.shape, complex)
    za = np.zeros(zeta.shape, complex)
    zc = np.zeros(zeta.shape, complex)
    for n, a in phi.coeffs:
        alpha = phi.eps * n
        e = a * np.exp(alpha * zeta)
        ca, cc = eichler_raw_coeffs(n, l)
        phi_s += e
        za += ca * e
        zc += cc * e
    s2 = np.sin(y)[None, :] ** 2
    rot = np.exp(2j * y)[None, :]
    gdot = za - zc + rot * np.conj(za) - np.conj(rot) * np.conj(zc)
    mu = -4.0 * s2 * np.conj(phi_s)
    w = wx * wy[None, :]

    def integrate(f):
        return complex(np.sum(f * w))

    i_mu = integrate(mu)
    first = (2.0 / math.pi) * i_mu.real
    first_rot = (2.0 / math.pi) * (1j * i_mu).real
    second = (4.0 / math.pi) * integrate(mu * gdot).real
    q = integrate(np.abs(za) ** 2 * s2).real
    qs = integrate(np.abs(phi_s) ** 2 * s2 * s2).real
    return VariationReport(first, first_rot, second, (16.0 / math.pi) * q, q, qs)


# ------------------------------------------------------------ inequalities


def corollary_margin(phi: FourierQD, rep: VariationReport | None = None) -> float:
    """2 l second - (l-dot)^2 - 3 (l-dot[i mu])^2, non-negative."""
    rep = second_variation(phi) if rep is None else rep
    return 2.0 * phi.l * rep.second - rep.first ** 2 - 3.0 * rep.first_rot ** 2


def complex_margin(phi: FourierQD, rep: VariationReport | None = None) -> float:
    """l * complex_hessian - 2 |d l|^2 with d l = (l-dot - i l-dot[i mu]) / 2."""
    rep = second_variation(phi) if rep is None else rep
    dl = complex(rep.first, -rep.first_rot) / 2.0
    return phi.l * rep.complex_hessian - 2.0 * abs(dl) ** 2


def margin_scale(phi: FourierQD, rep: VariationReport | None = None) -> float:
    """Natural size of the terms in ``corollary_margin``."""
    rep = second_variation(phi) if rep is None else rep
    return 2.0 * phi.l * abs(rep.second) + rep.first ** 2 + 3.0 * rep.first_rot ** 2


def sqrt_length_hessian(phi: FourierQD, rep: VariationReport | None = None) -> float:
    """Second derivative of (2 pi l)^{1/2} along the family, by the chain rule."""
    rep = second_variation(phi) if rep is None else rep
    l = phi.l
    c = math.sqrt(2.0 * math.pi)
    d1 = c / (2.0 * math.sqrt(l))
    d2 = -c / (4.0 * l ** 1.5)
    return d1 * rep.second + d2 * rep.first ** 2


def random_fourier_qd(rng: np.random.Generator, max_mode: int = 8,
                      l_range: tuple[float, float] = (1.0, 8.0),
                      zero_only: bool = False) -> FourierQD:
    """Random test datum; amplitudes are damped by e^{-pi |t_n|} for n < 0
    so that no single mode dominates the strip integrals."""
    l = float(np.exp(rng.uniform(math.log(l_range[0]), math.log(l_range[1]))))
    if zero_only:
        modes = [0]
    else:
        k = int(rng.integers(1, 2 * max_mode + 2))
        modes = sorted(rng.choice(np.arange(-max_mode, max_mode + 1), size=k, replace=False))
        if modes == [0]:
            modes = [0, int(rng.choice([-1, 1]))]
    coeffs = []
    for n in modes:
        t = 2.0 * math.pi * n / l
        damp = math.exp(-math.pi * abs(t)) if n < 0 else 1.0
        a = complex(rng.normal(), rng.normal()) * damp
        coeffs.append((int(n), a))
    return FourierQD(l, tuple(coeffs))
