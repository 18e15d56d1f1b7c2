"""Riera's gradient-pairing series, the intersection cosine sum, the
exponential-distance series P_alpha and the twist finite difference."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass


from . import _walk, group, hyp
from .errors import DomainError, StepOutOfRange, WrongSurfaceKind
from .group import MarkedGroup, PuncturedTorus

TWO_OVER_PI = 2.0 / math.pi


def riera_summand(u: float) -> float:
    """u log((u+1)/(u-1)) - 2, stable for large u."""
    if not u > 1.0 + 1e-12:
        raise DomainError(f"riera summand needs u > 1, got {u!r}")
    return float(_walk.riera_summand_kernel(float(u)))


@dataclass(frozen=True)
class PairingEstimate:
    value: float
    kronecker_part: float
    coset_sum: float
    terms: int
    max_depth: int
    last_shell: float
    tail_estimate: float
    crossing_terms: int = 0
    crossing_cos_sum: float = 0.0
    min_u: float = math.inf

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SeriesReport:
    value: float
    terms: int
    last_shell: float
    basepoint: complex
    tail_estimate: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["basepoint"] = [self.basepoint.real, self.basepoint.imag]
        return d


def tail_estimate(shells) -> float:
    """Geometric extrapolation from the last three shell magnitudes."""
    tail = [abs(x) for x in list(shells)[-3:]]
    if len(tail) < 3 or tail[-1] == 0.0:
        return 0.0
    if min(tail) == 0.0:
        return math.inf
    slope = (math.log(tail[2]) - math.log(tail[0])) / 2.0
    rho = math.exp(slope)
    if rho >= 1.0:
        return math.inf
    return tail[-1] * rho / (1.0 - rho)


@dataclass(frozen=True)
class _Shells:
    summands: list[float]      # disjoint-type riera summands per shell
    cosines: list[float]       # signed crossing cosines per shell
    n_terms: int
    n_cross: int
    min_u: float
    length_alpha: float
    same: bool


def _pairing_shells(g: MarkedGroup, alpha: str, beta: str, depth: int) -> _Shells:
    if depth > group.MAX_DEPTH:
        raise group.DepthTooLarge(f"depth {depth} exceeds {group.MAX_DEPTH}")
    frame = group.make_frame(g, alpha, beta)
    a, b = frame.alpha, frame.beta
    if not group.is_fast_path(a, b):
        return _generic_shells(g, frame, a, b, depth)
    same = group.same_class(a, b)
    summands = [0.0] * (depth + 1)
    cosines = [0.0] * (depth + 1)
    n_terms = n_cross = 0
    min_u = math.inf
    if not same:
        m1, _, _, m4 = frame.beta_entries
        cs = (m1 - m4) / frame.beta_root
        if abs(cs) < 1.0:
            cosines[0] = cs
            n_cross += 1
        else:
            summands[0] = riera_summand(abs(cs))
            n_terms += 1
            min_u = abs(cs)
    first_ok, last_ok = group._letter_masks(g, a, b)
    prm = list(frame.beta_entries) + [frame.beta_root]
    out = _walk.shells(frame.gens, depth, first_ok, last_ok, _walk.MODE_PAIRING, prm)
    if out[:, _walk.S_BAD].sum() > 0:
        raise hyp.SharedEndpoint("a coset axis is numerically asymptotic to the alpha axis")
    for n in range(1, depth + 1):
        summands[n] = float(out[n, _walk.S_SUM])
        cosines[n] = float(out[n, _walk.S_SUM2])
    n_terms += int(out[:, _walk.S_N].sum())
    n_cross += int(out[:, _walk.S_N2].sum())
    min_u = min(min_u, float(out[:, _walk.S_MINU].min()))
    return _Shells(summands, cosines, n_terms, n_cross, min_u, frame.length_alpha, same)


def _generic_shells(g, frame, a, b, depth) -> _Shells:
    terms = group.double_cosets(g, a, b, depth)
    summands = [[] for _ in range(depth + 1)]
    cosines = [[] for _ in range(depth + 1)]
    n_cross = 0
    min_u = math.inf
    for t in terms:
        n = min(len(t.core), depth)
        if t.crossing:
            cosines[n].append(t.cos_angle)
            n_cross += 1
        else:
            summands[n].append(riera_summand(t.u))
            min_u = min(min_u, t.u)
    same = _conjugate_words(g.reduce(a), g.reduce(b))
    return _Shells([math.fsum(s) for s in summands], [math.fsum(c) for c in cosines],
                   len(terms) - n_cross, n_cross, min_u, frame.length_alpha, same)


def _cyclic_reduce(w: str) -> str:
    while len(w) > 1 and w[0] != w[-1] and w[0].lower() == w[-1].lower():
        w = w[1:-1]
    return w


def _conjugate_words(a: str, b: str) -> bool:
    a, b = _cyclic_reduce(a), _cyclic_reduce(b)
    if len(a) != len(b):
        return False
    return b in a + a or group.invert_word(b) in a + a


def riera_pairing(g: MarkedGroup, alpha: str, beta: str, depth: int) -> PairingEstimate:
    """(2/pi)(l_alpha delta + sum of u log((u+1)/(u-1)) - 2) over disjoint cosets.

    Crossing cosets are excluded and reported in ``crossing_terms`` and
    ``crossing_cos_sum``.
    """
    sh = _pairing_shells(g, alpha, beta, depth)
    kron = TWO_OVER_PI * sh.length_alpha if sh.same else 0.0
    coset_sum = math.fsum(sh.summands)
    return PairingEstimate(
        value=kron + TWO_OVER_PI * coset_sum,
        kronecker_part=kron,
        coset_sum=coset_sum,
        terms=sh.n_terms,
        max_depth=depth,
        last_shell=abs(sh.summands[-1]),
        tail_estimate=tail_estimate(sh.summands[1:]),
        crossing_terms=sh.n_cross,
        crossing_cos_sum=math.fsum(sh.cosines),
        min_u=sh.min_u,
    )


@dataclass(frozen=True)
class CosineReport:
    value: float
    crossing_terms: int
    max_depth: int
    last_shell: float

    def to_dict(self) -> dict:
        return asdict(self)


def cosine_report(g: MarkedGroup, alpha: str, beta: str, depth: int) -> CosineReport:
    sh = _pairing_shells(g, alpha, beta, depth)
    return CosineReport(math.fsum(sh.cosines), sh.n_cross, depth, abs(sh.cosines[-1]))


def cosine_sum(g: MarkedGroup, alpha: str, beta: str, depth: int) -> float:
    """Sum of signed crossing cosines; the angle runs from the alpha axis
    (oriented towards its attracting end) to the oriented image of beta."""
    return cosine_report(g, alpha, beta, depth).value


def beta_length(spec: PuncturedTorus, beta: str) -> float:
    return hyp.translation_length(group.build_punctured_torus(spec).evaluate(beta))


def twist_derivative_fd(spec: PuncturedTorus, beta: str, h: float = 1e-4) -> float:
    """Central difference of l_beta in the twist parameter."""
    if not isinstance(spec, PuncturedTorus):
        raise WrongSurfaceKind("twist derivative needs a punctured-torus spec")
    if not 1e-6 <= h <= 1e-2:
        raise StepOutOfRange(f"step {h!r} outside [1e-6, 1e-2]")
    up = beta_length(PuncturedTorus(spec.l, spec.tau + h), beta)
    down = beta_length(PuncturedTorus(spec.l, spec.tau - h), beta)
    return (up - down) / (2.0 * h)


def twist_derivative_richardson(spec: PuncturedTorus, beta: str, h: float = 1e-4):
    """Return (D(h), Richardson value from D(h) and D(h/2))."""
    d1 = twist_derivative_fd(spec, beta, h)
    d2 = twist_derivative_fd(spec, beta, h / 2.0)
    return d1, (4.0 * d2 - d1) / 3.0


def _exp_m2d(w: complex) -> float:
    t = abs(w.real) / w.imag
    e = t + math.sqrt(1.0 + t * t)
    return 1.0 / (e * e)


def p_series(g: MarkedGroup, alpha: str, p: complex, depth: int) -> SeriesReport:
    """Sum of e^{-2 d(C p, axis alpha)} over <alpha> \\ G up to word length depth."""
    p = complex(p)
    if not p.imag > 0.0:
        raise ValueError("basepoint must lie in the upper half-plane")
    if depth > group.MAX_DEPTH:
        raise group.DepthTooLarge(f"depth {depth} exceeds {group.MAX_DEPTH}")
    frame = group.make_frame(g, alpha, alpha)
    q = frame.conj(p)
    shells = [_exp_m2d(q)]
    terms = 1
    if len(frame.alpha) == 1:
        first_ok = [ch.lower() != frame.alpha.lower() for ch in g.alphabet]
        out = _walk.shells(frame.gens, depth, first_ok, [True] * 4, _walk.MODE_PSERIES,
                           [q.real, q.imag, abs(q) ** 2])
        shells += [float(out[n, _walk.S_SUM]) for n in range(1, depth + 1)]
        terms += int(out[:, _walk.S_N].sum())
    else:
        extra, count = _generic_orbit_shells(frame, q, depth)
        shells += extra
        terms += count
    return SeriesReport(math.fsum(shells), terms, abs(shells[-1]), p,
                        tail_estimate(shells[1:]))


def _generic_orbit_shells(frame, q: complex, depth: int):
    la = frame.length_alpha
    seen = [_reduce_point(q, la)]
    shells = []
    count = 0
    for letters, ent in group.word_levels(frame.gens, depth):
        vals = []
        for a, b, c, d in ent:
            w = (a * q + b) / (c * q + d)
            key = _reduce_point(w, la)
            if any(abs(key - k) <= 1e-9 * max(1.0, abs(k)) for k in seen):
                continue
            seen.append(key)
            vals.append(_exp_m2d(w))
        shells.append(math.fsum(vals))
        count += len(vals)
    return shells, count


def _reduce_point(w: complex, la: float) -> complex:
    k = math.floor(math.log(abs(w)) / la)
    return w * math.exp(-k * la)


def grad_norm_vs_bound(g: MarkedGroup, alpha: str, depth: int):
    est = riera_pairing(g, alpha, alpha, depth)
    la = hyp.translation_length(g.evaluate(alpha))
    return est.value, est.value / (la + la * la * math.exp(la / 2.0))


def remainder(g: MarkedGroup, alpha: str, depth: int) -> float:
    """riera_pairing(alpha, alpha) - (2/pi) l_alpha."""
    est = riera_pairing(g, alpha, alpha, depth)
    return TWO_OVER_PI * est.coset_sum


__all__ = [
    "PairingEstimate", "SeriesReport", "CosineReport", "riera_summand", "riera_pairing",
    "cosine_sum", "cosine_report", "twist_derivative_fd", "twist_derivative_richardson",
    "p_series", "grad_norm_vs_bound", "remainder", "tail_estimate",
]
