"""Marked two-generator Fuchsian groups and their word/coset enumeration.

Words are strings over the generator letters; an upper-case letter is a
generator and its lower-case form is the inverse ("Ab" is A B^-1).  The
alphabet order used for canonical (lexicographic) enumeration is
g1, g2, g1^-1, g2^-1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import hyp
from .errors import (DepthTooLarge, InputError, LengthOutOfRange, NotHyperbolicWord,
                     WrongSurfaceKind)
from .hyp import INF, Isometry

MAX_LENGTH = 50.0
MAX_DEPTH = 25
DEDUPE_TOL = 1e-9


@dataclass(frozen=True)
class PuncturedTorus:
    l: float
    tau: float = 0.0

    def __post_init__(self):
        _check_length(self.l)
        if not math.isfinite(self.tau):
            raise InputError("twist must be finite")

    def to_dict(self) -> dict:
        return {"kind": "punctured_torus", "l": self.l, "tau": self.tau}


@dataclass(frozen=True)
class Pants:
    l1: float
    l2: float
    l3: float

    def __post_init__(self):
        for x in (self.l1, self.l2, self.l3):
            _check_length(x)

    def to_dict(self) -> dict:
        return {"kind": "pants", "l": [self.l1, self.l2, self.l3]}


SurfaceSpec = Union[PuncturedTorus, Pants]


def _check_length(x) -> None:
    if not isinstance(x, (int, float)) or not 0.0 < x <= MAX_LENGTH:
        raise LengthOutOfRange(f"length {x!r} outside (0, {MAX_LENGTH}]")


def spec_from_dict(obj: dict) -> SurfaceSpec:
    try:
        kind = obj["kind"]
        if kind == "punctured_torus":
            return PuncturedTorus(float(obj["l"]), float(obj.get("tau", 0.0)))
        if kind == "pants":
            l1, l2, l3 = (float(x) for x in obj["l"])
            return Pants(l1, l2, l3)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed surface spec {obj!r}: {exc}") from exc
    raise InputError(f"unknown surface kind {obj.get('kind')!r}")


@dataclass(frozen=True)
class MarkedGroup:
    generators: tuple[tuple[str, Isometry], tuple[str, Isometry]]
    distinguished: str
    spec: SurfaceSpec

    @property
    def names(self) -> tuple[str, str]:
        return (self.generators[0][0], self.generators[1][0])

    @property
    def alphabet(self) -> str:
        g1, g2 = self.names
        return g1 + g2 + g1.lower() + g2.lower()

    def letter_matrix(self, ch: str) -> Isometry:
        for name, m in self.generators:
            if ch == name:
                return m
            if ch == name.lower():
                return m.inverse()
        raise InputError(f"letter {ch!r} not in alphabet {self.alphabet!r}")

    def generator(self, name: str) -> Isometry:
        return self.letter_matrix(name)

    def reduce(self, word: str) -> str:
        for ch in word:
            if ch not in self.alphabet:
                raise InputError(f"letter {ch!r} not in alphabet {self.alphabet!r}")
        return free_reduce(word)

    def evaluate(self, word: str) -> Isometry:
        m = Isometry.identity()
        for ch in self.reduce(word):
            m = m @ self.letter_matrix(ch)
        return m

    def gens_array(self) -> np.ndarray:
        """Entries (a, b, c, d) of the four letters in alphabet order."""
        return np.array([self.letter_matrix(ch).entries for ch in self.alphabet])

    def conjugated(self, s: Isometry) -> "MarkedGroup":
        gens = tuple((n, m.conjugate(s)) for n, m in self.generators)
        return MarkedGroup(gens, self.distinguished, self.spec)


def free_reduce(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if out and out[-1] != ch and out[-1].lower() == ch.lower():
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def invert_word(word: str) -> str:
    return "".join(ch.swapcase() for ch in reversed(word))


def build_punctured_torus(spec: PuncturedTorus) -> MarkedGroup:
    l, tau = spec.l, spec.tau
    a = Isometry.diag(math.exp(l / 2.0))
    c = 1.0 / math.tanh(l / 2.0)
    s = 1.0 / math.sinh(l / 2.0)
    e = math.exp(tau / 2.0)
    b = Isometry(e * c, e * s, s / e, c / e)
    return MarkedGroup((("A", a), ("B", b)), "A", spec)


def build_pants(spec: Pants) -> MarkedGroup:
    l1, l2, l3 = spec.l1, spec.l2, spec.l3
    x = Isometry.diag(math.exp(l1 / 2.0))
    ch1, ch2, ch3 = (math.cosh(v / 2.0) for v in (l1, l2, l3))
    sh1, sh2 = math.sinh(l1 / 2.0), math.sinh(l2 / 2.0)
    cosh_d = (ch3 + ch1 * ch2) / (sh1 * sh2)
    # axis of Y = (e^-s, e^s) so that u = coth s = cosh d
    s = math.atanh(1.0 / cosh_d)
    p, q = math.exp(-s), math.exp(s)
    target = 2.0 * ch3
    best = None
    for lo, hi in ((p, q), (q, p)):
        # n maps 0 -> lo, inf -> hi
        n = Isometry(hi, lo, 1.0, 1.0) if hi > lo else Isometry(-hi, lo, -1.0, 1.0)
        y = Isometry.diag(math.exp(l2 / 2.0)).conjugate(n)
        err = abs(abs((x @ y).trace) - target)
        if best is None or err < best[0]:
            best = (err, y)
    y = best[1]
    return MarkedGroup((("X", x), ("Y", y)), "X", spec)


def build(spec: SurfaceSpec) -> MarkedGroup:
    if isinstance(spec, PuncturedTorus):
        return build_punctured_torus(spec)
    if isinstance(spec, Pants):
        return build_pants(spec)
    raise InputError(f"not a surface spec: {spec!r}")


def twist(g: MarkedGroup, dtau: float) -> MarkedGroup:
    if not isinstance(g.spec, PuncturedTorus):
        raise WrongSurfaceKind("twist needs a punctured-torus group")
    if dtau == 0.0:
        return g
    (na, a), (nb, b) = g.generators
    e = math.exp(dtau / 2.0)
    b2 = Isometry(e * b.a, e * b.b, b.c / e, b.d / e)
    spec = PuncturedTorus(g.spec.l, g.spec.tau + dtau)
    return MarkedGroup(((na, a), (nb, b2)), g.distinguished, spec)


def commutator_trace(g: MarkedGroup) -> float:
    """Trace of [g1, g2]; independent of the sign of either matrix."""
    a, b = (m for _, m in g.generators)
    ai, bi = a.inverse(), b.inverse()
    m = _mul(_mul(_mul(a.entries, b.entries), ai.entries), bi.entries)
    return m[0] + m[3]


def _mul(x, y):
    a, b, c, d = x
    e, f, g, h = y
    return (a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)


# ---------------------------------------------------------------- words

_NEXT = np.array([[j for j in range(4) if j != (k + 2) % 4] for k in range(4)])


def word_levels(gens: np.ndarray, depth: int, first_ok=(True,) * 4):
    """Yield (letters, entries) for each word length 1..depth.

    ``letters`` has shape (n, length) with codes 0..3, ``entries`` shape
    (n, 4); rows are in lexicographic order of the words.
    """
    first = np.array([k for k in range(4) if first_ok[k]], dtype=np.int8)
    letters = first[:, None]
    ent = gens[first].copy()
    if depth >= 1:
        yield letters, ent
    for _ in range(2, depth + 1):
        nxt = _NEXT[letters[:, -1]]
        parent = np.repeat(np.arange(len(letters)), 3)
        ch = nxt.ravel()
        letters = np.concatenate([letters[parent], ch[:, None].astype(np.int8)], axis=1)
        p = ent[parent]
        g = gens[ch]
        ent = np.stack([p[:, 0] * g[:, 0] + p[:, 1] * g[:, 2],
                        p[:, 0] * g[:, 1] + p[:, 1] * g[:, 3],
                        p[:, 2] * g[:, 0] + p[:, 3] * g[:, 2],
                        p[:, 2] * g[:, 1] + p[:, 3] * g[:, 3]], axis=1)
        yield letters, ent


def _words(alphabet: str, letters: np.ndarray) -> list[str]:
    table = np.array(list(alphabet))
    return ["".join(row) for row in table[letters]]


def enumerate_words(g: MarkedGroup, depth: int) -> list[tuple[str, Isometry]]:
    """All reduced words of length <= depth in shortlex order."""
    if depth > MAX_DEPTH:
        raise DepthTooLarge(f"depth {depth} exceeds {MAX_DEPTH}")
    if depth < 0:
        raise InputError("depth must be non-negative")
    out = [("", Isometry.identity())]
    for letters, ent in word_levels(g.gens_array(), depth):
        for w, row in zip(_words(g.alphabet, letters), ent):
            out.append((w, Isometry(*row)))
    return out


def count_matrix_collisions(items, tol: float = DEDUPE_TOL) -> int:
    """Number of adjacent pairs (after sorting) with equal canonical matrices."""
    ent = np.array([m.entries for _, m in items])
    scale = np.maximum(1.0, np.abs(ent).max(axis=1))
    order = np.lexsort(ent.T[::-1])
    ent, scale = ent[order], scale[order]
    diff = np.abs(np.diff(ent, axis=0)).max(axis=1)
    return int(np.sum(diff <= tol * np.maximum(scale[1:], scale[:-1])))


# ---------------------------------------------------------- double cosets


@dataclass(frozen=True)
class DoubleCosetTerm:
    """One coset <alpha> C <beta>, represented by alpha^shift * core."""

    word: str
    matrix: Isometry
    u: float
    crossing: bool
    projection_height: float
    cos_angle: float = field(default=math.nan)
    core: str = ""
    shift: int = 0


@dataclass(frozen=True)
class Frame:
    """A group conjugated so that the axis of ``alpha`` is (0, inf),
    oriented from 0 to infinity, together with the data of ``beta``."""

    group: MarkedGroup
    alpha: str
    beta: str
    gens: np.ndarray        # letter entries in the normalized frame
    lam: float              # alpha = diag(lam, 1/lam), lam > 1
    beta_entries: tuple     # beta in the normalized frame, positive trace
    beta_root: float        # sqrt(tr(beta)^2 - 4)
    length_alpha: float
    length_beta: float
    conj: Isometry          # normalizing map S (frame = S G S^-1)


def _hyperbolic_word(g: MarkedGroup, word: str) -> tuple[str, Isometry]:
    w = g.reduce(word)
    if not w:
        raise NotHyperbolicWord("empty word is the identity")
    m = g.evaluate(w)
    if hyp.classify(m) is not hyp.Kind.HYPERBOLIC:
        raise NotHyperbolicWord(f"word {word!r} is not hyperbolic (|tr| = {abs(m.trace)!r})")
    return w, m


def make_frame(g: MarkedGroup, alpha: str, beta: str) -> Frame:
    alpha, ma = _hyperbolic_word(g, alpha)
    beta, mb = _hyperbolic_word(g, beta)
    rep, att = hyp.fixed_points(ma)
    if rep == 0.0 and att == INF:
        s = Isometry.identity()
    else:
        s = hyp.normalizer(rep, att)
    gs = g.conjugated(s)
    la = hyp.translation_length(ma)
    lb = hyp.translation_length(mb)
    b = gs.evaluate(beta)
    e = b.entries if b.trace > 0 else tuple(-x for x in b.entries)
    tr = e[0] + e[3]
    root = math.sqrt((tr - 2.0) * (tr + 2.0))
    return Frame(g, alpha, beta, gs.gens_array(), math.exp(la / 2.0), e, root, la, lb, s)


def conj_data(frame: Frame, ent: np.ndarray):
    """For rows C = (a, b, c, d) return entries p, q, r, s of C beta C^-1."""
    a, b, c, d = (ent[:, i] for i in range(4))
    m1, m2, m3, m4 = frame.beta_entries
    r1 = a * m1 + b * m3
    r2 = a * m2 + b * m4
    r3 = c * m1 + d * m3
    r4 = c * m2 + d * m4
    p = r1 * d - r2 * c
    q = -r1 * b + r2 * a
    r = r3 * d - r4 * c
    s = -r3 * b + r4 * a
    diff = (a * d + b * c) * (m1 - m4) + 2.0 * (b * d * m3 - a * c * m2)
    return p, q, r, s, diff


def _strip_word_powers(word: str, alpha: str, beta: str) -> str:
    """Remove leading alpha^{+-1} and trailing beta^{+-1} factors."""
    changed = True
    inv_a, inv_b = invert_word(alpha), invert_word(beta)
    while changed:
        changed = False
        for f in (alpha, inv_a):
            if word.startswith(f) and len(f) <= len(word):
                word = word[len(f):]
                changed = True
        for f in (beta, inv_b):
            if word.endswith(f) and len(f) <= len(word):
                word = word[:len(word) - len(f)]
                changed = True
    return word


def _height_shift(height: float, length: float) -> int:
    k = math.floor(math.log(height) / length)
    # snap against roundoff at the interval ends
    h = height * math.exp(-k * length)
    if h < 1.0:
        k -= 1
    elif h >= math.exp(length):
        k += 1
    return k


def _power(word: str, k: int) -> str:
    return word * k if k >= 0 else invert_word(word) * (-k)


def _terms_from(frame: Frame, words: list[str], ent: np.ndarray) -> list[DoubleCosetTerm]:
    p, q, r, s, diff = conj_data(frame, ent)
    terms = []
    la = frame.length_alpha
    for i, core in enumerate(words):
        scale = max(abs(p[i]), abs(s[i]), 1.0)
        if abs(r[i]) <= 1e-13 * scale and abs(q[i]) <= 1e-13 * scale:
            continue  # C maps the beta axis onto the alpha axis
        cs = diff[i] / frame.beta_root
        u = abs(cs)
        if abs(u - 1.0) <= 1e-12:
            raise hyp.SharedEndpoint(f"coset of {core!r} has u = {u!r}")
        height = math.sqrt(abs(q[i] / r[i]))
        k = _height_shift(height, la)
        height = height * math.exp(-k * la)
        height = min(max(height, 1.0), math.nextafter(math.exp(la), 0.0))
        word = free_reduce(_power(frame.alpha, -k) + core)
        mat = frame.group.evaluate(word)
        terms.append(DoubleCosetTerm(word, mat, u, u < 1.0, height,
                                     cs if u < 1.0 else math.nan, core, -k))
    return terms


def _letter_masks(g: MarkedGroup, alpha: str, beta: str):
    al = g.alphabet
    first_ok = [ch.lower() != alpha.lower() for ch in al]
    last_ok = [ch.lower() != beta.lower() for ch in al]
    return first_ok, last_ok


def is_fast_path(alpha: str, beta: str) -> bool:
    return len(alpha) == 1 and len(beta) == 1


def same_class(alpha: str, beta: str) -> bool:
    return alpha.lower() == beta.lower()


def double_cosets(g: MarkedGroup, alpha: str, beta: str, depth: int) -> list[DoubleCosetTerm]:
    """Representatives of <alpha> \\ G / <beta> with core word length <= depth.

    For single-letter alpha and beta the cores are the reduced words that do
    not start with alpha^{+-1} nor end with beta^{+-1} (a normal form in the
    free group).  Other words are handled by enumerating all reduced words
    and deduplicating the reduced axis endpoints.
    """
    if depth > MAX_DEPTH:
        raise DepthTooLarge(f"depth {depth} exceeds {MAX_DEPTH}")
    frame = make_frame(g, alpha, beta)
    alpha, beta = frame.alpha, frame.beta
    if is_fast_path(alpha, beta):
        first_ok, last_ok = _letter_masks(g, alpha, beta)
        words, rows = [], []
        if not same_class(alpha, beta):
            words.append("")
            rows.append(np.array([[1.0, 0.0, 0.0, 1.0]]))
        for letters, ent in word_levels(frame.gens, depth, first_ok):
            keep = np.array(last_ok)[letters[:, -1]]
            words.extend(_words(g.alphabet, letters[keep]))
            rows.append(ent[keep])
        ent = np.concatenate(rows) if rows else np.zeros((0, 4))
        return _terms_from(frame, words, ent)
    return _generic_cosets(frame, depth)


def _generic_cosets(frame: Frame, depth: int) -> list[DoubleCosetTerm]:
    alpha, beta = frame.alpha, frame.beta
    words, rows = [""], [np.array([[1.0, 0.0, 0.0, 1.0]])]
    for letters, ent in word_levels(frame.gens, depth):
        words.extend(_words(frame.group.alphabet, letters))
        rows.append(ent)
    ent = np.concatenate(rows)
    seen: dict[str, int] = {}
    cores, keep = [], []
    for i, w in enumerate(words):
        c = _strip_word_powers(w, alpha, beta)
        if c in seen:
            continue
        seen[c] = i
        cores.append(c)
        keep.append(i)
    # evaluate stripped cores exactly rather than the enumerated prefixes
    gs = frame.group.conjugated(frame.conj)
    core_ent = np.array([gs.evaluate(c).entries for c in cores]) if cores else np.zeros((0, 4))
    terms = _terms_from(frame, cores, core_ent)
    return dedupe_terms(terms, frame)


def _endpoint_key(t: DoubleCosetTerm, frame: Frame):
    m = frame.conj @ t.matrix
    b = hyp.axis(frame.group.evaluate(frame.beta))
    lo, hi = b.image(m).endpoints
    return (lo, hi)


def dedupe_terms(terms: list[DoubleCosetTerm], frame: Frame) -> list[DoubleCosetTerm]:
    """Keep the first term of each class of equal reduced axis endpoints."""
    out: list[DoubleCosetTerm] = []
    keys: list[tuple[float, float]] = []
    for t in terms:
        lo, hi = _endpoint_key(t, frame)
        dup = False
        for klo, khi in keys:
            if (abs(lo - klo) <= DEDUPE_TOL * max(1.0, abs(lo))
                    and abs(hi - khi) <= DEDUPE_TOL * max(1.0, abs(hi))):
                dup = True
                break
        if not dup:
            keys.append((lo, hi))
            out.append(t)
    return out


def canonicalize_term(g: MarkedGroup, alpha: str, beta: str, word: str) -> DoubleCosetTerm:
    """Canonical representative of the double coset of ``word``."""
    frame = make_frame(g, alpha, beta)
    core = _strip_word_powers(g.reduce(word), frame.alpha, frame.beta)
    gs = g.conjugated(frame.conj)
    ent = np.array([gs.evaluate(core).entries])
    terms = _terms_from(frame, [core], ent)
    if not terms:
        raise InputError(f"word {word!r} lies in the identity double coset of {alpha!r}")
    return terms[0]
