import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wplab import group, hyp
from wplab.errors import DepthTooLarge, InputError, LengthOutOfRange, NotHyperbolicWord, WrongSurfaceKind
from wplab.group import Pants, PuncturedTorus

SQUARE = 2.0 * math.asinh(1.0)


def test_square_torus_traces():
    g = group.build(PuncturedTorus(SQUARE, 0.0))
    a, b = g.generator("A"), g.generator("B")
    assert a.trace == pytest.approx(2 * math.sqrt(2), abs=1e-14)
    assert b.trace == pytest.approx(2 * math.sqrt(2), abs=1e-14)
    assert (a @ b).trace == pytest.approx(4.0, abs=1e-13)
    x, y, z = a.trace, b.trace, (a @ b).trace
    assert x * x + y * y + z * z == pytest.approx(x * y * z, abs=1e-12)
    assert group.commutator_trace(g) == pytest.approx(-2.0, abs=1e-13)
    assert hyp.translation_length(b) == pytest.approx(1.76275, abs=1e-5)
    assert hyp.u_invariant(hyp.axis(a), hyp.axis(b)).u == pytest.approx(0.0, abs=1e-14)


def test_commutator_grid():
    for l in np.linspace(0.1, 6.0, 10):
        for tau in np.linspace(-2.0, 2.0, 10):
            g = group.build(PuncturedTorus(float(l), float(tau)))
            assert abs(group.commutator_trace(g) + 2.0) < 1e-10
            assert hyp.axis(g.generator("A")).endpoints == (0.0, math.inf)


@pytest.mark.parametrize("ls", [(2.0, 2.0, 2.0), (0.5, 1.0, 3.0), (4.0, 0.3, 0.7)])
def test_pants_traces(ls):
    g = group.build(Pants(*ls))
    x, y = g.generator("X"), g.generator("Y")
    for m, l in ((x, ls[0]), (y, ls[1]), (x @ y, ls[2])):
        assert abs(m.trace) == pytest.approx(2.0 * math.cosh(l / 2.0), abs=1e-9)
    assert hyp.axis(x).endpoints == (0.0, math.inf)
    u = hyp.u_invariant(hyp.axis(x), hyp.axis(y))
    assert not u.crossing and u.u > 1.0


def test_pants_cusp_limit():
    traces = [abs((lambda g: (g.generator("X") @ g.generator("Y")).trace)(group.build(Pants(1.0, 1.0, l3))))
              for l3 in (1.0, 0.1, 0.001)]
    assert traces[-1] == pytest.approx(2.0, abs=1e-6)
    assert traces[0] > traces[1] > traces[2]


def test_spec_guards_and_json():
    with pytest.raises(LengthOutOfRange):
        PuncturedTorus(0.0)
    with pytest.raises(LengthOutOfRange):
        Pants(1.0, 51.0, 1.0)
    for spec in (PuncturedTorus(1.5, -0.25), Pants(1.0, 2.0, 3.0)):
        assert group.spec_from_dict(spec.to_dict()) == spec
    with pytest.raises(InputError):
        group.spec_from_dict({"kind": "genus-two"})


def test_twist():
    g = group.build(PuncturedTorus(1.0, 0.2))
    assert group.twist(g, 0.0).generators == g.generators
    a = group.twist(group.twist(g, 0.3), -0.7)
    b = group.twist(g, -0.4)
    for (_, m1), (_, m2) in zip(a.generators, b.generators):
        assert max(abs(x - y) for x, y in zip(m1.entries, m2.entries)) < 1e-12
    for dt in (-3.0, 0.5, 4.0):
        h = group.twist(g, dt)
        assert abs(group.commutator_trace(h) + 2.0) < 1e-10
        assert hyp.translation_length(h.generator("A")) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(WrongSurfaceKind):
        group.twist(group.build(Pants(1, 1, 1)), 0.1)


def test_twist_matches_build():
    g = group.twist(group.build(PuncturedTorus(1.2, 0.0)), 0.4)
    h = group.build(PuncturedTorus(1.2, 0.4))
    assert g.generator("B").close_to(h.generator("B"), 1e-13)


@pytest.mark.parametrize("spec", [PuncturedTorus(SQUARE, 0.3), Pants(2.0, 2.0, 2.0)])
def test_enumerate_freeness(spec):
    g = group.build(spec)
    assert [w for w, _ in group.enumerate_words(g, 0)] == [""]
    assert len(group.enumerate_words(g, 2)) == 17
    for n in (6, 10):
        items = group.enumerate_words(g, n)
        assert len(items) == 2 * 3 ** n - 1
        assert group.count_matrix_collisions(items) == 0
    with pytest.raises(DepthTooLarge):
        group.enumerate_words(g, 26)


def test_enumeration_order_and_matrices():
    g = group.build(PuncturedTorus(1.0, 0.1))
    items = group.enumerate_words(g, 3)
    words = [w for w, _ in items]
    assert words == sorted(words, key=lambda w: (len(w), [g.alphabet.index(c) for c in w]))
    for w, m in items[::7]:
        assert m.close_to(g.evaluate(w), 1e-12)


def test_free_reduce():
    assert group.free_reduce("AabB") == ""
    assert group.free_reduce("ABba") == ""
    assert group.free_reduce("AAbBa") == "A"
    assert group.invert_word("ABa") == "Aba"


def test_depth_one_cosets():
    g = group.build(PuncturedTorus(1.0, 0.0))
    terms = group.double_cosets(g, "A", "A", 1)
    assert sorted(t.core for t in terms) == ["B", "b"]
    a_axis = hyp.IMAGINARY_AXIS
    for t in terms:
        img = a_axis.image(t.matrix)
        assert hyp.u_invariant(a_axis, img).u == pytest.approx(t.u, rel=1e-10)


def test_projection_height_window():
    g = group.build(PuncturedTorus(0.8, 0.3))
    la = 0.8
    for alpha, beta in (("A", "A"), ("A", "B"), ("B", "A")):
        for t in group.double_cosets(g, alpha, beta, 5):
            assert 1.0 <= t.projection_height < math.exp(
                hyp.translation_length(g.evaluate(alpha)))
            assert t.u >= 0.0
            assert (t.u < 1.0) == t.crossing


def test_depth_stability():
    g = group.build(PuncturedTorus(SQUARE, 0.0))
    t6 = group.double_cosets(g, "A", "A", 6)
    t7 = group.double_cosets(g, "A", "A", 7)
    c6 = Counter(round(t.u, 9) for t in t6)
    c7 = Counter(round(t.u, 9) for t in t7)
    assert not (c6 - c7)
    added = c7 - c6
    assert min(added) > min(c6)


@given(st.floats(0.05, 1.7), st.floats(-1.0, 1.0))
def test_short_geodesic_translates_disjoint(l, tau):
    g = group.build(PuncturedTorus(l, tau))
    assert all(t.u > 1.0 and not t.crossing for t in group.double_cosets(g, "A", "A", 4))


def test_canonicalize_idempotent():
    g = group.build(PuncturedTorus(1.1, 0.2))
    for t in group.double_cosets(g, "A", "B", 4)[:40]:
        c = group.canonicalize_term(g, "A", "B", t.word)
        assert group.canonicalize_term(g, "A", "B", c.word).word == c.word
        assert c.u == pytest.approx(t.u, rel=1e-9)
        assert c.projection_height == pytest.approx(t.projection_height, rel=1e-9)


def test_generic_words_match_fast_path():
    # <bAB> is conjugate to <A> by b, so its cosets are the conjugated ones
    g = group.build(PuncturedTorus(1.0, 0.1))
    fast = Counter(round(t.u, 8) for t in group.double_cosets(g, "A", "A", 2))
    slow = group.double_cosets(g, "bAB", "bAB", 4)
    got = Counter(round(t.u, 8) for t in slow)
    assert not (fast - got)
    assert all(1.0 <= t.projection_height < math.exp(1.0) for t in slow)


def test_non_hyperbolic_word():
    g = group.build(PuncturedTorus(1.0, 0.0))
    with pytest.raises(NotHyperbolicWord):
        group.double_cosets(g, "ABab", "A", 2)
    with pytest.raises(NotHyperbolicWord):
        group.double_cosets(g, "", "A", 2)
