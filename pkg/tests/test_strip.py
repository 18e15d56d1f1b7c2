import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from wplab import strip
from wplab.errors import GridTooCoarse, InputError, NonPositiveLength
from wplab.strip import FourierQD

FIELDS = ("first", "first_rot", "second", "complex_hessian", "Q", "QS")


def quad_sin(a, k):
    return integrate.quad(lambda y: math.exp(-2 * a * y) * math.sin(y) ** k, 0, math.pi,
                          epsabs=0, epsrel=1e-13, limit=400)[0]


@pytest.mark.parametrize("a", [0.0, 1e-9, 0.01, 0.1, 1.0, 10.0, 100.0, -0.5])
def test_strip_integrals_vs_quadrature(a):
    assert strip.strip_integral_sin2(a) == pytest.approx(quad_sin(a, 2), rel=1e-10)
    assert strip.strip_integral_sin4(a) == pytest.approx(quad_sin(a, 4), rel=1e-10)


def test_strip_integral_values():
    assert strip.strip_integral_sin2(0.0) == math.pi / 2
    assert strip.strip_integral_sin4(0.0) == 3 * math.pi / 8
    assert strip.strip_integral_sin2(1.0) == pytest.approx(0.1247666, abs=1e-7)
    assert strip.strip_integral_sin4(1.0) == pytest.approx(0.0748600, abs=1e-7)


@given(st.floats(0.0, 50.0))
def test_elementary_chain(a):
    s2, s4 = strip.strip_integral_sin2(a), strip.strip_integral_sin4(a)
    # S4 / S2 = 3 / (a^2 + 4) and (a^2+4)^-1 <= (a^2+1)^-1 <= 4 (a^2+4)^-1
    assert s4 / s2 == pytest.approx(3.0 / (a * a + 4.0), rel=1e-6)
    assert 1 / (a * a + 4) <= 1 / (a * a + 1) <= 4 / (a * a + 4)


def test_eichler_coeffs():
    assert strip.eichler_combined_coeff(0, 1.0) == -2.0
    assert strip.eichler_combined_coeff(1, 2 * math.pi) == pytest.approx(-1.0)
    rng = np.random.default_rng(0)
    for _ in range(20):
        n, l = int(rng.integers(-10, 11)), float(rng.uniform(0.2, 9))
        ca, cc = strip.eichler_raw_coeffs(n, l)
        assert abs((ca - cc) - strip.eichler_combined_coeff(n, l)) < 1e-12


def test_q_form_examples():
    assert strip.q_form(FourierQD(1.0, ((0, 1),))) == pytest.approx(math.pi / 2)
    q1 = strip.q_form(FourierQD(2 * math.pi, ((1, 1),)))
    assert q1 == pytest.approx(2 * math.pi * strip.strip_integral_sin2(1.0) / 2.0, rel=1e-14)
    assert q1 == pytest.approx(0.39197, abs=1e-5)
    assert strip.q_form(FourierQD(1.0, ((0, 0), (3, 0)))) == 0.0
    assert strip.qs_form(FourierQD(1.0, ())) == 0.0


def test_q_form_matches_oracle_single_mode():
    phi = FourierQD(2 * math.pi, ((1, 1),))
    rep = strip.quadrature_oracle(phi)
    assert rep.Q == pytest.approx(strip.q_form(phi), rel=1e-12)


def test_single_zero_mode_equalities():
    for l, a0 in ((1.0, 1.0), (2.5, 0.3 - 0.8j), (7.0, 2j)):
        phi = FourierQD(l, ((0, a0),))
        assert strip.qs_form(phi) == pytest.approx(l * 3 * math.pi / 8 * abs(a0) ** 2)
        assert 3 * strip.q_form(phi) == pytest.approx(4 * strip.qs_form(phi), rel=1e-14)
        rep = strip.second_variation(phi)
        assert rep.second == pytest.approx(8 * l * (a0.real ** 2 + 3 * a0.imag ** 2), rel=1e-13)
        assert rep.complex_hessian == pytest.approx(8 * l * abs(a0) ** 2, rel=1e-13)
        assert abs(strip.corollary_margin(phi, rep)) <= 1e-12 * strip.margin_scale(phi, rep)
        assert abs(strip.sqrt_length_hessian(phi, rep)) < 1e-10 or a0.imag != 0


def test_annulus_flatness_real():
    for l in (0.5, 1.0, 4.0):
        rep = strip.second_variation(FourierQD(l, ((0, 1.3),)))
        assert abs(strip.sqrt_length_hessian(FourierQD(l, ((0, 1.3),)), rep)) < 1e-10


def test_first_variation():
    assert strip.first_variation(FourierQD(1.0, ((0, 1),))) == (-4.0, -0.0)
    assert strip.first_variation(FourierQD(1.0, ((0, 1j),))) == (-0.0, -4.0)
    assert strip.first_variation(FourierQD(1.0, ((2, 1), (-1, 3j)))) == (-0.0, -0.0)


def test_elementary_equality_case():
    rep = strip.second_variation(FourierQD(1.0, ((0, 1),)))
    assert (rep.first, rep.first_rot, rep.second, rep.complex_hessian) == (-4.0, 0.0, 8.0, 8.0)
    assert strip.corollary_margin(FourierQD(1.0, ((0, 1),)), rep) == 0.0


def test_strict_margin_with_higher_mode():
    phi = FourierQD(3.0, ((0, 1 + 0.5j), (1, 0.4)))
    assert strip.corollary_margin(phi) > 1e-6
    assert strip.quadrature_oracle(phi).second == pytest.approx(strip.second_variation(phi).second, rel=1e-10)


def test_random_inequalities():
    rng = np.random.default_rng(11)
    for _ in range(300):
        phi = strip.random_fourier_qd(rng)
        rep = strip.second_variation(phi)
        scale = strip.margin_scale(phi, rep)
        assert rep.QS <= 3 * rep.Q * (1 + 1e-12)
        assert 3 * rep.Q <= 4 * rep.QS * (1 + 1e-12)
        assert rep.complex_hessian <= rep.second * (1 + 1e-12)
        assert rep.second <= 3 * rep.complex_hessian * (1 + 1e-12)
        assert rep.second >= 0 and rep.complex_hessian >= 0
        assert strip.corollary_margin(phi, rep) > 1e-10 * scale
        assert strip.complex_margin(phi, rep) >= -1e-12 * scale


def test_oracle_agreement_random():
    rng = np.random.default_rng(5)
    for _ in range(10):
        phi = strip.random_fourier_qd(rng)
        a, b = strip.second_variation(phi), strip.quadrature_oracle(phi)
        for f in FIELDS:
            x, y = getattr(a, f), getattr(b, f)
            assert abs(x - y) <= 1e-8 * max(1.0, abs(x)), f


def test_oracle_first_variation_exact():
    phi = FourierQD(2.0, ((0, 0.7 - 0.2j), (1, 1.0), (-2, 0.01j), (5, 0.3)))
    a, b = strip.first_variation(phi), strip.quadrature_oracle(phi)
    assert abs(a[0] - b.first) < 1e-10 and abs(a[1] - b.first_rot) < 1e-10


def test_oracle_convergence():
    phi = FourierQD(2.0, ((0, 1.0), (1, 0.5), (-1, 0.1j)))
    exact = strip.second_variation(phi).second
    errs = [abs(strip.quadrature_oracle(phi, (64, n), "trapezoid").second - exact) for n in (64, 128, 256)]
    assert errs[0] / errs[1] >= 4.0 and errs[1] / errs[2] >= 4.0


def test_oracle_guards():
    with pytest.raises(GridTooCoarse):
        strip.quadrature_oracle(FourierQD(1.0, ((0, 1),)), (32, 64))
    with pytest.raises(InputError):
        strip.quadrature_oracle(FourierQD(1.0, ((0, 1),)), rule="simpson")


def test_overflow_is_inf():
    assert strip.strip_integral_sin2(-200.0) == math.inf
    assert strip.q_form(FourierQD(0.3, ((-6, 0), (0, 1)))) == pytest.approx(0.15 * math.pi)


def test_fourier_qd_type():
    phi = FourierQD(2.0, ((1, 1), (0, 2), (1, 0.5j)))
    assert phi.coeffs == ((0, 2), (1, 1 + 0.5j))
    assert phi.eps == pytest.approx(1j * math.pi)
    assert FourierQD.from_dict(phi.to_dict()) == phi
    assert phi.support == frozenset({0, 1})
    with pytest.raises(NonPositiveLength):
        FourierQD(0.0, ())
    with pytest.raises(InputError):
        FourierQD(1.0, ((65, 1),))
    with pytest.raises(InputError):
        FourierQD.from_dict({"l": 1.0})


coef = st.complex_numbers(max_magnitude=3.0, allow_nan=False, allow_infinity=False)


@given(st.floats(2.0, 10.0), st.dictionaries(st.integers(-8, 8), coef, min_size=1, max_size=6))
def test_property_chain(l, cmap):
    phi = FourierQD.from_map(l, cmap)
    rep = strip.second_variation(phi)
    scale = strip.margin_scale(phi, rep) + 1e-300
    assert strip.corollary_margin(phi, rep) >= -1e-10 * scale
    assert rep.QS <= 3 * rep.Q + 1e-12 * (rep.Q + 1)
    assert rep.complex_hessian <= rep.second + 1e-12 * (rep.second + 1)
    assert rep.second <= 3 * rep.complex_hessian + 1e-12 * (rep.second + 1)
