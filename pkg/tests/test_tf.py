"""Polynomial/rational algebra and the actuation-line response builders."""

import cmath
import math

import numpy as np
import pytest

from mrhydro.params import ActuationLineParams, BlockedLoad, CompliantLoad
from mrhydro.tf import (FrequencyResponse, PoleEvaluationError, Polynomial,
                        RationalTF, evaluate_at_jw, force_response,
                        line_blocks, magnetic_lag, poles, polynomial_roots,
                        pressure_response, unity_feedback, zeros)


def coeffs_close(p, expected, rel=1e-12):
    expected = np.asarray(expected, dtype=float)
    assert p.coef.shape == expected.shape
    scale = max(np.max(np.abs(expected)), 1e-300)
    assert np.max(np.abs(p.coef - expected)) <= rel * scale


# -- polynomial arithmetic ----------------------------------------------------

def test_poly_product_difference_of_squares():
    prod = Polynomial([1.0, 1.0]) * Polynomial([1.0, -1.0])
    coeffs_close(prod, [1.0, 0.0, -1.0])


def test_poly_additive_identity():
    p = Polynomial([3.0, 0.0, 2.0])
    coeffs_close(p + Polynomial([0.0]), [3.0, 0.0, 2.0])


def test_poly_lag_times_s():
    prod = Polynomial([1.0, 0.01]) * Polynomial([0.0, 1.0])
    coeffs_close(prod, [0.0, 1.0, 0.01])


def test_poly_trailing_zeros_trimmed():
    p = Polynomial([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert Polynomial([0.0, 0.0]).is_zero


def test_poly_degree_bookkeeping():
    a = Polynomial([1.0, 2.0, 3.0])
    b = Polynomial([5.0, 4.0])
    assert (a * b).degree == a.degree + b.degree
    assert (a + b).degree <= max(a.degree, b.degree)
    cancel = Polynomial([1.0, 1.0]) + Polynomial([-1.0, -1.0])
    assert cancel.is_zero


def test_poly_evaluation_horner():
    p = Polynomial([1.0, 2.0, 3.0])  # 1 + 2s + 3s^2
    s = 0.5 + 0.25j
    assert p(s) == pytest.approx(1.0 + 2.0 * s + 3.0 * s * s)


# -- root finding -------------------------------------------------------------

def test_roots_first_order():
    r = polynomial_roots(Polynomial([1.0, 0.01]))
    assert r == pytest.approx([-100.0])


def test_roots_complex_pair():
    r = polynomial_roots(Polynomial([5.0, 2.0, 1.0]))
    assert sorted(r, key=lambda z: z.imag) == pytest.approx([-1 - 2j, -1 + 2j])


def test_roots_random_recovery():
    """Polynomials built from known roots are recovered within 1e-6 relative."""
    rng = np.random.default_rng(7)
    for _ in range(60):
        n_pairs = rng.integers(0, 4)
        n_real = rng.integers(1, 4)
        roots = []
        for _ in range(n_pairs):
            re = rng.uniform(-1e3, 1e3)
            im = rng.uniform(1e-1, 1e3)
            roots += [re + 1j * im, re - 1j * im]
        roots += list(rng.uniform(-1e3, 1e3, n_real))
        p = Polynomial.from_roots(roots, leading=rng.uniform(0.5, 2.0))
        found = sorted(polynomial_roots(p), key=lambda z: (z.real, z.imag))
        expect = sorted(np.asarray(roots, dtype=complex),
                        key=lambda z: (z.real, z.imag))
        for a, b in zip(found, expect):
            assert abs(a - b) <= 1e-6 * max(1.0, abs(b))


def test_roots_of_constant_rejected():
    assert polynomial_roots(Polynomial([3.0])).size == 0
    with pytest.raises(ValueError):
        polynomial_roots(Polynomial([0.0]))


# -- rational transfer functions ----------------------------------------------

def test_rational_multiplicative_identity():
    g = RationalTF(Polynomial([2.0, 1.0]), Polynomial([1.0, 0.5, 2.0]))
    h = g * RationalTF.constant(1.0)
    coeffs_close(h.num, g.num.coef)
    coeffs_close(h.den, g.den.coef)


def test_unity_feedback_integrator():
    k = 3.7
    g = RationalTF(Polynomial([k]), Polynomial([0.0, 1.0]))
    closed = unity_feedback(g)
    coeffs_close(closed.num, [k])
    coeffs_close(closed.den, [k, 1.0])


def test_rational_addition():
    a = RationalTF(Polynomial([1.0]), Polynomial([1.0, 1.0]))
    b = RationalTF(Polynomial([1.0]), Polynomial([2.0, 1.0]))
    s = a + b
    coeffs_close(s.num, [3.0, 2.0])
    coeffs_close(s.den, [2.0, 3.0, 1.0])


def test_denominator_normalized_monic():
    g = RationalTF(Polynomial([4.0]), Polynomial([8.0, 2.0]))
    assert g.den.coef[-1] == 1.0
    assert g.dc_gain() == pytest.approx(0.5)


def test_zero_denominator_rejected():
    with pytest.raises(ZeroDivisionError):
        RationalTF(Polynomial([1.0]), Polynomial([0.0]))


def test_simplified_cancels_shared_factor():
    common = Polynomial([1.0, 1.0])
    num = common * Polynomial([3.0, 1.0])
    den = common * Polynomial([2.0, 1.0]) * Polynomial([4.0, 1.0])
    g = RationalTF(num, den).simplified()
    assert g.num.degree == 1 and g.den.degree == 2
    raw = RationalTF(num, den)
    f = np.logspace(-2, 2, 50)
    assert np.max(np.abs(evaluate_at_jw(g, f) - evaluate_at_jw(raw, f))
                  / np.abs(evaluate_at_jw(raw, f))) < 1e-9
    assert g.dc_gain() == pytest.approx(raw.dc_gain(), rel=1e-12)


def test_evaluate_first_order_corner():
    g = RationalTF(Polynomial([1.0]), Polynomial([1.0, 0.01]))
    f_corner = 100.0 / (2.0 * math.pi)
    v = evaluate_at_jw(g, f_corner)
    assert abs(v) == pytest.approx(1.0 / math.sqrt(2.0), rel=1e-12)
    assert math.degrees(cmath.phase(v)) == pytest.approx(-45.0, abs=1e-9)


def test_evaluate_low_frequency_approaches_dc():
    g = RationalTF(Polynomial([3.0, 1.0]), Polynomial([1.5, 0.2, 1.0]))
    assert evaluate_at_jw(g, 1e-7) == pytest.approx(g.dc_gain(), rel=1e-6)


def test_evaluate_at_pole_raises():
    w0 = 2.0 * math.pi * 10.0
    g = RationalTF(Polynomial([1.0]), Polynomial([w0 * w0, 0.0, 1.0]))
    with pytest.raises(PoleEvaluationError):
        evaluate_at_jw(g, 10.0)


def test_frequency_response_invariants():
    with pytest.raises(ValueError):
        FrequencyResponse(np.array([1.0, 1.0]), np.array([1j, 2j]))
    with pytest.raises(ValueError):
        FrequencyResponse(np.array([0.0, 1.0]), np.array([1j, 2j]))


# -- line model builders --------------------------------------------------------

def test_blocks_dc_values(table1, compliant):
    blk = line_blocks(table1, compliant)
    assert blk.drive.dc_gain() == pytest.approx(1.0, rel=1e-12)
    assert blk.back.num.coef[0] == 0.0  # no static back-action
    assert blk.coupling.dc_gain() == pytest.approx(1.0, rel=1e-12)
    coeffs_close(blk.load.num, [12000.0, 20.0, 1.87])


def test_blocked_blocks_use_analytic_limit(table1, blocked):
    # blocked coupling k2/(m2 s^2 + b2 s + k2), stored with monic denominator
    p = table1
    blk = line_blocks(p, blocked)
    coeffs_close(blk.coupling.num, [p.k2 / p.m2])
    coeffs_close(blk.coupling.den, np.array([p.k2, p.b2, p.m2]) / p.m2)
    coeffs_close(blk.admittance.num, [1.0 / p.m2])
    coeffs_close(blk.admittance.den, np.array([p.k2, p.b2, p.m2]) / p.m2)
    assert blk.load is None


def test_response_dc_gain_equals_current_gain(compliant, blocked):
    rng = np.random.default_rng(11)
    for _ in range(25):
        p = ActuationLineParams(
            m1=rng.uniform(0.1, 20.0), b1=rng.uniform(0.0, 500.0),
            k1=10 ** rng.uniform(3, 6), m2=rng.uniform(0.1, 20.0),
            b2=rng.uniform(0.0, 500.0), k2=10 ** rng.uniform(3, 6),
            tau=10 ** rng.uniform(-3, -1), K_I=10 ** rng.uniform(-1, 3))
        z = compliant if rng.uniform() < 0.5 else blocked
        assert pressure_response(p, z).dc_gain() == pytest.approx(p.K_I, rel=1e-9)
        assert force_response(p, z).dc_gain() == pytest.approx(p.K_I, rel=1e-9)


def test_blocked_denominator_degree_five(table1, blocked):
    """Independent symbolic expansion: den = (tau s + 1)(q1 w + k1 p1)."""
    p = table1
    hf = pressure_response(p, blocked)
    assert hf.den.degree == 5
    assert hf.num.degree == 2
    pmul = np.polynomial.polynomial.polymul
    q1 = [p.k1, p.b1, p.m1]           # master branch m1 s^2 + b1 s + k1
    p1 = [0.0, p.k1 * p.b1, p.k1 * p.m1]   # k1 * (m1 s^2 + b1 s)
    w = [p.k2, p.b2, p.m2]            # fluid branch
    mech = pmul(q1, w)
    mech[: len(p1)] += np.asarray(p1)
    expected = pmul(mech, [1.0, p.tau])
    expected = expected / expected[-1]
    coeffs_close(hf.den, expected, rel=1e-9)


def test_force_is_pressure_times_coupling(table1, compliant, blocked):
    """The two candidates differ exactly by the coupling block."""
    for z in (compliant, blocked):
        hf = pressure_response(table1, z)
        hp = force_response(table1, z)
        c = line_blocks(table1, z).coupling
        f = np.logspace(-1, 2, 100)
        lhs = evaluate_at_jw(hp, f)
        rhs = evaluate_at_jw(hf, f) * evaluate_at_jw(c, f)
        assert np.max(np.abs(lhs - rhs) / np.abs(rhs)) < 1e-9


def test_blocked_pressure_magnitude_at_20hz(table1, blocked):
    """Brute-force complex arithmetic oracle at one frequency."""
    p = table1
    s = 2j * math.pi * 20.0
    q1 = p.m1 * s * s + p.b1 * s + p.k1
    drive = p.k1 / q1
    back = (p.m1 * s * s + p.b1 * s) * p.k1 / q1
    fluid = p.m2 * s * s + p.b2 * s + p.k2
    lag = 1.0 / (p.tau * s + 1.0)
    oracle_hf = lag * drive / (back / fluid + 1.0)
    oracle_hp = oracle_hf * (p.k2 / fluid)
    assert abs(oracle_hf) == pytest.approx(0.6947415480657123, rel=1e-12)
    got_hf = evaluate_at_jw(pressure_response(p, blocked), 20.0)
    got_hp = evaluate_at_jw(force_response(p, blocked), 20.0)
    assert got_hf == pytest.approx(oracle_hf, rel=1e-9)
    assert got_hp == pytest.approx(oracle_hp, rel=1e-9)


def test_magnetic_lag_shape(table1):
    lag = magnetic_lag(table1)
    coeffs_close(lag.num, [1.0 / table1.tau])
    coeffs_close(lag.den, [1.0 / table1.tau, 1.0])


def test_poles_in_left_half_plane_random_draws(compliant):
    """Passive line: every pole strictly (to 1e-9) in the left half-plane."""
    rng = np.random.default_rng(42)
    for _ in range(100):
        p = ActuationLineParams(
            m1=rng.uniform(0.1, 20.0), b1=rng.uniform(0.0, 500.0),
            k1=10 ** rng.uniform(3, 6), m2=rng.uniform(0.1, 20.0),
            b2=rng.uniform(0.0, 500.0), k2=10 ** rng.uniform(3, 6),
            tau=10 ** rng.uniform(-3, -1))
        if rng.uniform() < 0.5:
            z = BlockedLoad()
        else:
            z = CompliantLoad(m3=rng.uniform(0.1, 50.0),
                              b3=rng.uniform(0.0, 200.0),
                              k3=10 ** rng.uniform(2, 6))
        assert np.all(poles(pressure_response(p, z)).real <= 1e-9)


def test_blocked_limit_convergence(table1, blocked):
    """Stiffening the load converges pointwise to the blocked response."""
    f = np.logspace(0, np.log10(50.0), 40)
    ref = evaluate_at_jw(pressure_response(table1, blocked), f)
    errs = []
    for k3 in (1e6, 1e8, 1e10):
        z = CompliantLoad(m3=1.87, b3=20.0, k3=k3)
        val = evaluate_at_jw(pressure_response(table1, z), f)
        errs.append(np.max(np.abs(val - ref)))
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-3


def test_zeros_of_blocked_pressure(table1, blocked):
    """The pressure channel inherits the fluid-mode zeros."""
    p = table1
    zs = zeros(pressure_response(p, blocked))
    expect = polynomial_roots(Polynomial([p.k2, p.b2, p.m2]))
    got = sorted(zs, key=lambda z: z.imag)
    want = sorted(expect, key=lambda z: z.imag)
    for a, b in zip(got, want):
        assert abs(a - b) <= 1e-6 * abs(b)
    assert zeros(force_response(p, blocked)).size == 0
