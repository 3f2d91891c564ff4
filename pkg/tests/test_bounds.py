import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detsums.bounds import (DmtCurve, dmt_envelope, dmt_ml_bound,
                            dmt_naive_bound, full_multiplexing_bound,
                            growth_fit, pe_upper_bound, shift_bound_envelope,
                            snr_threshold, snr_threshold_exponent)
from detsums.errors import DegenerateFit, MissingExponent


# ---------------------------------------------------------------------------
# growth fitting
# ---------------------------------------------------------------------------

def test_growth_fit_pure_power():
    radii = [2.0, 4.0, 8.0, 16.0, 32.0]
    values = [M ** 4 for M in radii]
    fit = growth_fit((radii, values))
    assert fit.s == pytest.approx(4.0, abs=1e-8)
    assert fit.t == pytest.approx(0.0, abs=1e-8)
    assert fit.residual < 1e-10
    assert not fit.has_log_factor


def test_growth_fit_pure_log_power():
    radii = [2.0, 4.0, 8.0, 16.0, 32.0]
    values = [math.log(M) ** 5 for M in radii]
    fit = growth_fit((radii, values))
    assert fit.s == pytest.approx(0.0, abs=1e-8)
    assert fit.t == pytest.approx(5.0, abs=1e-8)
    assert fit.residual < 1e-10
    assert fit.has_log_factor


def test_growth_fit_recovers_combined_model():
    radii = [2.0 * 2 ** (0.5 * j) for j in range(8)]
    values = [3.0 * M ** 2.5 * math.log(M) ** 1.5 for M in radii]
    fit = growth_fit((radii, values))
    assert fit.s == pytest.approx(2.5, abs=1e-8)
    assert fit.t == pytest.approx(1.5, abs=1e-8)
    assert fit.log_k == pytest.approx(math.log(3.0), abs=1e-8)


def test_growth_fit_filters_small_radii():
    radii = [1.0, 1.4, 2.0, 4.0, 8.0, 16.0]
    values = [M ** 3 for M in radii]
    fit = growth_fit((radii, values))
    assert fit.s == pytest.approx(3.0, abs=1e-8)


def test_growth_fit_needs_enough_samples():
    with pytest.raises(ValueError):
        growth_fit(([2.0, 4.0, 8.0], [1.0, 2.0, 3.0]))


def test_growth_fit_degenerate_design():
    radii = [2.0, 2.0, 4.0, 4.0]
    values = [4.0, 4.0, 16.0, 16.0]
    with pytest.raises(DegenerateFit):
        growth_fit((radii, values))


# ---------------------------------------------------------------------------
# envelope
# ---------------------------------------------------------------------------

def test_envelope_rank8_instance():
    env = shift_bound_envelope(n=2, k=8, m=4, s_table={2: 4.0, 4: 4.0},
                               indices=(0, 2, 4))
    by_i = {e.split_index: e for e in env.entries}
    assert by_i[0].shift_exp == 8
    assert by_i[0].regime == "poly" and by_i[0].radius_exp == pytest.approx(4.0)
    assert by_i[2].shift_exp == 6
    assert by_i[2].regime == "log" and by_i[2].log_power == 1
    assert by_i[4].shift_exp == 4
    assert by_i[4].regime == "log"          # k = 2m keeps the log factor
    assert any("log(M)" in note for note in env.notes)


def test_envelope_rank4_diagonal_instance():
    env = shift_bound_envelope(n=2, k=4, m=2, s_table={1: 0.0, 2: 0.0},
                               indices=(0, 1, 2))
    by_i = {e.split_index: e for e in env.entries}
    # s(2) = 0 = 2i at i = 0 sits on the logarithmic boundary of the
    # trichotomy; s(1) = 0 < 2 gives the convergent entry with c^-3.
    assert by_i[0].shift_exp == 4 and by_i[0].regime == "log"
    assert by_i[1].shift_exp == 3 and by_i[1].regime == "constant"
    assert by_i[2].shift_exp == 2 and by_i[2].regime == "log"


def test_envelope_boundary_half_rank():
    # k = 2m sits exactly on the logarithmic boundary of the i = m entry.
    env = shift_bound_envelope(n=1, k=4, m=2, s_table={1: 0.0, 2: 0.0})
    last = [e for e in env.entries if e.split_index == 2][0]
    assert last.regime == "log"
    below = shift_bound_envelope(n=1, k=3, m=2, s_table={1: 0.0, 2: 0.0})
    assert [e for e in below.entries if e.split_index == 2][0].regime == "constant"


def test_envelope_rank_above_double_m():
    env = shift_bound_envelope(n=2, k=8, m=2, s_table={1: 4.0, 2: 4.0})
    last = [e for e in env.entries if e.split_index == 2][0]
    assert last.regime == "poly"
    assert last.radius_exp == pytest.approx(4.0)     # M^(k - 2m)
    assert not env.notes


def test_envelope_shift_exponents_decrease_by_n_minus_one():
    env = shift_bound_envelope(n=3, k=12, m=3, s_table={1: 2.0, 2: 2.0, 3: 2.0})
    exps = [e.shift_exp for e in env.entries]
    assert exps[0] == 9
    diffs = [a - b for a, b in zip(exps, exps[1:])]
    assert all(d == 2 for d in diffs)       # n - 1 per unit step in i
    flat = shift_bound_envelope(n=1, k=4, m=3, s_table={1: 0.0, 2: 0.0, 3: 0.0})
    assert {e.shift_exp for e in flat.entries} == {3}   # constant when n = 1


def test_envelope_missing_exponent():
    with pytest.raises(MissingExponent):
        shift_bound_envelope(n=2, k=8, m=4, s_table={4: 4.0})


def test_envelope_shape_and_active_index():
    env = shift_bound_envelope(n=2, k=8, m=4, s_table={2: 4.0, 4: 4.0},
                               indices=(0, 2, 4))
    assert env.active_index(1e4, 2.0) == 0          # steepest c decay wins
    assert env.active_index(1.001, 1e9) in (2, 4)   # M growth prefers log terms
    value = env.shape_value(10.0, 4.0)
    assert value == pytest.approx(min(e.shape_value(10.0, 4.0) for e in env.entries))


# ---------------------------------------------------------------------------
# DMT lines
# ---------------------------------------------------------------------------

def test_ml_line_rank8_instances():
    line = dmt_ml_bound(8, 4, 8, 2)
    assert line.segments == ((Fraction(8), Fraction(-5)),)
    line2 = dmt_ml_bound(6, 0, 8, 2)
    assert line2.segments == ((Fraction(6), Fraction(-3)),)


def test_ml_line_intercept_is_a():
    for a, b, k, T in ((3, 1, 4, 2), (5, 0, 6, 3), (2.5, 1.5, 8, 2)):
        assert dmt_ml_bound(a, b, k, T).evaluate(0.0) == pytest.approx(a)


def test_naive_line_instances():
    line = dmt_naive_bound(4, 8, 2)
    assert line.segments == ((Fraction(4), Fraction(-2)),)
    for n_t, n_r in ((2, 2), (2, 4)):
        a = n_t * n_r - 1
        curve = dmt_naive_bound(a, 2 * n_t, n_t)
        assert curve.segments == ((Fraction(a), Fraction(-a)),)


def test_naive_zero_crossing():
    line = dmt_naive_bound(4, 8, 2)
    assert line.evaluate(2.0) == 0.0
    assert line.zero_crossing() == pytest.approx(2.0)


def test_ml_with_zero_b_equals_naive():
    for a, k, T in ((4, 8, 2), (3, 4, 2), (7, 6, 3)):
        assert dmt_ml_bound(a, 0, k, T).segments == dmt_naive_bound(a, k, T).segments


def test_envelope_matches_optimal_interpolation():
    env = dmt_envelope([dmt_ml_bound(8, 4, 8, 2), dmt_ml_bound(6, 0, 8, 2)])
    assert [env.evaluate(r) for r in (0.0, 1.0, 2.0)] == [8.0, 3.0, 0.0]

    def optimal_interp(r):
        # piecewise-linear through (0, 8), (1, 3), (2, 0)
        if r <= 1.0:
            return 8.0 - 5.0 * r
        return 3.0 - 3.0 * (r - 1.0)

    grid = [0.01 * j for j in range(201)]
    for r in grid:
        assert abs(env.evaluate(r) - max(0.0, optimal_interp(r))) <= 1e-12


def test_envelope_idempotent_and_commutative():
    a = dmt_ml_bound(8, 4, 8, 2)
    b = dmt_ml_bound(6, 0, 8, 2)
    e1 = dmt_envelope([a, b])
    e2 = dmt_envelope([b, a])
    e3 = dmt_envelope([e1, a, b])
    assert e1.segments == e2.segments == e3.segments


def test_single_curve_envelope_is_identity():
    a = dmt_ml_bound(8, 4, 8, 2)
    assert dmt_envelope([a]).segments == a.segments


def test_curve_serialization(tmp_path):
    curve = dmt_ml_bound(8, 4, 8, 2)
    doc = curve.to_json_dict()
    assert doc["segments"] == [{"intercept": [8, 1], "slope": [-5, 1]}]
    text = curve.to_csv([0.0, 0.5, 1.0, 1.5, 2.0])
    rows = text.strip().split("\n")
    assert rows[0] == "r,d"
    assert [float(r.split(",")[1]) for r in rows[1:]] == [8.0, 5.5, 3.0, 0.5, 0.0]


def test_full_multiplexing_applicable():
    # A full lattice in M_2x2(C) has rank 2nT = 8; with n_r = 6 > nT + 1 = 5
    # the bound applies and gives 6 (1 - r/2).
    curve = full_multiplexing_bound(n=2, T=2, n_r=6, k=8)
    assert curve is not None
    assert curve.segments == ((Fraction(6), Fraction(-3)),)
    assert curve.evaluate(2.0) == 0.0                          # r = n


def test_full_multiplexing_not_applicable():
    assert full_multiplexing_bound(n=2, T=2, n_r=5, k=8) is None     # needs strict >
    assert full_multiplexing_bound(n=2, T=2, n_r=6, k=16) is None    # not full rank


# ---------------------------------------------------------------------------
# error bound and thresholds
# ---------------------------------------------------------------------------

def test_pe_bound_examples():
    assert pe_upper_bound(1.0, 8, 4, 1.0, 10.0) == pytest.approx(1e-8, rel=1e-12)
    assert pe_upper_bound(1.0, 8, 4, 2.0, 10.0) == pytest.approx(4.096e-5, rel=1e-12)
    base = pe_upper_bound(2.0, 8, 4, 1.5, 20.0)
    assert pe_upper_bound(2.0, 8, 4, 3.0, 20.0) == pytest.approx(base * 2 ** 12,
                                                                 rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(rho1=st.floats(1.0, 100.0), rho2=st.floats(1.0, 100.0),
       M1=st.floats(0.5, 10.0), M2=st.floats(0.5, 10.0))
def test_pe_bound_monotonicity(rho1, rho2, M1, M2):
    lo_rho, hi_rho = sorted((rho1, rho2))
    lo_M, hi_M = sorted((M1, M2))
    assert pe_upper_bound(1.0, 4, 2, 2.0, hi_rho) <= pe_upper_bound(1.0, 4, 2, 2.0, lo_rho)
    assert pe_upper_bound(1.0, 4, 2, lo_M, 10.0) <= pe_upper_bound(1.0, 4, 2, hi_M, 10.0)


def test_threshold_exponents_exact():
    assert snr_threshold_exponent(8, 4) == Fraction(3, 2)
    assert snr_threshold_exponent(4, 0) == Fraction(1)
    assert snr_threshold_exponent(5, 0) == Fraction(1)


def test_threshold_value():
    assert snr_threshold(8, 4, 4.0) == pytest.approx(8.0, rel=1e-12)
    assert snr_threshold(4, 0, 7.0) == pytest.approx(7.0, rel=1e-12)


def test_threshold_requires_positive_d():
    with pytest.raises(ValueError):
        snr_threshold_exponent(0, 4)
