import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detsums.codes import gaussian_diagonal, golden_code
from detsums.errors import HypothesisViolated, SingularPoint
from detsums.lattice import build_lattice, rescale_lattice
from detsums.sums import (SumCurve, SumSpec, convergence_probe, dyadic_bound,
                          evaluate_sum, inverse_det_sum, norm_det_sum,
                          shifted_det_sum, shifted_vs_mixed_bound, sum_curve)

from conftest import box_scan_sum

SQRT2 = math.sqrt(2.0)


# ---------------------------------------------------------------------------
# small exact examples
# ---------------------------------------------------------------------------

def test_inverse_det_unit_ball(zi_lattice):
    assert inverse_det_sum(zi_lattice, 2, 1.0) == pytest.approx(4.0, rel=1e-12)


def test_inverse_det_sqrt2_ball(zi_lattice):
    # four unit points (term 1) plus four points with |det|^2 = 2 (term 1/2)
    assert inverse_det_sum(zi_lattice, 2, SQRT2) == pytest.approx(6.0, rel=1e-12)


def test_shifted_zero_shift_counts_points(zi_lattice):
    assert shifted_det_sum(zi_lattice, 3, 0.0, 2.0) == pytest.approx(12.0, rel=1e-12)


def test_shifted_unit_ball(zi_lattice):
    assert shifted_det_sum(zi_lattice, 2, 1.0, 1.0) == pytest.approx(1.0, rel=1e-12)


def test_mixed_i_equals_m(zi_lattice):
    assert norm_det_sum(zi_lattice, 2, 2, 1.0) == pytest.approx(4.0, rel=1e-12)


def test_mixed_i_zero_is_squared_det_sum(zi_lattice):
    # At i = 0 the mixed denominator is det(X X*)^m = |det X|^(2m), so the
    # value coincides with the inverse-determinant sum at exponent 2m.
    got = norm_det_sum(zi_lattice, 2, 0, SQRT2)
    assert got == pytest.approx(5.0, rel=1e-12)
    assert got == pytest.approx(inverse_det_sum(zi_lattice, 4, SQRT2), rel=1e-12)


# ---------------------------------------------------------------------------
# oracle equivalence
# ---------------------------------------------------------------------------

def _oracle_terms(family, m, c=0.0, i=None):
    if family == "approximate":
        def term(X, norm_sq):
            det = abs(np.linalg.det(X))
            if det * det <= 1e-12 * (norm_sq / X.shape[0]) ** X.shape[0]:
                return None
            return det ** (-m)
        return term
    if family == "shifted":
        def term(X, norm_sq):
            n = X.shape[0]
            return float(np.linalg.det(np.eye(n) + c * (X @ X.conj().T)).real) ** (-m)
        return term

    def term(X, norm_sq):
        n = X.shape[0]
        det_g = float(np.linalg.det(X @ X.conj().T).real)
        out = norm_sq ** (-float(i)) if i > 0 else 1.0
        if i < m:
            if det_g <= 1e-12 * (norm_sq / n) ** n:
                return None
            out *= det_g ** (-(m - i))
        return out
    return term


@pytest.mark.parametrize("family,m,c,i", [
    ("approximate", 2, 0.0, None),
    ("shifted", 2, 0.5, None),
    ("shifted", 1, 2.0, None),
    ("mixed", 2, 0.0, 0),
    ("mixed", 2, 0.0, 1),
    ("mixed", 2, 0.0, 2),
])
def test_families_match_box_scan_on_golden(golden_lattice, family, m, c, i):
    spec = SumSpec(family=family, m=m, c=c, i=i)
    mine, _ = evaluate_sum(golden_lattice, spec, 2.0)
    oracle = box_scan_sum(golden_lattice, 2.0, _oracle_terms(family, m, c, i))
    assert mine == pytest.approx(oracle, rel=1e-9)


def test_golden_shifted_large_c_matches_box_scan(golden_lattice):
    mine = shifted_det_sum(golden_lattice, 4, 10.0, 2.0)
    oracle = box_scan_sum(golden_lattice, 2.0, _oracle_terms("shifted", 4, c=10.0))
    assert mine == pytest.approx(oracle, rel=1e-9)


def test_shifted_limit_approaches_inverse_det(golden_lattice):
    # c^(n m) * shifted sum converges to the inverse-determinant sum with
    # exponent 2m, monotonically from below.
    n, m, M = 2, 4, 2.0
    target = inverse_det_sum(golden_lattice, 2 * m, M)
    ratios = []
    for c in (1e2, 1e4, 1e6):
        val = shifted_det_sum(golden_lattice, m, c, M) * c ** (n * m)
        ratios.append(val / target)
    assert ratios[0] < ratios[1] < ratios[2] <= 1.0 + 1e-9
    assert abs(ratios[1] - 1.0) < 0.05
    assert abs(ratios[2] - 1.0) < 0.05


# ---------------------------------------------------------------------------
# structural properties
# ---------------------------------------------------------------------------

def test_monotone_in_radius(zi_lattice):
    vals = [shifted_det_sum(zi_lattice, 2, 1.0, M) for M in (1.0, 2.0, 3.0, 4.0)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_strictly_decreasing_in_shift(zi_lattice):
    vals = [shifted_det_sum(zi_lattice, 2, c, 2.0) for c in (0.0, 0.5, 1.0, 2.0)]
    assert all(b < a for a, b in zip(vals, vals[1:]))


@settings(max_examples=20, deadline=None)
@given(beta=st.floats(0.5, 2.0), c=st.floats(0.1, 5.0))
def test_scaling_identity(beta, c):
    lat = gaussian_diagonal(1)
    scaled = rescale_lattice(lat, beta)
    lhs = shifted_det_sum(scaled, 2, c, beta * 2.0)
    rhs = shifted_det_sum(lat, 2, c * beta * beta, 2.0)
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_dedup_signs_matches_default(golden_lattice):
    full = shifted_det_sum(golden_lattice, 4, 1.0, 2.0)
    half = shifted_det_sum(golden_lattice, 4, 1.0, 2.0, dedup_signs=True)
    assert half == pytest.approx(full, rel=1e-12)


def test_partition_invariance(golden_lattice):
    base = shifted_det_sum(golden_lattice, 4, 1.0, 2.0)
    for jobs in (2, 3, 5):
        split = shifted_det_sum(golden_lattice, 4, 1.0, 2.0, n_jobs=jobs)
        assert split == pytest.approx(base, rel=1e-9)


def test_partitioned_curve_matches_sequential(golden_lattice):
    spec = SumSpec(family="shifted", m=4, c=1.0)
    radii = [1.0, 2.0, 3.0]
    base = sum_curve(golden_lattice, spec, radii)
    split = sum_curve(golden_lattice, spec, radii, n_jobs=3)
    assert split.point_counts == base.point_counts
    for a, b in zip(split.values, base.values):
        assert a == pytest.approx(b, rel=1e-9)


def test_order_robustness(golden_lattice):
    # Summing the same terms sorted by magnitude agrees with stream order.
    from detsums.lattice import coefficient_blocks, realize_block
    from detsums.linalg import shifted_det_batch
    terms = []
    for coeffs, _ in coefficient_blocks(golden_lattice, 2.0):
        terms.extend(shifted_det_batch(realize_block(golden_lattice, coeffs), 1.0) ** -4.0)
    sorted_sum = math.fsum(sorted(terms))
    stream = shifted_det_sum(golden_lattice, 4, 1.0, 2.0)
    assert stream == pytest.approx(sorted_sum, rel=1e-9)


def test_singular_point_raises():
    lat = gaussian_diagonal(2)
    with pytest.raises(SingularPoint):
        inverse_det_sum(lat, 2, 1.0)
    with pytest.raises(SingularPoint):
        norm_det_sum(lat, 2, 1, 1.0)


def test_singular_skip_matches_oracle():
    lat = gaussian_diagonal(2)
    mine = inverse_det_sum(lat, 2, 2.0, skip_singular=True)
    oracle = box_scan_sum(lat, 2.0, _oracle_terms("approximate", 2), skip_singular=True)
    assert mine == pytest.approx(oracle, rel=1e-9)


def test_mixed_i_equals_m_allows_singular_points():
    lat = gaussian_diagonal(2)
    got = norm_det_sum(lat, 2, 2, 1.0)
    # eight nonzero points of norm 1: each contributes 1.
    assert got == pytest.approx(8.0, rel=1e-12)


# ---------------------------------------------------------------------------
# shifted vs mixed domination
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("i", [0, 1, 2])
def test_shifted_dominated_by_mixed_zi(zi_lattice, i):
    check = shifted_vs_mixed_bound(zi_lattice, 2, 1.0, 2.0, i)
    assert check.holds
    assert check.lhs <= check.rhs * (1 + 1e-9)


@pytest.mark.parametrize("i", [0, 1, 2, 3, 4])
def test_shifted_dominated_by_mixed_golden(golden_lattice, i):
    check = shifted_vs_mixed_bound(golden_lattice, 4, 100.0, 2.0, i)
    assert check.holds


def test_mixed_bound_zero_shift_boundary():
    # At c = 0 every shifted term is 1, so lhs counts points; the shift
    # exponent i + n(m - i) equals m > 0 at i = m, so the scaled rhs is
    # infinite and the bound holds vacuously.  The underlying norm-sum
    # comparison |L(1)| <= sum ||X||^-2m still holds with equality on a
    # unit-norm shell.
    lat = gaussian_diagonal(1)
    check = shifted_vs_mixed_bound(lat, 2, 0.0, 1.0, 2)
    assert check.c_exponent == 2
    assert check.lhs == pytest.approx(4.0)
    assert math.isinf(check.rhs)
    assert check.holds
    assert check.lhs <= norm_det_sum(lat, 2, 2, 1.0) * (1 + 1e-12)


# ---------------------------------------------------------------------------
# dyadic summing
# ---------------------------------------------------------------------------

def test_dyadic_convergent_regime():
    xs = np.arange(1, 1001, dtype=float)
    fs = np.ones(1000)
    res = dyadic_bound(xs, fs, K=1.0, s=1.0, t=2.0)
    exact = math.fsum(1.0 / x ** 2 for x in xs)
    assert res.weighted_sum == pytest.approx(exact, rel=1e-12)
    assert res.weighted_sum == pytest.approx(1.6439345666815615, rel=1e-12)
    assert res.regime == "convergent"
    # proof constant: 2^t K sum_{j=1..10} 2^(s-t)j = 4 (1 - 2^-10)
    assert res.proof_bound == pytest.approx(4.0 * (1 - 2.0 ** -10), rel=1e-12)
    assert res.weighted_sum <= res.proof_bound


def test_dyadic_logarithmic_regime():
    xs = np.arange(1, 1001, dtype=float)
    fs = np.ones(1000)
    res = dyadic_bound(xs, fs, K=1.0, s=1.0, t=1.0)
    harmonic = math.fsum(1.0 / x for x in xs)
    assert res.weighted_sum == pytest.approx(harmonic, rel=1e-12)
    assert harmonic == pytest.approx(math.log(1000) + 0.5772, abs=0.01)
    assert res.regime == "logarithmic"
    assert res.proof_bound == pytest.approx(2.0 * 10, rel=1e-12)
    assert res.weighted_sum <= res.proof_bound


def test_dyadic_polynomial_regime():
    xs = np.arange(1, 1001, dtype=float)
    fs = np.ones(1000)
    res = dyadic_bound(xs, fs, K=1.0, s=1.0, t=0.0)
    assert res.weighted_sum == pytest.approx(1000.0)
    assert res.regime == "polynomial"
    assert res.weighted_sum <= res.proof_bound


def test_dyadic_hypothesis_violation():
    xs = np.arange(1, 101, dtype=float)
    fs = xs ** 2          # prefix sums grow like M^3, violating K M^1
    with pytest.raises(HypothesisViolated):
        dyadic_bound(xs, fs, K=1.0, s=1.0, t=2.0)


def test_dyadic_bound_on_lattice_shells(zi_lattice):
    # Reduction to lattices: apply the dyadic machinery to the shell counts
    # f(x) = #{X : ||X||_F = x}.  Counts obey |L(M)| <= 8 M^2, so the
    # norm-weighted sum over the lattice is bounded by the proof constant.
    from collections import defaultdict
    from detsums.lattice import enumerate_points
    M = 16.0
    shells = defaultdict(int)
    for p in enumerate_points(zi_lattice, M):
        shells[round(p.norm_f, 12)] += 1
    xs = np.array(sorted(shells))
    fs = np.array([float(shells[x]) for x in xs])
    res = dyadic_bound(xs, fs, K=8.0, s=2.0, t=4.0)
    direct = math.fsum(1.0 / p.norm_f ** 4 for p in enumerate_points(zi_lattice, M))
    assert res.regime == "convergent"
    assert res.weighted_sum == pytest.approx(direct, rel=1e-9)
    assert res.weighted_sum <= res.proof_bound


# ---------------------------------------------------------------------------
# convergence probe
# ---------------------------------------------------------------------------

def test_probe_saturates_above_half_rank(zi_lattice):
    curve, saturated = convergence_probe(zi_lattice, 2.0, 1.0,
                                         [2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    assert saturated
    assert curve.values[-1] > 0


def test_probe_logarithmic_at_half_rank(zi_lattice):
    curve, saturated = convergence_probe(zi_lattice, 1.0, 1.0,
                                         [2.0, 4.0, 8.0, 16.0, 32.0, 64.0])
    assert not saturated
    increment = curve.values[-1] - curve.values[-2]
    assert increment > 0.05 * curve.values[-1]


def test_probe_zero_shift_counts(zi_lattice):
    curve, saturated = convergence_probe(zi_lattice, 2.0, 0.0,
                                         [2.0, 4.0, 8.0, 16.0])
    assert not saturated
    assert curve.values == [float(c) for c in curve.point_counts]


def test_probe_requires_unit_min_norm():
    lat = rescale_lattice(gaussian_diagonal(1), 0.5)
    with pytest.raises(HypothesisViolated):
        convergence_probe(lat, 2.0, 1.0, [2.0, 4.0])


def test_probe_requires_dyadic_grid(zi_lattice):
    with pytest.raises(ValueError):
        convergence_probe(zi_lattice, 2.0, 1.0, [2.0, 5.0])


# ---------------------------------------------------------------------------
# curves and serialization
# ---------------------------------------------------------------------------

def test_sum_curve_matches_pointwise(zi_lattice):
    spec = SumSpec(family="shifted", m=2, c=1.0)
    radii = [1.0, 2.0, 4.0]
    curve = sum_curve(zi_lattice, spec, radii)
    for M, value, count in zip(curve.radii, curve.values, curve.point_counts):
        direct, npts = evaluate_sum(zi_lattice, spec, M)
        assert value == pytest.approx(direct, rel=1e-12)
        assert count == npts


def test_sum_curve_csv_and_json_round_trip(zi_lattice, tmp_path):
    spec = SumSpec(family="shifted", m=2, c=1.0)
    curve = sum_curve(zi_lattice, spec, [1.0, 2.0])
    text = curve.to_csv()
    lines = text.strip().split("\n")
    assert lines[0] == "M,value,pointCount"
    assert len(lines) == 3
    again = SumCurve.from_json_dict(curve.to_json_dict())
    assert again.values == curve.values
    assert again.point_counts == curve.point_counts
    path = tmp_path / "curve.csv"
    curve.to_csv(path)
    assert path.read_text().startswith("M,value")


def test_sum_spec_validation():
    with pytest.raises(ValueError):
        SumSpec(family="nope", m=2)
    with pytest.raises(ValueError):
        SumSpec(family="mixed", m=2)
    with pytest.raises(ValueError):
        SumSpec(family="mixed", m=2, i=3)
    with pytest.raises(ValueError):
        SumSpec(family="shifted", m=2, c=-1.0)


def test_approximate_requires_square():
    lat = build_lattice([np.array([[1.0 + 0j, 0.0]]), np.array([[1j, 0.0]])])
    with pytest.raises(ValueError):
        inverse_det_sum(lat, 2, 1.0)
