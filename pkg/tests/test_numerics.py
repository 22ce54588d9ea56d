import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from rsembed.numerics import (RngStream, SignedLogReal, log_det_signed, log_factorial,
                              sample_haar_unitary, signed_log_sum)

finite = st.floats(min_value=-1e300, max_value=1e300, allow_nan=False, allow_infinity=False)


def cofactor_det(a):
    """O(n!) Laplace expansion along the first row."""
    n = len(a)
    if n == 1:
        return a[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in a[1:]]
        total += (-1) ** j * a[0][j] * cofactor_det(minor)
    return total


class TestSignedLogReal:
    def test_sum_of_two(self):
        r = signed_log_sum([SignedLogReal(1, math.log(2)), SignedLogReal(1, math.log(3))])
        assert r.sign == 1
        assert r.log_mag == pytest.approx(math.log(5), rel=1e-15)

    def test_exact_cancellation(self):
        r = signed_log_sum([SignedLogReal(1, math.log(7)), SignedLogReal(-1, math.log(7))])
        assert r.sign == 0
        assert r.is_zero

    def test_dominant_term_no_overflow(self):
        r = signed_log_sum([SignedLogReal(1, 1000.0), SignedLogReal(1, 0.0)])
        assert r.sign == 1
        assert r.log_mag == 1000.0 + math.log1p(math.exp(-1000))

    def test_all_zero_terms(self):
        assert signed_log_sum([SignedLogReal.zero(), SignedLogReal.zero()]).is_zero

    def test_empty_is_contract_violation(self):
        with pytest.raises(ValueError):
            signed_log_sum([])

    def test_zero_ignores_log_mag(self):
        assert SignedLogReal(0, 5.0).to_real() == 0.0

    @given(st.sampled_from([-1.0, 1.0]), st.floats(min_value=-30, max_value=30))
    def test_round_trip(self, sign, exponent):
        x = sign * 10.0 ** exponent
        back = SignedLogReal.from_real(x).to_real()
        assert abs(back - x) <= 1e-14 * abs(x)

    def test_round_trip_zero(self):
        assert SignedLogReal.from_real(0.0).to_real() == 0.0

    @given(finite)
    def test_round_trip_full_range(self, x):
        # a float log carries |ln x| * eps absolute error, i.e. that much relative error in x
        back = SignedLogReal.from_real(x).to_real()
        if x != 0 and abs(x) > 1e-300:
            bound = 1e-14 + 2 * abs(math.log(abs(x))) * np.finfo(float).eps
            assert abs(back - x) <= bound * abs(x)

    @settings(max_examples=200)
    @given(st.lists(st.tuples(st.sampled_from([-1, 1]), st.floats(-50, 50)), min_size=1, max_size=8),
           st.randoms(use_true_random=False))
    def test_permutation_invariant(self, raw, rnd):
        terms = [SignedLogReal(s, l) for s, l in raw]
        shuffled = terms[:]
        rnd.shuffle(shuffled)
        a, b = signed_log_sum(terms), signed_log_sum(shuffled)
        exact = math.fsum(t.to_real() for t in terms)
        scale = max(abs(t.to_real()) for t in terms)
        if abs(exact) <= 1e-12 * scale:
            return  # cancellation at working precision: sign is not meaningful
        assert a.sign == b.sign
        assert a.log_mag == pytest.approx(b.log_mag, abs=1e-13)

    def test_mul_div(self):
        a, b = SignedLogReal.from_real(-3.0), SignedLogReal.from_real(4.0)
        assert (a * b).to_real() == pytest.approx(-12.0)
        assert (a / b).to_real() == pytest.approx(-0.75)
        assert (a * SignedLogReal.zero()).is_zero


class TestLogFactorial:
    def test_small(self):
        assert log_factorial(0) == 0.0
        assert log_factorial(1) == 0.0
        assert log_factorial(5) == pytest.approx(math.log(120), rel=1e-15)
        assert log_factorial(5) == pytest.approx(4.787491743, abs=1e-9)

    @pytest.mark.parametrize("n", [20, 170, 300, 500])
    def test_big_integer_oracle(self, n):
        with mpmath.workdps(40):
            want = float(mpmath.log(mpmath.mpf(math.factorial(n))))
        assert log_factorial(n) == pytest.approx(want, rel=1e-12)

    def test_successive_differences(self):
        for n in range(1, 201):
            assert abs((log_factorial(n) - log_factorial(n - 1)) - math.log(n)) <= 1e-13 * math.log(n)

    def test_large_uses_lgamma(self):
        assert log_factorial(5000) == pytest.approx(math.lgamma(5001), rel=1e-14)


class TestRngStream:
    def test_same_key_same_draws(self):
        a = RngStream(7, 3).generator().standard_normal(5)
        b = RngStream(7, 3).generator().standard_normal(5)
        assert np.array_equal(a, b)

    def test_distinct_streams_uncorrelated(self):
        a = RngStream(7, 1).generator().standard_normal(20000)
        b = RngStream(7, 2).generator().standard_normal(20000)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / math.sqrt(20000)

    def test_children_distinct(self):
        base = RngStream(7, 1)
        assert not np.array_equal(base.child(0).generator().random(4), base.child(1).generator().random(4))

    def test_rejects_negative_seed(self):
        with pytest.raises(ValueError):
            RngStream(-1)


class TestHaar:
    def test_m1_unit_modulus(self):
        u = sample_haar_unitary(1, RngStream(1))
        assert u.shape == (1, 1)
        assert abs(abs(u[0, 0]) - 1) < 1e-14

    def test_m1_phase_uniform(self):
        ph = np.angle(sample_haar_unitary(1, RngStream(2), size=20000)[:, 0, 0]) % (2 * np.pi)
        assert stats.kstest(ph, stats.uniform(0, 2 * np.pi).cdf).pvalue > 0.01

    @pytest.mark.parametrize("seed", range(5))
    def test_unitary(self, seed):
        u = sample_haar_unitary(4, RngStream(seed))
        assert np.abs(u.conj().T @ u - np.eye(4)).max() <= 1e-12

    def test_second_moment(self):
        u = sample_haar_unitary(4, RngStream(3), size=100_000)
        x = np.abs(u[:, 0, 0]) ** 2
        se = x.std(ddof=1) / math.sqrt(x.size)
        assert abs(x.mean() - 0.25) <= 3 * se

    def test_uncorrected_qr_is_not_haar(self):
        gen = np.random.default_rng(0)
        z = (gen.standard_normal((20000, 2, 2)) + 1j * gen.standard_normal((20000, 2, 2))) / math.sqrt(2)
        q, _ = np.linalg.qr(z)
        fixed = sample_haar_unitary(2, RngStream(0), size=20000)
        # Haar: the phase of U_11 is uniform; LAPACK's QR pins it
        assert stats.kstest(np.angle(fixed[:, 0, 0]), stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 0.01
        assert stats.kstest(np.angle(q[:, 0, 0]), stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue < 1e-6

    def test_left_invariance(self):
        v = sample_haar_unitary(3, RngStream(99))
        u1 = sample_haar_unitary(3, RngStream(4), size=10000)
        u2 = sample_haar_unitary(3, RngStream(5), size=10000)
        tr_vu = np.trace(v @ u1, axis1=1, axis2=2)
        tr_u = np.trace(u2, axis1=1, axis2=2)
        assert stats.ks_2samp(tr_vu.real, tr_u.real).pvalue > 0.01
        assert stats.ks_2samp(tr_vu.imag, tr_u.imag).pvalue > 0.01


class TestLogDet:
    def test_identity(self):
        r = log_det_signed(np.eye(3))
        assert r.sign == 1 and r.log_mag == pytest.approx(0.0, abs=1e-15)

    def test_diagonal(self):
        r = log_det_signed(np.diag([2.0, 3.0, 4.0]))
        assert r.sign == 1 and r.log_mag == pytest.approx(math.log(24), rel=1e-14)

    def test_negative_real(self):
        r = log_det_signed(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert r.sign == -1 and r.log_mag == pytest.approx(0.0, abs=1e-15)

    def test_complex_against_cofactor_oracle(self, gen):
        a = (gen.standard_normal((5, 5)) + 1j * gen.standard_normal((5, 5))) / math.sqrt(2)
        want = cofactor_det(a.tolist())
        logmag, phase = log_det_signed(a)
        got = math.exp(logmag) * complex(math.cos(phase), math.sin(phase))
        assert abs(got - want) <= 1e-10 * abs(want)

    def test_zero_row(self):
        assert log_det_signed(np.array([[1.0, 2.0], [0.0, 0.0]])).is_zero

    def test_singular(self):
        r = log_det_signed(np.array([[1.0, 2.0], [2.0, 4.0]]))
        assert r.is_zero or r.log_mag < -30

    def test_wide_dynamic_range(self):
        a = np.diag([1e200, 1e200, 1e-200])
        r = log_det_signed(a)
        assert r.sign == 1 and r.log_mag == pytest.approx(200 * math.log(10), rel=1e-13)
