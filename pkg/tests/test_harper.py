import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab import harper
from reslab.coeffs import CombinedCoefficients, zeta_source
from reslab.errors import ConfigurationError, InvariantViolation, RangeError, ResourceError, ValidationError
from reslab.leval import dyadic, grid_points, zeta_half_line

BIG_T = math.exp(300)


@pytest.fixture(scope="module")
def big_ladder():
    return harper.build_ladder(BIG_T, 3.0)


@pytest.fixture(scope="module")
def pair(zeta, chi3):
    return CombinedCoefficients([zeta, chi3])


class TestLadder:
    def test_example(self, big_ladder):
        assert big_ladder.J == 5
        assert [big_ladder.truncation(i) for i in range(6)] == [24, 7, 2, 0, 0, 0]
        assert big_ladder.Z(-1) == 1
        assert big_ladder.log_Z(2) == pytest.approx(math.e**2 * math.log(3) ** 2)

    def test_ell_and_r(self, big_ladder):
        lsq = math.log(3) ** 2
        assert big_ladder.ell(0) == pytest.approx(300 / (100 * lsq))
        assert big_ladder.ell(2) / big_ladder.ell(1) == pytest.approx(math.exp(-1.25))
        assert big_ladder.r(1) == pytest.approx(300 / (math.e * math.log(3) ** 2.1))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e3, 1e300), st.floats(2.8, 50), st.floats(0.1, 3))
    def test_certificate(self, T, L, C):
        try:
            lad = harper.build_ladder(T, L, C)
        except ConfigurationError:
            return
        assert lad.length_certificate() <= 0.5
        assert lad.log_Z(lad.J) >= 2 * C * math.sqrt(math.log(T) * math.log(math.log(T)) * math.log(math.log(math.log(T)))) or lad.J == 0
        if lad.J > 0:
            assert lad.log_Z(lad.J - 1) < 2 * C * math.sqrt(math.log(T) * math.log(math.log(T)) * math.log(math.log(math.log(T))))

    def test_validation(self):
        with pytest.raises(ValidationError):
            harper.build_ladder(100, 3.0)
        with pytest.raises(ValidationError):
            harper.build_ladder(1e5, 2.0)

    def test_block_cap(self, big_ladder):
        with pytest.raises(ResourceError):
            big_ladder.block_primes(5)


class TestWeight:
    def test_values(self):
        assert harper.w_Z(1.0, 100.0) == 1
        assert harper.w_Z(100.0, 100.0) == 0
        assert harper.w_Z(101.0, 100.0) == 0
        assert harper.w_Z(10.0, 100.0) == pytest.approx(math.exp(-0.25) * 0.5)

    def test_monotone(self):
        n = np.arange(1, 1000, dtype=float)
        w = harper.w_Z(n, 1000.0)
        assert np.all(np.diff(w) < 0) and np.all(w > 0)


class TestExpansion:
    @pytest.mark.parametrize("i", [0, 1])
    def test_identity(self, big_ladder, pair, rng, i):
        block = harper.make_block(big_ladder, pair, i, big_ladder.J)
        table = harper.truncated_exp_table(block)
        assert len(table) == harper.expansion_size(len(block.primes), block.K)
        ts = rng.uniform(0, 1e5, 1000)
        P = harper.block_poly(block, ts)
        N = harper.truncated_exp(table, ts)
        series = harper.exp_series(P, block.K)
        assert np.max(np.abs(N - series) / np.maximum(1, np.abs(series))) < 1e-12

    def test_grid_paths(self, big_ladder, pair):
        block = harper.make_block(big_ladder, pair, 1, 2)
        table = harper.truncated_exp_table(block)
        t0, h, M = dyadic(5e4), dyadic(0.1), 200
        ts = t0 + h * np.arange(M)
        assert np.allclose(harper.block_poly_grid(block, t0, h, M), harper.block_poly(block, ts), atol=1e-12)
        assert np.allclose(harper.truncated_exp_grid(table, t0, h, M), harper.truncated_exp(table, ts), atol=1e-10)

    def test_omega_bound(self, big_ladder, pair):
        block = harper.make_block(big_ladder, pair, 1, 3)
        table = harper.truncated_exp_table(block)
        assert table.omega.max() == block.K

    def test_term_cap(self, big_ladder, pair):
        block = harper.make_block(big_ladder, pair, 1, 3)
        with pytest.raises(ResourceError):
            harper.truncated_exp_table(block, term_cap=100)

    def test_block_indices(self, big_ladder, pair):
        with pytest.raises(ValidationError):
            harper.make_block(big_ladder, pair, 6, 0)

    def test_variance(self, big_ladder, zeta):
        block = harper.make_block(big_ladder, CombinedCoefficients([zeta]), 1, 5)
        w = harper.w_Z(block.primes, big_ladder.Z(5))
        assert block.variance == pytest.approx(np.sum(w**2 / block.primes))


class TestTaylor:
    @pytest.mark.parametrize("ell", [0.5, 1.0, 2.0, 3.5])
    def test_mpmath_oracle(self, ell, rng):
        mpmath.mp.dps = 40
        K = int(math.floor(10 * ell))
        for _ in range(50):
            z = complex(*rng.uniform(-1, 1, 2))
            P = z / max(abs(z), 1) * ell * 0.999
            N = harper.exp_series(P, K)
            ref = mpmath.nsum(lambda m: mpmath.mpc(P) ** int(m) / mpmath.factorial(int(m)), [0, K])
            assert abs(N - complex(ref)) <= 1e-13 * max(1, abs(ref))
            err = harper.taylor_check(P, ell, N)
            exact = float(abs(mpmath.exp(2 * P.real) - abs(ref) ** 2) / mpmath.exp(2 * P.real))
            # double-precision rounding floors the float value well below the 1e-12 floor
            assert err == pytest.approx(exact, rel=1e-6, abs=1e-13)
            assert err <= harper.taylor_bound(ell) or ell < 1

    def test_outside_disc(self):
        assert harper.taylor_check(3.0, 2.0) is None

    def test_violation(self):
        with pytest.raises(InvariantViolation):
            harper.taylor_check(1.0, 1.0, N=1.0)

    def test_bound_floor(self):
        assert harper.taylor_bound(10) == 1e-12
        assert harper.taylor_bound(1) == pytest.approx(2 * math.exp(-9))


class TestExceptional:
    def test_measure(self):
        assert harper.exceptional_measure(np.array([0.5, 1.5, 3.0, -4.0]), 1.0) == 0.75
        assert harper.exceptional_measure(np.array([]), 1.0) == 0

    def test_moment_bound(self):
        assert harper.moment_bound(1.0, 2.0, 1) == pytest.approx(1 / (4 * math.e))
        assert harper.moment_bound(0.0, 1.0, 3) == 0
        assert harper.moment_bound(1.0, 0.0, 3) == 1
        assert harper.moment_bound(1e6, 1.0, 300) == math.inf
        with pytest.raises(ValidationError):
            harper.moment_bound(1.0, 1.0, 0)

    def test_paper_k(self, big_ladder):
        assert harper.paper_k(big_ladder, 0) == math.floor(300 / math.log(3) ** 2)
        with pytest.raises(RangeError):
            harper.paper_k(big_ladder, 6)

    def test_moment_inequality(self, pair):
        lad = harper.build_ladder(1e5, 5.0, 1.5)
        block = harper.make_block(lad, pair, 0, 0)
        pts = grid_points(dyadic(1e5), dyadic(0.02), 1.0)
        P = harper.block_poly_grid(block, pts[0], pts[1] - pts[0], len(pts))
        x = float(block.primes.max())
        k = int(math.log(1e5) // math.log(x))
        lhs, rhs = harper.moment_inequality_check(P, block.variance, k, x, 1e5)
        assert lhs <= rhs
        with pytest.raises(RangeError):
            harper.moment_inequality_check(P, block.variance, k + 5, x, 1e5)


class TestMajorant:
    def test_zeta_low(self, zeta):
        # majorant bounds log|zeta| from above, up to the dropped O(1)
        Z = 200.0
        ts = np.linspace(1e3, 1.1e3, 50)
        logz = np.log(np.abs([zeta_half_line(t) for t in ts]))
        maj = harper.chandee_majorant(zeta, ts, Z, 1e3)
        assert np.all(logz <= maj + 3)

    def test_prime_powers(self, zeta):
        ps, ls = harper._prime_powers(30)
        assert sorted((p**l) for p, l in zip(ps.tolist(), ls.tolist())) == [2, 3, 4, 5, 7, 8, 9, 11, 13, 16, 17, 19, 23, 25, 27, 29]
        with pytest.raises(ValidationError):
            harper.chandee_majorant(zeta, 1.0, 1.5, 1e3)

    def test_prime_power_check(self, zeta, delta):
        chk = harper.prime_power_reduction_check(zeta, 1e6)
        assert chk.by_power[2] == pytest.approx(sum(1 / p for p in range(2, 1001) if all(p % d for d in range(2, p))), rel=1e-12)
        assert chk.value < chk.unweighted
        for Z in (1e3, 1e5, 1e7):
            assert harper.prime_power_reduction_check(zeta, Z).ratio < 3
            assert harper.prime_power_reduction_check(delta, min(Z, 1e5)).ratio < 3
        assert harper.prime_power_reduction_check(zeta, 3).value == 0
