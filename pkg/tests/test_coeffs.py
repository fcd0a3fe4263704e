import math

import numpy as np
import pytest
import sympy

from reslab.arith import character_from_index, sieve_primes
from reslab.coeffs import (
    CombinedCoefficients,
    dirichlet_convolve,
    dirichlet_source,
    fourth_moment_scan,
    gl2_holomorphic_source,
    ingest_coefficients,
    product_coefficients,
    rudnick_sarnak_bound,
    selberg_scan,
    window_sum,
)
from reslab.errors import GapError, ParseError, ValidationError
from reslab.modular import delta_coefficients, eigenform_coefficients, eisenstein_coefficients, normalized_coefficients


def _naive_series_mul(a, b, N):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(N + 1)]


def _delta_product(N):
    # q prod (1 - q^n)^24 by repeated multiplication
    s = [1] + [0] * N
    for n in range(1, N + 1):
        for _ in range(24):
            for k in range(N, n - 1, -1):
                s[k] -= s[k - n]
    return [0] + s[:N]


class TestModular:
    def test_tau_small(self):
        assert delta_coefficients(10)[1:] == [1, -24, 252, -1472, 4830, -6048, -16744, 84480, -113643, -115920]

    def test_tau_against_product(self):
        assert delta_coefficients(120) == _delta_product(120)

    def test_weight16_against_naive_product(self):
        N = 60
        ref = _naive_series_mul(_delta_product(N), eisenstein_coefficients(4, N), N)
        assert eigenform_coefficients(16, N) == ref

    @pytest.mark.parametrize("k", [12, 16, 18, 20, 22, 26])
    def test_multiplicative(self, k):
        c = eigenform_coefficients(k, 200)
        for m, n in [(2, 3), (3, 5), (4, 9), (7, 11), (5, 13)]:
            assert c[m * n] == c[m] * c[n]
        # Hecke relation at p^2
        for p in (2, 3, 5, 7):
            assert c[p * p] == c[p] ** 2 - p ** (k - 1)

    def test_normalized(self):
        lam = normalized_coefficients(12, 5)
        assert lam[2] == pytest.approx(-24 / 2**5.5, rel=1e-15)
        assert lam[2] == pytest.approx(-0.5303300859, abs=1e-10)

    def test_deligne(self):
        for k in (12, 16, 26):
            lam = normalized_coefficients(k, 3000)
            primes = sieve_primes(3000).primes
            assert np.all(np.abs(lam[primes]) <= 2)


class TestSources:
    def test_zeta(self, zeta):
        assert zeta.a(2, 1) == 1 and zeta.a(97, 5) == 1
        primes = sieve_primes(10**4).primes.astype(float)
        euler = np.prod(1 / (1 - primes**-2.0))
        assert euler == pytest.approx(math.pi**2 / 6, abs=1e-4)

    def test_dirichlet(self, chi3):
        assert chi3.a(2, 1) == -1
        assert chi3.a(3, 4) == 0
        assert chi3.a(2, 3) == -1
        primes = sieve_primes(10**6).primes
        s = np.sum(chi3.a_primes(primes) / primes)
        assert abs(s) < 1

    def test_dirichlet_rejects_imprimitive(self):
        with pytest.raises(ValidationError):
            dirichlet_source(character_from_index(9, [3]))

    def test_gl2_recursions(self, delta):
        assert delta.a(2, 1) == pytest.approx(-0.5303300859, abs=1e-10)
        for p in list(sympy.primerange(2, 10**4))[::97]:
            for l in range(0, 9):
                lhs = delta.a(p, l + 2)
                assert lhs == pytest.approx(delta.a(p, 1) * delta.a(p, l + 1) - delta.a(p, l), abs=1e-9)
        lam = normalized_coefficients(12, 2**6 * 3**4)
        for p, e in [(2, 6), (3, 4)]:
            assert delta.hecke(p, e) == pytest.approx(lam[p**e], rel=1e-10)

    def test_power_bounds(self, delta):
        for p in list(sympy.primerange(2, 10**4))[::31]:
            for l in range(1, 7):
                v = abs(delta.a(p, l))
                assert v <= 2**l * (1 + abs(delta.a(p, 1)) ** l)
                assert v <= rudnick_sarnak_bound(2, p, l) * (1 + 1e-12)

    def test_chebyshev_at_zero(self):
        src = gl2_holomorphic_source(12, 100)
        src.lam = np.zeros_like(src.lam)
        vals = [src.hecke(5, l).real for l in range(8)]
        assert vals == [1, 0, -1, 0, 1, 0, -1, 0]

    def test_gl2_sum_lambda_sq(self, delta):
        primes = sieve_primes(10**5).primes
        s = np.sum(np.abs(delta.a_primes(primes)) ** 2 / primes)
        assert abs(s - math.log(math.log(1e5))) <= 1.5

    def test_gap(self, delta):
        with pytest.raises(GapError):
            delta.a_primes(np.array([100_003]))

    def test_combined_identity(self, zeta, chi3, delta):
        comb = CombinedCoefficients([zeta, chi3, delta])
        primes = sieve_primes(2000).primes
        for i in range(3):
            total = comb.b_primes(i, primes) + comb.sources[i].a_primes(primes)
            assert np.allclose(total, comb.a_primes(primes), rtol=0, atol=1e-15)
        assert comb.degree == 4
        with pytest.raises(ValidationError):
            CombinedCoefficients([])


class TestDirichletSeries:
    def test_divisor_function(self, zeta):
        a = product_coefficients([zeta, zeta], 100)
        assert a[12] == 6
        assert [int(round(x.real)) for x in a[1:30]] == [int(sympy.divisor_count(n)) for n in range(1, 30)]

    def test_convolve(self, zeta, chi3):
        a = zeta.coefficients(200)
        b = chi3.coefficients(200)
        direct = product_coefficients([zeta, chi3], 200)
        assert np.allclose(dirichlet_convolve(a, b), direct, atol=1e-12)

    def test_gl2_coefficients(self, delta):
        a = delta.coefficients(500)
        assert np.allclose(a[1:], normalized_coefficients(12, 500)[1:], rtol=1e-12)


class TestScans:
    def test_mertens_100(self, zeta):
        (pt,) = selberg_scan(zeta, zeta, [100])
        assert pt.value.real == pytest.approx(1.802817, abs=1e-6)

    def test_empty_sum(self, zeta):
        (pt,) = selberg_scan(zeta, zeta, [1.5])
        assert pt.drift.real == pytest.approx(-math.log(math.log(1.5)))

    def test_offdiagonal_bounded(self, zeta, chi3):
        pts = selberg_scan(zeta, chi3, [1e3, 1e5, 1e7])
        assert all(abs(p.drift) <= 1 for p in pts)

    def test_rejects_decreasing(self, zeta):
        with pytest.raises(ValidationError):
            selberg_scan(zeta, zeta, [100, 10])

    def test_window_sum_decay(self, zeta, chi3):
        devs = [abs(window_sum(zeta, zeta, x, x**2).deviation) * math.log(x) ** 2 for x in (30, 100, 1000, 3000)]
        assert max(devs) < 1
        assert window_sum(zeta, zeta, 50, 50).value == 0
        w = window_sum(zeta, chi3, 1e3, 1e6)
        assert abs(w.value) * math.log(1e3) ** 2 < 5

    def test_fourth_moment(self, zeta, delta):
        fz = fourth_moment_scan(zeta, 1e6)
        assert fz.ratio == pytest.approx(1, abs=0.2)
        fd = fourth_moment_scan(delta, 1e5)
        assert 1 < fd.ratio <= 3
        assert fourth_moment_scan(zeta, 3).value == pytest.approx(0.5 + 1 / 3)


class TestIngest:
    def _write(self, tmp_path, text):
        p = tmp_path / "coef.txt"
        p.write_text(text)
        return p

    def test_echo(self, tmp_path):
        src = ingest_coefficients(self._write(tmp_path, "# f 2 0.109375\n2 -0.530330 0.0\n3 0.1 0\n"))
        assert src.a(2, 1) == pytest.approx(-0.530330)
        assert src.theta == 0.109375

    def test_empty(self, tmp_path):
        with pytest.raises(ParseError):
            ingest_coefficients(self._write(tmp_path, ""))

    def test_bound_violation(self, tmp_path):
        with pytest.raises(ValidationError):
            ingest_coefficients(self._write(tmp_path, "# f 2 0\n2 5.0 0\n"))

    def test_gap(self, tmp_path):
        with pytest.raises(GapError) as exc:
            ingest_coefficients(self._write(tmp_path, "# f 2 0 7\n2 0.1 0\n3 0.1 0\n7 0.1 0\n"))
        assert exc.value.p == 5

    def test_bad_line(self, tmp_path):
        with pytest.raises(ParseError) as exc:
            ingest_coefficients(self._write(tmp_path, "# f 2 0\n2 0.1\n"))
        assert exc.value.lineno == 2

    def test_degree_three(self, tmp_path):
        src = ingest_coefficients(self._write(tmp_path, "# g 3 0.4\n2 0.5 0\n3 -0.2 0.1\n"))
        assert src.degree == 3
        assert src.a(3, 1) == pytest.approx(complex(-0.2, 0.1))
