import itertools
import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from reslab.arith import (
    character_from_index,
    characters_mod,
    enumerate_support,
    euler_phi,
    factorize,
    is_squarefree,
    jacobi_array,
    kronecker,
    kronecker_character,
    mobius,
    primitive_root,
    quadratic_character_values,
    sieve_primes,
)
from reslab.errors import ResourceError, ValidationError


class TestSieve:
    def test_small(self):
        assert sieve_primes(10).primes.tolist() == [2, 3, 5, 7]
        assert sieve_primes(2).primes.tolist() == [2]

    def test_rejects_small_limit(self):
        with pytest.raises(ValidationError):
            sieve_primes(1)

    def test_pi_1e7(self):
        assert len(sieve_primes(10**7)) == 664579

    def test_matches_sympy(self):
        assert sieve_primes(5000).primes.tolist() == list(sympy.primerange(2, 5001))

    def test_between_and_upto(self):
        t = sieve_primes(200)
        assert t.between(100, 201.7).tolist() == list(sympy.primerange(101, 202))
        assert t.upto(10).tolist() == [2, 3, 5, 7]
        assert t.pi(100) == 25

    def test_memory_cap(self, monkeypatch):
        monkeypatch.setenv("RESLAB_CAP_MB", "1")
        with pytest.raises(ResourceError):
            sieve_primes(10**7 + 1)


class TestElementary:
    @pytest.mark.parametrize("n", [1, 2, 12, 97, 360, 1001, 2**10 * 3**4])
    def test_factorize(self, n):
        assert dict(factorize(n)) == sympy.factorint(n)

    def test_mobius_phi(self):
        for n in range(1, 300):
            assert mobius(n) == sympy.mobius(n)
            assert euler_phi(n) == sympy.totient(n)
            assert is_squarefree(n) == (mobius(n) != 0)

    @pytest.mark.parametrize("p", [3, 5, 7, 11, 101, 211, 2999])
    def test_primitive_root(self, p):
        assert primitive_root(p) == sympy.primitive_root(p)


class TestKronecker:
    def test_examples(self):
        assert kronecker(8, 3) == -1
        for d in (-7, 0, 5, 12):
            assert kronecker(d, 1) == 1
        for d in (1, 3, 5):
            for p in (2, 3, 5):
                if (2 * d) % p == 0:
                    assert kronecker(8 * d, p) == 0

    def test_against_sympy_jacobi(self):
        for d in range(-50, 51):
            for n in range(3, 60, 2):
                assert kronecker(d, n) == sympy.jacobi_symbol(d % n, n)

    def test_multiplicative(self):
        for d in range(-40, 41, 3):
            for m in range(1, 41, 3):
                for n in range(1, 41, 5):
                    assert kronecker(d, m * n) == kronecker(d, m) * kronecker(d, n)

    def test_vectorized(self):
        n = np.arange(1, 2001, 2)
        for a in (8, 24, 40, 8 * 15, -3):
            ref = [kronecker(a, int(x)) for x in n]
            assert jacobi_array(a, n).tolist() == ref

    def test_quadratic_character_values(self):
        n = np.arange(1, 500)
        for d in (1, 3, 15, 101):
            ref = [kronecker(8 * d, int(x)) for x in n]
            assert quadratic_character_values(8 * d, n).tolist() == ref

    def test_jacobi_rejects_even(self):
        with pytest.raises(ValidationError):
            jacobi_array(3, np.array([4]))


class TestCharacters:
    def test_mod3(self):
        chis = characters_mod(3)
        assert len(chis) == 2
        nt = [c for c in chis if not c.is_trivial][0]
        assert nt(2) == -1
        assert nt.primitive and nt.parity == -1

    def test_mod1(self):
        chis = characters_mod(1)
        assert len(chis) == 1 and chis[0].is_trivial

    @pytest.mark.parametrize("q", [5, 7, 11, 101])
    def test_primitive_count_prime(self, q):
        chis = characters_mod(q)
        assert len(chis) == q - 1
        assert sum(c.primitive for c in chis) == q - 2

    def test_prime_index_convention(self):
        q = 11
        g = primitive_root(q)
        for j, c in enumerate(characters_mod(q)):
            assert abs(c(g) - np.exp(2j * np.pi * j / (q - 1))) < 1e-13

    @pytest.mark.parametrize("q", range(1, 51))
    def test_orthogonality(self, q):
        chis = characters_mod(q)
        units = [a for a in range(1, q + 1) if math.gcd(a, q) == 1]
        tab = np.array([c.values(units) for c in chis])
        gram = tab.T @ np.conj(tab)
        expected = euler_phi(q) * np.eye(len(units))
        assert np.max(np.abs(gram - expected)) < 1e-12

    def test_character_axioms(self):
        for q in (8, 12, 15, 16, 21):
            for c in characters_mod(q):
                assert c(1) == 1
                for a in range(q):
                    v = c(a)
                    assert (v == 0) == (math.gcd(a, q) > 1)
                    if v != 0:
                        assert abs(abs(v) - 1) < 1e-14
                for a, b in itertools.product(range(1, q), repeat=2):
                    assert abs(c(a * b) - c(a) * c(b)) < 1e-12

    def test_conductors_mod_12(self):
        conds = sorted(c.conductor for c in characters_mod(12))
        assert conds == [1, 3, 4, 12]

    def test_conj(self):
        for c in characters_mod(13):
            assert np.allclose(c.conj().table(), np.conj(c.table()))

    def test_kronecker_character(self):
        c = kronecker_character(-4)
        assert [int(round(c(n).real)) for n in range(8)] == [kronecker(-4, n) for n in range(8)]

    def test_bad_index(self):
        with pytest.raises(ValidationError):
            character_from_index(15, [1])
        with pytest.raises(ValidationError):
            characters_mod(0)


class TestSupport:
    def test_examples(self):
        assert enumerate_support([3, 5], 20).members.tolist() == [1, 3, 5, 15]
        assert enumerate_support([3, 5], 2).members.tolist() == [1]

    def test_21_primes_brute_force(self):
        primes = list(sympy.primerange(101, 200))
        assert len(primes) == 21
        X = 10**6
        count = sum(1 for k in range(len(primes) + 1) for c in itertools.combinations(primes, k) if math.prod(c) <= X)
        assert len(enumerate_support(primes, X)) == count

    @settings(max_examples=60, deadline=None)
    @given(st.sets(st.sampled_from(list(sympy.primerange(2, 80))), max_size=12), st.floats(1, 1e7))
    def test_matches_naive(self, ps, X):
        ps = sorted(ps)
        naive = sorted(math.prod(c) for k in range(len(ps) + 1) for c in itertools.combinations(ps, k) if math.prod(c) <= X)
        sup = enumerate_support(ps, X)
        assert sup.members.tolist() == naive
        assert all(is_squarefree(int(n)) for n in sup.members)

    @settings(max_examples=40, deadline=None)
    @given(st.sets(st.sampled_from(list(sympy.primerange(10**6, 10**6 + 2000))), min_size=4, max_size=10), st.data())
    def test_wide_matches_naive(self, ps, data):
        ps = sorted(ps)
        subset = data.draw(st.lists(st.sampled_from(ps), min_size=4, unique=True))
        X = float(math.prod(subset))  # cap on a member, up to float rounding
        naive = sorted(math.prod(c) for k in range(len(ps) + 1) for c in itertools.combinations(ps, k) if math.prod(c) <= X)
        sup = enumerate_support(ps, X)
        assert sup.members.dtype == object
        assert sup.members.tolist() == naive

    def test_wide_near_ties(self):
        p = sympy.nextprime(10**10)
        q = sympy.nextprime(p + 10**6)
        r = sympy.nextprime(p + 500)
        while True:
            s = sympy.prevprime(p * q // r + 1)
            if p * q - r * s < 1e-10 * p * q:
                break
            r = sympy.nextprime(r)
        ps = sorted({p, q, r, s, 3})
        assert abs(p * q - r * s) < 1e-9 * p * q
        naive = sorted(math.prod(c) for k in range(len(ps) + 1) for c in itertools.combinations(ps, k))
        assert enumerate_support(ps, 1e60).members.tolist() == naive

    def test_cap(self):
        with pytest.raises(ResourceError):
            enumerate_support(list(sympy.primerange(2, 60)), 1e12, max_count=1000)

    def test_validation(self):
        with pytest.raises(ValidationError):
            enumerate_support([3, 3], 10)
        with pytest.raises(ValidationError):
            enumerate_support([3], 0.5)
