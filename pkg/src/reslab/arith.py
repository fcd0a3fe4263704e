"""Primes, Dirichlet characters, Kronecker symbols and squarefree supports.

Character values are held as integer exponents ``k`` of a root of unity
``exp(2*pi*i*k/order)``; complex numbers are produced only on request.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ResourceError, ValidationError
from .limits import SUPPORT_CAP, check_alloc


# --------------------------------------------------------------------------
# primes


@dataclass(frozen=True)
class PrimeTable:
    """All primes up to ``limit`` as a sorted int64 array."""

    limit: int
    primes: np.ndarray

    def __len__(self) -> int:
        return len(self.primes)

    def pi(self, x: float) -> int:
        """Number of primes <= x (x must not exceed ``limit``)."""
        return int(np.searchsorted(self.primes, math.floor(x), side="right"))

    def upto(self, x: float) -> np.ndarray:
        """Primes <= x."""
        return self.primes[: self.pi(x)]

    def between(self, lo: float, hi: float) -> np.ndarray:
        """Primes p with lo < p <= hi."""
        i = int(np.searchsorted(self.primes, math.floor(lo), side="right"))
        return self.primes[i : self.pi(hi)]


def _sieve_array(limit: int) -> np.ndarray:
    is_p = np.ones(limit + 1, dtype=bool)
    is_p[:2] = False
    is_p[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_p[p]:
            is_p[p * p :: 2 * p] = False
    return is_p


@lru_cache(maxsize=8)
def _sieve_cached(limit: int) -> PrimeTable:
    primes = np.flatnonzero(_sieve_array(limit)).astype(np.int64)
    primes.setflags(write=False)
    return PrimeTable(limit, primes)


def sieve_primes(limit: int) -> PrimeTable:
    """Sieve of Eratosthenes.

    Args:
        limit: Upper bound (inclusive), at least 2.

    Returns:
        PrimeTable holding every prime <= limit.

    Raises:
        ValidationError: if ``limit < 2``.
        ResourceError: if the sieve would exceed the memory cap.
    """
    limit = int(limit)
    if limit < 2:
        raise ValidationError(f"sieve limit must be >= 2, got {limit}")
    check_alloc(limit * 1.5, f"prime sieve to {limit}")
    return _sieve_cached(limit)


def smallest_prime_factor(n: int) -> np.ndarray:
    """Array ``spf`` with ``spf[k]`` the least prime factor of k (spf[0]=spf[1]=0)."""
    check_alloc(4 * (n + 1), f"spf sieve to {n}")
    spf = np.zeros(n + 1, dtype=np.int32)
    for p in sieve_primes(max(2, math.isqrt(n))).primes.tolist():
        block = spf[p * p :: p]
        block[block == 0] = p
        spf[p * p :: p] = block
    rest = np.flatnonzero(spf == 0)
    spf[rest] = rest
    spf[:2] = 0
    return spf


def factorize(n: int) -> list[tuple[int, int]]:
    """Trial-division factorization, returned as [(p, e), ...] sorted by p."""
    if n < 1:
        raise ValidationError(f"cannot factor {n}")
    out = []
    for p in (2, 3):
        if n % p == 0:
            e = 0
            while n % p == 0:
                n //= p
                e += 1
            out.append((p, e))
    p = 5
    while p * p <= n:
        for q in (p, p + 2):
            if n % q == 0:
                e = 0
                while n % q == 0:
                    n //= q
                    e += 1
                out.append((q, e))
        p += 6
    if n > 1:
        out.append((n, 1))
    return out


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return factorize(n) == [(n, 1)]


def is_squarefree(n: int) -> bool:
    return all(e == 1 for _, e in factorize(n))


def mobius(n: int) -> int:
    f = factorize(n)
    if any(e > 1 for _, e in f):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    out = n
    for p, _ in factorize(n):
        out = out // p * (p - 1)
    return out


def divisor_count_array(n: int) -> np.ndarray:
    """d(k) for 0 <= k <= n (d(0) set to 0)."""
    d = np.zeros(n + 1, dtype=np.int64)
    for k in range(1, n + 1):
        d[k::k] += 1
    return d


def primitive_root(p: int) -> int:
    """Least primitive root modulo an odd prime p (or 1 for p = 2)."""
    if p == 2:
        return 1
    fac = [q for q, _ in factorize(p - 1)]
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in fac):
            return g
    raise ValidationError(f"{p} is not prime")


# --------------------------------------------------------------------------
# Kronecker symbol


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) with the usual conventions at n = 0, -1 and 2.

    Args:
        d: Upper argument, any integer.
        n: Lower argument, any integer.

    Returns:
        One of -1, 0, 1.
    """
    d, n = int(d), int(n)
    if n == 0:
        return 1 if abs(d) == 1 else 0
    sign = 1
    if n < 0:
        n = -n
        if d < 0:
            sign = -1
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if d % 2 == 0:
            return 0
        if v % 2 and d % 8 in (3, 5):
            sign = -sign
    # now n odd positive: Jacobi symbol
    a = d % n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                sign = -sign
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            sign = -sign
        a %= n
    return sign if n == 1 else 0


def jacobi_array(a: np.ndarray | int, n: np.ndarray) -> np.ndarray:
    """Vectorized Jacobi symbol (a/n) for odd positive n.

    Args:
        a: Integer or int64 array broadcastable against ``n``.
        n: Array of odd positive int64 moduli.

    Returns:
        int8 array of symbols in {-1, 0, 1}.
    """
    n = np.asarray(n, dtype=np.int64).copy()
    if np.any(n <= 0) or np.any(n % 2 == 0):
        raise ValidationError("jacobi_array needs odd positive moduli")
    a = np.broadcast_to(np.asarray(a, dtype=np.int64), n.shape) % n
    a = a.copy()
    s = np.ones(n.shape, dtype=np.int8)
    while True:
        live = a != 0
        if not live.any():
            break
        # strip factors of two
        while True:
            ev = live & (a % 2 == 0)
            if not ev.any():
                break
            a[ev] //= 2
            flip = ev & ((n % 8 == 3) | (n % 8 == 5))
            s[flip] = -s[flip]
        # reciprocity swap
        flip = live & (a % 4 == 3) & (n % 4 == 3)
        s[flip] = -s[flip]
        a_new = np.where(live, n, a)
        n_new = np.where(live, a, n)
        a = np.where(live, a_new % np.where(n_new == 0, 1, n_new), a)
        n = n_new
    return np.where(n == 1, s, 0).astype(np.int8)


def quadratic_character_values(D: int, ns: np.ndarray) -> np.ndarray:
    """Kronecker symbol (D/n) for a vector of positive n, D = 8d with d odd.

    Even n give 0 because 2 | D; odd n reduce to the Jacobi symbol.
    """
    ns = np.asarray(ns, dtype=np.int64)
    out = np.zeros(ns.shape, dtype=np.int8)
    odd = ns % 2 == 1
    if D % 2:
        raise ValidationError("quadratic_character_values expects an even discriminant")
    out[odd] = jacobi_array(D, ns[odd])
    return out


# --------------------------------------------------------------------------
# squarefree supports


@dataclass(frozen=True)
class SquarefreeSupport:
    """All squarefree n <= cap whose prime factors lie in ``prime_set``."""

    prime_set: tuple[int, ...]
    cap: float
    members: np.ndarray

    def __len__(self) -> int:
        return len(self.members)


def enumerate_support(prime_set: Iterable[int], X: float, max_count: int = SUPPORT_CAP) -> SquarefreeSupport:
    """Subset products of ``prime_set`` bounded by X.

    Args:
        prime_set: Distinct primes (any order; stored sorted).
        X: Cap on the members, at least 1.
        max_count: Raise ResourceError past this many members.

    Returns:
        SquarefreeSupport with sorted members (1 always included); the
        member array is int64, or object when some member exceeds int64.
    """
    primes = [int(p) for p in prime_set]
    if len(set(primes)) != len(primes):
        raise ValidationError("prime set has repeated entries")
    return multiplicative_support(dict.fromkeys(primes, 1.0), X, max_count)[0]


def multiplicative_support(values: dict, X: float, max_count: int = SUPPORT_CAP) -> tuple[SquarefreeSupport, np.ndarray]:
    """Support of squarefree n <= X over the keys of ``values`` with f(n) = prod_{p | n} values[p].

    Built by doubling: each prime multiplies the members that stay below X.
    """
    primes = tuple(sorted(int(p) for p in values))
    if X < 1:
        raise ValidationError(f"support cap must be >= 1, got {X}")
    # products past int64 (long windows with a huge cap) stay exact as Python ints
    if min(math.log(X), sum(math.log(p) for p in primes)) >= 62 * math.log(2):
        members, f = _wide_support(primes, values, X, max_count)
    else:
        members = np.array([1], dtype=np.int64)
        f = np.ones(1, dtype=np.complex128)
        cap = math.floor(X)
        for p in primes:
            keep = members <= cap // p
            if not keep.any():
                continue
            members = np.concatenate([members, members[keep] * p])
            f = np.concatenate([f, f[keep] * values[p]])
            if len(members) > max_count:
                raise ResourceError(f"support over {len(primes)} primes with cap {X:g} has more than {max_count} members")
        order = np.argsort(members, kind="stable")
        members, f = members[order], f[order]
    members.setflags(write=False)
    return SquarefreeSupport(primes, float(X), members), f


_REL = 1e-9  # float products of <= 64 primes are accurate far beyond this


def _wide_support(primes: tuple[int, ...], values: dict, X: float, max_count: int) -> tuple[np.ndarray, np.ndarray]:
    """Doubling on float keys; exact ints decide only near-ties and the cap boundary."""
    cap = math.floor(X)
    members = np.array([1], dtype=object)
    key = np.ones(1)
    f = np.ones(1, dtype=np.complex128)
    for p in primes:
        prod = key * p
        keep = prod <= X * (1 - _REL)
        near = np.flatnonzero(np.abs(prod - X) <= X * _REL)
        if near.size:
            keep[near] = [m * p <= cap for m in members[near].tolist()]
        if not keep.any():
            continue
        members = np.concatenate([members, members[keep] * p])
        key = np.concatenate([key, prod[keep]])
        f = np.concatenate([f, f[keep] * values[p]])
        if len(members) > max_count:
            raise ResourceError(f"support over {len(primes)} primes with cap {X:g} has more than {max_count} members")
    order = np.argsort(key)
    key = key[order]
    # runs of keys too close for floats to order are sorted exactly
    close = np.flatnonzero(np.diff(key) <= key[1:] * _REL)
    start = 0
    while start < close.size:
        end = start
        while end + 1 < close.size and close[end + 1] == close[end] + 1:
            end += 1
        lo, hi = close[start], close[end] + 2
        order[lo:hi] = sorted(order[lo:hi].tolist(), key=members.__getitem__)
        start = end + 1
    return members[order], f[order]


# --------------------------------------------------------------------------
# Dirichlet characters


@dataclass(frozen=True)
class _CharacterGroup:
    """Generators and discrete-log table of (Z/qZ)^*."""

    q: int
    orders: tuple[int, ...]
    exponent: int
    logs: np.ndarray  # shape (q, r); -1 rows for non-units

    @staticmethod
    def build(q: int) -> "_CharacterGroup":
        comps: list[tuple[int, int, int]] = []  # (modulus, generator, order)
        for p, e in factorize(q) if q > 1 else []:
            pe = p**e
            if p == 2:
                if e >= 2:
                    comps.append((pe, pe - 1, 2))
                if e >= 3:
                    comps.append((pe, 5, 2 ** (e - 2)))
            else:
                g = primitive_root(p)
                if pow(g, p - 1, p * p) == 1 and e > 1:
                    g += p
                comps.append((pe, g, pe // p * (p - 1)))
        r = len(comps)
        logs = np.full((q, max(r, 1)), -1, dtype=np.int64)
        units = np.array([n for n in range(q) if math.gcd(n, q) == 1] if q > 1 else [0], dtype=np.int64)
        logs[units] = 0
        for j, (m, g, order) in enumerate(comps):
            table = np.full(m, -1, dtype=np.int64)
            x = 1
            for k in range(order):
                table[x] = k
                x = x * g % m
            if m % 8 == 0:
                # n = (-1)^a 5^b: a from n mod 4, b from the log of +-n
                if g == m - 1:
                    logs[units, j] = ((units % 4) == 3).astype(np.int64)
                else:
                    sgn = np.where(units % 4 == 3, m - 1, 1)
                    logs[units, j] = table[(units * sgn) % m]
            else:
                logs[units, j] = table[units % m]
        orders = tuple(c[2] for c in comps)
        exponent = math.lcm(*orders) if orders else 1
        logs.setflags(write=False)
        return _CharacterGroup(q, orders, exponent, logs)


@lru_cache(maxsize=32)
def _group(q: int) -> _CharacterGroup:
    return _CharacterGroup.build(q)


@dataclass(frozen=True)
class DirichletCharacter:
    """A Dirichlet character mod q, indexed by exponents on the generators.

    ``chi(n) = exp(2*pi*i * exps[n % q] / order)`` for n coprime to q, and
    0 otherwise (``exps`` holds -1 there).
    """

    modulus: int
    index: tuple[int, ...]
    _group: _CharacterGroup = field(repr=False, compare=False)

    @property
    def order(self) -> int:
        """Exponent of the group; values are order-th roots of unity."""
        return self._group.exponent

    @cached_property
    def exps(self) -> np.ndarray:
        g = self._group
        if not g.orders:
            e = np.zeros(self.modulus, dtype=np.int64)
            return e
        weights = np.array([j * (g.exponent // o) for j, o in zip(self.index, g.orders)], dtype=np.int64)
        e = (g.logs[:, : len(weights)] @ weights) % g.exponent
        e[g.logs[:, 0] < 0] = -1
        e.setflags(write=False)
        return e

    @property
    def label(self) -> str:
        return f"chi_{self.modulus}_" + ".".join(str(j) for j in self.index) if self.index else f"chi_{self.modulus}_0"

    def exponent_of(self, n: int) -> int:
        """Root-of-unity exponent of chi(n), or -1 if gcd(n, q) > 1."""
        return int(self.exps[n % self.modulus])

    def __call__(self, n: int) -> complex:
        k = self.exponent_of(n)
        if k < 0:
            return 0j
        return _root(k, self.order)

    def values(self, ns: np.ndarray | Sequence[int]) -> np.ndarray:
        """Vectorized chi(n) as complex128."""
        k = self.exps[np.asarray(ns, dtype=np.int64) % self.modulus]
        out = np.exp(2j * np.pi * k / self.order)
        # snap exact real/imaginary parts for real characters
        out = _snap(out, k, self.order)
        out[k < 0] = 0
        return out

    def table(self) -> np.ndarray:
        """chi(n) for n = 0..q-1."""
        return self.values(np.arange(self.modulus))

    @property
    def is_trivial(self) -> bool:
        return all(j == 0 for j in self.index)

    @cached_property
    def is_real(self) -> bool:
        e = self.exps[self.exps >= 0]
        return bool(np.all((2 * e) % self.order == 0))

    @cached_property
    def parity(self) -> int:
        """chi(-1) as +1 or -1."""
        if self.modulus <= 2:
            return 1
        k = self.exponent_of(self.modulus - 1)
        return 1 if k == 0 else -1

    @cached_property
    def conductor(self) -> int:
        q = self.modulus
        for d in sorted(_divisors(q)):
            if self._trivial_on_kernel(d):
                return d
        return q

    @property
    def primitive(self) -> bool:
        return self.conductor == self.modulus

    def _trivial_on_kernel(self, d: int) -> bool:
        q = self.modulus
        ns = np.arange(1, q + 1, d, dtype=np.int64) % q  # n == 1 mod d
        if d == q:
            return True
        ks = self.exps[ns]
        return bool(np.all(ks[ks >= 0] == 0))

    def conj(self) -> "DirichletCharacter":
        g = self._group
        idx = tuple((-j) % o for j, o in zip(self.index, g.orders))
        return DirichletCharacter(self.modulus, idx, g)


def _root(k: int, order: int) -> complex:
    if (4 * k) % order == 0:
        return (1, 1j, -1, -1j)[(4 * k) // order]
    ang = 2 * math.pi * k / order
    return complex(math.cos(ang), math.sin(ang))


def _snap(vals: np.ndarray, k: np.ndarray, order: int) -> np.ndarray:
    quarter = (4 * k) % order == 0
    if quarter.any():
        lut = np.array([1, 1j, -1, -1j])
        vals[quarter] = lut[((4 * k[quarter]) // order) % 4]
    return vals


def _divisors(n: int) -> list[int]:
    ds = [1]
    for p, e in factorize(n) if n > 1 else []:
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return ds


def characters_mod(q: int) -> list[DirichletCharacter]:
    """All phi(q) Dirichlet characters modulo q.

    For prime q the characters are ordered so that entry j sends the least
    primitive root g to exp(2*pi*i*j/(q-1)); entry 0 is trivial.

    Args:
        q: Modulus, at least 1.

    Returns:
        List of characters; primitivity is available via ``.primitive``.
    """
    if q < 1:
        raise ValidationError(f"modulus must be >= 1, got {q}")
    g = _group(q)
    if not g.orders:
        return [DirichletCharacter(q, (), g)]
    idx = np.indices(g.orders).reshape(len(g.orders), -1).T
    return [DirichletCharacter(q, tuple(int(v) for v in row), g) for row in idx]


def character_from_index(q: int, index: Sequence[int]) -> DirichletCharacter:
    g = _group(q)
    if len(index) != len(g.orders):
        raise ValidationError(f"modulus {q} needs {len(g.orders)} generator exponents")
    return DirichletCharacter(q, tuple(int(j) % o for j, o in zip(index, g.orders)), g)


def kronecker_character(D: int) -> DirichletCharacter:
    """The character n -> (D/n) modulo |D| for a fundamental discriminant D."""
    q = abs(D)
    target = np.array([kronecker(D, n) for n in range(q)])
    for chi in characters_mod(q):
        if chi.is_real:
            v = chi.table().real.round().astype(int)
            if np.array_equal(v, target):
                return chi
    raise ValidationError(f"{D} does not define a character modulo {q}")
