"""Coefficient sources a(p^l) for the L-functions in scope, and prime-sum scans.

Two coefficient notions coexist for a degree-2 form with Satake roots
alpha, beta (alpha*beta = 1):

* ``a(p, l) = alpha^l + beta^l`` -- the power sums entering log L, used by
  prime sums and the splitting machinery;
* ``hecke(p, l) = lambda(p^l)`` -- the Dirichlet-series coefficient.

Both obey x_{l+2} = lambda(p) x_{l+1} - x_l and differ only in the start
value (2 versus 1).  For degree one the two coincide.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import modular
from .arith import DirichletCharacter, sieve_primes
from .errors import GapError, ParseError, ValidationError
from .limits import check_alloc, debug_enabled


def rudnick_sarnak_bound(d: int, p: float, l: int = 1) -> float:
    """The general bound d * p^{l (1/2 - 1/(d^2+1))} on |a(p^l)|."""
    return d * float(p) ** (l * (0.5 - 1.0 / (d * d + 1)))


class CoefficientSource:
    """Base class: an L-function of degree d described by its prime data."""

    label: str
    degree: int
    theta: float
    self_dual: bool
    max_prime: int | None = None
    kind: str = "generic"

    # -- per-prime data ----------------------------------------------------
    def a_primes(self, primes: np.ndarray) -> np.ndarray:
        """Vectorized a(p, 1) as complex128."""
        raise NotImplementedError

    def a(self, p: int, l: int = 1) -> complex:
        """a(p^l), the l-th power sum of the Satake parameters at p."""
        raise NotImplementedError

    def hecke(self, p: int, l: int) -> complex:
        """Dirichlet coefficient A(p^l) of L(s)."""
        raise NotImplementedError

    def _check(self, p: int, l: int, v: complex) -> complex:
        if debug_enabled():
            cap = rudnick_sarnak_bound(self.degree, p, l)
            if abs(v) > cap * (1 + 1e-12):
                raise AssertionError(f"{self.label}: |a({p}^{l})|={abs(v):.6g} exceeds {cap:.6g}")
        return v

    def _need(self, p: int) -> None:
        if self.max_prime is not None and p > self.max_prime:
            raise GapError(p, f"{self.label}: no coefficient data beyond p={self.max_prime} (asked p={p})")

    # -- Dirichlet coefficients ---------------------------------------------
    def local_factor(self, p: int, kmax: int) -> np.ndarray:
        """[A(1), A(p), ..., A(p^kmax)]."""
        return np.array([1.0 + 0j] + [self.hecke(p, k) for k in range(1, kmax + 1)])

    def coefficients(self, N: int) -> np.ndarray:
        """A(n) for 0 <= n <= N (A(0) = 0), built multiplicatively."""
        return multiplicative_coefficients(N, self.local_factor)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.label!r}, degree={self.degree})"


class ZetaSource(CoefficientSource):
    label = "zeta"
    degree = 1
    theta = 0.0
    self_dual = True
    kind = "zeta"

    def a_primes(self, primes):
        return np.ones(len(primes), dtype=np.complex128)

    def a(self, p, l=1):
        return 1.0 + 0j

    def hecke(self, p, l):
        return 1.0 + 0j

    def coefficients(self, N):
        out = np.ones(N + 1, dtype=np.complex128)
        out[0] = 0
        return out


class DirichletSource(CoefficientSource):
    degree = 1
    theta = 0.0
    kind = "dirichlet"

    def __init__(self, chi: DirichletCharacter):
        self.chi = chi
        self.label = chi.label
        self.self_dual = chi.is_real

    def a_primes(self, primes):
        return self.chi.values(primes)

    def a(self, p, l=1):
        return self._check(p, l, self.chi(p) ** l)

    def hecke(self, p, l):
        return self.chi(p) ** l

    def coefficients(self, N):
        out = self.chi.values(np.arange(N + 1))
        out[0] = 0
        return out


class HeckeSource(CoefficientSource):
    """Degree-2 source driven by a table of lambda(p) and the Hecke recursion.

    Args:
        label: Name used for orthogonality decisions.
        primes: Sorted primes with data (must be all primes up to max_prime).
        lam: Normalized eigenvalues lambda(p), complex or real.
        weight: Holomorphic weight, or None for ingested/Maass data.
        theta: Ramanujan-progress parameter.
        coefficient_fn: Optional exact provider n -> lambda(n) array.
    """

    degree = 2
    kind = "gl2"

    def __init__(
        self,
        label: str,
        primes: np.ndarray,
        lam: np.ndarray,
        weight: int | None = None,
        theta: float = 0.0,
        coefficient_fn: Callable[[int], np.ndarray] | None = None,
        max_prime: int | None = None,
    ):
        self.label = label
        self.primes = np.asarray(primes, dtype=np.int64)
        self.lam = np.asarray(lam)
        self.weight = weight
        self.theta = theta
        self.self_dual = bool(np.all(np.imag(self.lam) == 0))
        self._coefficient_fn = coefficient_fn
        self.max_prime = int(max_prime if max_prime is not None else (self.primes[-1] if len(self.primes) else 1))

    def a_primes(self, primes):
        primes = np.asarray(primes, dtype=np.int64)
        if len(primes) and primes.max() > self.max_prime:
            self._need(int(primes.max()))
        idx = np.searchsorted(self.primes, primes)
        idx = np.minimum(idx, len(self.primes) - 1)
        if len(primes) and not np.array_equal(self.primes[idx], primes):
            bad = primes[self.primes[idx] != primes][0]
            raise GapError(int(bad))
        return self.lam[idx].astype(np.complex128)

    def lam_at(self, p: int) -> complex:
        self._need(p)
        i = int(np.searchsorted(self.primes, p))
        if i >= len(self.primes) or self.primes[i] != p:
            raise GapError(p)
        return complex(self.lam[i])

    def _recur(self, p: int, l: int, start: complex) -> complex:
        lp = self.lam_at(p)
        prev, cur = start, lp
        if l == 0:
            return start
        for _ in range(l - 1):
            prev, cur = cur, lp * cur - prev
        return cur

    def a(self, p, l=1):
        return self._check(p, l, self._recur(p, l, 2.0 + 0j))

    def hecke(self, p, l):
        return self._recur(p, l, 1.0 + 0j)

    def coefficients(self, N):
        if self._coefficient_fn is not None:
            return np.asarray(self._coefficient_fn(N), dtype=np.complex128)
        if N > self.max_prime:
            self._need(N)
        return multiplicative_coefficients(N, self.local_factor)


class TableSource(CoefficientSource):
    """Ingested degree-1 or degree >= 3 table holding only a(p, 1)."""

    kind = "table"

    def __init__(self, label, degree, theta, primes, values, max_prime):
        self.label = label
        self.degree = degree
        self.theta = theta
        self.primes = np.asarray(primes, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.complex128)
        self.max_prime = int(max_prime)
        self.self_dual = bool(np.all(self.values.imag == 0))

    def a_primes(self, primes):
        primes = np.asarray(primes, dtype=np.int64)
        if len(primes) and primes.max() > self.max_prime:
            self._need(int(primes.max()))
        idx = np.minimum(np.searchsorted(self.primes, primes), len(self.primes) - 1)
        return self.values[idx]

    def a(self, p, l=1):
        self._need(p)
        v = complex(self.a_primes(np.array([p]))[0])
        if l == 1:
            return self._check(p, 1, v)
        if self.degree == 1:
            return self._check(p, l, v**l)
        raise ValidationError(f"{self.label}: prime powers are not available for an ingested degree-{self.degree} table")

    def hecke(self, p, l):
        if self.degree == 1:
            return self.a(p, 1) ** l
        raise ValidationError(f"{self.label}: Dirichlet coefficients need Satake data for degree {self.degree}")


# --------------------------------------------------------------------------
# constructors


def zeta_source() -> ZetaSource:
    """The Riemann zeta function: a(p^l) = 1."""
    return ZetaSource()


def dirichlet_source(chi: DirichletCharacter) -> DirichletSource:
    """L(s, chi) for a primitive character chi.

    Raises:
        ValidationError: if chi is not primitive.
    """
    if not chi.primitive:
        raise ValidationError(f"{chi.label} is not primitive (conductor {chi.conductor})")
    if chi.modulus == 1:
        raise ValidationError("use zeta_source() for the trivial character")
    return DirichletSource(chi)


def gl2_holomorphic_source(weight: int, max_prime: int = 100_000, label: str | None = None) -> HeckeSource:
    """The level-one Hecke eigenform of the given weight.

    Args:
        weight: One of 12, 16, 18, 20, 22, 26.
        max_prime: Primes for which lambda(p) is tabulated.
        label: Defaults to ``"mf1.<weight>"``.

    Returns:
        HeckeSource with exact Dirichlet coefficients available on demand.
    """
    if weight not in modular.LEVEL_ONE_WEIGHTS:
        raise ValidationError(f"weight {weight} not in {modular.LEVEL_ONE_WEIGHTS}")
    primes, lam = modular.prime_eigenvalues(weight, max_prime)
    return HeckeSource(
        label or f"mf1.{weight}",
        primes,
        lam,
        weight=weight,
        theta=0.0,
        coefficient_fn=lambda N: modular.normalized_coefficients(weight, N),
        max_prime=max_prime,
    )


def ingest_coefficients(path: str | Path) -> CoefficientSource:
    """Read a coefficient file.

    Format: first line ``# label degree theta [max_prime]``, then one line
    ``p re im`` per prime in increasing order.  Every prime up to the
    declared max prime (default: the last listed) must be present.

    Raises:
        ParseError: malformed or empty file (with line number).
        GapError: a prime below the declared maximum is missing.
        ValidationError: a value violates the Rudnick-Sarnak bound.
    """
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].strip():
        raise ParseError(1, "empty coefficient file")
    head = lines[0].split()
    if head[0] != "#" or len(head) not in (4, 5):
        raise ParseError(1, "header must read '# label degree theta [max_prime]'")
    try:
        label, degree, theta = head[1], int(head[2]), float(head[3])
        declared = int(head[4]) if len(head) == 5 else None
    except ValueError as exc:
        raise ParseError(1, f"bad header field ({exc})") from None
    if degree < 1 or not 0 <= theta <= 0.5:
        raise ParseError(1, "degree must be >= 1 and theta in [0, 1/2]")
    ps, vals, linenos = [], [], []
    for k, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        parts = s.split()
        if len(parts) != 3:
            raise ParseError(k, f"expected 'p re im', got {s!r}")
        try:
            p, re, im = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(k, f"non-numeric field in {s!r}") from None
        if ps and p <= ps[-1]:
            raise ParseError(k, f"primes must increase (got {p} after {ps[-1]})")
        v = complex(re, im)
        cap = rudnick_sarnak_bound(degree, p)
        if abs(v) > cap:
            raise ValidationError(
                f"line {k}: |a({p})| = {abs(v):.6g} exceeds the bound d*p^(1/2-1/(d^2+1)) = {cap:.6g}"
            )
        ps.append(p)
        vals.append(v)
        linenos.append(k)
    if not ps:
        raise ParseError(len(lines), "no coefficient lines")
    top = declared if declared is not None else ps[-1]
    expected = set(sieve_primes(max(top, ps[-1], 2)).primes.tolist())
    for p, k in zip(ps, linenos):
        if p not in expected:
            raise ParseError(k, f"{p} is not prime")
    have = set(ps)
    for p in sorted(q for q in expected if q <= top):
        if p not in have:
            raise GapError(p)
    keep = [i for i, p in enumerate(ps) if p <= top]
    ps = [ps[i] for i in keep]
    vals = [vals[i] for i in keep]
    if degree == 2:
        return HeckeSource(label, np.array(ps), np.array(vals), weight=None, theta=theta, max_prime=top)
    return TableSource(label, degree, theta, ps, vals, top)


# --------------------------------------------------------------------------
# combined sources


@dataclass(frozen=True)
class CombinedCoefficients:
    """a(p) = sum_i a_i(p) and b_i(p) = a(p) - a_i(p) for a list of sources."""

    sources: tuple[CoefficientSource, ...]

    def __init__(self, sources: Iterable[CoefficientSource]):
        object.__setattr__(self, "sources", tuple(sources))
        if not self.sources:
            raise ValidationError("need at least one source")

    @property
    def m(self) -> int:
        return len(self.sources)

    def a_primes(self, primes: np.ndarray) -> np.ndarray:
        return np.sum([s.a_primes(primes) for s in self.sources], axis=0)

    def each_primes(self, primes: np.ndarray) -> np.ndarray:
        """Array of shape (m, len(primes)) with a_i(p)."""
        return np.array([s.a_primes(primes) for s in self.sources])

    def b_primes(self, i: int, primes: np.ndarray) -> np.ndarray:
        """b_i(p) = sum over j != i of a_j(p)."""
        rest = [s.a_primes(primes) for j, s in enumerate(self.sources) if j != i]
        return np.sum(rest, axis=0) if rest else np.zeros(len(primes), dtype=np.complex128)

    def others(self, i: int) -> "CombinedCoefficients":
        return CombinedCoefficients([s for j, s in enumerate(self.sources) if j != i])

    def a(self, p: int, l: int = 1) -> complex:
        return sum(s.a(p, l) for s in self.sources)

    @property
    def degree(self) -> int:
        return sum(s.degree for s in self.sources)

    @property
    def label(self) -> str:
        return "+".join(s.label for s in self.sources)


# --------------------------------------------------------------------------
# multiplicative coefficient tables


def multiplicative_coefficients(N: int, local: Callable[[int, int], np.ndarray]) -> np.ndarray:
    """A(n), 0 <= n <= N, for a multiplicative A given by local factors.

    Args:
        N: Table length.
        local: ``local(p, kmax)`` returns [A(1), A(p), ..., A(p^kmax)].

    Returns:
        complex128 array with A(0) = 0 and A(1) = 1.
    """
    check_alloc(16 * (N + 1), f"coefficient table to {N}")
    out = np.ones(N + 1, dtype=np.complex128)
    out[0] = 0
    if N < 2:
        return out
    for p in sieve_primes(N).primes.tolist():
        kmax = int(math.log(N) / math.log(p) + 1e-9)
        while p ** (kmax + 1) <= N:
            kmax += 1
        while p**kmax > N:
            kmax -= 1
        fac = local(p, kmax)
        if kmax == 1:
            out[p::p] *= fac[1]
            continue
        idx = np.arange(p, N + 1, p)
        v = np.ones(len(idx), dtype=np.int64)
        r = idx // p
        m = r % p == 0
        while m.any():
            v[m] += 1
            r[m] //= p
            m = m & (r % p == 0)
        out[idx] *= fac[v]
    return out


def product_coefficients(sources: Sequence[CoefficientSource], N: int) -> np.ndarray:
    """Dirichlet coefficients of prod_i L_i(s) up to N."""

    def local(p, kmax):
        acc = np.zeros(kmax + 1, dtype=np.complex128)
        acc[0] = 1
        for s in sources:
            f = s.local_factor(p, kmax)
            acc = np.convolve(acc, f)[: kmax + 1]
        return acc

    if all(isinstance(s, (ZetaSource, DirichletSource)) for s in sources):
        # completely multiplicative factors: convolve the full tables
        out = np.zeros(N + 1, dtype=np.complex128)
        out[1] = 1
        for s in sources:
            out = dirichlet_convolve(out, s.coefficients(N))
        return out
    return multiplicative_coefficients(N, local)


def dirichlet_convolve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a * b)(n) = sum_{d | n} a(d) b(n/d) for 1 <= n < len(a)."""
    N = len(a) - 1
    out = np.zeros(N + 1, dtype=np.result_type(a, b))
    for d in range(1, N + 1):
        if a[d] != 0:
            out[d::d] += a[d] * b[1 : N // d + 1]
    return out


# --------------------------------------------------------------------------
# prime-sum diagnostics


def _same(s1: CoefficientSource, s2: CoefficientSource) -> bool:
    return s1.label == s2.label


@dataclass(frozen=True)
class ScanPoint:
    x: float
    value: complex
    drift: complex


def selberg_scan(src1: CoefficientSource, src2: CoefficientSource, xs: Sequence[float]) -> list[ScanPoint]:
    """Partial sums sum_{p<=x} a1(p) conj(a2(p)) / p minus the diagonal loglog x.

    Args:
        src1, src2: Sources; isomorphism is decided by label.
        xs: Increasing checkpoints, all > 1.

    Returns:
        One ScanPoint per checkpoint.
    """
    xs = [float(x) for x in xs]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        raise ValidationError("checkpoints must increase")
    if xs and xs[0] <= 1:
        raise ValidationError("checkpoints must exceed 1")
    top = int(max(xs[-1], 2))
    primes = sieve_primes(top).primes
    terms = src1.a_primes(primes) * np.conj(src2.a_primes(primes)) / primes
    csum = np.cumsum(terms)
    diag = _same(src1, src2)
    out = []
    for x in xs:
        k = int(np.searchsorted(primes, math.floor(x), side="right"))
        s = complex(csum[k - 1]) if k else 0j
        out.append(ScanPoint(x, s, s - (math.log(math.log(x)) if diag else 0.0)))
    return out


@dataclass(frozen=True)
class WindowSum:
    x: float
    y: float
    value: complex
    prediction: float

    @property
    def deviation(self) -> complex:
        return self.value - self.prediction


def window_sum(src1: CoefficientSource, src2: CoefficientSource, x: float, y: float) -> WindowSum:
    """sum_{x<p<=y} a1(p) conj(a2(p)) / (p log p) with its leading-order prediction."""
    if x < 2 or y < x:
        raise ValidationError("need 2 <= x <= y")
    if y == x:
        return WindowSum(x, y, 0j, 0.0)
    primes = sieve_primes(int(y)).between(x, y)
    v = np.sum(src1.a_primes(primes) * np.conj(src2.a_primes(primes)) / (primes * np.log(primes)))
    pred = 1 / math.log(x) - 1 / math.log(y) if _same(src1, src2) else 0.0
    return WindowSum(x, y, complex(v), pred)


@dataclass(frozen=True)
class FourthMoment:
    x: float
    value: float
    ratio: float


def fourth_moment_scan(src: CoefficientSource, x: float) -> FourthMoment:
    """sum_{p<=x} |a(p)|^4 / p and its ratio to loglog x (nan when loglog x <= 0)."""
    if src.degree > 3 or (src.degree == 3 and not src.self_dual):
        raise ValidationError("fourth-moment scan needs degree <= 2 or self-dual degree 3")
    if x < 2:
        return FourthMoment(x, 0.0, 0.0)
    primes = sieve_primes(int(x)).primes
    v = float(np.sum(np.abs(src.a_primes(primes)) ** 4 / primes))
    ll = math.log(math.log(x))
    return FourthMoment(x, v, v / ll if ll > 0 else float("nan"))
