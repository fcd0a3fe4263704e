"""Splitting of long prime sums into blocks, after Harper.

The ladder Z_i = exp(e^i (log Lc)^2) cuts the primes into blocks
(Z_{i-1}, Z_i].  On each block the prime polynomial

    P_{i,j}(t) = sum_{Z_{i-1} < p <= Z_i} b(p) w_j(p) p^{-1/2-it}

is compared with its truncated exponential

    N_{i,j}(t) = sum_{m <= 10 l_i} P_{i,j}(t)^m / m!,

which, expanded by the multinomial theorem, is a Dirichlet polynomial over
n with Omega(n) <= 10 l_i supported on block primes, with coefficient
prod_{p^a || n} (b(p) w_j(p))^a / a!.  The weight is
w_Z(n) = n^{-1/(2 log Z)} (1 - log n / log Z) for n <= Z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .arith import sieve_primes
from .coeffs import CoefficientSource
from .errors import ConfigurationError, InvariantViolation, RangeError, ResourceError, ValidationError
from .leval.nufft import TWO_PI_EXT, dirichlet_poly_direct, log_poly_grid
from .limits import EXPANSION_TERM_CAP

J_MAX = 60


def w_Z(n: np.ndarray | float, Z: float) -> np.ndarray:
    """n^{-1/(2 log Z)} (1 - log n/log Z), zero for n > Z."""
    n = np.asarray(n, dtype=np.float64)
    lz = math.log(Z)
    ln = np.log(n)
    return np.where(n <= Z, np.exp(-ln / (2 * lz)) * (1 - ln / lz), 0.0)


@dataclass(frozen=True)
class HarperLadder:
    """Ladder parameters Z_i, l_i, r_i for i = 0..J."""

    C_M: float
    L: float
    T: float
    eps: float
    J: int

    @property
    def log_L_sq(self) -> float:
        return math.log(self.L) ** 2

    def Z(self, i: int) -> float:
        """Z_i, with Z_{-1} = 1.  May be inf when exp overflows."""
        if i < 0:
            return 1.0
        e = math.exp(i) * self.log_L_sq
        return math.exp(e) if e < 709 else math.inf

    def log_Z(self, i: int) -> float:
        return 0.0 if i < 0 else math.exp(i) * self.log_L_sq

    def ell(self, i: int) -> float:
        return math.log(self.T) / (100 * self.log_L_sq) * math.exp(-1.25 * i)

    def r(self, i: int) -> float:
        return math.log(self.T) / (math.exp(i) * math.log(self.L) ** (2 + self.eps))

    def truncation(self, i: int) -> int:
        """Largest m kept in N_i: floor(10 l_i)."""
        return int(math.floor(10 * self.ell(i) + 1e-12))

    def length_certificate(self) -> float:
        """sum_{i <= J} e^{-i/4}/10, at most 1/2 on every ladder."""
        return sum(math.exp(-i / 4) / 10 for i in range(self.J + 1))

    def block_primes(self, i: int) -> np.ndarray:
        lo, hi = self.Z(i - 1), self.Z(i)
        if not math.isfinite(hi) or hi > 5e8:
            raise ResourceError(f"block {i} reaches Z = {hi:.3g}, beyond the prime table cap")
        return sieve_primes(max(int(hi), 2)).between(lo, hi)


def build_ladder(T: float, L: float, C_M: float = 0.75, eps: float = 0.1) -> HarperLadder:
    """Ladder with J minimal such that Z_J >= exp(2 C_M sqrt(log T loglog T logloglog T)).

    Raises:
        ValidationError: for T < 1e3 or L <= e.
        ConfigurationError: if J exceeds 60.
    """
    if T < 1e3:
        raise ValidationError("T must be at least 1e3")
    if L <= math.e:
        raise ValidationError("Lc must exceed e so that log Lc > 1")
    lt = math.log(T)
    target = 2 * C_M * math.sqrt(lt * math.log(lt) * math.log(math.log(lt)))
    lsq = math.log(L) ** 2
    J = 0
    while math.exp(J) * lsq < target:
        J += 1
        if J > J_MAX:
            raise ConfigurationError(f"ladder needs J > {J_MAX}; unusable at this scale")
    lad = HarperLadder(C_M, L, T, eps, J)
    cert = lad.length_certificate()
    if cert > 0.5:
        raise InvariantViolation(f"ladder length certificate {cert:.6g} exceeds 1/2")
    return lad


# --------------------------------------------------------------------------
# Chandee majorant and prime powers


def _prime_powers(Z: float) -> tuple[np.ndarray, np.ndarray]:
    """Primes p and exponents l with p^l <= Z, l >= 1."""
    ps, ls = [], []
    for p in sieve_primes(max(int(Z), 2)).upto(Z).tolist():
        l, q = 1, p
        while q <= Z:
            ps.append(p)
            ls.append(l)
            l += 1
            q *= p
    return np.array(ps, dtype=np.int64), np.array(ls, dtype=np.int64)


def _power_coeffs(src: CoefficientSource, ps: np.ndarray, ls: np.ndarray) -> np.ndarray:
    out = src.a_primes(ps).astype(np.complex128)
    hi = ls > 1
    for k in np.flatnonzero(hi):
        out[k] = src.a(int(ps[k]), int(ls[k]))
    return out


def chandee_majorant(src: CoefficientSource, t: float | np.ndarray, Z: float, T: float, C_M: float | None = None) -> np.ndarray | float:
    """Re sum_{n <= Z} Lambda(n) b(n) w_Z(n) / (n^{1/2+it} log n) + C_M log T / log Z.

    Prime powers p^l contribute a(p, l)/l.  The O(1) term is omitted.  C_M
    defaults to 0.75 times the degree.
    """
    if Z < 2:
        raise ValidationError("Z must be at least 2")
    C = 0.75 * src.degree if C_M is None else C_M
    ps, ls = _prime_powers(Z)
    n = ps.astype(np.float64) ** ls
    coef = _power_coeffs(src, ps, ls) / ls * w_Z(n, Z)
    ln_ext = np.log(ps.astype(np.longdouble)) * ls
    vals = _direct_log(ln_ext, coef * np.exp(-0.5 * np.log(n)), np.atleast_1d(t))
    out = vals.real + C * math.log(T) / math.log(Z)
    return float(out[0]) if np.ndim(t) == 0 else out


def _direct_log(ln_ext: np.ndarray, amp: np.ndarray, ts: np.ndarray) -> np.ndarray:
    """sum amp_j exp(-i t ln_j) at the given t (extended-precision phases)."""
    ts = np.asarray(ts, dtype=np.float64)
    out = np.empty(len(ts), dtype=np.complex128)
    if len(ln_ext) == 0:
        out[:] = 0
        return out
    rows = max(1, (1 << 22) // len(ln_ext))
    for i in range(0, len(ts), rows):
        tt = ts[i : i + rows].astype(np.longdouble)
        ph = np.asarray(np.multiply.outer(tt, ln_ext) % TWO_PI_EXT, dtype=np.float64)
        out[i : i + rows] = np.exp(-1j * ph) @ amp
    return out


@dataclass(frozen=True)
class PrimePowerCheck:
    Z: float
    value: float
    unweighted: float
    by_power: dict
    ratio: float


def prime_power_reduction_check(src: CoefficientSource, Z: float) -> PrimePowerCheck:
    """sum_{p^l <= Z, l >= 2} |b(p^l)| w_Z(p^l) / p^{l/2} and its ratio to loglog Z.

    ``by_power`` holds the unweighted sum for each l.
    """
    if src.degree > 2:
        raise ValidationError("prime-power check needs degree <= 2")
    if Z < 4:
        return PrimePowerCheck(Z, 0.0, 0.0, {}, 0.0)
    ps, ls = _prime_powers(Z)
    keep = ls >= 2
    ps, ls = ps[keep], ls[keep]
    n = ps.astype(np.float64) ** ls
    mag = np.abs(_power_coeffs(src, ps, ls)) / np.sqrt(n)
    value = float(np.sum(mag * w_Z(n, Z)))
    by_power = {int(l): float(np.sum(mag[ls == l])) for l in np.unique(ls)}
    llz = math.log(math.log(Z))
    return PrimePowerCheck(Z, value, float(np.sum(mag)), by_power, value / llz if llz > 0 else math.inf)


# --------------------------------------------------------------------------
# block polynomials and truncated exponentials


@dataclass(frozen=True)
class Block:
    """Prime data of block i with smoothing index j."""

    i: int
    j: int
    primes: np.ndarray
    beta: np.ndarray  # b(p) w_j(p)
    K: int  # truncation floor(10 l_i)
    ell: float

    @property
    def variance(self) -> float:
        """sum |b(p) w_j(p)|^2 / p over the block."""
        return float(np.sum(np.abs(self.beta) ** 2 / self.primes))


def make_block(ladder: HarperLadder, b, i: int, j: int) -> Block:
    """Block data with b given by any object exposing ``a_primes``."""
    if not 0 <= i <= ladder.J or not 0 <= j <= ladder.J:
        raise ValidationError(f"block indices must lie in [0, {ladder.J}]")
    primes = ladder.block_primes(i)
    beta = b.a_primes(primes).astype(np.complex128) * w_Z(primes, ladder.Z(j))
    return Block(i, j, primes, beta, ladder.truncation(i), ladder.ell(i))


def block_poly(block: Block, t: float | np.ndarray) -> np.ndarray | complex:
    """P_{i,j}(t) by direct summation."""
    vals = dirichlet_poly_direct(block.primes, block.beta, np.atleast_1d(t), sigma=0.5)
    return complex(vals[0]) if np.ndim(t) == 0 else vals


def block_poly_grid(block: Block, t0: float, h: float, M: int) -> np.ndarray:
    """P_{i,j} on t0 + k h via the NUFFT."""
    if len(block.primes) == 0:
        return np.zeros(M, dtype=np.complex128)
    ln = np.log(block.primes.astype(np.longdouble))
    amp = block.beta / np.sqrt(block.primes.astype(np.float64))
    return log_poly_grid(ln, amp, t0, h, M)


@dataclass(frozen=True)
class ExpansionTable:
    """Terms of N_{i,j}: log n (extended), Omega(n) and coefficient."""

    log_n: np.ndarray
    omega: np.ndarray
    coef: np.ndarray

    def __len__(self) -> int:
        return len(self.coef)


def expansion_size(n_primes: int, K: int) -> int:
    """Number of multisets of at most K block primes: C(n + K, K)."""
    return math.comb(n_primes + K, K)


def truncated_exp_table(block: Block, term_cap: int = EXPANSION_TERM_CAP) -> ExpansionTable:
    """All n with Omega(n) <= K on block primes and coefficient prod beta^a/a!.

    Raises:
        ResourceError: if the term count exceeds ``term_cap``.
    """
    P, K = len(block.primes), block.K
    count = expansion_size(P, K)
    if count > term_cap:
        raise ResourceError(f"expansion of block {block.i} has {count} terms (cap {term_cap})")
    logs = [np.longdouble(0)]
    omegas = [0]
    coefs = [1.0 + 0j]
    lp = np.log(block.primes.astype(np.longdouble))
    # layers by smallest admissible prime index to enumerate each multiset once
    frontier = [(0, np.longdouble(0), 0, 1.0 + 0j, -1, 0)]  # (start, log, omega, coef, last, mult)
    while frontier:
        nxt = []
        for start, lg, om, cf, last, mult in frontier:
            if om == K:
                continue
            for k in range(start, P):
                if k == last:
                    m2 = mult + 1
                    c2 = cf * block.beta[k] / m2
                else:
                    m2 = 1
                    c2 = cf * block.beta[k]
                l2 = lg + lp[k]
                logs.append(l2)
                omegas.append(om + 1)
                coefs.append(c2)
                nxt.append((k, l2, om + 1, c2, k, m2))
        frontier = nxt
    return ExpansionTable(np.array(logs, dtype=np.longdouble), np.array(omegas), np.array(coefs, dtype=np.complex128))


def truncated_exp(table: ExpansionTable, t: float | np.ndarray) -> np.ndarray | complex:
    """N_{i,j}(t) = sum coef n^{-1/2-it} from the expansion table."""
    amp = table.coef * np.exp(-0.5 * table.log_n.astype(np.float64))
    vals = _direct_log(table.log_n, amp, np.atleast_1d(t))
    return complex(vals[0]) if np.ndim(t) == 0 else vals


def truncated_exp_grid(table: ExpansionTable, t0: float, h: float, M: int) -> np.ndarray:
    amp = table.coef * np.exp(-0.5 * table.log_n.astype(np.float64))
    return log_poly_grid(table.log_n, amp, t0, h, M)


def exp_series(P: np.ndarray | complex, K: int) -> np.ndarray | complex:
    """sum_{m <= K} P^m/m!."""
    P = np.asarray(P, dtype=np.complex128)
    term = np.ones_like(P)
    total = np.ones_like(P)
    for m in range(1, K + 1):
        term = term * P / m
        total = total + term
    return total if total.ndim else complex(total)


def taylor_error(P: complex, N: complex) -> float:
    """|exp(2 Re P) - |N|^2| / exp(2 Re P)."""
    e = math.exp(2 * P.real)
    return abs(e - abs(N) ** 2) / e


def taylor_bound(ell: float) -> float:
    """2 e^{-9 l} with a 1e-12 floor for double precision."""
    return max(2 * math.exp(-9 * ell), 1e-12)


def taylor_check(P: complex, ell: float, N: complex | None = None) -> float | None:
    """Relative error of |N|^2 against exp(2 Re P), or None when |P| > ell.

    N defaults to the truncated series at floor(10 ell).  For ell >= 1 the
    error must not exceed 2 e^{-9 ell} (floored at 1e-12).

    Raises:
        InvariantViolation: if the bound fails for ell >= 1.
    """
    P = complex(P)
    if abs(P) > ell:
        return None
    if N is None:
        N = exp_series(P, int(math.floor(10 * ell + 1e-12)))
    err = taylor_error(P, complex(N))
    if ell >= 1 and err > taylor_bound(ell):
        raise InvariantViolation(f"Taylor truncation error {err:.3g} exceeds {taylor_bound(ell):.3g} at l = {ell:.4g}")
    return err


# --------------------------------------------------------------------------
# exceptional sets and moments


def exceptional_measure(P_values: np.ndarray, threshold: float) -> float:
    """Fraction of samples with |P| > threshold."""
    P_values = np.asarray(P_values)
    if len(P_values) == 0:
        return 0.0
    return float(np.mean(np.abs(P_values) > threshold))


def moment_bound(variance: float, threshold: float, k: int) -> float:
    """k^{1/2} (k S / (e thr^2))^k, the 2k-th moment Markov bound for |P| > thr."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    if threshold <= 0:
        return 1.0
    if variance <= 0:
        return 0.0
    log_b = 0.5 * math.log(k) + k * math.log(k * variance / (math.e * threshold**2))
    return math.exp(log_b) if log_b < 709 else math.inf


def paper_k(ladder: HarperLadder, i: int = 0) -> int:
    """k = floor(log T / log Z_i), the largest k with Z_i^k <= T."""
    k = int(math.floor(math.log(ladder.T) / ladder.log_Z(i)))
    if k < 1:
        raise RangeError(f"Z_{i}^1 already exceeds T")
    return k


def moment_inequality_check(P_values: np.ndarray, variance: float, k: int, x: float, T: float) -> tuple[float, float]:
    """(mean |P|^{2k} on the samples, k! S^k) for a prime sum with primes <= x.

    Raises:
        RangeError: if x^k > T.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    if k * math.log(x) > math.log(T) + 1e-12:
        raise RangeError(f"x^k = {x:g}^{k} exceeds T = {T:g}")
    P_values = np.asarray(P_values)
    lhs = float(np.mean(np.abs(P_values) ** (2 * k))) if len(P_values) else 0.0
    return lhs, math.factorial(k) * variance**k


def block_csv(path: str | Path, ts: np.ndarray, P: np.ndarray, N: np.ndarray) -> None:
    """Write ``t, re_P, im_P, abs_N_sq, exp_2ReP, rel_err``."""
    e2 = np.exp(2 * P.real)
    n2 = np.abs(N) ** 2
    data = np.column_stack([ts, P.real, P.imag, n2, e2, np.abs(e2 - n2) / e2])
    np.savetxt(path, data, fmt="%.17g", delimiter=",", header="t,re_P,im_P,abs_N_sq,exp_2ReP,rel_err", comments="")
