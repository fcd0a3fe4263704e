"""Euler-Maclaurin evaluation of zeta and Dirichlet L-functions.

For Re(s) = sigma > 0 and u = a + N,

    zeta(s, a) = sum_{k<N} (a+k)^{-s} + u^{1-s}/(s-1) + u^{-s}/2
                 + sum_{j=1}^{M} B_{2j}/(2j)! (s)_{2j-1} u^{-s-2j+1} + R,

    |R| <= 4 |(s)_{2M}| / (2 pi)^{2M} * u^{-sigma-2M+1} / (sigma+2M-1),

with (s)_k the rising factorial.  L(s, chi) = q^{-s} sum_a chi(a) zeta(s, a/q),
whose main sums combine into sum_{n <= qN} chi(n) n^{-s}.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from ..arith import DirichletCharacter
from ..errors import PrecisionError, ValidationError
from .nufft import TWO_PI_EXT

EM_ORDER = 8
EPS_MACH = float(np.finfo(float).eps)
EPS_EXT = float(np.finfo(np.longdouble).eps)

_BERNOULLI = [Fraction(1, 6), Fraction(-1, 30), Fraction(1, 42), Fraction(-1, 30), Fraction(5, 66),
              Fraction(-691, 2730), Fraction(7, 6), Fraction(-3617, 510)]
# B_{2j} / (2j)!
EM_COEFFS = np.array([float(b / math.factorial(2 * j + 2)) for j, b in enumerate(_BERNOULLI)])


def _log_rising_abs(sigma: float, t: float, k: int) -> float:
    """log |s (s+1) ... (s+k-1)| for s = sigma + it."""
    return sum(0.5 * math.log((sigma + j) ** 2 + t * t) for j in range(k))


def em_remainder_bound(sigma: float, t: float, u: float, M: int = EM_ORDER) -> float:
    """Bound on the Euler-Maclaurin remainder at s = sigma + it, u = a + N."""
    lr = _log_rising_abs(sigma, t, 2 * M)
    lb = math.log(4.0) + lr - 2 * M * math.log(2 * math.pi) + (1 - sigma - 2 * M) * math.log(u)
    return math.exp(lb) / (sigma + 2 * M - 1)


def _units(q: int, chi: DirichletCharacter | None) -> list[int]:
    if chi is None:
        return [1]
    return [a for a in range(1, q + 1) if chi.exponent_of(a) >= 0]


def total_remainder_bound(q: int, n_residues: int, K: int, t_abs: float, sigma: float = 0.5) -> float:
    """Sum of the Hurwitz remainder bounds over all residues, times q^{-sigma}."""
    # the bound is decreasing in u = a/q + K, so u = K + 1/q is the worst residue
    u = K + 1.0 / q
    return n_residues * q ** (-sigma) * em_remainder_bound(sigma, t_abs, u)


def choose_cut(q: int, n_residues: int, t_abs: float, eps: float, sigma: float = 0.5) -> int:
    """Least K with total remainder bound <= eps at height t_abs."""
    lo = 1
    if total_remainder_bound(q, n_residues, lo, t_abs, sigma) <= eps:
        return lo
    hi = 2
    while total_remainder_bound(q, n_residues, hi, t_abs, sigma) > eps:
        hi *= 2
        if hi > 1 << 40:
            raise PrecisionError(f"no Euler-Maclaurin cut reaches eps={eps:g} at t={t_abs:g}")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if total_remainder_bound(q, n_residues, mid, t_abs, sigma) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def roundoff_estimate(n_terms: int, t_abs: float) -> float:
    """RMS estimate of floating-point error in a sum of n^{-1/2-it}, n <= n_terms.

    Phases t*log n are reduced in extended precision, so each term carries
    a relative error of a few ulps plus eps_ext*|t|*log n; errors are
    treated as independent, the usual model for long sums.
    """
    n = max(n_terms, 2)
    harm = math.sqrt(math.log(n) + 0.5773)
    return harm * (4 * EPS_MACH + EPS_EXT * (1 + t_abs) * math.log(n))


def em_tail(s: np.ndarray, u: float) -> np.ndarray:
    """Euler-Maclaurin tail terms of zeta(s, .) at u = a + N, vectorized in s."""
    s = np.asarray(s, dtype=np.complex128)
    log_u = math.log(u)
    u_ms = np.exp(-s * log_u)
    out = u * u_ms / (s - 1) + 0.5 * u_ms
    poch = s.copy()  # (s)_{2j-1}
    upow = u_ms / u  # u^{-s-1}
    inv_u2 = 1.0 / (u * u)
    for j in range(EM_ORDER):
        out += EM_COEFFS[j] * poch * upow
        poch = poch * (s + 2 * j + 1) * (s + 2 * j + 2)
        upow = upow * inv_u2
    return out


def _main_sum(coef: np.ndarray, s: complex, chunk: int = 1 << 20) -> complex:
    """sum_{n=1}^{len(coef)} coef[n-1] n^{-s} in chunks, phases in extended precision."""
    total = 0j
    n_all = len(coef)
    for start in range(0, n_all, chunk):
        n = np.arange(start + 1, min(n_all, start + chunk) + 1, dtype=np.float64)
        c = coef[start : start + len(n)]
        ln = np.log(n.astype(np.longdouble))
        ph = np.asarray((ln * np.longdouble(s.imag)) % TWO_PI_EXT, dtype=np.float64)
        mag = np.exp(-s.real * np.log(n))
        total += complex(np.sum(c * mag * np.exp(-1j * ph)))
    return total


def _hurwitz_l(q: int, chi: DirichletCharacter | None, t: float, eps: float, sigma: float = 0.5) -> complex:
    if eps <= 0:
        raise ValidationError("eps must be positive")
    res = _units(q, chi)
    K = choose_cut(q, len(res), abs(t), eps / 2, sigma)
    nt = q * K
    if eps < 2 * roundoff_estimate(nt, abs(t)):
        raise PrecisionError(
            f"eps={eps:g} is below the double-precision roundoff level "
            f"{roundoff_estimate(nt, abs(t)):.2g} for {nt} terms at t={t:g}"
        )
    s = complex(sigma, t)
    if chi is None:
        coef = np.ones(nt, dtype=np.complex128)
    else:
        coef = chi.values(np.arange(1, nt + 1))
    total = _main_sum(coef, s)
    s_arr = np.array([s])
    qs = complex(np.exp(-s * math.log(q))) if q > 1 else 1.0
    tail = 0j
    for a in res:
        ca = 1.0 if chi is None else chi(a)
        tail += ca * em_tail(s_arr, a / q + K)[0]
    return total + qs * tail


def zeta_half_line(t: float, eps: float = 1e-10) -> complex:
    """zeta(1/2 + it) with rigorously bounded Euler-Maclaurin remainder.

    Args:
        t: Height, |t| <= 1e8.
        eps: Target absolute error.

    Returns:
        The complex value.

    Raises:
        PrecisionError: if eps is below the roundoff level for this t.
    """
    if abs(t) > 1e8:
        raise ValidationError("|t| must not exceed 1e8")
    return _hurwitz_l(1, None, float(t), eps)


def dirichlet_half_line(chi: DirichletCharacter, t: float, eps: float = 1e-10) -> complex:
    """L(1/2 + it, chi) for a primitive character via the Hurwitz decomposition.

    Args:
        chi: Primitive character of modulus q <= 1e5 (q = 1 gives zeta).
        t: Height, |t| <= 1e8.
        eps: Target absolute error.
    """
    if chi.modulus > 100_000:
        raise ValidationError("modulus above 1e5")
    if not chi.primitive:
        raise ValidationError(f"{chi.label} is not primitive")
    if abs(t) > 1e8:
        raise ValidationError("|t| must not exceed 1e8")
    if chi.modulus == 1:
        return zeta_half_line(t, eps)
    return _hurwitz_l(chi.modulus, chi, float(t), eps)


def hurwitz_zeta(s: complex, a: float, eps: float = 1e-12) -> complex:
    """zeta(s, a) for Re(s) > 0, s != 1 and 0 < a <= 1 (pointwise helper)."""
    s = complex(s)
    if s.real <= 0 or not 0 < a <= 1:
        raise ValidationError("need Re(s) > 0 and 0 < a <= 1")
    lo, hi = 1, 2
    while em_remainder_bound(s.real, s.imag, a + hi) > eps:
        hi *= 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if em_remainder_bound(s.real, s.imag, a + mid) <= eps:
            hi = mid
        else:
            lo = mid
    N = hi
    k = np.arange(N, dtype=np.float64) + a
    main = complex(np.sum(np.exp(-s * np.log(k))))
    return main + em_tail(np.array([s]), a + N)[0]
