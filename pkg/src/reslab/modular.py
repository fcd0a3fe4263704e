"""Exact q-expansions of level-one Hecke eigenforms.

Power series with integer coefficients are multiplied by Kronecker
substitution: coefficients are packed into fixed-width signed slots of one
large integer, multiplied with GMP, and unpacked.  Carries and borrows only
travel towards higher slots, so truncating to the first N slots is exact as
long as every one of those slots fits its width.

The cusp form Delta is built as q * (eta^3)^8 with Jacobi's identity
eta^3 = sum (-1)^k (2k+1) q^{k(k+1)/2}; slot widths for the three squarings
come from Deligne's bound for the eta-quotient newforms eta(4z)^6,
eta(2z)^12 and eta(z)^24.
"""

from __future__ import annotations

import math
import os
from functools import lru_cache
from pathlib import Path

import gmpy2
import numpy as np

from .arith import sieve_primes
from .errors import ValidationError
from .limits import check_alloc

LEVEL_ONE_WEIGHTS = (12, 16, 18, 20, 22, 26)

# Eisenstein factor of the weight-k eigenform Delta * E_{k-12}
_EISENSTEIN_FACTORS = {12: (), 16: (4,), 18: (6,), 20: (4, 4), 22: (4, 6), 26: (4, 4, 6)}


# --------------------------------------------------------------------------
# packing helpers


def _slot_bytes(bits: float) -> int:
    """Bytes per slot for coefficients bounded by 2**bits (sign and margin added)."""
    return max(1, math.ceil((bits + 3) / 8))


def _pack_int64(vals: np.ndarray, nb: int) -> gmpy2.mpz:
    """Pack int64 coefficients into nb-byte two's complement slots."""
    n = len(vals)
    raw = np.ascontiguousarray(vals.astype("<i8")).view(np.uint8).reshape(n, 8)
    neg = vals < 0
    buf = np.zeros((n, max(nb, 8)), dtype=np.uint8)
    buf[:, :8] = raw
    buf[neg, 8:] = 0xFF
    if nb < 8:
        buf = np.ascontiguousarray(buf[:, :nb])
    return _from_twos(buf, neg)


def _pack_pyints(vals, nb: int) -> gmpy2.mpz:
    """Pack arbitrary Python integers into nb-byte signed slots."""
    n = len(vals)
    pos = bytearray(n * nb)
    neg = bytearray(n * nb)
    lim = 1 << (8 * nb - 1)
    for i, c in enumerate(vals):
        c = int(c)
        if c == 0:
            continue
        if abs(c) >= lim:
            raise OverflowError("coefficient does not fit its slot")
        tgt = pos if c > 0 else neg
        tgt[i * nb : (i + 1) * nb] = abs(c).to_bytes(nb, "little")
    return gmpy2.mpz(int.from_bytes(pos, "little")) - gmpy2.mpz(int.from_bytes(neg, "little"))


def _from_twos(buf: np.ndarray, neg: np.ndarray) -> gmpy2.mpz:
    """Integer sum c_i 2^{B i} from two's complement slot bytes."""
    n, nb = buf.shape
    val = gmpy2.mpz(int.from_bytes(buf.tobytes(), "little"))
    idx = np.flatnonzero(neg)
    if len(idx):
        corr = np.zeros((n + 1) * nb, dtype=np.uint8)
        corr[(idx + 1) * nb] = 1
        val -= gmpy2.mpz(int.from_bytes(corr.tobytes(), "little"))
    return val


def _offset_constant(n: int, nb: int) -> gmpy2.mpz:
    pat = np.zeros((n, nb), dtype=np.uint8)
    pat[:, -1] = 0x80
    return gmpy2.mpz(int.from_bytes(pat.tobytes(), "little"))


def _unpack_twos(P: gmpy2.mpz, n: int, nb: int) -> np.ndarray:
    """First n slots of P as an (n, nb) array of two's complement bytes."""
    bits = 8 * nb * n
    low = gmpy2.f_mod_2exp(P, bits)
    low = gmpy2.f_mod_2exp(low + _offset_constant(n, nb), bits)
    raw = np.frombuffer(int(low).to_bytes(n * nb, "little"), dtype=np.uint8).reshape(n, nb).copy()
    raw[:, -1] ^= 0x80  # offset form -> two's complement
    return raw


def _repack(twos: np.ndarray, nb_new: int) -> gmpy2.mpz:
    """Re-encode two's complement slots at a wider slot width."""
    n, nb = twos.shape
    neg = twos[:, -1] >= 0x80
    buf = np.zeros((n, nb_new), dtype=np.uint8)
    buf[:, :nb] = twos
    buf[neg, nb:] = 0xFF
    return _from_twos(buf, neg)


def _twos_to_ints(twos: np.ndarray, idx: np.ndarray | None = None) -> list[int]:
    rows = twos if idx is None else twos[idx]
    return [int.from_bytes(r.tobytes(), "little", signed=True) for r in rows]


# --------------------------------------------------------------------------
# Delta and Eisenstein series


def _eta_cubed(n: int) -> np.ndarray:
    out = np.zeros(n, dtype=np.int64)
    k = 0
    while k * (k + 1) // 2 < n:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


def _eta24_twos(n: int) -> np.ndarray:
    """Two's complement slots of eta^24 = sum_{k<n} tau(k+1) q^k."""
    check_alloc(n * 18 * 8, f"Delta q-expansion to {n}")
    m = float(max(n, 2))
    # Deligne with d(m) <= 2 sqrt(m) for the three eta-quotient newforms
    b6 = math.log2(2 * (4 * m + 1) ** 1.5)
    b12 = math.log2(2 * (2 * m + 1) ** 3.0)
    b24 = math.log2(2 * m**6.0)
    nb6, nb12, nb24 = _slot_bytes(b6), _slot_bytes(b12), _slot_bytes(b24)
    P = _pack_int64(_eta_cubed(n), nb6)
    s6 = _unpack_twos(P * P, n, nb6)
    P = _repack(s6, nb12)
    del s6
    s12 = _unpack_twos(P * P, n, nb12)
    P = _repack(s12, nb24)
    del s12
    return _unpack_twos(P * P, n, nb24)


def delta_coefficients(N: int) -> list[int]:
    """Ramanujan tau(n) for 0 <= n <= N (tau(0) = 0)."""
    if N < 1:
        raise ValidationError("need N >= 1")
    return [0] + _twos_to_ints(_eta24_twos(N))


def _sigma_table(N: int, k: int) -> list[int]:
    sig = [0] * (N + 1)
    for d in range(1, N + 1):
        dk = d**k
        for m in range(d, N + 1, d):
            sig[m] += dk
    return sig


def eisenstein_coefficients(k: int, N: int) -> list[int]:
    """Integer coefficients of E_4 or E_6 up to q^N."""
    if k == 4:
        c = 240
    elif k == 6:
        c = -504
    else:
        raise ValidationError("only E_4 and E_6 are needed")
    sig = _sigma_table(N, k - 1)
    return [1] + [c * s for s in sig[1:]]


def _mul_trunc(a: list[int], b: list[int], N: int) -> list[int]:
    """Exact product of two integer series truncated after q^N."""
    n = N + 1
    bound = sum(abs(x) for x in a[:n]) * max(abs(x) for x in b[:n])
    nb = _slot_bytes(max(bound, 1).bit_length())
    A = _pack_pyints(a[:n], nb)
    B = A if a is b else _pack_pyints(b[:n], nb)
    return _twos_to_ints(_unpack_twos(A * B, n, nb))


@lru_cache(maxsize=16)
def _eigenform_exact(weight: int, N: int) -> tuple[int, ...]:
    if weight not in _EISENSTEIN_FACTORS:
        raise ValidationError(f"no level-one eigenform of weight {weight} in {LEVEL_ONE_WEIGHTS}")
    f = delta_coefficients(N)
    for k in _EISENSTEIN_FACTORS[weight]:
        f = _mul_trunc(f, eisenstein_coefficients(k, N), N)
    return tuple(f)


def eigenform_coefficients(weight: int, N: int) -> list[int]:
    """Integer Fourier coefficients c(0..N) of the normalized level-one eigenform.

    Args:
        weight: One of 12, 16, 18, 20, 22, 26 (dim S_k = 1).
        N: Number of terms after the constant term.

    Returns:
        List with c(0) = 0, c(1) = 1.
    """
    return list(_eigenform_exact(int(weight), int(N)))


def normalized_coefficients(weight: int, N: int) -> np.ndarray:
    """lambda(n) = c(n) / n^{(k-1)/2} for 0 <= n <= N (lambda(0) = 0)."""
    c = _eigenform_exact(int(weight), int(N))
    out = np.array([float(x) for x in c], dtype=np.float64)
    n = np.arange(N + 1, dtype=np.float64)
    out[1:] /= n[1:] ** ((weight - 1) / 2)
    return out


# --------------------------------------------------------------------------
# prime eigenvalues with a disk cache for long ranges


def _cache_dir() -> Path:
    root = os.environ.get("RESLAB_CACHE_DIR")
    return Path(root) if root else Path.home() / ".cache" / "reslab"


@lru_cache(maxsize=8)
def _prime_eigs_memory(weight: int, P: int) -> tuple[np.ndarray, np.ndarray]:
    primes = sieve_primes(max(P, 2)).primes
    path = _cache_dir() / f"lambda_w{weight}_p{P}.npz"
    if path.exists():
        try:
            data = np.load(path)
            if np.array_equal(data["primes"], primes):
                return primes, data["lam"]
        except (OSError, KeyError, ValueError):
            pass
    if weight == 12 and P > 200_000:
        # only the prime slots are decoded from the long expansion
        twos = _eta24_twos(P)
        taus = _twos_to_ints(twos, primes - 1)
        del twos
        lam = np.array([float(t) for t in taus]) / primes.astype(np.float64) ** 5.5
    else:
        lam = normalized_coefficients(weight, P)[primes]
    lam.setflags(write=False)
    if P > 200_000:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            tmp = path.with_suffix(".tmp.npz")
            np.savez(tmp, primes=primes, lam=lam)
            os.replace(tmp, path)
        except OSError:
            pass
    return primes, lam


def prime_eigenvalues(weight: int, P: int) -> tuple[np.ndarray, np.ndarray]:
    """Normalized Hecke eigenvalues lambda(p) for all primes p <= P.

    Long ranges are cached on disk under ``RESLAB_CACHE_DIR`` (default
    ``~/.cache/reslab``).

    Returns:
        (primes, lam) as read-only arrays.
    """
    return _prime_eigs_memory(int(weight), int(P))
