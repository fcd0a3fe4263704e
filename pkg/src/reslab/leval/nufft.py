"""Type-1 non-uniform FFT by Gaussian gridding, for Dirichlet polynomials on grids.

Evaluates F(k) = sum_j c_j exp(-i k x_j) for M consecutive integers k.  The
sources are spread onto an oversampled periodic grid with a Gaussian
kernel, transformed with one FFT, and the kernel is divided out
(Greengard & Lee, SIAM Rev. 46, 2004).  The fast-gridding factorisation
exp(-(d - o h)^2/4tau) = E1 * E2^o * E3(o) keeps the spreading to a few
vector operations per kernel offset.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import fft as sfft

from ..limits import check_alloc

# 2 pi correctly rounded to extended precision (2 * math.pi is off by 2.4e-16)
TWO_PI_EXT = np.longdouble("6.283185307179586476925286766559005768")


def nufft1(x: np.ndarray, c: np.ndarray, M: int, kmin: int = 0, msp: int = 16, oversample: float = 2.0) -> np.ndarray:
    """Sum c_j exp(-i k x_j) for k = kmin, ..., kmin + M - 1.

    Args:
        x: Real source locations (any range; reduced mod 2 pi).
        c: Complex source strengths.
        M: Number of output modes.
        kmin: First mode.
        msp: Kernel half-width in grid cells; 12 gives about 1e-12 and 16
            about 1e-15 relative to sum |c_j|.
        oversample: Ratio of fine grid to M, at least 2.

    Returns:
        complex128 array of length M.
    """
    # node reduction in extended precision: an absolute error delta in x
    # becomes a phase error k * delta in the k-th output
    two_pi = TWO_PI_EXT
    xl = np.asarray(x).astype(np.longdouble) % two_pi
    c = np.asarray(c, dtype=np.complex128)
    if M <= 0:
        return np.zeros(0, dtype=np.complex128)
    Mc = M + (M % 2)  # even mode count, centred on zero after the shift below
    shift = kmin + Mc // 2
    if shift:
        ph = (np.longdouble(shift) * xl) % two_pi
        c = c * np.exp(-1j * np.asarray(ph, dtype=np.float64))
    Mr = sfft.next_fast_len(int(math.ceil(oversample * Mc)))
    Mr += Mr % 2
    R = Mr / Mc
    tau = math.pi * msp / (Mc * Mc * R * (R - 0.5))
    check_alloc(16 * Mr * 3, f"NUFFT grid of {Mr} points")
    h_ext = two_pi / Mr
    h = float(h_ext)
    m0 = np.floor(xl / h_ext).astype(np.int64)
    d = np.asarray(xl - m0 * h_ext, dtype=np.float64)  # in [0, h)
    e1 = np.exp(-d * d / (4 * tau))
    e2 = np.exp(d * h / (2 * tau))
    fre = np.zeros(Mr)
    fim = np.zeros(Mr)
    cre, cim = c.real, c.imag
    # offsets o = 0, 1, ... , msp and -1, ..., -msp + 1 relative to m0
    w = e1.copy()
    for o in range(0, msp + 1):
        if o:
            w = w * e2
        k = w * math.exp(-(o * h) ** 2 / (4 * tau))
        idx = (m0 + o) % Mr
        fre += np.bincount(idx, weights=cre * k, minlength=Mr)
        fim += np.bincount(idx, weights=cim * k, minlength=Mr)
    w = e1.copy()
    inv_e2 = 1.0 / e2
    for o in range(1, msp):
        w = w * inv_e2
        k = w * math.exp(-(o * h) ** 2 / (4 * tau))
        idx = (m0 - o) % Mr
        fre += np.bincount(idx, weights=cre * k, minlength=Mr)
        fim += np.bincount(idx, weights=cim * k, minlength=Mr)
    F = sfft.fft(fre + 1j * fim) / Mr
    ks = np.arange(-Mc // 2, Mc // 2)
    out = F[ks % Mr] * math.sqrt(math.pi / tau) * np.exp(ks * ks * tau)
    return out[:M]


def dirichlet_poly_grid(
    n: np.ndarray, coef: np.ndarray, t0: float, h: float, M: int, sigma: float = 0.5, msp: int = 16
) -> np.ndarray:
    """Values of sum_n coef_n n^{-sigma - i t} at t = t0 + k h, k < M.

    Phases and FFT nodes are reduced in extended precision.
    """
    n = np.asarray(n)
    ln = np.log(n.astype(np.longdouble))
    amp = np.asarray(coef, dtype=np.complex128) * np.exp(-sigma * np.log(n.astype(np.float64)))
    return log_poly_grid(ln, amp, t0, h, M, msp)


def log_poly_grid(log_n: np.ndarray, amp: np.ndarray, t0: float, h: float, M: int, msp: int = 16) -> np.ndarray:
    """sum_j amp_j exp(-i t log_n_j) at t = t0 + k h, with extended-precision log_n."""
    ln = np.asarray(log_n).astype(np.longdouble)
    two_pi = TWO_PI_EXT
    ph0 = np.asarray((ln * np.longdouble(t0)) % two_pi, dtype=np.float64)
    x = (ln * np.longdouble(h)) % two_pi
    return nufft1(x, np.asarray(amp, dtype=np.complex128) * np.exp(-1j * ph0), M, 0, msp=msp)


def dirichlet_poly_direct(n: np.ndarray, coef: np.ndarray, ts: np.ndarray, sigma: float = 0.5, chunk: int = 1 << 22) -> np.ndarray:
    """Direct evaluation of sum_n coef_n n^{-sigma - i t} at arbitrary t."""
    ts = np.atleast_1d(np.asarray(ts, dtype=np.float64))
    n = np.asarray(n)
    if len(n) == 0:
        return np.zeros(len(ts), dtype=np.complex128)
    ln = np.log(n.astype(np.float64))
    ln_ext = np.log(n.astype(np.longdouble))
    a = np.asarray(coef, dtype=np.complex128) * np.exp(-sigma * ln)
    out = np.empty(len(ts), dtype=np.complex128)
    rows = max(1, chunk // len(n))
    two_pi = TWO_PI_EXT
    for i in range(0, len(ts), rows):
        tt = ts[i : i + rows].astype(np.longdouble)
        ph = np.asarray(np.multiply.outer(tt, ln_ext) % two_pi, dtype=np.float64)
        out[i : i + rows] = np.exp(-1j * ph) @ a
    return out
