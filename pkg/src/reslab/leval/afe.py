"""Approximate functional equations for degree-two L-functions.

A holomorphic level-N form of weight k has completed L-function

    Lambda(s) = Q^s Gamma(s + mu) L(s),   Q = sqrt(N)/(2 pi),  mu = (k-1)/2,

with Lambda(s) = eps * conj-Lambda(1 - s).  For any entire G with G(0) = 1
and enough decay,

    L(s) = sum_n A(n) n^{-s} W_1(n) + eps Q^{1-2s} sum_n conj(A(n)) n^{s-1} W_2(n),

    W_1(n) = 1/(2 pi i) int_(c) Gamma(s+mu+w)/Gamma(s+mu) (Q/n)^w G(w) dw/w,
    W_2(n) = 1/(2 pi i) int_(c) Gamma(1-s+mu+w)/Gamma(s+mu) (Q/n)^w G(-w) dw/w.

We take G(w) = exp(-i beta w + w^2/lam^2) with beta = (pi/2) sgn t; the
exponential factor cancels the e^{pi |v|/2} growth of the gamma ratio along
the contour, so no cancellation occurs at large t.  Each W(n) is computed
by the trapezoid rule on Re w = +c (n beyond the transition point) or on
Re w = -c plus the residue at w = 0 (n below it), so that every quadrature
has integrand of size at most one.

At s = 1/2 with G = 1 the weights reduce to regularized incomplete gamma
functions, used for central values of twists.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import special

from ..errors import ValidationError
from ..limits import check_alloc


def _weights(
    logn: np.ndarray, s: complex, z: complex, logQ: float, beta: float, lam: float, c: float, hv: float, vmax: float, dual: bool
) -> np.ndarray:
    """W(n) for the first (dual=False) or second (dual=True) sum."""
    sgn = -1.0 if dual else 1.0
    v = np.arange(-vmax, vmax + hv / 2, hv)
    z_first = s + z  # s + mu
    z_top = (1 - s + z) if dual else z_first
    log_gamma_base = special.loggamma(z_first)
    out = np.empty(len(logn), dtype=np.complex128)
    for side in (+1, -1):
        w = side * c + 1j * v
        lg = special.loggamma(z_top + w) - log_gamma_base
        lG = -1j * beta * (sgn * w) + (w * w) / (lam * lam)
        kern = np.exp(lg + lG) / w * (hv / (2 * math.pi))
        sel = (logn > logQ + math.log(abs(z_first))) if side > 0 else (logn <= logQ + math.log(abs(z_first)))
        if not sel.any():
            continue
        d = logQ - logn[sel]
        # kern @ exp(w * d) in blocks
        vals = np.empty(int(sel.sum()), dtype=np.complex128)
        step = max(1, (1 << 22) // len(w))
        for i in range(0, len(d), step):
            dd = d[i : i + step]
            vals[i : i + step] = np.exp(np.multiply.outer(dd, w)) @ kern
        if side < 0:
            res = 1.0 if not dual else np.exp(special.loggamma(z_top) - log_gamma_base)
            vals = res + vals
        out[sel] = vals
    return out


def gl2_afe(
    coeffs: np.ndarray,
    t: float,
    weight: int,
    level: int = 1,
    root_number: complex | None = None,
    dual_coeffs: np.ndarray | None = None,
    lam: float = 8.0,
    eps: float = 1e-10,
) -> complex:
    """L(1/2 + it) for a holomorphic form from its Dirichlet coefficients.

    Args:
        coeffs: A(n) for 0 <= n <= len-1 (A(0) ignored); must reach the
            length returned by :func:`afe_length`.
        t: Height.
        weight: Weight k (mu = (k-1)/2).
        level: Level N (conductor).
        root_number: Defaults to i^k (level one).
        dual_coeffs: Coefficients of the dual form (default: conj(coeffs)).
        lam: Width of the Gaussian factor in G.
        eps: Tolerance used to size the quadrature and the sums.
    """
    mu = (weight - 1) / 2
    s = complex(0.5, t)
    logQ = 0.5 * math.log(level) - math.log(2 * math.pi)
    eps_root = (1j) ** weight if root_number is None else root_number
    beta = 0.0 if t == 0 else math.copysign(math.pi / 2, t)
    c = min(1.5, (0.5 + mu) / 2)
    hv = c / 7
    vmax = lam * math.sqrt(math.log(1e4 / eps))
    nmax = afe_length(t, weight, level, lam, eps)
    if len(coeffs) <= nmax:
        raise ValidationError(f"AFE needs coefficients up to n={nmax}, have {len(coeffs) - 1}")
    check_alloc(16 * nmax * 64, "AFE weight matrix")
    n = np.arange(1, nmax + 1)
    logn = np.log(n.astype(np.float64))
    A = np.asarray(coeffs[1 : nmax + 1], dtype=np.complex128)
    Ad = np.conj(A) if dual_coeffs is None else np.asarray(dual_coeffs[1 : nmax + 1], dtype=np.complex128)
    W1 = _weights(logn, s, mu, logQ, beta, lam, c, hv, vmax, dual=False)
    W2 = _weights(logn, s, mu, logQ, beta, lam, c, hv, vmax, dual=True)
    first = np.sum(A * np.exp(-s * logn) * W1)
    second = np.sum(Ad * np.exp((s - 1) * logn) * W2)
    return complex(first + eps_root * np.exp((1 - 2 * s) * logQ) * second)


def gl2_half_line(src, t: float, eps: float = 1e-10) -> complex:
    """L(1/2 + it, f) for a degree-2 source of known holomorphic weight (level one).

    Raises:
        GapError: if the source's coefficients do not reach the AFE length.
        ValidationError: if the source has no weight, so no gamma factor.
    """
    if getattr(src, "degree", None) != 2 or getattr(src, "weight", None) is None:
        raise ValidationError("gl2_half_line needs a degree-2 source with a holomorphic weight")
    N = afe_length(float(t), src.weight, eps=eps)
    return gl2_afe(src.coefficients(N + 1), float(t), src.weight, eps=eps)


def afe_length(t: float, weight: int, level: int = 1, lam: float = 8.0, eps: float = 1e-10) -> int:
    """Number of terms used by :func:`gl2_afe`."""
    mu = (weight - 1) / 2
    X = math.sqrt(level) / (2 * math.pi) * abs(complex(0.5 + mu, t))
    spread = 2 * math.sqrt(math.log(1e4 / eps)) / lam
    return int(math.ceil(X * math.exp(spread) * 1.05 + 20))


# --------------------------------------------------------------------------
# central values


def central_weights(n: np.ndarray, weight: int, sqrt_conductor: float, split: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Incomplete-gamma weights of the central-point AFE.

    With Lambda(s) = (sqrt(cond)/2pi)^s Gamma(s+(k-1)/2) L(s) and G(w) = split^w,

        L(1/2) = sum A(n) n^{-1/2} V(2 pi n/(sqrt(cond) split))
                 + eps sum conj(A)(n) n^{-1/2} V(2 pi n split/sqrt(cond)),

    V(y) = Gamma(k/2, y)/Gamma(k/2).  The value is independent of ``split``
    exactly when eps is the true root number.
    """
    y = 2 * math.pi * np.asarray(n, dtype=np.float64) / sqrt_conductor
    a = weight / 2
    return special.gammaincc(a, y / split) / np.sqrt(n), special.gammaincc(a, y * split) / np.sqrt(n)


def central_length(weight: int, sqrt_conductor: float, split: float = 1.0, eps: float = 1e-16) -> int:
    """Smallest n_max beyond which both weight sequences are below eps."""
    a = weight / 2
    y = a + 1.0
    while special.gammaincc(a, y) > eps:
        y *= 1.2
    return int(math.ceil(y * sqrt_conductor * max(split, 1 / split) / (2 * math.pi))) + 1


def central_value(
    coeffs: np.ndarray, weight: int, sqrt_conductor: float, root_number: complex, dual_coeffs: np.ndarray | None = None, split: float = 1.0
) -> complex:
    """L(1/2) of a weight-k GL(2) L-function from its Dirichlet coefficients."""
    nmax = central_length(weight, sqrt_conductor, split)
    if len(coeffs) <= nmax:
        raise ValidationError(f"central value needs coefficients to n={nmax}, have {len(coeffs) - 1}")
    n = np.arange(1, nmax + 1)
    w1, w2 = central_weights(n, weight, sqrt_conductor, split)
    A = np.asarray(coeffs[1 : nmax + 1])
    Ad = np.conj(A) if dual_coeffs is None else np.asarray(dual_coeffs[1 : nmax + 1])
    return complex(np.sum(A * w1) + root_number * np.sum(Ad * w2))
