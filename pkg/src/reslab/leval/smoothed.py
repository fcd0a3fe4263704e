"""Exponentially smoothed Dirichlet sums sum a(n) n^{-1/2-it} e^{-n/Y}.

For a product L = prod L_i of degree d_L the smoothed sum differs from
L(1/2+it) by a contour integral of size O(1) (the shifted Mellin integral of
Gamma(w) Y^w).  The sum is truncated at N_t = 3 Y log Y, beyond which
e^{-n/Y} <= n^{-2}.  No pole term is subtracted for zeta factors; at the
heights used it is below 1e-30.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..coeffs import CoefficientSource, product_coefficients
from ..errors import ResourceError, ValidationError
from .nufft import dirichlet_poly_direct


@dataclass(frozen=True)
class SmoothedSumParams:
    """Smoothing length Y and degree d_L of the product."""

    Y: float
    d_L: int = 1

    def __post_init__(self):
        if self.Y < math.e or self.d_L < 1:
            raise ValidationError("need Y >= e and d_L >= 1")

    @property
    def N_t(self) -> int:
        return int(math.ceil(3 * self.Y * math.log(self.Y)))

    def tail_bound(self) -> float:
        """Bound on sum_{n > N_t} |a(n)| n^{-1/2} e^{-n/Y}.

        Uses |a(n)| <= tau_{d_L}(n) <= (2 sqrt n)^{d_L - 1} and compares the
        decreasing summand n^beta e^{-n/Y} with its integral.
        """
        N = self.N_t
        beta = (self.d_L - 2) / 2
        b = max(beta, 0.0)
        if b * self.Y >= N:
            raise ValidationError("Y too small for the tail estimate")
        integral = N**beta * math.exp(-N / self.Y) * self.Y / (1 - b * self.Y / N)
        return 2.0 ** (self.d_L - 1) * integral


def smoothed_sum(coeffs: np.ndarray, t: float | np.ndarray, Y: float, d_L: int = 1) -> tuple[np.ndarray | complex, float]:
    """sum_{n <= N_t} a(n) n^{-1/2-it} e^{-n/Y} from a coefficient table.

    Args:
        coeffs: a(n) for 0 <= n < len (a(0) ignored).
        t: One height or an array of heights.
        Y: Smoothing length.
        d_L: Degree of the product, for the tail bound.

    Returns:
        (value(s), tail bound).

    Raises:
        ResourceError: if the table is shorter than N_t.
    """
    par = SmoothedSumParams(float(Y), int(d_L))
    N = par.N_t
    if len(coeffs) <= N:
        raise ResourceError(f"smoothed sum needs coefficients up to N_t={N}, have {len(coeffs) - 1}")
    n = np.arange(1, N + 1)
    c = np.asarray(coeffs[1 : N + 1], dtype=np.complex128) * np.exp(-n / par.Y)
    vals = dirichlet_poly_direct(n, c, np.atleast_1d(t))
    out = complex(vals[0]) if np.ndim(t) == 0 else vals
    return out, par.tail_bound()


def smoothed_product_sum(sources: Sequence[CoefficientSource], t: float | np.ndarray, Y: float) -> tuple[np.ndarray | complex, float]:
    """Smoothed sum for prod_i L_i(s), with coefficients built by Dirichlet multiplication."""
    if not sources:
        raise ValidationError("need at least one source")
    d_L = sum(s.degree for s in sources)
    N = SmoothedSumParams(float(Y), d_L).N_t
    coeffs = product_coefficients(list(sources), N)
    return smoothed_sum(coeffs, t, Y, d_L)
