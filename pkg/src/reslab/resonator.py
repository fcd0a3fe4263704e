"""Resonators R(t) = sum_{n <= X} r(n) n^{-it} with squarefree support.

For sources L_1, ..., L_m with a(p) = sum_i a_i(p) the resonator puts

    r(p) = a(p) * Lc / (sqrt(p) log p)

on the primes of a window, Lc = sqrt((1/m) log X loglog X), and extends r
multiplicatively to squarefree n <= X built from window primes.  The
asymptotic window is (Lc^2, exp((log Lc)^2)] with primes removed where some
|a_i(p)| exceeds (log p)^{1-eps}.  That window is empty for any feasible X,
so an explicit override window (p_min, p_max] with the same coefficient
formula is supported and recorded as the regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .arith import SquarefreeSupport, multiplicative_support, sieve_primes
from .coeffs import CoefficientSource, CombinedCoefficients
from .errors import ConfigurationError, RangeError, ValidationError
from .leval.grid import DYADIC_BITS
from .leval.nufft import dirichlet_poly_direct, dirichlet_poly_grid


@dataclass(frozen=True)
class ResonatorSpec:
    """Parameters of a resonator.

    Attributes:
        m: Number of L-functions.
        X: Length of the resonator.
        Delta: Exponent with X = T^Delta (recorded for reports).
        eps: Coefficient-cap exponent for the window.
        L_override: Replaces the default Lc when set.
        window: Override window (p_min, p_max]; None for the asymptotic one.
    """

    m: int
    X: float
    Delta: float = 0.5
    eps: float = 0.1
    L_override: float | None = None
    window: tuple[float, float] | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValidationError("m must be at least 1")
        if self.X < 1:
            raise ValidationError("X must be at least 1")
        if not 0 < self.Delta < 1:
            raise ValidationError("Delta must lie in (0, 1)")
        if self.eps <= 0:
            raise ValidationError("eps must be positive")
        if self.window is not None and not 0 <= self.window[0] < self.window[1]:
            raise ValidationError(f"bad override window {self.window}")
        if self.L_override is None and self.X < 16:
            raise ValidationError("default Lc needs X >= 16 (loglog X > 1)")

    @property
    def L(self) -> float:
        if self.L_override is not None:
            return float(self.L_override)
        lx = math.log(self.X)
        return math.sqrt(lx * math.log(lx) / self.m)

    @property
    def T(self) -> float:
        return self.X ** (1 / self.Delta)

    @property
    def regime(self) -> str:
        return "asymptotic" if self.window is None else "override"

    def window_range(self) -> tuple[float, float]:
        if self.window is not None:
            return float(self.window[0]), float(self.window[1])
        L = self.L
        return L * L, math.exp(math.log(L) ** 2)


def build_prime_window(spec: ResonatorSpec, sources: Sequence[CoefficientSource]) -> np.ndarray:
    """Primes of the window passing |a_i(p)| <= (log p)^{1-eps} for every source.

    Raises:
        ConfigurationError: if the window is empty, naming the bound.
    """
    lo, hi = spec.window_range()
    if hi <= lo:
        raise ConfigurationError(
            f"empty prime window: lower end {lo:.6g} >= upper end {hi:.6g} (Lc = {spec.L:.6g}, regime {spec.regime})"
        )
    primes = sieve_primes(max(int(hi), 2)).between(lo, hi)
    keep = np.ones(len(primes), dtype=bool)
    cap = np.log(primes.astype(np.float64)) ** (1 - spec.eps)
    for s in sources:
        keep &= np.abs(s.a_primes(primes)) <= cap
    out = primes[keep]
    if len(out) == 0:
        raise ConfigurationError(
            f"empty prime window: no prime in ({lo:.6g}, {hi:.6g}] satisfies |a_i(p)| <= (log p)^(1-eps)"
        )
    return out


@dataclass
class Resonator:
    """A built resonator; see :meth:`build`."""

    spec: ResonatorSpec
    combined: CombinedCoefficients
    primes: np.ndarray
    a: np.ndarray
    r_p: np.ndarray
    support: SquarefreeSupport
    r: np.ndarray
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def build(cls, spec: ResonatorSpec, sources: Sequence[CoefficientSource] | CombinedCoefficients) -> "Resonator":
        comb = sources if isinstance(sources, CombinedCoefficients) else CombinedCoefficients(sources)
        if comb.m != spec.m:
            raise ValidationError(f"spec has m={spec.m} but {comb.m} sources were given")
        primes = build_prime_window(spec, comb.sources)
        a = comb.a_primes(primes).astype(np.complex128)
        pf = primes.astype(np.float64)
        r_p = a * spec.L / (np.sqrt(pf) * np.log(pf))
        big = np.abs(r_p) ** 2 >= 1
        if big.any():
            raise ConfigurationError(
                f"|r(p)|^2 >= 1 at p={int(primes[big][0])}; shrink Lc or move the window up"
            )
        nz = r_p != 0
        support, r = multiplicative_support(dict(zip(primes[nz].tolist(), r_p[nz])), spec.X)
        return cls(spec, comb, primes, a, r_p, support, r)

    # -- coefficients --------------------------------------------------------
    def coefficient(self, p: int) -> complex:
        """r(p), zero outside the window."""
        i = int(np.searchsorted(self.primes, p))
        if i < len(self.primes) and self.primes[i] == p:
            return complex(self.r_p[i])
        return 0j

    def r_of(self, n: int) -> complex:
        """r(n) for any n (zero off the support)."""
        i = int(np.searchsorted(self.support.members, n))
        if i < len(self.support) and self.support.members[i] == n:
            return complex(self.r[i])
        return 0j

    @property
    def n(self) -> np.ndarray:
        return self.support.members

    # -- evaluation ------------------------------------------------------------
    def eval_R(self, t: float | np.ndarray) -> np.ndarray | complex:
        """R(t) by direct summation (phases in extended precision)."""
        vals = dirichlet_poly_direct(self.n, self.r, np.atleast_1d(t), sigma=0.0)
        return complex(vals[0]) if np.ndim(t) == 0 else vals

    def eval_R_grid(self, points: np.ndarray) -> np.ndarray:
        """R on many points; uniform dyadic grids go through the NUFFT."""
        pts = np.asarray(points, dtype=np.float64)
        if len(pts) >= 64 and _is_uniform_dyadic(pts):
            h = float(pts[1] - pts[0])
            return dirichlet_poly_grid(self.n, self.r, float(pts[0]), h, len(pts), sigma=0.0)
        return self.eval_R(pts)

    # -- norms -------------------------------------------------------------------
    def l2_norm(self) -> float:
        """sum_{n <= X} |r(n)|^2 over the support."""
        return float(np.sum(np.abs(self.r) ** 2))

    def euler_norm(self) -> float:
        """prod_p (1 + |r(p)|^2) over the window."""
        return float(np.exp(np.sum(np.log1p(np.abs(self.r_p) ** 2))))

    def rankin_tail_ratio(self, alpha: float | None = None) -> float:
        """Rankin majorant for the part of the Euler product beyond X.

        X^{-alpha} prod (1 + |r|^2 p^alpha + |r a| p^{alpha-1/2})
        / prod |1 + |r|^2 + a conj(r) p^{-1/2}|, default alpha = (log Lc)^-3.
        """
        if alpha is None:
            alpha = math.log(self.spec.L) ** -3
        if alpha <= 0:
            raise ValidationError("alpha must be positive")
        pf = self.primes.astype(np.float64)
        if len(pf) and alpha * math.log(pf.max()) > 700:
            raise RangeError(f"p^alpha overflows for alpha={alpha:g}")
        r2 = np.abs(self.r_p) ** 2
        pa = pf**alpha
        num = np.sum(np.log1p(r2 * pa + np.abs(self.r_p * self.a) * pa / np.sqrt(pf)))
        den = np.sum(np.log(np.abs(1 + r2 + self.a * np.conj(self.r_p) / np.sqrt(pf))))
        return float(np.exp(-alpha * math.log(self.spec.X) + num - den))

    def smallness_report(self) -> tuple[float, float]:
        """(max |r(p)|^2, max over i and p of |r(p) a_i(p)|/sqrt(p))."""
        if len(self.primes) == 0:
            return 0.0, 0.0
        each = self.combined.each_primes(self.primes)
        cross = np.abs(self.r_p[None, :] * each) / np.sqrt(self.primes.astype(np.float64))[None, :]
        return float(np.max(np.abs(self.r_p) ** 2)), float(np.max(cross))

    def to_csv(self, path: str | Path) -> None:
        """Write ``n, re_r, im_r`` sorted by n."""
        data = np.column_stack([self.n.astype(np.float64), self.r.real, self.r.imag])
        np.savetxt(path, data, fmt=["%d", "%.17g", "%.17g"], delimiter=",", header="n,re_r,im_r", comments="")

    def describe(self) -> dict:
        lo, hi = self.spec.window_range()
        return {
            "regime": self.spec.regime,
            "window": [lo, hi],
            "L": self.spec.L,
            "X": self.spec.X,
            "eps": self.spec.eps,
            "window_primes": int(len(self.primes)),
            "support_size": int(len(self.support)),
        }


def _is_uniform_dyadic(pts: np.ndarray) -> bool:
    scale = float(1 << DYADIC_BITS)
    s = pts * scale
    if not np.all(s == np.round(s)):
        return False
    d = np.diff(s)
    return bool(d[0] > 0 and np.all(d == d[0]))
