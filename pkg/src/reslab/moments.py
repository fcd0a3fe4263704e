"""Twisted moments over [T, 2T], Euler-product predictions and the threshold V.

Measured moments are (1/T) int Phi(t/T) f(t) |R(t)|^2 dt for f a product of
|L_j(1/2+it)|^2, by the trapezoid rule on a critical-line grid.  Predictions
are the diagonal Euler products with every (1 + o(1)) factor set to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateInputError, InvariantViolation, ValidationError
from .leval.grid import CriticalLineGrid
from .resonator import Resonator

O1_DISCLOSURE = "all (1+o(1)) factors in predictions are set to 1; measured/predicted ratios are reported, not asserted"
ACCURACY_WARN = 0.05


# --------------------------------------------------------------------------
# weights and quadrature


@dataclass(frozen=True)
class SmoothWeight:
    """Phi on t/T: the indicator of [a, b] or a C-infinity bump supported there."""

    kind: str = "indicator"
    support: tuple[float, float] = (1.0, 2.0)

    def __post_init__(self):
        if self.kind not in ("indicator", "bump"):
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if not self.support[0] < self.support[1]:
            raise ValidationError("empty weight support")

    def __call__(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        a, b = self.support
        inside = (u >= a) & (u <= b)
        if self.kind == "indicator":
            return inside.astype(np.float64)
        x = (2 * u - a - b) / (b - a)
        out = np.zeros_like(u)
        m = np.abs(x) < 1
        out[m] = np.exp(1 - 1 / (1 - x[m] ** 2))
        return out

    def mass(self) -> float:
        """Phi-hat(0) = int Phi(u) du."""
        a, b = self.support
        if self.kind == "indicator":
            return b - a
        u = np.linspace(a, b, 20001)
        return float(np.trapezoid(self(u), u))


@dataclass(frozen=True)
class MomentValue:
    """A quadrature value with its half-grid discretization estimate."""

    value: float
    rel_err_est: float
    warning: str | None = None


def _trapezoid(y: np.ndarray, h: float) -> float:
    if len(y) < 2:
        return 0.0
    return h * (float(np.sum(y[1:-1])) + 0.5 * (y[0] + y[-1]))


def quadrature_moment(
    grid: CriticalLineGrid,
    labels: Sequence[str] = (),
    weight: SmoothWeight | None = None,
    use_R: bool = True,
) -> MomentValue:
    """(1/T) int Phi(t/T) prod_{j in labels} |L_j|^2 |R|^2 dt on the grid.

    The estimate compares the trapezoid value on the grid with that on every
    other point; a relative difference above 5% adds a warning.
    """
    weight = weight or SmoothWeight()
    y = weight(grid.points / grid.T)
    for lab in labels:
        if lab not in grid.values:
            raise ValidationError(f"grid has no values for {lab}")
        y = y * np.abs(grid.values[lab]) ** 2
    if use_R:
        if grid.R is None:
            raise ValidationError("grid has no resonator values")
        y = y * np.abs(grid.R) ** 2
    full = _trapezoid(y, grid.h) / grid.T
    half_y = y[:: 2] if (len(y) - 1) % 2 == 0 else y[: len(y) - 1 : 2]
    half = _trapezoid(half_y, 2 * grid.h) / grid.T
    # the half grid misses the last point when the count is even; rescale
    span_full = (len(y) - 1) * grid.h
    span_half = (len(half_y) - 1) * 2 * grid.h
    if span_half > 0 and span_half != span_full:
        half *= span_full / span_half
    rel = abs(full - half) / abs(full) if full else 0.0
    warn = f"half-grid discrepancy {rel:.3g} exceeds {ACCURACY_WARN}" if rel > ACCURACY_WARN else None
    return MomentValue(float(full), float(rel), warn)


# --------------------------------------------------------------------------
# Euler-product predictions


def _sqrt_p(res: Resonator) -> np.ndarray:
    return np.sqrt(res.primes.astype(np.float64))


def _log_product(res: Resonator, cross: np.ndarray) -> float:
    return float(np.sum(np.log(1 + np.abs(res.r_p) ** 2 + cross)))


def lower_bound_product(res: Resonator, a: np.ndarray | None = None) -> float:
    """prod_p (1 + |r(p)|^2 + 2 Re(r(p) conj(a(p)))/sqrt p), a defaulting to the combined a."""
    a = res.a if a is None else np.asarray(a)
    return math.exp(_log_product(res, 2 * np.real(res.r_p * np.conj(a)) / _sqrt_p(res)))


def upper_bound_product_single(res: Resonator, a_i: np.ndarray) -> float:
    """prod_p (1 + |r(p)|^2 + 2 Re(r(p) conj(a_i(p)))/sqrt p)."""
    return lower_bound_product(res, a_i)


def gl2_local_factor(lam: np.ndarray, primes: np.ndarray) -> np.ndarray:
    """lambda(p)(1 - 1/p)(1 - p^-2)^-1 = lambda(p) p/(p+1)."""
    pf = np.asarray(primes, dtype=np.float64)
    return np.asarray(lam) * (1 - 1 / pf) / (1 - pf**-2.0)


def gl2_diagonal_product(res: Resonator, lam: np.ndarray) -> float:
    """Central-point diagonal prod_p (1 + |r|^2 + 2 Re(r conj(z(p)))/sqrt p), z = lambda p/(p+1)."""
    z = gl2_local_factor(lam, res.primes)
    return math.exp(_log_product(res, 2 * np.real(res.r_p * np.conj(z)) / _sqrt_p(res)))


def gl2_diagonal_double_sum(res: Resonator, lam: np.ndarray) -> complex:
    """Exhaustive sum_{h,k} r(h) conj(r(k)) Z(h/g, k/g) g/sqrt(hk), g = (h, k).

    Z(h', k') = prod_{p | h'} conj(z(p)) prod_{p | k'} z(p) on coprime
    squarefree h', k'.  Equals :func:`gl2_diagonal_product` when the support
    is the full set of window-prime products.
    """
    zmap = dict(zip(res.primes.tolist(), gl2_local_factor(lam, res.primes)))
    n = res.n.tolist()
    r = res.r
    total = 0j
    for i, h in enumerate(n):
        for j, k in enumerate(n):
            g = math.gcd(h, k)
            val = r[i] * np.conj(r[j]) * g / math.sqrt(h * k)
            hp, kp = h // g, k // g
            for p, zp in zmap.items():
                if hp % p == 0:
                    val *= np.conj(zp)
                elif kp % p == 0:
                    val *= zp
            total += val
    return complex(total)


def _mean_log_integral(T: float, support: tuple[float, float]) -> tuple[float, float]:
    """((1/T) int_{aT}^{bT} log t dt, b - a)."""
    a, b = support
    F = lambda u: u * T * (math.log(u * T) - 1)  # noqa: E731
    return (F(b) - F(a)) / T, b - a


def second_moment_prediction(res: Resonator, src, T: float, weight: SmoothWeight | None = None, max_support: int = 20_000) -> float:
    """Diagonal main term of (1/T) int |L(1/2+it)|^2 |R(t)|^2 dt for a degree-one L.

    With g = (m, n), h = m/g, k = n/g and chi of modulus q (q = 1 for zeta):

        sum_{m,n} r(m) conj(r(n)) conj(chi(h)) chi(k) (phi(q)/q) g/sqrt(mn)
            * (log(q t g^2/(2 pi m n)) + 2 gamma + 2 sum_{p | q} log p/(p-1))

    averaged over t in the weight's support (indicator weights only).
    """
    weight = weight or SmoothWeight()
    if weight.kind != "indicator":
        raise ValidationError("the diagonal prediction is implemented for indicator weights")
    if src.degree != 1:
        raise ValidationError("diagonal prediction needs a degree-one source")
    n = res.n.astype(np.int64)
    if len(n) > max_support:
        raise ValidationError(f"support of {len(n)} members exceeds {max_support} for the double sum")
    chi = getattr(src, "chi", None)
    q = 1 if chi is None else chi.modulus
    phi_ratio, shift = 1.0, 0.0
    for p in sorted({d for d in range(2, q + 1) if q % d == 0 and all(d % e for e in range(2, d))}):
        phi_ratio *= 1 - 1 / p
        shift += 2 * math.log(p) / (p - 1)
    log_int, width = _mean_log_integral(T, weight.support)
    const = width * (math.log(q / (2 * math.pi)) + 2 * np.euler_gamma + shift)
    total = 0j
    rows = max(1, (1 << 22) // max(len(n), 1))
    for i in range(0, len(n), rows):
        m = n[i : i + rows, None]
        g = np.gcd(m, n[None, :])
        mn = m.astype(np.float64) * n[None, :]
        term = np.outer(res.r[i : i + rows], np.conj(res.r)) * g / np.sqrt(mn)
        if chi is not None:
            term = term * np.conj(chi.values(m // g)) * chi.values(n[None, :] // g)
        total += np.sum(term * (log_int + const + width * np.log(g.astype(np.float64) ** 2 / mn)))
    return float(total.real) * phi_ratio


# --------------------------------------------------------------------------
# threshold and detection


def compute_V(prod_moment: float, single_moments: Sequence[float]) -> float:
    """V = M_prod / (2 sum_i M_i), M_i the moment without the i-th factor."""
    den = 2 * float(np.sum(single_moments))
    if den == 0:
        raise DegenerateInputError("V is undefined: all leave-one-out moments vanish")
    return float(prod_moment) / den


def detection_function(x: np.ndarray, V: float) -> np.ndarray:
    """prod_j x_j - V sum_i prod_{j != i} x_j for rows x of shape (m, n)."""
    x = np.asarray(x, dtype=np.float64)
    prod = np.prod(x, axis=0)
    loo = np.zeros_like(prod)
    for i in range(x.shape[0]):
        loo += np.prod(np.delete(x, i, axis=0), axis=0)
    return prod - V * loo


def detect_simultaneous(grid: CriticalLineGrid, V: float, labels: Sequence[str] | None = None) -> np.ndarray:
    """Grid heights where the detection function is positive.

    Raises:
        InvariantViolation: if a returned t has some |L_j|^2 <= V.
    """
    labels = list(labels or grid.values)
    x = np.array([np.abs(grid.values[l]) ** 2 for l in labels])
    hit = detection_function(x, V) > 0
    if hit.any() and not np.all(x[:, hit].min(axis=0) > V):
        raise InvariantViolation("detected point with min |L_j|^2 <= V")
    return grid.points[hit]


def predicted_threshold(m: int, X: float) -> float:
    """exp(2 sqrt((1/m) log X / loglog X)), the main-form size of V."""
    if X < 16:
        raise ValidationError("need X >= 16")
    lx = math.log(X)
    return math.exp(2 * math.sqrt(lx / (m * math.log(lx))))


@dataclass(frozen=True)
class ExponentReport:
    """Constant c in exp(c sqrt(log Q / loglog Q)) for a setup."""

    setup: str
    c: float
    printed: str
    notes: tuple[str, ...] = field(default_factory=tuple)


def predicted_exponent(setup: str, theta: float = 0.0, Delta: float | None = None, m: int = 2) -> ExponentReport:
    """Constants of the large/small value theorems, with o(1) dropped.

    Setups:
        "dirichlet_pair": two primitive Dirichlet L-functions, c = sqrt(17/66).
        "product": the product L_1 L_2, c = sqrt(2).
        "gl2": a GL(2) form with Ramanujan exponent theta (two readings).
        "modq": f x chi and g x chi over chi mod q, c = 1/(12 sqrt 10).
        "modq_product": the product over the same family, c = 1/(6 sqrt 10).
        "quadratic_small": small values of quadratic twists, c = 1.
        "general": c = sqrt(Delta/m) for given Delta and m.
    """
    if setup == "dirichlet_pair":
        return ExponentReport(setup, math.sqrt(17 / 66), "sqrt(17/66)", ("Delta < 17/33, c = sqrt(Delta/2)",))
    if setup == "product":
        return ExponentReport(setup, math.sqrt(2), "sqrt(2)")
    if setup == "gl2":
        stated = math.sqrt((1 - 2 * theta) / 12)
        derived = math.sqrt((1 - 2 * theta) / (12 + 4 * theta))
        note = (
            f"stated sqrt((1-2theta)/12) = {stated:.12g}; from Delta < (1/2-theta)/(3+theta), "
            f"sqrt(Delta/2) = sqrt((1-2theta)/(12+4theta)) = {derived:.12g}; these differ unless theta = 0"
        )
        return ExponentReport(setup, stated, "sqrt((1-2theta)/12)", (note,))
    if setup == "modq":
        return ExponentReport(setup, 1 / (12 * math.sqrt(10)), "1/(12 sqrt(10))")
    if setup == "modq_product":
        return ExponentReport(setup, 1 / (6 * math.sqrt(10)), "1/(6 sqrt(10))")
    if setup == "quadratic_small":
        return ExponentReport(setup, 1.0, "1")
    if setup == "general":
        if Delta is None:
            raise ValidationError("general setup needs Delta")
        return ExponentReport(setup, math.sqrt(Delta / m), f"sqrt({Delta}/{m})")
    raise ValidationError(f"unknown setup {setup!r}")


@dataclass
class MomentReport:
    """Measured moment next to its Euler-product prediction."""

    name: str
    measured: float
    predicted: float
    rel_err_est: float = 0.0
    grid_meta: dict = field(default_factory=dict)
    warning: str | None = None

    @property
    def ratio(self) -> float:
        return self.measured / self.predicted if self.predicted else math.inf

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "measured": self.measured,
            "predicted": self.predicted,
            "ratio": self.ratio,
            "rel_err_est": self.rel_err_est,
            "warning": self.warning,
            "grid": self.grid_meta,
        }
