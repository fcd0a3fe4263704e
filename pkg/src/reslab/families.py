"""Family experiments: twists of two GL(2) forms by characters.

Two families are covered.

* mod q: L(1/2, f x chi) and L(1/2, g x chi) for the non-trivial characters
  chi modulo a prime q, searched for simultaneously large values with the
  resonator R(chi) = sum r(n) varpi(n) chi(n), varpi built from the starred
  eigenvalues.
* quadratic: L(1/2, f x chi_{8d}) for odd squarefree d in [X, 2X], searched
  for simultaneously small values with R = sum mu(n) r(n) varpi(n) chi_{8d}(n),
  varpi built from the local ratios h_f(p).

Both forms are level-one holomorphic eigenforms, so the auxiliary integer in
the support rule is taken to be 1.  Characters mod q are handled in bulk: a
sum sum_n c(n) chi_j(n) is an FFT of the bucket sums of c over discrete logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .arith import (
    DirichletCharacter,
    SquarefreeSupport,
    is_prime,
    is_squarefree,
    multiplicative_support,
    primitive_root,
    quadratic_character_values,
    sieve_primes,
)
from .coeffs import HeckeSource
from .errors import ConfigurationError, InvariantViolation, ResourceError, ValidationError
from .leval.afe import central_length, central_weights

MAX_MODULUS = 3000
MAX_QUAD_X = 2000
WALDSPURGER_TOL = 1e-8


# --------------------------------------------------------------------------
# local data


def starred(f: HeckeSource, g: HeckeSource, p: int | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(lambda*_f(p), lambda*_g(p)) with the exact factor (1 - 1/p)^{-1}.

    lambda*_f(p) = (p lambda_f(p) - lambda_g(p)) / (p - 1), symmetrically for g.
    """
    _need_gl2(f, g)
    pa = np.atleast_1d(np.asarray(p, dtype=np.int64))
    lf = np.real(f.a_primes(pa))
    lg = np.real(g.a_primes(pa))
    pf = pa.astype(np.float64)
    sf = (pf * lf - lg) / (pf - 1)
    sg = (pf * lg - lf) / (pf - 1)
    if np.ndim(p) == 0:
        return sf[0], sg[0]
    return sf, sg


def h_local(lam: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Local ratio h(p) of the quadratic-twist main term for eigenvalue lambda(p).

    h = p^{3/2}/(2(p+1)) (A - B) / (1 + p/(2(p+1)) (A + B - 2)) with
    A = (1 - lambda/sqrt p + 1/p)^{-1} and B = (1 + lambda/sqrt p + 1/p)^{-1}.
    """
    lam = np.asarray(lam, dtype=np.float64)
    pf = np.asarray(p, dtype=np.float64)
    x = lam / np.sqrt(pf)
    A = 1 / (1 - x + 1 / pf)
    B = 1 / (1 + x + 1 / pf)
    num = pf**1.5 / (2 * (pf + 1)) * (A - B)
    den = 1 + pf / (2 * (pf + 1)) * (A + B - 2)
    return num / den


def h_f(src: HeckeSource, p: int | np.ndarray) -> np.ndarray:
    """h_f(p) for a level-one source; asserts |h_f - lambda_f| <= 5|lambda_f|/p for p >= 11."""
    pa = np.atleast_1d(np.asarray(p, dtype=np.int64))
    lam = np.real(src.a_primes(pa))
    h = h_local(lam, pa)
    big = pa >= 11
    if np.any(np.abs(h - lam)[big] > 5 * np.abs(lam)[big] / pa[big] + 1e-15):
        raise InvariantViolation(f"h_f deviates from lambda_f beyond 5|lambda|/p for {src.label}")
    return h[0] if np.ndim(p) == 0 else h


def _need_gl2(*srcs: HeckeSource) -> None:
    for s in srcs:
        if getattr(s, "degree", None) != 2:
            raise ValidationError(f"{getattr(s, 'label', s)!r} is not a degree-2 source")


def _need_level_one(src: HeckeSource) -> int:
    if src.weight is None:
        raise ValidationError(f"{src.label} has no holomorphic weight; central values need one")
    return int(src.weight)


# --------------------------------------------------------------------------
# resonator


@dataclass(frozen=True)
class FamilyResonatorSpec:
    """Parameters of a family resonator.

    Attributes:
        N: Length of the polynomial.
        a_omega: Variance constant in Lc = sqrt(log N loglog N / a_omega).
        L_override: Replaces the default Lc when set.
        window: Override prime window [p_min, p_max]; None for [Lc^2, exp((log Lc)^2)].
        u: Auxiliary coprimality integer of the support rule.
    """

    N: float
    a_omega: float = 1.0
    L_override: float | None = None
    window: tuple[float, float] | None = None
    u: int = 1

    def __post_init__(self):
        if self.N < 1:
            raise ValidationError("N must be at least 1")
        if self.a_omega <= 0:
            raise ValidationError("a_omega must be positive")
        if self.window is not None and not 0 <= self.window[0] <= self.window[1]:
            raise ValidationError(f"bad window {self.window}")
        if self.L_override is None and self.N < 16:
            raise ValidationError("default Lc needs N >= 16")
        if self.u < 1:
            raise ValidationError("u must be a positive integer")

    @property
    def L(self) -> float:
        if self.L_override is not None:
            return float(self.L_override)
        ln = math.log(self.N)
        return math.sqrt(ln * math.log(ln) / self.a_omega)

    @property
    def regime(self) -> str:
        return "asymptotic" if self.window is None else "override"

    def window_range(self) -> tuple[float, float]:
        if self.window is not None:
            return float(self.window[0]), float(self.window[1])
        L = self.L
        return L * L, math.exp(math.log(L) ** 2)


@dataclass
class FamilyResonator:
    """Resonator data on the window primes.

    ``lf``, ``lg`` hold the starred eigenvalues (mod-q kind) or the local
    ratios h (quadratic kind); ``varpi`` vanishes off the selected set.
    """

    spec: FamilyResonatorSpec
    kind: str
    primes: np.ndarray
    lf: np.ndarray
    lg: np.ndarray
    selected: np.ndarray
    varpi: np.ndarray
    r_p: np.ndarray
    support: SquarefreeSupport
    b: np.ndarray

    @property
    def omega(self) -> np.ndarray:
        return self.varpi**2

    @property
    def omega1(self) -> np.ndarray:
        return self.varpi * self.lf

    @property
    def omega2(self) -> np.ndarray:
        return self.varpi * self.lg

    @property
    def omega_prime(self) -> np.ndarray:
        return self.omega1 + self.omega2

    @property
    def n(self) -> np.ndarray:
        return self.support.members

    def mean_square(self) -> float:
        """sum_n b(n)^2 = sum_{n <= N} r(n)^2 omega(n)."""
        return float(np.sum(self.b**2))

    def euler_mean_square(self) -> float:
        """prod_p (1 + r(p)^2 omega(p)) over the window."""
        return float(np.exp(np.sum(np.log1p(self.r_p**2 * self.omega))))

    def describe(self) -> dict:
        lo, hi = self.spec.window_range()
        return {
            "kind": self.kind,
            "regime": self.spec.regime,
            "window": [lo, hi],
            "L": self.spec.L,
            "N": self.spec.N,
            "a_omega": self.spec.a_omega,
            "u": self.spec.u,
            "window_primes": int(len(self.primes)),
            "selected_primes": [int(p) for p in self.primes[self.selected]],
            "support_size": int(len(self.support)),
        }


def build_family_resonator(spec: FamilyResonatorSpec, f: HeckeSource, g: HeckeSource, kind: str = "modq") -> FamilyResonator:
    """Window primes, the selected set, varpi and the coefficients b(n).

    For ``kind="modq"`` varpi = l*_f l*_g (l*_f + l*_g) on primes where both
    starred values are nonzero with one sign and p is coprime to u, and
    b(n) = r(n) varpi(n).  For ``kind="quad"`` the same rule runs on h_f, h_g
    over odd primes and b(n) = mu(n) r(n) varpi(n).

    Raises:
        ConfigurationError: if the window holds no prime.
        InvariantViolation: if varpi l_f or varpi l_g is negative on the set.
    """
    if kind not in ("modq", "quad"):
        raise ValidationError(f"unknown family kind {kind!r}")
    _need_gl2(f, g)
    lo, hi = spec.window_range()
    primes = sieve_primes(max(int(hi), 2)).between(lo - 1e-9, hi) if hi >= lo else np.zeros(0, np.int64)
    if kind == "quad":
        primes = primes[primes % 2 == 1]
    if len(primes) == 0:
        raise ConfigurationError(
            f"empty prime window [{lo:.6g}, {hi:.6g}] (Lc = {spec.L:.6g}, regime {spec.regime})"
        )
    if kind == "modq":
        lf, lg = starred(f, g, primes)
    else:
        lf, lg = h_f(f, primes), h_f(g, primes)
    sel = (lf * lg > 0) & (np.gcd(primes, spec.u) == 1)
    varpi = np.where(sel, lf * lg * (lf + lg), 0.0)
    if np.any(varpi * lf < 0) or np.any(varpi * lg < 0):
        raise InvariantViolation("varpi times a local value is negative on the selected set")
    pf = primes.astype(np.float64)
    r_p = spec.L / (np.sqrt(pf) * np.log(pf))
    chosen = primes[sel]
    coef = dict(zip(chosen.tolist(), (r_p * varpi)[sel] * (-1 if kind == "quad" else 1)))
    support, b = multiplicative_support(coef, spec.N)
    b = b.real
    return FamilyResonator(spec, kind, primes, lf, lg, sel, varpi, r_p, support, b)


def family_resonator(res: FamilyResonator, chi: DirichletCharacter | Callable[[np.ndarray], np.ndarray]) -> complex:
    """R(chi) = sum_n b(n) chi(n) for one character (or any vectorized n -> chi(n))."""
    vals = chi.values(res.n) if isinstance(chi, DirichletCharacter) else np.asarray(chi(res.n))
    return complex(np.sum(res.b * vals))


# --------------------------------------------------------------------------
# characters mod a prime in bulk


@dataclass(frozen=True)
class PrimeCharacterTable:
    """Discrete logs modulo a prime q to the least primitive root.

    Character j sends the root to exp(2 pi i j/(q-1)), matching
    :func:`reslab.arith.characters_mod`.
    """

    q: int
    g: int
    log: np.ndarray  # log[n] for 1 <= n < q, -1 at 0

    @classmethod
    def build(cls, q: int) -> "PrimeCharacterTable":
        if not is_prime(q):
            raise ValidationError(f"modulus {q} is not prime")
        g = primitive_root(q)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for k in range(q - 1):
            log[x] = k
            x = x * g % q
        log.setflags(write=False)
        return cls(q, g, log)

    @property
    def M(self) -> int:
        return self.q - 1

    def buckets(self, n: np.ndarray, c: np.ndarray) -> np.ndarray:
        """Sums of c over n sharing a discrete log (multiples of q dropped)."""
        k = self.log[np.asarray(n, dtype=np.int64) % self.q]
        keep = k >= 0
        c = np.asarray(c, dtype=np.complex128)[keep]
        k = k[keep]
        return np.bincount(k, c.real, self.M) + 1j * np.bincount(k, c.imag, self.M)

    def char_sums(self, n: np.ndarray, c: np.ndarray) -> np.ndarray:
        """sum_n c(n) chi_j(n) for j = 0..q-2."""
        return self.M * np.fft.ifft(self.buckets(n, c))

    def conj_char_sums(self, n: np.ndarray, c: np.ndarray) -> np.ndarray:
        """sum_n c(n) conj(chi_j(n)) for j = 0..q-2."""
        return np.fft.fft(self.buckets(n, c))

    def gauss_sums(self) -> np.ndarray:
        """tau(chi_j) = sum_a chi_j(a) e(a/q)."""
        a = np.arange(1, self.q)
        return self.char_sums(a, np.exp(2j * np.pi * a / self.q))


def resonator_all_characters(res: FamilyResonator, table: PrimeCharacterTable) -> np.ndarray:
    """R(chi_j) for every character mod q."""
    return table.char_sums(res.n, res.b)


def primitive_mean_square_identity(b: np.ndarray, n: np.ndarray, q: int) -> float:
    """Exact mean of |sum b(n) chi(n)|^2 over the q-2 primitive characters, n < q.

    Orthogonality over all characters gives (q-1) sum |b|^2; removing the
    trivial character subtracts |sum b|^2.
    """
    n = np.asarray(n)
    if np.any(n >= q):
        raise ValidationError("identity needs every n below q")
    b = np.asarray(b)
    return float(((q - 1) * np.sum(np.abs(b) ** 2) - abs(np.sum(b)) ** 2) / (q - 2))


# --------------------------------------------------------------------------
# central values


@dataclass(frozen=True)
class ModqValues:
    """L(1/2, f x chi_j) for the non-trivial characters mod q."""

    q: int
    label: str
    index: np.ndarray
    values: np.ndarray
    root_numbers: np.ndarray
    length: int
    split_check: float

    def value(self, j: int) -> complex:
        i = int(np.searchsorted(self.index, j))
        if i >= len(self.index) or self.index[i] != j:
            raise ValidationError(f"character {j} not in the family")
        return complex(self.values[i])


def _modq_sums(lam: np.ndarray, weight: int, table: PrimeCharacterTable, root: np.ndarray, split: float, nmax: int):
    n = np.arange(1, nmax + 1)
    w1, w2 = central_weights(n, weight, float(table.q), split)
    A = lam[1 : nmax + 1]
    return table.char_sums(n, A * w1) + root * table.conj_char_sums(n, np.conj(A) * w2)


def modq_central_values(f: HeckeSource, q: int, length_factor: float = 1.0, split: float = 1.2) -> ModqValues:
    """L(1/2, f x chi) for every non-trivial chi mod a prime q.

    The twist has conductor q^2 and root number i^k tau(chi)^2/q.  Sums run
    to ``length_factor`` times the length where the weights drop below
    1e-16.  ``split_check`` is the largest change when the AFE split moves
    from 1 to ``split``; it vanishes (to rounding) only with correct root
    numbers.

    Raises:
        ValidationError: q not prime or f without a weight.
        ResourceError: q above the desk cap.
    """
    k = _need_level_one(f)
    if q > MAX_MODULUS:
        raise ResourceError(f"modulus {q} exceeds the cap {MAX_MODULUS}")
    table = PrimeCharacterTable.build(q)
    if q < 3:
        raise ValidationError("need a prime q >= 3 for a non-trivial character")
    nmax = int(math.ceil(length_factor * central_length(k, float(q), max(split, 1 / split))))
    lam = np.asarray(f.coefficients(nmax), dtype=np.complex128)
    tau = table.gauss_sums()
    root = (1j**k) * tau**2 / q
    v1 = _modq_sums(lam, k, table, root, 1.0, nmax)
    v2 = _modq_sums(lam, k, table, root, split, nmax)
    idx = np.arange(1, table.M)
    chk = float(np.max(np.abs(v1[idx] - v2[idx])))
    return ModqValues(q, f.label, idx, v1[idx], root[idx], nmax, chk)


def quad_twist_value(f: HeckeSource, d: int | Sequence[int], length_factor: float = 1.0) -> np.ndarray | float:
    """L(1/2, f x chi_{8d}) for odd squarefree d > 0 and weight k = 0 mod 4.

    The twist has conductor (8d)^2 and root number +1, so
    L = 2 sum chi_{8d}(n) lambda(n) n^{-1/2} Gamma(k/2, 2 pi n/(8d))/Gamma(k/2).

    Raises:
        ValidationError: on even or non-squarefree d, or k not 0 mod 4.
        InvariantViolation: if a value is below -1e-8.
    """
    k = _need_level_one(f)
    if k % 4:
        raise ValidationError(f"weight {k} is not 0 mod 4; the twist root number is not +1")
    ds = np.atleast_1d(np.asarray(d, dtype=np.int64))
    for x in ds.tolist():
        if x < 1 or x % 2 == 0 or not is_squarefree(int(x)):
            raise ValidationError(f"d={x} must be odd, positive and squarefree")
    if ds.max() > 2 * MAX_QUAD_X:
        raise ResourceError(f"d={int(ds.max())} exceeds the cap {2 * MAX_QUAD_X}")
    nmax_all = int(math.ceil(length_factor * central_length(k, 8.0 * float(ds.max()))))
    lam = np.real(np.asarray(f.coefficients(nmax_all)))
    out = np.empty(len(ds))
    for i, x in enumerate(ds.tolist()):
        nmax = int(math.ceil(length_factor * central_length(k, 8.0 * x)))
        n = np.arange(1, nmax + 1)
        w, _ = central_weights(n, k, 8.0 * x)
        chi = quadratic_character_values(8 * x, n)
        out[i] = 2 * float(np.sum(chi * lam[1 : nmax + 1] * w))
    if np.any(out < -WALDSPURGER_TOL):
        bad = int(ds[np.argmin(out)])
        raise InvariantViolation(f"L(1/2, {f.label} x chi_8d) = {out.min():.3e} < 0 at d={bad}")
    return float(out[0]) if np.ndim(d) == 0 else out


def odd_squarefree(lo: int, hi: int) -> np.ndarray:
    """Odd squarefree d with lo <= d <= hi."""
    return np.array([d for d in range(lo | 1, hi + 1, 2) if is_squarefree(d)], dtype=np.int64)


# --------------------------------------------------------------------------
# searches


@dataclass
class FamilyRun:
    """One family experiment: members, central values, weights and the pick."""

    family: str
    descriptor: dict
    member_ids: np.ndarray
    L_f: np.ndarray
    L_g: np.ndarray
    weights: np.ndarray
    selected: int
    thresholds: dict
    resonator: dict
    notes: list[str] = field(default_factory=list)

    @property
    def selected_id(self) -> int:
        return int(self.member_ids[self.selected])

    def statistic(self) -> np.ndarray:
        """min(|L_f|, |L_g|) for mod q, max(L_f, L_g) for quadratic twists."""
        if self.family == "modq":
            return np.minimum(np.abs(self.L_f), np.abs(self.L_g))
        return np.maximum(self.L_f.real, self.L_g.real)

    def percentile_of_selected(self) -> float:
        """Fraction of members whose statistic is at most the selected one."""
        s = self.statistic()
        return float(np.mean(s <= s[self.selected]))

    def to_csv(self, path: str | Path) -> None:
        flag = np.zeros(len(self.member_ids), dtype=np.int64)
        flag[self.selected] = 1
        Lf = np.asarray(self.L_f, dtype=np.complex128)
        Lg = np.asarray(self.L_g, dtype=np.complex128)
        data = np.column_stack([self.member_ids, Lf.real, Lf.imag, Lg.real, Lg.imag, self.weights, flag])
        np.savetxt(
            path,
            data,
            fmt=["%d", "%.17g", "%.17g", "%.17g", "%.17g", "%.17g", "%d"],
            delimiter=",",
            header="member_id,L_f_re,L_f_im,L_g_re,L_g_im,weight,selected_flag",
            comments="",
        )

    def as_dict(self) -> dict:
        s = self.statistic()
        return {
            "family": self.family,
            "descriptor": self.descriptor,
            "members": int(len(self.member_ids)),
            "selected_id": self.selected_id,
            "selected_L_f": [float(np.real(self.L_f[self.selected])), float(np.imag(self.L_f[self.selected]))],
            "selected_L_g": [float(np.real(self.L_g[self.selected])), float(np.imag(self.L_g[self.selected]))],
            "selected_statistic": float(s[self.selected]),
            "selected_percentile": self.percentile_of_selected(),
            "thresholds": self.thresholds,
            "resonator": self.resonator,
            "notes": list(self.notes),
        }


def _admissible(weights: np.ndarray) -> np.ndarray:
    # members where the resonator is at least its family average
    return weights >= np.mean(weights) * (1 - 1e-12)


def modq_threshold_prediction(res: FamilyResonator, q: int) -> float:
    """min_i (1/log q) prod (1+r^2 w+r w'/sqrt p)^2 (1+r^2 w)^{-1} (1+r^2 w+2 r w'_i/sqrt p)^{-1}."""
    sp = np.sqrt(res.primes.astype(np.float64))
    base = 1 + res.r_p**2 * res.omega
    main = 2 * np.log(base + res.r_p * res.omega_prime / sp) - np.log(base)
    best = math.inf
    for w in (res.omega1, res.omega2):
        best = min(best, float(np.sum(main - np.log(base + 2 * res.r_p * w / sp))))
    return math.exp(best) / math.log(q)


def modq_search(f: HeckeSource, g: HeckeSource, q: int, spec: FamilyResonatorSpec) -> FamilyRun:
    """Simultaneous large values of L(1/2, f x chi), L(1/2, g x chi) over chi mod q.

    Measured V is the ratio of family means of |L_f L_g R|^2 and
    |L_f R|^2 + |L_g R|^2; any chi where the pointwise form of that
    inequality holds has min(|L_f|, |L_g|) >= sqrt V, which is asserted.
    The pick maximizes min(|L_f|, |L_g|) over characters whose |R(chi)|^2 is
    at least the family mean.
    """
    if not is_prime(q):
        raise ValidationError(f"modulus {q} is not prime")
    res = build_family_resonator(spec, f, g, "modq")
    table = PrimeCharacterTable.build(q)
    vf = modq_central_values(f, q)
    vg = modq_central_values(g, q)
    R = resonator_all_characters(res, table)[vf.index]
    w = np.abs(R) ** 2
    af, ag = np.abs(vf.values) ** 2, np.abs(vg.values) ** 2
    lhs = float(np.mean(af * ag * w))
    rhs = float(np.mean((af + ag) * w))
    if rhs == 0:
        raise ConfigurationError("resonator vanishes on the whole family")
    V = lhs / rhs
    hit = af * ag * w - V * (af + ag) * w > 0
    if hit.any() and not np.all(np.minimum(af, ag)[hit] >= V * (1 - 1e-12)):
        raise InvariantViolation("a character passes the family inequality with min |L|^2 < V")
    if not hit.any():
        raise InvariantViolation("no character satisfies the pointwise family inequality")
    stat = np.minimum(np.abs(vf.values), np.abs(vg.values))
    adm = _admissible(w)
    sel = int(np.flatnonzero(adm)[np.argmax(stat[adm])])
    thresholds = {
        "V_measured": V,
        "sqrt_V_measured": math.sqrt(V),
        "V_predicted": modq_threshold_prediction(res, q),
        "mean_R2": float(np.mean(w)),
        "mean_R2_all_characters_identity": res.mean_square() if np.all(res.n < q) else None,
        "euler_mean_R2": res.euler_mean_square(),
        "resonance_argmax_id": int(vf.index[int(np.argmax(af * ag * w))]),
        "detected": int(hit.sum()),
        "split_check": max(vf.split_check, vg.split_check),
    }
    desc = {"q": q, "f": f.label, "g": g.label, "afe_length": max(vf.length, vg.length)}
    notes = ["u = 1: the support rule's coprimality device does not affect the search"]
    return FamilyRun("modq", desc, vf.index, vf.values, vg.values, w, sel, thresholds, res.describe(), notes)


def quad_prediction(res: FamilyResonator, which: int = 1) -> float:
    """prod_p (1 + r^2 omega - 2 r omega'_i/sqrt p), i = 1 (f) or 2 (g)."""
    sp = np.sqrt(res.primes.astype(np.float64))
    w = res.omega1 if which == 1 else res.omega2
    return float(np.exp(np.sum(np.log(1 + res.r_p**2 * res.omega - 2 * res.r_p * w / sp))))


def quad_ratio_prediction(res: FamilyResonator, which: int = 1) -> float:
    """prod_p (1 - 2 r omega'_i/(sqrt p (1 + r^2 omega))), the predicted mean ratio."""
    sp = np.sqrt(res.primes.astype(np.float64))
    w = res.omega1 if which == 1 else res.omega2
    return float(np.exp(np.sum(np.log(1 - 2 * res.r_p * w / (sp * (1 + res.r_p**2 * res.omega))))))


def quad_small_search(
    f: HeckeSource, g: HeckeSource, X: int, spec: FamilyResonatorSpec, weights: np.ndarray | None = None
) -> FamilyRun:
    """Simultaneous small values of L(1/2, f x chi_{8d}), L(1/2, g x chi_{8d}), X <= d <= 2X.

    Weights are |R(chi_{8d})|^2 unless given.  Since both values are
    nonnegative, L_f + L_g <= V forces max(L_f, L_g) <= V; V is the weighted
    mean of L_f + L_g.  The pick minimizes L_f + L_g over members whose weight
    is at least the family mean.
    """
    _need_level_one(f)
    _need_level_one(g)
    for s in (f, g):
        if s.weight % 4:
            raise ValidationError(f"weight {s.weight} of {s.label} is not 0 mod 4")
    if X < 1 or X > MAX_QUAD_X:
        raise ValidationError(f"X must lie in [1, {MAX_QUAD_X}]")
    res = build_family_resonator(spec, f, g, "quad")
    ds = odd_squarefree(X, 2 * X)
    Lf = quad_twist_value(f, ds)
    Lg = quad_twist_value(g, ds)
    if weights is None:
        R = np.array([np.sum(res.b * quadratic_character_values(8 * d, res.n)) for d in ds.tolist()])
        w = R**2
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != ds.shape:
            raise ValidationError("weights must match the family size")
    total = Lf + Lg
    if np.sum(w) == 0:
        raise ConfigurationError("resonator vanishes on the whole family")
    V = float(np.sum(total * w) / np.sum(w))
    adm = _admissible(w)
    sel = int(np.flatnonzero(adm)[np.argmin(total[adm])])
    if total[sel] <= V and max(Lf[sel], Lg[sel]) > V:
        raise InvariantViolation("nonnegative pair with sum <= V has a member above V")
    thresholds = {
        "V_measured": V,
        "unweighted_mean": float(np.mean(total)),
        "measured_ratio_f": float(np.sum(Lf * w) / np.sum(w) / np.mean(Lf)),
        "measured_ratio_g": float(np.sum(Lg * w) / np.sum(w) / np.mean(Lg)),
        "predicted_product_f": quad_prediction(res, 1),
        "predicted_product_g": quad_prediction(res, 2),
        "predicted_ratio_f": quad_ratio_prediction(res, 1),
        "predicted_ratio_g": quad_ratio_prediction(res, 2),
        "min_value": float(min(Lf.min(), Lg.min())),
    }
    desc = {"X": X, "f": f.label, "g": g.label, "d_range": [X, 2 * X]}
    return FamilyRun("quad", desc, ds, Lf, Lg, w, sel, thresholds, res.describe())


def small_value_implication(a: float, b: float, V: float) -> bool:
    """True unless a, b >= 0 with a + b <= V and max(a, b) > V (never happens)."""
    if a < 0 or b < 0 or a + b > V:
        return True
    return max(a, b) <= V
