"""Uniform critical-line grids over [T, 2T] for several L-functions at once.

Degree-one sources use the Euler-Maclaurin decomposition with one cut K for
the whole grid: the main sum sum_{n <= qK} chi(n) n^{-1/2-it} is evaluated at
all grid points by a non-uniform FFT and the Hurwitz tails are added in
vectorized form.  Grid points are dyadic rationals (T and h multiples of
2^-20), so t_k = T + k h is exact in floating point and the FFT phases agree
with the pointwise phases.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from ..coeffs import CoefficientSource, DirichletSource, HeckeSource, ZetaSource
from ..errors import ValidationError
from .afe import afe_length, gl2_afe
from .euler_maclaurin import _units, choose_cut, em_tail, roundoff_estimate
from .nufft import dirichlet_poly_grid

DYADIC_BITS = 20
BLOCK_POINTS = 1 << 19
NUFFT_REL_ERR = 1e-14


def dyadic(x: float, bits: int = DYADIC_BITS) -> float:
    """Nearest multiple of 2^-bits (nonzero for positive x)."""
    scale = 1 << bits
    return max(round(x * scale), 1) / scale


def default_spacing(T: float) -> float:
    """0.05/log T, rounded to a dyadic rational."""
    return dyadic(0.05 / math.log(T))


@dataclass
class CriticalLineGrid:
    """Samples of L_i(1/2 + it), and optionally R(t), on t = T + k h."""

    T: float
    h: float
    points: np.ndarray
    values: dict[str, np.ndarray] = field(default_factory=dict)
    R: np.ndarray | None = None
    err_bound: float = 0.0

    def __len__(self) -> int:
        return len(self.points)

    @property
    def labels(self) -> list[str]:
        return list(self.values)

    def to_csv(self, path: str | Path) -> None:
        """Write ``t, re_<label>, im_<label>, ..., re_R, im_R`` at 17 significant digits."""
        cols = [self.points]
        head = ["t"]
        for lab, v in self.values.items():
            cols += [v.real, v.imag]
            head += [f"re_{lab}", f"im_{lab}"]
        if self.R is not None:
            cols += [self.R.real, self.R.imag]
            head += ["re_R", "im_R"]
        data = np.column_stack(cols)
        np.savetxt(path, data, fmt="%.17g", delimiter=",", header=",".join(head), comments="")


def grid_points(T: float, h: float, span: float = 1.0) -> np.ndarray:
    """Exact dyadic points T + k h covering [T, (1 + span) T]."""
    if T <= 0 or h <= 0:
        raise ValidationError("T and h must be positive")
    scale = 1 << DYADIC_BITS
    Tn, hn = round(T * scale), round(h * scale)
    if Tn != T * scale or hn != h * scale:
        raise ValidationError("T and h must be multiples of 2^-20")
    M = int(math.floor(span * T / h)) + 1
    return (Tn + hn * np.arange(M, dtype=np.float64)) / scale


def _degree_one_block(q: int, chi, t0: float, h: float, M: int, K: int) -> np.ndarray:
    """sum over the grid block of the Euler-Maclaurin main sum plus tails."""
    nt = q * K
    n = np.arange(1, nt + 1)
    coef = np.ones(nt, dtype=np.complex128) if chi is None else chi.values(n)
    keep = coef != 0
    main = dirichlet_poly_grid(n[keep], coef[keep], t0, h, M)
    ts = t0 + h * np.arange(M)
    s = 0.5 + 1j * ts
    tail = np.zeros(M, dtype=np.complex128)
    for a in _units(q, chi):
        ca = 1.0 if chi is None else chi(a)
        tail += ca * em_tail(s, a / q + K)
    if q > 1:
        tail *= np.exp(-s * math.log(q))
    return main + tail


def _degree_one(src: CoefficientSource, pts: np.ndarray, h: float, eps: float, workers: int) -> tuple[np.ndarray, float]:
    if isinstance(src, ZetaSource):
        q, chi = 1, None
    else:
        q, chi = src.chi.modulus, src.chi
    t_abs = float(np.max(np.abs(pts)))
    nres = len(_units(q, chi))
    K = choose_cut(q, nres, t_abs, eps / 2)
    n_terms = q * K
    # NUFFT error relative to sum |c_n| n^{-1/2}, about 2 sqrt(n_terms)
    fft_err = NUFFT_REL_ERR * 2 * math.sqrt(n_terms)
    bound = eps / 2 + fft_err + roundoff_estimate(n_terms, t_abs)
    M = len(pts)
    chunks = _chunks(M, workers)

    def run(rng):
        lo, hi = rng
        return _degree_one_block(q, chi, float(pts[lo]), h, hi - lo, K)

    parts = _map(run, chunks, workers)
    return np.concatenate(parts), bound


def _gl2(src: HeckeSource, pts: np.ndarray, eps: float, workers: int) -> tuple[np.ndarray, float]:
    if src.weight is None:
        raise ValidationError(f"{src.label}: grid evaluation needs a holomorphic form with known weight")
    t_abs = float(np.max(np.abs(pts)))
    N = afe_length(t_abs, src.weight, eps=eps)
    coeffs = src.coefficients(N + 1).real
    chunks = _chunks(len(pts), workers)

    def run(rng):
        return np.array([gl2_afe(coeffs, float(t), src.weight, eps=eps) for t in pts[rng[0] : rng[1]]])

    return np.concatenate(_map(run, chunks, workers)), eps


def _chunks(M: int, workers: int) -> list[tuple[int, int]]:
    k = max(1, min(M, max(workers, -(-M // BLOCK_POINTS))))
    edges = np.linspace(0, M, k + 1).astype(int)
    return [(int(edges[i]), int(edges[i + 1])) for i in range(k) if edges[i + 1] > edges[i]]


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))  # ordered merge


def evaluate_source(src: CoefficientSource, pts: np.ndarray, h: float, eps: float = 1e-8, workers: int = 1) -> tuple[np.ndarray, float]:
    """Values of L(1/2 + it, src) on uniform points and an error bound."""
    if isinstance(src, (ZetaSource, DirichletSource)):
        return _degree_one(src, pts, h, eps, workers)
    if isinstance(src, HeckeSource):
        return _gl2(src, pts, eps, workers)
    raise ValidationError(f"no critical-line evaluator for {src.label} (degree {src.degree})")


def fill_grid(
    sources: Sequence[CoefficientSource],
    T: float,
    h: float | None = None,
    eps: float = 1e-8,
    resonator=None,
    span: float = 1.0,
    workers: int = 1,
) -> CriticalLineGrid:
    """Evaluate each source (and the resonator, if given) on [T, (1+span)T].

    Args:
        sources: L-functions to sample, keyed by label in the result.
        T: Start of the range; rounded to a multiple of 2^-20.
        h: Spacing; defaults to 0.05/log T.  Rounded to a multiple of 2^-20.
        eps: Target absolute error per value.
        resonator: Object with ``eval_R_grid(points)``.
        span: Range length in units of T.
        workers: Number of threads; results are merged in order.
    """
    if T < 2:
        raise ValidationError("T must be at least 2")
    T = dyadic(T)
    h = default_spacing(T) if h is None else dyadic(h)
    pts = grid_points(T, h, span)
    grid = CriticalLineGrid(T=T, h=h, points=pts)
    bound = 0.0
    for src in sources:
        if src.label in grid.values:
            raise ValidationError(f"duplicate source label {src.label}")
        vals, b = evaluate_source(src, pts, h, eps, workers)
        grid.values[src.label] = vals
        bound = max(bound, b)
    if resonator is not None:
        grid.R = resonator.eval_R_grid(pts)
    grid.err_bound = bound
    return grid
