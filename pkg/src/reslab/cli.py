"""Command-line orchestration: config parsing, pipelines and reports.

Configs are INI files read with :mod:`configparser`.  Every report is a JSON
document holding the full config echo and the o(1) disclosure, written with
sorted keys so identical configs give byte-identical files.  Wall-clock
times go to a separate ``*.timing.json``.

Example config for a t-aspect search::

    [sources]
    list = zeta, chi:3

    [resonator]
    X = 1e5
    window = 10, 300

    [grid]
    T = 1e5
    h = 0.02
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import harper, moments
from .arith import character_from_index
from .coeffs import (
    CoefficientSource,
    CombinedCoefficients,
    dirichlet_source,
    fourth_moment_scan,
    gl2_holomorphic_source,
    selberg_scan,
    window_sum,
    zeta_source,
)
from .errors import InvariantViolation, ReslabError, ValidationError
from .families import FamilyResonatorSpec, modq_search, quad_small_search
from .leval.grid import CriticalLineGrid, fill_grid
from .resonator import Resonator, ResonatorSpec

COMMANDS = ("t-search", "moments", "diagnostics", "harper", "family-modq", "family-quad", "dump-resonator")


# --------------------------------------------------------------------------
# config


@dataclass
class RunConfig:
    """Parsed config: raw sections plus the command-line flags."""

    command: str
    sections: dict[str, dict[str, str]]
    workers: int = 1
    seed: int = 0

    def get(self, section: str, key: str, default: str | None = None) -> str | None:
        return self.sections.get(section, {}).get(key.lower(), default)

    def num(self, section: str, key: str, default: float | None = None) -> float | None:
        raw = self.get(section, key)
        if raw is None:
            return default
        try:
            return float(raw)
        except ValueError as exc:
            raise ValidationError(f"[{section}] {key} = {raw!r} is not a number") from exc

    def integer(self, section: str, key: str, default: int | None = None) -> int | None:
        v = self.num(section, key)
        if v is None:
            return default
        if v != int(v):
            raise ValidationError(f"[{section}] {key} must be an integer")
        return int(v)

    def pair(self, section: str, key: str) -> tuple[float, float] | None:
        raw = self.get(section, key)
        if raw is None or raw.strip().lower() in ("", "none", "asymptotic"):
            return None
        parts = [s for s in raw.replace(",", " ").split() if s]
        if len(parts) != 2:
            raise ValidationError(f"[{section}] {key} needs two numbers")
        return float(parts[0]), float(parts[1])

    def echo(self) -> dict:
        return {"command": self.command, "sections": self.sections, "workers": self.workers, "seed": self.seed}


def load_config(command: str, path: str | Path | None, workers: int = 1, seed: int = 0) -> RunConfig:
    """Read an INI config (or none) for a subcommand."""
    if command not in COMMANDS:
        raise ValidationError(f"unknown command {command!r}")
    cp = configparser.ConfigParser(interpolation=None)
    if path is not None:
        if not Path(path).is_file():
            raise ValidationError(f"config file {path} not found")
        cp.read(path)
    sections = {s: dict(cp.items(s)) for s in cp.sections()}
    if workers < 1:
        raise ValidationError("workers must be at least 1")
    return RunConfig(command, sections, workers, seed)


def parse_source(desc: str, max_prime: int = 100_000) -> CoefficientSource:
    """``zeta``, ``chi:q[:j1.j2...]`` or ``mf:k`` to a coefficient source."""
    parts = desc.strip().split(":")
    kind = parts[0].lower()
    if kind == "zeta" and len(parts) == 1:
        return zeta_source()
    if kind == "chi" and len(parts) in (2, 3):
        q = int(parts[1])
        idx = [int(x) for x in parts[2].split(".")] if len(parts) == 3 else [1]
        return dirichlet_source(character_from_index(q, idx))
    if kind == "mf" and len(parts) in (2, 3):
        mp = int(float(parts[2])) if len(parts) == 3 else max_prime
        return gl2_holomorphic_source(int(parts[1]), max_prime=mp)
    raise ValidationError(f"cannot parse source {desc!r}")


def config_sources(cfg: RunConfig, max_prime: int = 100_000) -> list[CoefficientSource]:
    raw = cfg.get("sources", "list", "zeta")
    descs = [s for s in raw.split(",") if s.strip()]
    if not descs:
        raise ValidationError("empty source list")
    return [parse_source(d, max_prime) for d in descs]


def resonator_spec(cfg: RunConfig, m: int) -> ResonatorSpec:
    return ResonatorSpec(
        m=m,
        X=cfg.num("resonator", "X", 1e5),
        Delta=cfg.num("resonator", "Delta", 0.5),
        eps=cfg.num("resonator", "eps", 0.1),
        L_override=cfg.num("resonator", "L"),
        window=cfg.pair("resonator", "window"),
    )


# --------------------------------------------------------------------------
# reports


@dataclass
class RunReport:
    """Deterministic results of one run, with separate timing."""

    config: dict
    results: dict = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)
    timing: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "disclosure": moments.O1_DISCLOSURE,
            "results": self.results,
            "warnings": self.warnings,
            "failures": self.failures,
        }

    def to_json(self) -> str:
        return json.dumps(_plain(self.as_dict()), sort_keys=True, indent=2) + "\n"

    def write(self, out: str | Path, stem: str) -> Path:
        out = Path(out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{stem}.json"
        path.write_text(self.to_json())
        (out / f"{stem}.timing.json").write_text(json.dumps(self.timing, sort_keys=True, indent=2) + "\n")
        return path


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (complex, np.complexfloating)):
        return [_plain(float(x.real)), _plain(float(x.imag))]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def _timed(report: RunReport, key: str, fn: Callable):
    t0 = time.perf_counter()
    out = fn()
    report.timing[key] = time.perf_counter() - t0
    return out


# --------------------------------------------------------------------------
# t-aspect pipelines


def _grid_for(cfg: RunConfig, sources, res: Resonator, report: RunReport) -> CriticalLineGrid:
    T = cfg.num("grid", "T", 1e5)
    return _timed(
        report,
        "grid",
        lambda: fill_grid(
            sources,
            T,
            h=cfg.num("grid", "h"),
            eps=cfg.num("grid", "eps", 1e-8),
            resonator=res,
            span=cfg.num("grid", "span", 1.0),
            workers=cfg.workers,
        ),
    )


def _grid_meta(grid: CriticalLineGrid) -> dict:
    return {"T": grid.T, "h": grid.h, "points": len(grid), "err_bound": grid.err_bound}


def run_t_search(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Resonator, grid, m+2 moments, V, detection and the resonant maximum."""
    report = RunReport(cfg.echo())
    sources = config_sources(cfg)
    m = len(sources)
    res = _timed(report, "resonator", lambda: Resonator.build(resonator_spec(cfg, m), sources))
    grid = _grid_for(cfg, sources, res, report)
    labels = grid.labels
    M_R = moments.quadrature_moment(grid, ())
    M_prod = moments.quadrature_moment(grid, labels)
    singles = [moments.quadrature_moment(grid, [l for l in labels if l != lab]) for lab in labels]
    for mv in [M_R, M_prod, *singles]:
        if mv.warning:
            report.warnings.append(mv.warning)
    V = moments.compute_V(M_prod.value, [s.value for s in singles])
    try:
        hits = moments.detect_simultaneous(grid, V, labels)
    except InvariantViolation as exc:
        report.failures.append(f"moments.detect_simultaneous: {exc}")
        hits = np.zeros(0)
    absL = np.array([np.abs(grid.values[l]) for l in labels])
    weighted = np.prod(absL**2, axis=0) * np.abs(grid.R) ** 2
    best = int(np.argmax(weighted))
    mins = absL.min(axis=0)
    results = {
        "resonator": res.describe(),
        "grid": _grid_meta(grid),
        "moments": {
            "R2": [M_R.value, M_R.rel_err_est],
            "product": [M_prod.value, M_prod.rel_err_est],
            "leave_one_out": {f"without:{lab}": [s.value, s.rel_err_est] for lab, s in zip(labels, singles)},
        },
        "R2_predicted_l2": res.l2_norm(),
        "V": V,
        "sqrt_V": math.sqrt(V),
        "V_predicted_size": moments.predicted_threshold(m, res.spec.X) if res.spec.X >= 16 else None,
        "detected_count": int(len(hits)),
        "detected_t": [float(t) for t in hits[:100]],
        "best_t": float(grid.points[best]),
        "best_abs_L": {lab: float(absL[i, best]) for i, lab in enumerate(labels)},
        "best_min_abs_L": float(mins[best]),
        "best_min_percentile": float(np.mean(mins <= mins[best])),
        "grid_max_min_abs_L": float(mins.max()),
    }
    if m == 1:
        results["max_abs_L"] = float(absL[0].max())
    report.results = results
    if out is not None and cfg.get("output", "grid_csv", "false").lower() == "true":
        Path(out).mkdir(parents=True, exist_ok=True)
        grid.to_csv(Path(out) / "grid.csv")
    return report


def run_moments(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Measured twisted moments next to their diagonal predictions.

    The |R|^2 moment is compared with sum |r(n)|^2.  Degree-one sources use
    the exact diagonal main term of the twisted second moment; others use
    M_R times the unweighted mean of |L_i|^2 times the resonance factor
    prod (1+|r|^2+2Re(r conj a_i)/sqrt p) / prod (1+|r|^2).
    """
    report = RunReport(cfg.echo())
    sources = config_sources(cfg)
    res = _timed(report, "resonator", lambda: Resonator.build(resonator_spec(cfg, len(sources)), sources))
    grid = _grid_for(cfg, sources, res, report)
    weight = moments.SmoothWeight(cfg.get("moments", "weight", "indicator"))
    meta = _grid_meta(grid)
    M_R = moments.quadrature_moment(grid, (), weight)
    rows = [moments.MomentReport("R2", M_R.value, res.l2_norm() * weight.mass(), M_R.rel_err_est, meta, M_R.warning)]
    primes = res.primes
    for src in sources:
        mv = moments.quadrature_moment(grid, [src.label], weight)
        plain = moments.quadrature_moment(grid, [src.label], weight, use_R=False)
        if src.degree == 1 and weight.kind == "indicator":
            pred = moments.second_moment_prediction(res, src, grid.T, weight)
        else:
            gain = moments.upper_bound_product_single(res, src.a_primes(primes)) / res.euler_norm()
            pred = M_R.value * plain.value / weight.mass() * gain
        rows.append(moments.MomentReport(f"L2R2[{src.label}]", mv.value, pred, mv.rel_err_est, meta, mv.warning))
    report.results = {"resonator": res.describe(), "moments": [r.as_dict() for r in rows]}
    report.warnings.extend(r.warning for r in rows if r.warning)
    return report


# --------------------------------------------------------------------------
# diagnostics


def run_diagnostics(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Selberg scans, window sums, fourth moments, Rankin ratio and prime powers."""
    report = RunReport(cfg.echo())
    xs = [float(x) for x in (cfg.get("diagnostics", "xs", "1e4, 1e5, 1e6") or "").replace(",", " ").split()]
    top = int(max(xs)) if xs else 100_000
    sources = config_sources(cfg, max_prime=max(top, 100_000))
    drift_tol = cfg.num("diagnostics", "drift_tol", 0.3)
    off_tol = cfg.num("diagnostics", "offdiag_tol", 1.5)
    selberg = {}
    for i, s1 in enumerate(sources):
        for s2 in sources[i:]:
            scan = selberg_scan(s1, s2, xs)
            drifts = np.array([p.drift for p in scan])
            key = f"{s1.label}|{s2.label}"
            if s1.label == s2.label:
                var = float(np.ptp(drifts.real)) if len(drifts) else 0.0
                selberg[key] = {"drift": drifts, "variation": var}
                if var >= drift_tol:
                    report.warnings.append(f"coeffs.selberg_scan: diagonal drift of {key} varies by {var:.3g}")
            else:
                mx = float(np.max(np.abs(drifts))) if len(drifts) else 0.0
                selberg[key] = {"value": drifts, "max_abs": mx}
                if mx > off_tol:
                    report.warnings.append(f"coeffs.selberg_scan: off-diagonal {key} reaches {mx:.3g}")
    fourth = {s.label: vars(fourth_moment_scan(s, max(xs))) for s in sources if s.degree <= 2}
    wlo, whi = cfg.pair("diagnostics", "window") or (100.0, 10_000.0)
    windows = {}
    for s in sources:
        w = window_sum(s, s, wlo, whi)
        windows[s.label] = {"value": w.value, "prediction": w.prediction}
    results = {"selberg": selberg, "fourth_moment": fourth, "window_sums": windows}
    if cfg.get("resonator", "X") is not None:
        res = Resonator.build(resonator_spec(cfg, len(sources)), sources)
        results["rankin_ratio"] = res.rankin_tail_ratio(cfg.num("diagnostics", "alpha"))
        results["smallness"] = res.smallness_report()
    Z = cfg.num("diagnostics", "Z", 1e6)
    results["prime_powers"] = {s.label: vars(harper.prime_power_reduction_check(s, Z)) for s in sources if s.degree <= 2}
    report.results = results
    return report


def run_harper(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Ladder, one block, Taylor checks and the exceptional-set comparison."""
    report = RunReport(cfg.echo())
    sources = config_sources(cfg)
    comb = CombinedCoefficients(sources)
    lad = harper.build_ladder(
        cfg.num("harper", "T", math.exp(300)),
        cfg.num("harper", "L", 3.0),
        cfg.num("harper", "C_M", 0.75 * comb.degree),
        cfg.num("harper", "eps", 0.1),
    )
    i = cfg.integer("harper", "block", 0)
    j = cfg.integer("harper", "smoothing", lad.J)
    block = harper.make_block(lad, comb, i, j)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.integer("harper", "samples", 1000)
    tmax = cfg.num("harper", "t_max", 1e5)
    ts = np.sort(rng.uniform(tmax / 2, tmax, n))
    P = harper.block_poly(block, ts)
    table = harper.truncated_exp_table(block)
    N = harper.truncated_exp(table, ts)
    series = harper.exp_series(P, block.K)
    identity = float(np.max(np.abs(N - series) / np.maximum(1, np.abs(series))))
    errs = []
    for p, nv in zip(P, N):
        try:
            e = harper.taylor_check(p, block.ell, nv)
        except InvariantViolation as exc:
            report.failures.append(f"harper.taylor_check: {exc}")
            break
        if e is not None:
            errs.append(e)
    k = harper.paper_k(lad, i) if lad.log_Z(i) > 0 else 1
    thr = cfg.num("harper", "threshold", 2 * math.sqrt(block.variance))
    results = {
        "ladder": {
            "J": lad.J,
            "Z_log": [lad.log_Z(x) for x in range(lad.J + 1)],
            "ell": [lad.ell(x) for x in range(lad.J + 1)],
            "K": [lad.truncation(x) for x in range(lad.J + 1)],
            "length_certificate": lad.length_certificate(),
        },
        "block": {"i": i, "j": j, "primes": int(len(block.primes)), "K": block.K, "variance": block.variance, "terms": len(table)},
        "identity_max_rel_diff": identity,
        "taylor": {"checked": len(errs), "max_rel_err": max(errs) if errs else None, "bound": harper.taylor_bound(block.ell)},
        "exceptional": {
            "threshold": thr,
            "k": k,
            "measure": harper.exceptional_measure(P, thr),
            "moment_bound": harper.moment_bound(block.variance, thr, k),
        },
    }
    if identity > 1e-12:
        report.failures.append(f"harper.truncated_exp: expansion differs from the series by {identity:.3g}")
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        harper.block_csv(Path(out) / "harper_block.csv", ts, P, N)
    report.results = results
    return report


# --------------------------------------------------------------------------
# families


def family_spec(cfg: RunConfig, default_N: float, default_window: tuple[float, float]) -> FamilyResonatorSpec:
    return FamilyResonatorSpec(
        N=cfg.num("family", "N", default_N),
        a_omega=cfg.num("family", "a_omega", 1.0),
        L_override=cfg.num("family", "L"),
        window=cfg.pair("family", "window") or default_window,
    )


def run_family(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Dispatch to the mod-q or quadratic-twist search."""
    report = RunReport(cfg.echo())
    fk = cfg.integer("family", "f", 12)
    gk = cfg.integer("family", "g", 16)
    f = gl2_holomorphic_source(fk, max_prime=10_000)
    g = gl2_holomorphic_source(gk, max_prime=10_000)
    try:
        if cfg.command == "family-modq":
            q = cfg.integer("family", "q", 101)
            run = _timed(report, "search", lambda: modq_search(f, g, q, family_spec(cfg, 50, (2, 50))))
            report.results = {**run.as_dict(), "constants": {
                "c_twists": moments.predicted_exponent("modq").c,
                "c_product": moments.predicted_exponent("modq_product").c,
            }}
        else:
            X = cfg.integer("family", "X", 200)
            run = _timed(report, "search", lambda: quad_small_search(f, g, X, family_spec(cfg, 200, (3, 100))))
            report.results = {**run.as_dict(), "constants": {"c_small": moments.predicted_exponent("quadratic_small").c}}
    except InvariantViolation as exc:
        report.failures.append(f"families: {exc}")
        return report
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        run.to_csv(Path(out) / f"{cfg.command}.csv")
    return report


def dump_resonator(cfg: RunConfig, out: Path | None = None) -> RunReport:
    """Build the resonator and write its coefficients."""
    report = RunReport(cfg.echo())
    sources = config_sources(cfg)
    res = Resonator.build(resonator_spec(cfg, len(sources)), sources)
    mx, cross = res.smallness_report()
    report.results = {
        "resonator": res.describe(),
        "l2_norm": res.l2_norm(),
        "euler_norm": res.euler_norm(),
        "max_r2": mx,
        "max_cross": cross,
        "primes": res.primes,
        "r_p": res.r_p,
    }
    if out is not None:
        Path(out).mkdir(parents=True, exist_ok=True)
        res.to_csv(Path(out) / "resonator.csv")
    return report


PIPELINES: dict[str, Callable[[RunConfig, Path | None], RunReport]] = {
    "t-search": run_t_search,
    "moments": run_moments,
    "diagnostics": run_diagnostics,
    "harper": run_harper,
    "family-modq": run_family,
    "family-quad": run_family,
    "dump-resonator": dump_resonator,
}


# --------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reslab", description="Resonance-method experiments on L-functions.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", default=None, help="INI config file")
    ap.add_argument("--out", default="reslab_out", help="output directory")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0, help="seed for randomized sampling")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    """Run a subcommand; exit 1 on failed hard assertions, 2 on errors."""
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.command, args.config, args.workers, args.seed)
        if cfg.get("run", "workers") is not None and args.workers == 1:
            cfg.workers = cfg.integer("run", "workers", 1)
        out = Path(args.out)
        t0 = time.perf_counter()
        report = PIPELINES[args.command](cfg, out)
        report.timing["total"] = time.perf_counter() - t0
    except InvariantViolation as exc:
        print(f"hard assertion failed: {exc}", file=sys.stderr)
        return 1
    except ReslabError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    path = report.write(out, args.command)
    print(path)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for f in report.failures:
        print(f"FAILED: {f}", file=sys.stderr)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
