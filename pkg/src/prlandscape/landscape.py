"""Empirical landscape verdicts and critical-point search.

Each verifier certifies one claim of the benign-landscape picture on a
concrete ensemble:

    R1_curvature   radially stationary points in the low-|sigma| band have
                   negative curvature along the signal direction
    R2_no_critical radially stationary points with |sigma| >= 0.5 and
                   dist >= delta0 keep a non-vanishing gradient
    R3_convexity   the Hessian stays positive definite within dist <= delta0
                   of +-signal
    origin_max     the Hessian at 0 is strictly negative definite

Exact critical points away from +-signal are measure-zero targets, so the
R1/R2 verdicts probe the radially stationary surrogate z = sqrt(B/A) zhat,
which satisfies <grad F(z), z> = 0 identically ("surrogate mode"); general
critical points are located by minimizing ||grad F||^2 from seed points.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .ensemble import MeasurementEnsemble, sample_ensemble
from .errors import ConfigurationError, SamplingError
from .geometry import (
    R1_SIGMA_BOUND,
    RegionMembership,
    classify_region,
    empirical_moments,
    polar,
)
from .objective import full_hessian, gradient, hessian_quadratic_form, hessian_vector_product
from .rng import as_trial_seed, derive_seed, generator

LEMMA_IDS = ("R1_curvature", "R2_no_critical", "R3_convexity", "origin_max")

DEFAULT_EPSILON0 = 0.05
DEFAULT_DELTA0 = 0.2
DEFAULT_R2_MARGIN = 1e-3


@dataclass(frozen=True)
class LemmaVerdict:
    lemma_id: str
    samples: int
    worst_statistic: float
    threshold: float
    passed: bool
    config: dict
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "lemma_id": self.lemma_id,
            "samples": self.samples,
            "worst_statistic": self.worst_statistic,
            "threshold": self.threshold,
            "pass": self.passed,
            "config": dict(self.config),
            "note": self.note,
        }


@dataclass(frozen=True)
class CriticalPointRecord:
    """A located near-critical point with its eigen-classification."""

    z: np.ndarray
    grad_norm: float
    lambda_min: float
    lambda_max: float
    kind: str  # minimum | maximum | saddle | degenerate
    region: RegionMembership
    dist_to_signal: float


@dataclass(frozen=True)
class UnconvergedSeed:
    index: int
    z: np.ndarray
    grad_norm: float


@dataclass(frozen=True)
class CriticalSearch:
    records: list[CriticalPointRecord]
    unconverged: list[UnconvergedSeed]


@dataclass(frozen=True)
class LandscapeReport:
    verdicts: tuple[LemmaVerdict, ...]
    ensemble_seed: int
    config: dict
    elapsed_seconds: float = field(compare=False)

    def __post_init__(self):
        ids = [v.lemma_id for v in self.verdicts]
        if sorted(ids) != sorted(LEMMA_IDS):
            raise ConfigurationError(f"report must hold one verdict per lemma, got {ids}")

    @property
    def all_pass(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def verdict(self, lemma_id: str) -> LemmaVerdict:
        for v in self.verdicts:
            if v.lemma_id == lemma_id:
                return v
        raise KeyError(lemma_id)

    def to_dict(self) -> dict:
        # elapsed_seconds is deliberately excluded: serialized reports are a
        # pure function of (config, seed); wall-clock timing belongs in the
        # run manifest.
        return {
            "schema": 1,
            "config": dict(self.config),
            "ensemble_seed": self.ensemble_seed,
            "verdicts": [v.to_dict() for v in self.verdicts],
            "all_pass": self.all_pass,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def classify_kind(lambda_min: float, lambda_max: float, tol_eig: float) -> str:
    """Eigenvalue taxonomy with a degenerate class for borderline spectra."""
    if lambda_min > tol_eig:
        return "minimum"
    if lambda_max < -tol_eig:
        return "maximum"
    if lambda_min < -tol_eig < tol_eig < lambda_max:
        return "saddle"
    return "degenerate"


def eig_tolerance(lambda_max: float) -> float:
    return 1e-6 * (1.0 + abs(lambda_max))


def _band_directions(g: np.random.Generator, x: np.ndarray, lo: float, hi: float, count: int):
    """Directions zhat = sigma x + sqrt(1-sigma^2) w with sigma ~ U[lo, hi],
    w uniform on the unit sphere of the orthogonal complement of x."""
    n = x.shape[0]
    if n < 2:
        raise SamplingError("band direction sampling requires dimension n >= 2")
    sigmas = g.uniform(lo, hi, size=count)
    w = g.standard_normal((count, n))
    w -= np.outer(w @ x, x)
    norms = np.linalg.norm(w, axis=1)
    if np.any(norms == 0.0):  # pragma: no cover - probability zero
        raise SamplingError("degenerate orthogonal direction draw")
    w /= norms[:, None]
    dirs = sigmas[:, None] * x + np.sqrt(1.0 - sigmas**2)[:, None] * w
    return sigmas, dirs


@dataclass(frozen=True)
class R1Samples:
    """Per-direction diagnostics for the low-|sigma| curvature verdict."""

    sigma: np.ndarray
    statistic: np.ndarray        # (3 B^2 - A D) / A^2
    quad_form_x: np.ndarray      # H_xx at z = sqrt(B/A) zhat
    identity_rel_err: np.ndarray  # | H_xx A / 4 - (3 B^2 - A D) | / (3 B^2 + A D)


def r1_curvature_samples(
    e: MeasurementEnsemble, epsilon0: float, n_dirs: int, seed
) -> R1Samples:
    if n_dirs < 1:
        raise ConfigurationError("n_dirs must be >= 1")
    band = R1_SIGMA_BOUND - epsilon0
    if band <= 0:
        raise ConfigurationError(f"epsilon0={epsilon0} leaves an empty sigma band")
    g = generator(seed)
    sigmas, dirs = _band_directions(g, e.signal, 0.0, band, n_dirs)
    stats = np.empty(n_dirs)
    hxx = np.empty(n_dirs)
    relerr = np.empty(n_dirs)
    for i in range(n_dirs):
        mom = empirical_moments(e, dirs[i])
        closed = 3.0 * mom.B * mom.B - mom.A * mom.D
        stats[i] = closed / (mom.A * mom.A)
        z = math.sqrt(mom.B / mom.A) * dirs[i]
        hxx[i] = hessian_quadratic_form(e, z, e.signal)
        relerr[i] = abs(0.25 * hxx[i] * mom.A - closed) / (3.0 * mom.B * mom.B + mom.A * mom.D)
    return R1Samples(sigma=sigmas, statistic=stats, quad_form_x=hxx, identity_rel_err=relerr)


def verify_R1_curvature(
    e: MeasurementEnsemble,
    epsilon0: float = DEFAULT_EPSILON0,
    n_dirs: int = 200,
    seed=0,
) -> LemmaVerdict:
    """Negative curvature along the signal at radially stationary band points."""
    samples = r1_curvature_samples(e, epsilon0, n_dirs, seed)
    worst = float(np.max(samples.statistic))
    signs_agree = bool(np.all(np.sign(samples.quad_form_x) == np.sign(samples.statistic)))
    note = "" if signs_agree else "closed-form/direct curvature sign mismatch"
    return LemmaVerdict(
        lemma_id="R1_curvature",
        samples=n_dirs,
        worst_statistic=worst,
        threshold=0.0,
        passed=worst < 0.0 and signs_agree,
        config=_cfg(e, epsilon0=epsilon0, seed=seed),
        note=note,
    )


def verify_R2_no_critical(
    e: MeasurementEnsemble,
    delta0: float = DEFAULT_DELTA0,
    n_dirs: int = 200,
    seed=0,
    margin: float = DEFAULT_R2_MARGIN,
) -> LemmaVerdict:
    """Gradient stays above ``margin`` at radially stationary points with
    |sigma| >= 0.5 and dist >= delta0."""
    if n_dirs < 1:
        raise ConfigurationError("n_dirs must be >= 1")
    g = generator(seed)
    sigmas, dirs = _band_directions(g, e.signal, 0.5, 1.0, n_dirs)
    kept = 0
    worst = math.inf
    for i in range(n_dirs):
        mom = empirical_moments(e, dirs[i])
        r = mom.B / mom.A
        dist = math.sqrt(max(0.0, r + 1.0 - 2.0 * math.sqrt(r) * sigmas[i]))
        if dist < delta0:
            continue
        kept += 1
        z = math.sqrt(r) * dirs[i]
        worst = min(worst, float(np.linalg.norm(gradient(e, z))))
    if kept == 0:
        return LemmaVerdict(
            lemma_id="R2_no_critical",
            samples=0,
            worst_statistic=0.0,
            threshold=margin,
            passed=False,
            config=_cfg(e, delta0=delta0, seed=seed),
            note="insufficient coverage: every sampled point fell inside dist < delta0",
        )
    return LemmaVerdict(
        lemma_id="R2_no_critical",
        samples=kept,
        worst_statistic=worst,
        threshold=margin,
        passed=worst > margin,
        config=_cfg(e, delta0=delta0, seed=seed),
    )


def verify_R3_convexity(
    e: MeasurementEnsemble,
    delta0: float = DEFAULT_DELTA0,
    n_pts: int = 100,
    seed=0,
) -> LemmaVerdict:
    """Minimum Hessian eigenvalue over balls of radius delta0 around +-signal.

    The reported worst statistic is the measured strong-convexity constant.
    """
    if n_pts < 1:
        raise ConfigurationError("n_pts must be >= 1")
    g = generator(seed)
    x = e.signal
    worst = math.inf
    for i in range(n_pts):
        center = x if i % 2 == 0 else -x
        u = g.standard_normal(e.n)
        u /= np.linalg.norm(u)
        radius = delta0 * g.uniform() ** (1.0 / e.n)
        z = center + radius * u
        lam = float(np.linalg.eigvalsh(full_hessian(e, z))[0])
        worst = min(worst, lam)
    return LemmaVerdict(
        lemma_id="R3_convexity",
        samples=n_pts,
        worst_statistic=worst,
        threshold=0.0,
        passed=worst > 0.0,
        config=_cfg(e, delta0=delta0, seed=seed),
    )


def origin_weighted_gram(e: MeasurementEnsemble) -> np.ndarray:
    """(1/m) sum y_j^2 a_j a_j^T, whose -4 lambda_min is lambda_max of the
    Hessian at the origin."""
    gram = (e.rows * e.y_squared[:, None]).T @ e.rows
    gram /= e.m
    return 0.5 * (gram + gram.T)


def verify_origin_max(e: MeasurementEnsemble) -> LemmaVerdict:
    worst = -4.0 * float(np.linalg.eigvalsh(origin_weighted_gram(e))[0])
    return LemmaVerdict(
        lemma_id="origin_max",
        samples=1,
        worst_statistic=worst,
        threshold=0.0,
        passed=worst < 0.0,
        config=_cfg(e, seed=0),
    )


def _cfg(e: MeasurementEnsemble, epsilon0=None, delta0=None, seed=0) -> dict:
    return {
        "n": e.n,
        "m": e.m,
        "epsilon0": epsilon0,
        "delta0": delta0,
        "seed": int(seed) if not hasattr(seed, "derived") else seed.derived,
    }


# ---------------------------------------------------------------------------
# Critical-point search


def _minimize_grad_norm(e: MeasurementEnsemble, z0, tol: float, max_iters: int):
    """Backtracking descent on ||grad F||^2 with adaptive step growth."""
    z = np.asarray(z0, dtype=np.float64).copy()
    g = gradient(e, z)
    phi = float(g @ g)
    step = 0.01
    it = 0
    while it < max_iters:
        gn = math.sqrt(phi)
        if gn <= tol * (1.0 + float(np.linalg.norm(z)) ** 3):
            return z, gn, True
        d = 2.0 * hessian_vector_product(e, z, g)
        dn2 = float(d @ d)
        if dn2 == 0.0:
            break
        accepted = False
        for _ in range(60):
            zn = z - step * d
            gnew = gradient(e, zn)
            phin = float(gnew @ gnew)
            if phin <= phi - 1e-4 * step * dn2:
                z, g, phi = zn, gnew, phin
                step = min(step * 2.0, 1e8)
                accepted = True
                break
            step *= 0.5
        it += 1
        if not accepted:
            break
    gn = math.sqrt(phi)
    return z, gn, gn <= tol * (1.0 + float(np.linalg.norm(z)) ** 3)


def find_critical_points(
    e: MeasurementEnsemble,
    seeds,
    tol: float = 1e-8,
    max_iters: int = 5000,
    epsilon0: float = DEFAULT_EPSILON0,
    delta0: float = DEFAULT_DELTA0,
) -> CriticalSearch:
    """Locate near-critical points from seed vectors and classify them.

    Unconverged seeds are reported, never silently dropped.  Every emitted
    record satisfies grad_norm <= tol * (1 + ||z||^3) and the eigenvalue
    taxonomy with tol_eig = 1e-6 * (1 + |lambda_max|).
    """
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    records: list[CriticalPointRecord] = []
    unconverged: list[UnconvergedSeed] = []
    for idx, z0 in enumerate(seeds):
        z, gn, ok = _minimize_grad_norm(e, z0, tol, max_iters)
        if not ok:
            unconverged.append(UnconvergedSeed(index=idx, z=z, grad_norm=gn))
            continue
        vals = np.linalg.eigvalsh(full_hessian(e, z))
        lam_min, lam_max = float(vals[0]), float(vals[-1])
        kind = classify_kind(lam_min, lam_max, eig_tolerance(lam_max))
        p = polar(z, e.signal)
        records.append(
            CriticalPointRecord(
                z=z,
                grad_norm=gn,
                lambda_min=lam_min,
                lambda_max=lam_max,
                kind=kind,
                region=classify_region(p, epsilon0, delta0),
                dist_to_signal=p.dist,
            )
        )
    return CriticalSearch(records=records, unconverged=unconverged)


def run_landscape_report(
    n: int,
    m: int,
    seed=0,
    epsilon0: float = DEFAULT_EPSILON0,
    delta0: float = DEFAULT_DELTA0,
    n_dirs: int = 200,
    n_pts: int = 100,
    r2_margin: float = DEFAULT_R2_MARGIN,
) -> LandscapeReport:
    """Sample one ensemble and run all four verifiers; deterministic per seed."""
    t0 = time.perf_counter()
    base = as_trial_seed(seed)
    e = sample_ensemble(n, m, "random", base)
    base_val = base.base_seed if base.trial_index == 0 else base.derived
    verdicts = (
        verify_R1_curvature(e, epsilon0, n_dirs, derive_seed(base_val, 1)),
        verify_R2_no_critical(e, delta0, n_dirs, derive_seed(base_val, 2), r2_margin),
        verify_R3_convexity(e, delta0, n_pts, derive_seed(base_val, 3)),
        verify_origin_max(e),
    )
    config = {
        "n": n,
        "m": m,
        "epsilon0": epsilon0,
        "delta0": delta0,
        "n_dirs": n_dirs,
        "n_pts": n_pts,
        "r2_margin": r2_margin,
        "seed": base_val,
    }
    return LandscapeReport(
        verdicts=verdicts,
        ensemble_seed=e.seed,
        config=config,
        elapsed_seconds=time.perf_counter() - t0,
    )
