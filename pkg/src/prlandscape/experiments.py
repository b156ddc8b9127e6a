"""Concentration Monte Carlo suites, descent solvers, and phase-transition sweeps.

Trials are independent tasks keyed by TrialSeed; every result is a pure
function of its full configuration including the seed.  Aggregations are
order-independent (min/max/counts), so trials may run in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .ensemble import MeasurementEnsemble, sample_ensemble
from .errors import CapacityError, ConfigurationError, NormalizationError, PRLandscapeError
from .landscape import eig_tolerance, run_landscape_report
from .objective import full_hessian, loss, loss_and_gradient
from .rng import TrialSeed, derive_seed, generator

DENSE_LIMIT = 512


def _map_trials(fn, trials: int, jobs: int = 1) -> list:
    """Run fn(trial_index) for each trial; results ordered by index."""
    if jobs <= 1:
        return [fn(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# Concentration checks


@dataclass(frozen=True)
class ConcentrationStat:
    check_id: str
    n: int
    m: int
    trials: int
    epsilon: float
    failures: int
    worst_value: float
    trial_values: tuple[float, ...]
    trial_fails: tuple[bool, ...]

    @property
    def empirical_failure_rate(self) -> float:
        return self.failures / self.trials


def _random_dirs(g: np.random.Generator, count: int, n: int) -> np.ndarray:
    dirs = g.standard_normal((count, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs


def check_spectral_norm(n: int, m: int, epsilon: float, trials: int, seed=0, jobs: int = 1) -> ConcentrationStat:
    """Operator-norm deviation of the sample second-moment matrix from identity."""
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if n > DENSE_LIMIT:
        raise CapacityError(f"spectral check is dense-only (n <= {DENSE_LIMIT})")

    def one(t: int) -> float:
        rows = generator(TrialSeed(seed, t)).standard_normal((m, n))
        dev = rows.T @ rows / m - np.eye(n)
        return float(np.max(np.abs(np.linalg.eigvalsh(dev))))

    values = _map_trials(one, trials, jobs)
    fails = tuple(v > epsilon for v in values)
    return ConcentrationStat(
        check_id="spectral_norm", n=n, m=m, trials=trials, epsilon=epsilon,
        failures=sum(fails), worst_value=max(values),
        trial_values=tuple(values), trial_fails=fails,
    )


def check_quartic_lower(
    n: int, m: int, epsilon: float, trials: int, n_dirs: int, seed=0, jobs: int = 1
) -> ConcentrationStat:
    """Lower bound 3 - epsilon on the directional quartic mean over the sphere."""
    if trials < 1 or n_dirs < 1:
        raise ConfigurationError("trials and n_dirs must be >= 1")

    def one(t: int) -> float:
        ts = TrialSeed(seed, t)
        rows = generator(ts).standard_normal((m, n))
        dirs = _random_dirs(generator(ts.child(1)), n_dirs, n)
        s = rows @ dirs.T
        return float(np.min(np.mean(s**4, axis=0)))

    values = _map_trials(one, trials, jobs)
    fails = tuple(v < 3.0 - epsilon for v in values)
    return ConcentrationStat(
        check_id="quartic_lower", n=n, m=m, trials=trials, epsilon=epsilon,
        failures=sum(fails), worst_value=min(values),
        trial_values=tuple(values), trial_fails=fails,
    )


def check_cross_moment(
    n: int, m: int, epsilon: float, trials: int, n_dirs: int, seed=0, jobs: int = 1
) -> ConcentrationStat:
    """Uniform deviation of (1/m) sum (a^T u)^2 (a^T x)^2 from 1 + 2 <u,x>^2."""
    if trials < 1 or n_dirs < 1:
        raise ConfigurationError("trials and n_dirs must be >= 1")

    def one(t: int) -> float:
        ts = TrialSeed(seed, t)
        e = sample_ensemble(n, m, "random", ts)
        dirs = _random_dirs(generator(ts.child(1)), n_dirs, n)
        s = e.rows @ dirs.T
        emp = np.mean(s * s * e.y_squared[:, None], axis=0)
        pop = 1.0 + 2.0 * (dirs @ e.signal) ** 2
        return float(np.max(np.abs(emp - pop)))

    values = _map_trials(one, trials, jobs)
    fails = tuple(v > epsilon for v in values)
    return ConcentrationStat(
        check_id="cross_moment", n=n, m=m, trials=trials, epsilon=epsilon,
        failures=sum(fails), worst_value=max(values),
        trial_values=tuple(values), trial_fails=fails,
    )


def check_cubic_moment(
    n: int, m: int, epsilon: float, trials: int, n_dirs: int, seed=0, jobs: int = 1
) -> ConcentrationStat:
    """Uniform deviation of (1/m) sum (a^T x)^3 (a^T u) from 3 <u,x>."""
    if trials < 1 or n_dirs < 1:
        raise ConfigurationError("trials and n_dirs must be >= 1")

    def one(t: int) -> float:
        ts = TrialSeed(seed, t)
        e = sample_ensemble(n, m, "random", ts)
        signed_t = e.rows @ e.signal
        dirs = _random_dirs(generator(ts.child(1)), n_dirs, n)
        emp = (dirs @ (e.rows.T @ signed_t**3)) / m
        pop = 3.0 * (dirs @ e.signal)
        return float(np.max(np.abs(emp - pop)))

    values = _map_trials(one, trials, jobs)
    fails = tuple(v > epsilon for v in values)
    return ConcentrationStat(
        check_id="cubic_moment", n=n, m=m, trials=trials, epsilon=epsilon,
        failures=sum(fails), worst_value=max(values),
        trial_values=tuple(values), trial_fails=fails,
    )


# ---------------------------------------------------------------------------
# Smooth truncation split


def smooth_cutoff(t):
    """C^2 bump: 1 on [-1, 1], 0 outside [-2, 2], quintic smoothstep between."""
    s = np.clip(np.abs(t) - 1.0, 0.0, 1.0)
    return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


def truncation_split(e: MeasurementEnsemble, zhat, N: float) -> tuple[float, float, float]:
    """Split B = (1/m) sum (a^T zhat)^2 (a^T x)^2 by cutoff level N into
    (both-tails-cut, x-tail, zhat-tail); the three parts sum to B exactly."""
    if N <= 0:
        raise ConfigurationError(f"cutoff level N must be positive, got {N}")
    zhat = np.ascontiguousarray(zhat, dtype=np.float64)
    nrm = float(np.linalg.norm(zhat))
    if abs(nrm - 1.0) > 1e-9:
        raise NormalizationError(f"zhat has norm {nrm!r}, expected 1 within 1e-9")
    s = e.rows @ zhat
    t = e.rows @ e.signal
    s2, t2 = s * s, t * t
    phi_s = smooth_cutoff(s / N)
    phi_t = smooth_cutoff(t / N)
    b1 = float(np.mean(t2 * phi_t * s2 * phi_s))
    b2 = float(np.mean(t2 * (1.0 - phi_t) * s2 * phi_s))
    b3 = float(np.mean(t2 * s2 * (1.0 - phi_s)))
    return b1, b2, b3


# ---------------------------------------------------------------------------
# Descent solvers


@dataclass(frozen=True)
class SolverConfig:
    init_step: float | None = None  # None: 0.1 / (1 + 3 mean y^2)
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_iters: int = 10_000
    recovery_tol: float = 1e-5
    record_every: int = 10
    max_backtracks: int = 60
    switch_threshold: float = 1e-3  # curvature steps engage below this ||grad||


@dataclass(frozen=True)
class SolverTrace:
    iterates: tuple[tuple[int, float, float, float], ...]  # (iter, loss, grad_norm, dist)
    step_rule: str
    outcome: str  # recovered | stalled | cap
    z_final: np.ndarray
    iterations: int
    final_dist: float


def _dist_to_signal(z, x) -> float:
    return min(float(np.linalg.norm(z - x)), float(np.linalg.norm(z + x)))


def _auto_step(e: MeasurementEnsemble) -> float:
    return 0.1 / (1.0 + 3.0 * float(np.mean(e.y_squared)))


class _TraceBuilder:
    def __init__(self, record_every: int):
        self.every = record_every
        self.rows = []

    def record(self, it, f, gn, dist, force=False):
        if force or it % self.every == 0:
            if not self.rows or self.rows[-1][0] != it:
                self.rows.append((it, f, gn, dist))


def gradient_descent(e: MeasurementEnsemble, z0, config: SolverConfig | None = None) -> SolverTrace:
    """Armijo-backtracking gradient descent on the intensity loss."""
    cfg = config or SolverConfig()
    step0 = cfg.init_step if cfg.init_step is not None else _auto_step(e)
    rule = f"backtracking-gd(init={step0:.3e},beta={cfg.backtrack},c={cfg.armijo})"
    z = np.asarray(z0, dtype=np.float64).copy()
    f, g = loss_and_gradient(e, z)
    trace = _TraceBuilder(cfg.record_every)
    it = 0
    while True:
        gn = float(np.linalg.norm(g))
        dist = _dist_to_signal(z, e.signal)
        trace.record(it, f, gn, dist)
        if dist <= cfg.recovery_tol:
            outcome = "recovered"
            break
        if it >= cfg.max_iters:
            outcome = "cap"
            break
        if gn == 0.0:
            outcome = "stalled"
            break
        t = step0
        accepted = False
        for _ in range(cfg.max_backtracks):
            zn = z - t * g
            fn, gnew = loss_and_gradient(e, zn)
            if math.isfinite(fn) and fn <= f - cfg.armijo * t * gn * gn:
                z, f, g = zn, fn, gnew
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            outcome = "stalled"
            break
        it += 1
    trace.record(it, f, float(np.linalg.norm(g)), _dist_to_signal(z, e.signal), force=True)
    return SolverTrace(
        iterates=tuple(trace.rows), step_rule=rule, outcome=outcome,
        z_final=z, iterations=it, final_dist=_dist_to_signal(z, e.signal),
    )


def negative_curvature_descent(
    e: MeasurementEnsemble, z0, config: SolverConfig | None = None
) -> SolverTrace:
    """Gradient descent that escapes strict saddles along the certified
    negative-curvature direction once the gradient falls below the switch
    threshold; the sign of the eigenvector step is chosen by loss decrease."""
    cfg = config or SolverConfig()
    step0 = cfg.init_step if cfg.init_step is not None else _auto_step(e)
    rule = (
        f"negative-curvature(init={step0:.3e},beta={cfg.backtrack},"
        f"c={cfg.armijo},switch={cfg.switch_threshold})"
    )
    z = np.asarray(z0, dtype=np.float64).copy()
    f, g = loss_and_gradient(e, z)
    trace = _TraceBuilder(cfg.record_every)
    it = 0
    outcome = None
    while outcome is None:
        gn = float(np.linalg.norm(g))
        dist = _dist_to_signal(z, e.signal)
        trace.record(it, f, gn, dist)
        if dist <= cfg.recovery_tol:
            outcome = "recovered"
            break
        if it >= cfg.max_iters:
            outcome = "cap"
            break
        if gn < cfg.switch_threshold:
            vals, vecs = np.linalg.eigh(full_hessian(e, z))
            lam_min, lam_max = float(vals[0]), float(vals[-1])
            if lam_min < -eig_tolerance(lam_max):
                v = vecs[:, 0]
                t = 1.0
                accepted = False
                for _ in range(cfg.max_backtracks):
                    f_plus = loss(e, z + t * v)
                    f_minus = loss(e, z - t * v)
                    f_new, sign = (f_plus, 1.0) if f_plus <= f_minus else (f_minus, -1.0)
                    if math.isfinite(f_new) and f_new <= f - cfg.armijo * t * t * abs(lam_min):
                        z = z + sign * t * v
                        f, g = loss_and_gradient(e, z)
                        accepted = True
                        break
                    t *= cfg.backtrack
                if not accepted:
                    outcome = "stalled"
                    break
                it += 1
                continue
            if gn < 1e-14:
                # second-order stationary but away from the signal
                outcome = "stalled"
                break
        t = step0
        accepted = False
        for _ in range(cfg.max_backtracks):
            zn = z - t * g
            fn, gnew = loss_and_gradient(e, zn)
            if math.isfinite(fn) and fn <= f - cfg.armijo * t * gn * gn:
                z, f, g = zn, fn, gnew
                accepted = True
                break
            t *= cfg.backtrack
        if not accepted:
            outcome = "stalled"
            break
        it += 1
    trace.record(it, f, float(np.linalg.norm(g)), _dist_to_signal(z, e.signal), force=True)
    return SolverTrace(
        iterates=tuple(trace.rows), step_rule=rule, outcome=outcome,
        z_final=z, iterations=it, final_dist=_dist_to_signal(z, e.signal),
    )


def spectral_init(e: MeasurementEnsemble) -> np.ndarray:
    """Top eigenvector of the y^2-weighted Gram matrix, scaled so that
    ||z0||^2 = mean(y^2) (the norm of the planted unit signal in expectation)."""
    gram = (e.rows * e.y_squared[:, None]).T @ e.rows
    gram /= e.m
    vals, vecs = np.linalg.eigh(0.5 * (gram + gram.T))
    v = vecs[:, -1]
    return math.sqrt(float(np.mean(e.y_squared))) * v


# ---------------------------------------------------------------------------
# Phase transition sweeps


@dataclass(frozen=True)
class TransitionTrial:
    n: int
    m: int
    multiplier: float
    trial: int
    outcome: str
    iters: int
    final_dist: float


@dataclass(frozen=True)
class TransitionCell:
    n: int
    m: int
    multiplier: float
    trials: int
    success_rate: float
    benign_rate: float
    mean_iters: float
    trial_rows: tuple[TransitionTrial, ...]


def transition_sample_count(n: int, multiplier: float, scaling: str) -> int:
    if scaling == "nlogn":
        return max(1, math.ceil(multiplier * n * math.log(n)))
    if scaling == "n":
        return max(1, math.ceil(multiplier * n))
    raise ConfigurationError(f"scaling must be 'nlogn' or 'n', got {scaling!r}")


def phase_transition(
    n_list,
    m_multipliers,
    trials: int,
    mode: str = "solve",
    seed=0,
    scaling: str = "nlogn",
    jobs: int = 1,
    solver_config: SolverConfig | None = None,
) -> list[TransitionCell]:
    """Recovery (mode='solve') or benign-landscape (mode='benign') rates over
    an (n, m) grid with m = ceil(multiplier * n log n) or ceil(multiplier * n).

    A trial that raises counts as non-success; the sweep never aborts.
    """
    if not n_list or not m_multipliers:
        raise ConfigurationError("n_list and m_multipliers must be nonempty")
    if trials < 1:
        raise ConfigurationError("trials must be >= 1")
    if mode not in ("solve", "benign"):
        raise ConfigurationError(f"mode must be 'solve' or 'benign', got {mode!r}")

    cells: list[TransitionCell] = []
    cell_index = 0
    for n in n_list:
        for mult in m_multipliers:
            m = transition_sample_count(n, mult, scaling)
            cell_seed = derive_seed(seed if isinstance(seed, int) else seed.derived, cell_index)

            def one(t: int, n=n, m=m, mult=mult, cell_seed=cell_seed) -> TransitionTrial:
                ts = TrialSeed(cell_seed, t)
                try:
                    if mode == "solve":
                        e = sample_ensemble(n, m, "random", ts)
                        gz = generator(ts.child(1))
                        z0 = gz.standard_normal(n)
                        z0 /= np.linalg.norm(z0)
                        tr = negative_curvature_descent(e, z0, solver_config)
                        return TransitionTrial(n, m, mult, t, tr.outcome, tr.iterations, tr.final_dist)
                    report = run_landscape_report(n, m, seed=ts)
                    outcome = "benign" if report.all_pass else "not_benign"
                    return TransitionTrial(n, m, mult, t, outcome, 0, float("nan"))
                except PRLandscapeError as err:
                    return TransitionTrial(n, m, mult, t, f"error:{type(err).__name__}", 0, float("nan"))

            rows = _map_trials(one, trials, jobs)
            recovered = sum(r.outcome == "recovered" for r in rows)
            benign = sum(r.outcome == "benign" for r in rows)
            cells.append(
                TransitionCell(
                    n=n, m=m, multiplier=mult, trials=trials,
                    success_rate=recovered / trials,
                    benign_rate=benign / trials,
                    mean_iters=float(np.mean([r.iters for r in rows])),
                    trial_rows=tuple(rows),
                )
            )
            cell_index += 1
    return cells
