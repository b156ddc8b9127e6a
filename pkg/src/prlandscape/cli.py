"""Command-line front end: landscape verdicts, sweeps, solvers, oracle checks.

Exit codes: 0 success/all-pass, 1 usage or I/O error, 2 verdict or
tolerance failure.  Every command accepts --seed and --out-dir; identical
flags and seed produce byte-identical CSV/JSON outputs, with wall-clock
timestamps confined to manifest.json.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .ensemble import sample_ensemble
from .errors import PRLandscapeError
from .experiments import (
    check_cross_moment,
    check_cubic_moment,
    check_quartic_lower,
    check_spectral_norm,
    negative_curvature_descent,
    phase_transition,
    spectral_init,
)
from .geometry import empirical_moments, population_moments
from .landscape import run_landscape_report
from .rng import TrialSeed, generator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERDICT = 2


class _Parser(argparse.ArgumentParser):
    """argparse variant that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _write_manifest(out_dir, command, config, seed, outputs, started, finished) -> str:
    manifest = {
        "command": command,
        "config_hash": _config_hash(config),
        "base_seed": seed,
        "tool_version": __version__,
        "started": started,
        "finished": finished,
        "output_paths": sorted(outputs),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def _resolve_jobs(value) -> int:
    if value is not None:
        return max(1, value)
    env = os.environ.get("PRLANDSCAPE_JOBS", "").strip()
    return max(1, int(env)) if env else 1


def _int_list(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _resolve_m(args, parser) -> int:
    if args.m is not None and args.m_mult is not None:
        parser.error("give either --m or --m-mult, not both")
    if args.m is not None:
        return args.m
    if args.m_mult is not None:
        return max(1, math.ceil(args.m_mult * args.n * math.log(args.n)))
    parser.error("one of --m or --m-mult is required")


def _region_params(args) -> tuple[float, float]:
    if args.strict:
        return 0.01, 0.01
    return args.eps0, args.delta0


# ---------------------------------------------------------------------------
# Commands


def cmd_verify(args, parser) -> int:
    m = _resolve_m(args, parser)
    eps0, delta0 = _region_params(args)
    started = _utcnow()
    report = run_landscape_report(
        args.n, m, seed=args.seed, epsilon0=eps0, delta0=delta0,
        n_dirs=args.n_dirs, n_pts=args.n_pts, r2_margin=args.r2_margin,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    report_path = os.path.join(args.out_dir, "report.json")
    with open(report_path, "w") as fh:
        fh.write(report.to_json())
        fh.write("\n")
    csv_path = os.path.join(args.out_dir, "landscape.csv")
    _write_csv(
        csv_path,
        ["lemma_id", "n", "m", "seed", "worst_statistic", "pass"],
        [
            (v.lemma_id, args.n, m, args.seed, v.worst_statistic, v.passed)
            for v in report.verdicts
        ],
    )
    _write_manifest(
        args.out_dir, "verify", report.config, args.seed,
        ["report.json", "landscape.csv"], started, _utcnow(),
    )
    for v in report.verdicts:
        print(f"{v.lemma_id}: {'pass' if v.passed else 'FAIL'} "
              f"(worst {v.worst_statistic:.6g}, threshold {v.threshold:g})")
    return EXIT_OK if report.all_pass else EXIT_VERDICT


def cmd_transition(args, parser) -> int:
    n_list = _int_list(args.n)
    mults = _float_list(args.mult)
    if not n_list or not mults:
        parser.error("--n and --mult must be nonempty comma lists")
    started = _utcnow()
    cells = phase_transition(
        n_list, mults, args.trials, mode=args.mode, seed=args.seed,
        scaling=args.scaling, jobs=_resolve_jobs(args.jobs),
    )
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "transition.csv")
    rows = [
        (r.n, r.m, r.multiplier, r.trial, r.outcome, r.iters, r.final_dist)
        for cell in cells
        for r in cell.trial_rows
    ]
    _write_csv(
        csv_path,
        ["n", "m", "multiplier", "trial", "outcome", "iters", "final_dist"],
        rows,
    )
    config = {
        "n": n_list, "mult": mults, "trials": args.trials, "mode": args.mode,
        "scaling": args.scaling, "seed": args.seed,
    }
    _write_manifest(args.out_dir, "transition", config, args.seed,
                    ["transition.csv"], started, _utcnow())
    for cell in cells:
        rate = cell.success_rate if args.mode == "solve" else cell.benign_rate
        print(f"n={cell.n} m={cell.m} mult={cell.multiplier:g}: "
              f"{args.mode} rate {rate:.2f} mean iters {cell.mean_iters:.1f}")
    return EXIT_OK


def _moment_table(n, m, seed, sigmas):
    ts = TrialSeed(seed, 0)
    e = sample_ensemble(n, m, "random", ts)
    g = generator(ts.child(1))
    w = g.standard_normal(n)
    w -= (w @ e.signal) * e.signal
    w /= np.linalg.norm(w)
    table = []
    for sigma in sigmas:
        zhat = sigma * e.signal + math.sqrt(max(0.0, 1.0 - sigma * sigma)) * w
        zhat /= np.linalg.norm(zhat)
        mom = empirical_moments(e, zhat)
        table.append((sigma, mom))
    return table


def cmd_moments(args, parser) -> int:
    sigmas = _float_list(args.sigmas)
    if not sigmas:
        parser.error("--sigmas must be a nonempty comma list")
    started = _utcnow()
    table = _moment_table(args.n, args.m, args.seed, sigmas)
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "moments.csv")
    _write_csv(
        csv_path,
        ["n", "m", "seed", "sigma", "A", "B", "A1", "C1", "D"],
        [
            (args.n, args.m, args.seed, sigma, mom.A, mom.B, mom.A1, mom.C1, mom.D)
            for sigma, mom in table
        ],
    )
    config = {"n": args.n, "m": args.m, "seed": args.seed, "sigmas": sigmas}
    _write_manifest(args.out_dir, "moments", config, args.seed,
                    ["moments.csv"], started, _utcnow())
    for sigma, mom in table:
        print(f"sigma={sigma:g}: A={mom.A:.4f} B={mom.B:.4f} "
              f"A1={mom.A1:.4f} C1={mom.C1:.4f} D={mom.D:.4f}")
    return EXIT_OK


def cmd_oracle_check(args, parser) -> int:
    sigmas = _float_list(args.sigmas)
    if not sigmas:
        parser.error("--sigmas must be a nonempty comma list")
    started = _utcnow()
    table = _moment_table(args.n, args.m, args.seed, sigmas)
    results = []
    worst = 0.0
    for sigma, mom in table:
        pop = population_moments(sigma)
        devs = {
            "A": abs(mom.A - pop.A),
            "B": abs(mom.B - pop.B),
            "A1": abs(mom.A1 - pop.A1),
            "C1": abs(mom.C1 - pop.C1),
            "D": abs(mom.D - pop.D),
        }
        worst = max(worst, max(devs.values()))
        results.append({"sigma": sigma, "deviations": devs})
        print(f"sigma={sigma:g}: max |empirical - population| = {max(devs.values()):.4f}")
    ok = worst <= args.tol
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, "oracle_check.json")
    with open(out_path, "w") as fh:
        json.dump(
            {"schema": 1, "n": args.n, "m": args.m, "seed": args.seed,
             "tol": args.tol, "worst_deviation": worst, "pass": ok,
             "results": results},
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")
    config = {"n": args.n, "m": args.m, "seed": args.seed,
              "sigmas": sigmas, "tol": args.tol}
    _write_manifest(args.out_dir, "oracle-check", config, args.seed,
                    ["oracle_check.json"], started, _utcnow())
    print(f"worst deviation {worst:.4f} vs tol {args.tol:g}: {'pass' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VERDICT


def cmd_solve(args, parser) -> int:
    started = _utcnow()
    ts = TrialSeed(args.seed, 0)
    e = sample_ensemble(args.n, args.m, "random", ts)
    if args.init == "random":
        g = generator(ts.child(1))
        z0 = g.standard_normal(args.n)
        z0 /= np.linalg.norm(z0)
    elif args.init == "spectral":
        z0 = spectral_init(e)
    else:
        z0 = np.zeros(args.n)
    trace = negative_curvature_descent(e, z0)
    os.makedirs(args.out_dir, exist_ok=True)
    out_path = os.path.join(args.out_dir, "solve.json")
    with open(out_path, "w") as fh:
        json.dump(
            {"schema": 1, "n": args.n, "m": args.m, "seed": args.seed,
             "init": args.init, "outcome": trace.outcome,
             "iterations": trace.iterations, "final_dist": trace.final_dist,
             "step_rule": trace.step_rule},
            fh, sort_keys=True, indent=2,
        )
        fh.write("\n")
    config = {"n": args.n, "m": args.m, "seed": args.seed, "init": args.init}
    _write_manifest(args.out_dir, "solve", config, args.seed,
                    ["solve.json"], started, _utcnow())
    print(f"outcome={trace.outcome} iterations={trace.iterations} "
          f"dist={trace.final_dist:.3e}")
    return EXIT_OK if trace.outcome == "recovered" else EXIT_VERDICT


_CHECKS = {
    "spectral": lambda a, jobs: check_spectral_norm(
        a.n, a.m, a.epsilon, a.trials, seed=a.seed, jobs=jobs),
    "quartic": lambda a, jobs: check_quartic_lower(
        a.n, a.m, a.epsilon, a.trials, a.n_dirs, seed=a.seed, jobs=jobs),
    "cross": lambda a, jobs: check_cross_moment(
        a.n, a.m, a.epsilon, a.trials, a.n_dirs, seed=a.seed, jobs=jobs),
    "cubic": lambda a, jobs: check_cubic_moment(
        a.n, a.m, a.epsilon, a.trials, a.n_dirs, seed=a.seed, jobs=jobs),
}


def cmd_concentration(args, parser) -> int:
    names = list(_CHECKS) if args.check == "all" else [args.check]
    jobs = _resolve_jobs(args.jobs)
    started = _utcnow()
    stats = [_CHECKS[name](args, jobs) for name in names]
    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "concentration.csv")
    rows = [
        (s.check_id, s.n, s.m, s.epsilon, t, s.trial_values[t], s.trial_fails[t])
        for s in stats
        for t in range(s.trials)
    ]
    _write_csv(
        csv_path,
        ["check_id", "n", "m", "epsilon", "trial", "value", "fail"],
        rows,
    )
    config = {"check": args.check, "n": args.n, "m": args.m,
              "epsilon": args.epsilon, "trials": args.trials,
              "n_dirs": args.n_dirs, "seed": args.seed}
    _write_manifest(args.out_dir, "concentration", config, args.seed,
                    ["concentration.csv"], started, _utcnow())
    bad = False
    for s in stats:
        rate = s.empirical_failure_rate
        print(f"{s.check_id}: failure rate {rate:.3f} worst {s.worst_value:.4f}")
        if args.max_fail_rate is not None and rate > args.max_fail_rate:
            bad = True
    return EXIT_VERDICT if bad else EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> _Parser:
    parser = _Parser(prog="prlandscape", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0, help="base 64-bit seed")
        p.add_argument("--out-dir", default=".", help="directory for output artifacts")

    p = sub.add_parser("verify", help="run the four landscape verdicts on one ensemble")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int)
    p.add_argument("--m-mult", type=float, help="m = ceil(mult * n * log n)")
    p.add_argument("--eps0", type=float, default=0.05)
    p.add_argument("--delta0", type=float, default=0.2)
    p.add_argument("--strict", action="store_true",
                   help="preset eps0 = delta0 = 0.01")
    p.add_argument("--n-dirs", type=int, default=200)
    p.add_argument("--n-pts", type=int, default=100)
    p.add_argument("--r2-margin", type=float, default=1e-3)
    common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("transition", help="phase-transition sweep over (n, m)")
    p.add_argument("--n", required=True, help="comma list of dimensions")
    p.add_argument("--mult", required=True, help="comma list of m multipliers")
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--mode", choices=("solve", "benign"), default="solve")
    p.add_argument("--scaling", choices=("nlogn", "n"), default="nlogn")
    p.add_argument("--jobs", type=int, default=None,
                   help="parallel trials (default: PRLANDSCAPE_JOBS or 1)")
    common(p)
    p.set_defaults(func=cmd_transition)

    p = sub.add_parser("moments", help="empirical moment table along a sigma grid")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sigmas", default="0,0.3,0.6,1.0")
    common(p)
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("oracle-check",
                       help="compare empirical moments against the population oracle")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--sigmas", default="0,0.3,0.6,1.0")
    p.add_argument("--tol", type=float, default=0.1)
    common(p)
    p.set_defaults(func=cmd_oracle_check)

    p = sub.add_parser("solve", help="run negative-curvature descent on one instance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--init", choices=("random", "spectral", "zero"), default="random")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("concentration", help="Monte Carlo concentration checks")
    p.add_argument("--check", choices=("all", "spectral", "quartic", "cross", "cubic"),
                   default="spectral")
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--m", type=int, default=3200)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--n-dirs", type=int, default=200)
    p.add_argument("--max-fail-rate", type=float, default=None,
                   help="exit 2 when a check's failure rate exceeds this")
    p.add_argument("--jobs", type=int, default=None)
    common(p)
    p.set_defaults(func=cmd_concentration)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return args.func(args, parser)
    except SystemExit as exc:  # parser.error inside a command
        return int(exc.code) if exc.code else EXIT_OK
    except PRLandscapeError as err:
        print(f"prlandscape: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as err:
        print(f"prlandscape: I/O error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
