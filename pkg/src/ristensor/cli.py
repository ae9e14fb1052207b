"""Command-line interface: single-trial simulation, Monte-Carlo sweeps,
complexity reports, and an embedded self-test.

Exit codes: 0 success, 1 runtime/IO failure, 2 usage or precondition error.
Every command is deterministic given its full argument list.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import tensorops
from .config import ScenarioConfig, load_config, parse_overrides
from .esprit import esprit_1d, esprit_2d
from .estimation import AlsSettings
from .exceptions import DivergenceError, EmptyCellError, IdentifiabilityError
from .experiment import (
    PARAMETERS,
    ExperimentSpec,
    complexity_estimate,
    run_sweep,
    run_trial,
    trial_seed_sequence,
    write_manifest,
    write_results,
)
from .signal_model import upa_steering

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2


def _build_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        return load_config(args.config, overrides=args.set or None)
    if args.set:
        return ScenarioConfig(**parse_overrides(args.set))
    return ScenarioConfig()


def _als_settings(args) -> AlsSettings:
    return AlsSettings(max_iters=args.max_iters, tol=args.tol)


def _parse_values(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_snr_grid(text: str) -> tuple[float, ...]:
    """Either a comma list ('0,10,20') or an inclusive range 'start:step:stop'."""
    if ":" in text:
        start, step, stop = (float(v) for v in text.split(":"))
        if step <= 0:
            raise ValueError("snr range step must be > 0")
        count = int(round((stop - start) / step))
        return tuple(start + step * i for i in range(count + 1) if start + step * i <= stop + 1e-9)
    return tuple(float(v) for v in text.split(",") if v.strip())


def cmd_simulate(args) -> int:
    cfg = _build_config(args)
    settings = _als_settings(args)
    seed = trial_seed_sequence(args.seed, 0, 0, 0)
    estimate, diag = run_trial(cfg, settings, args.snr_db, seed)
    target = diag["target"]

    print(f"scenario: L={cfg.L} N={cfg.N} ({cfg.N_y}x{cfg.N_z}) Q={cfg.Q} M={cfg.M} "
          f"K={cfg.K} codebook={cfg.codebook}")
    print(f"snr: {args.snr_db:g} dB   seed: {args.seed}")
    print(f"stage 1: iterations={diag['stage1_iters']} converged={diag['stage1_converged']}")
    print(f"stage 2: iterations={diag['stage2_iters']} converged={diag['stage2_converged']}")
    truths = {"tau": target.tau, "nu": target.nu, "mu_D": target.mu_d, "psi_D": target.psi_d}
    estimates = {"tau": estimate.tau_hat, "nu": estimate.nu_hat,
                 "mu_D": estimate.mu_d_hat, "psi_D": estimate.psi_d_hat}
    errors = {"tau": estimate.rel_errors["tau"], "nu": estimate.rel_errors["nu"],
              "mu_D": estimate.rel_errors["mu_d"], "psi_D": estimate.rel_errors["psi_d"]}
    print(f"{'parameter':<10} {'truth':>24} {'estimate':>24} {'rel_error':>12}")
    for name in PARAMETERS:
        print(f"{name:<10} {truths[name]:>24.15e} {estimates[name]:>24.15e} "
              f"{errors[name]:>12.3e}")
    if estimate.angles_valid:
        print(f"mapped angles: elevation={estimate.elevation_hat:.6f} rad "
              f"azimuth={estimate.azimuth_hat:.6f} rad")
    else:
        print("mapped angles: undefined (arcsin/arccos argument out of range)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _build_config(args)
    values = _parse_values(args.values) if args.values else ()
    spec = ExperimentSpec(
        base=cfg,
        sweep_variable=args.var,
        sweep_values=values,
        snr_grid_db=_parse_snr_grid(args.snr),
        trials=args.trials,
        master_seed=args.seed,
        als=_als_settings(args),
        n_sweep_tracks_blocks=args.k_tracks_n,
    )
    if spec.trials < 1:
        raise ValueError("--trials must be >= 1")
    records = run_sweep(spec, jobs=args.jobs)
    csv_path = args.out + ".csv"
    manifest_path = args.out + ".manifest.json"
    write_results(records, csv_path)
    write_manifest(spec, csv_path, manifest_path)
    print(f"wrote {len(records)} records to {csv_path}")
    print(f"wrote manifest to {manifest_path}")
    return EXIT_OK


def cmd_complexity(args) -> int:
    cfg = _build_config(args)
    var, _, values_text = args.grid.partition("=")
    var = var.strip()
    if var not in ("N", "L", "M", "Q", "K"):
        raise ValueError(f"--grid variable must be one of N,L,M,Q,K, got {var!r}")
    values = _parse_values(values_text)
    if not values:
        raise ValueError("--grid needs at least one value, e.g. N=4,8,16")
    print("variable,value,stage1_ops,stage2_ops")
    for value in values:
        if var == "N":
            side_a = max(d for d in range(1, int(np.sqrt(value)) + 1) if value % d == 0)
            point = cfg.replace(N_y=side_a, N_z=value // side_a)
        else:
            point = cfg.replace(**{var: value})
        report = complexity_estimate(point, args.iters1, args.iters2)
        print(f"{var},{value},{report.stage1_ops},{report.stage2_ops}")
    return EXIT_OK


def _selftest_checks(fault: str | None):
    """Embedded invariant suite; `fault` corrupts one operation (test hook)."""
    unfold_op = tensorops.unfold
    if fault == "unfold":
        def unfold_op(tensor, mode):
            return tensorops.unfold(tensor, mode)[:, ::-1]
    if fault not in (None, "unfold"):
        raise ValueError(f"unknown fault {fault!r}")

    rng = np.random.default_rng(20240901)

    def crandn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    def check_fold_unfold():
        t = crandn(3, 4, 5)
        for mode in (1, 2, 3):
            if not np.array_equal(tensorops.fold(unfold_op(t, mode), mode, t.shape), t):
                return False
        return True

    def check_unfolding_formulas():
        n = 3
        h, f = crandn(4, n), crandn(5, n)
        w = np.exp(2j * np.pi * rng.random((n, n * n + 2)))
        wkr_t = tensorops.khatri_rao(w, w).T
        core_vec = crandn(n * n)
        core = tensorops.fold(np.diag(core_vec), 3, (n, n, n * n))
        tensor = tensorops.mode_product(
            tensorops.mode_product(tensorops.mode_product(core, h, 1), f, 2), wkr_t, 3
        )
        y1 = h @ tensorops.unfold(core, 1) @ tensorops.kronecker(wkr_t, f).T
        y2 = f @ tensorops.unfold(core, 2) @ tensorops.kronecker(wkr_t, h).T
        y3 = wkr_t @ np.diag(core_vec) @ tensorops.kronecker(f, h).T
        for mode, ref in ((1, y1), (2, y2), (3, y3)):
            got = unfold_op(tensor, mode)
            if np.linalg.norm(got - ref) > 1e-12 * np.linalg.norm(ref):
                return False
        return True

    def check_vec_identities():
        a, b, c = crandn(3, 4), crandn(4, 5), crandn(5, 2)
        lhs = tensorops.vec(a @ b @ c)
        rhs = tensorops.kronecker(c.T, a) @ tensorops.vec(b)
        return np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(lhs)

    def check_vec_diag_identity():
        a, d, c = crandn(3, 4), crandn(4), crandn(4, 5)
        lhs = tensorops.vec(a @ np.diag(d) @ c)
        rhs = tensorops.khatri_rao(c.T, a) @ d
        if np.linalg.norm(lhs - rhs) > 1e-12 * np.linalg.norm(lhs):
            return False
        row = crandn(4)
        lhs = tensorops.khatri_rao(row[None, :], a)
        rhs = a @ np.diag(row)
        return np.linalg.norm(lhs - rhs) <= 1e-12 * np.linalg.norm(rhs)

    def check_esprit_exact():
        for freq in np.linspace(-3.0, 3.0, 13):
            x = 1.3 * np.exp(1j * (0.7 + freq * np.arange(16)))
            if abs(esprit_1d(x) - freq) > 1e-10:
                return False
        return True

    def check_esprit_2d():
        for _ in range(5):
            mu, psi = rng.uniform(-3, 3, size=2)
            p = upa_steering(mu, psi, 4, 4)
            got_mu, got_psi = esprit_2d(np.kron(p, p), 4, 4)
            if abs(got_mu - mu) > 1e-10 or abs(got_psi - psi) > 1e-10:
                return False
        return True

    def check_noiseless_recovery():
        from .config import small_config
        cfg = small_config()
        est, _ = run_trial(cfg, AlsSettings(max_iters=300, tol=1e-13),
                           300.0, trial_seed_sequence(7, 0, 0, 0))
        return max(est.rel_errors.values()) < 1e-6

    return [
        ("unfold/fold inverse pair", check_fold_unfold),
        ("tucker unfolding formulas (unfold contract)", check_unfolding_formulas),
        ("vec(ABC) kronecker identity", check_vec_identities),
        ("vec(A D(b) C) khatri-rao identity", check_vec_diag_identity),
        ("1d shift-invariance exactness", check_esprit_exact),
        ("2d shift-invariance exactness", check_esprit_2d),
        ("noiseless end-to-end recovery", check_noiseless_recovery),
    ]


def cmd_selftest(args) -> int:
    failures = []
    for name, check in _selftest_checks(args.inject_fault):
        ok = bool(check())
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)
    if failures:
        print(f"selftest failed: {', '.join(failures)}")
        return EXIT_RUNTIME
    print("selftest passed")
    return EXIT_OK


def _make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ristensor",
        description="RIS-assisted monostatic sensing simulator and estimator",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config field (repeatable)")
        p.add_argument("--max-iters", type=int, default=200, help="ALS iteration cap")
        p.add_argument("--tol", type=float, default=1e-8,
                       help="relative ALS convergence threshold")

    sim = sub.add_parser("simulate", help="run one seeded trial and print truth vs estimate")
    add_common(sim)
    sim.add_argument("--snr-db", type=float, default=20.0)
    sim.add_argument("--seed", type=int, default=0)
    sim.set_defaults(func=cmd_simulate)

    swe = sub.add_parser("sweep", help="Monte-Carlo RMSE sweep, writes CSV + manifest")
    add_common(swe)
    swe.add_argument("--var", choices=("Q", "K", "N", "none"), default="none")
    swe.add_argument("--values", default="", help="comma list of sweep values")
    swe.add_argument("--snr", default="-10:5:30", help="'a:step:b' inclusive or comma list")
    swe.add_argument("--trials", type=int, default=200)
    swe.add_argument("--seed", type=int, default=0)
    swe.add_argument("--out", default="sweep_results", help="output path prefix")
    swe.add_argument("--jobs", type=int, default=1, help="worker threads (output identical)")
    swe.add_argument("--k-tracks-n", action="store_true",
                     help="N sweep: set K = N^2 per point instead of keeping K pinned")
    swe.set_defaults(func=cmd_sweep)

    com = sub.add_parser("complexity", help="closed-form operation counts over a grid")
    add_common(com)
    com.add_argument("--grid", default="N=4,8,16", metavar="VAR=V1,V2,...")
    com.add_argument("--iters1", type=int, default=1)
    com.add_argument("--iters2", type=int, default=1)
    com.set_defaults(func=cmd_complexity)

    sel = sub.add_parser("selftest", help="run the embedded invariant suite")
    sel.add_argument("--inject-fault", default=None, metavar="NAME",
                     help="test hook: corrupt one operation (e.g. 'unfold')")
    sel.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = _make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (IdentifiabilityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, EmptyCellError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
