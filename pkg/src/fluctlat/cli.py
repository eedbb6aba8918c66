"""Command line harness: reproducible experiment runs and CSV/JSON artifacts.

    fluctlat <mode> --config <path> --out <dir> [--seed <u64>] [--replicas <n>]

Modes: simulate, hydro, rate-eval, contract, oracle, validate.  Exit codes:
0 success, 1 numerical failure, 2 usage error.  FLUCTLAT_THREADS caps replica
concurrency; replica r draws its randomness from stream seed XOR r.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import empirical
from .config import (
    MODES,
    ExperimentConfig,
    parse_config_file,
    write_manifest,
)
from .density_contraction import solve_optimal_drift
from .errors import ConfigError, FluctlatError
from .grids import TrajectoryGrid, centered_gradient, integrate_t, integrate_x
from .hydro_pde import solve_hydro
from .rate_functional import evaluate_I0_explicit, recover_drifts
from .rates import macroscopic_coefficients
from .simulator import SimParams, exact_tilted_moment, log_radon_nikodym, run


# ---------------------------------------------------------------------------
# CSV emission


def _fmt(v) -> str:
    return f"{float(v):.17g}"


def write_csv(path: str, header: list, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if isinstance(v, (int, float, np.floating)) else str(v) for v in row) + "\n")


def write_summary(path: str, data: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fields_csv(path: str, traj: TrajectoryGrid, g=None, h=None, stride: int = 0) -> None:
    """fields.csv with columns t,x,rho,qdot,kdot,g,h; time rows subsampled by
    `stride` (0 = automatic, at most ~101 levels)."""
    grid = traj.grid
    if stride <= 0:
        stride = max(1, grid.nt // 100)
    gv = np.zeros_like(traj.rho) if g is None else g
    hv = np.zeros_like(traj.rho) if h is None else h
    rows = []
    for n in range(0, grid.nt + 1, stride):
        t = grid.t[n]
        for i, x in enumerate(grid.x):
            rows.append(
                (t, x, traj.rho[n, i], traj.qdot[n, i], traj.kdot[n, i], gv[n, i], hv[n, i])
            )
    write_csv(path, ["t", "x", "rho", "qdot", "kdot", "g", "h"], rows)


# ---------------------------------------------------------------------------
# replica orchestration


def _n_threads() -> int:
    env = os.environ.get("FLUCTLAT_THREADS")
    if env:
        return max(1, int(env))
    return min(8, os.cpu_count() or 1)


def run_replicas(params: SimParams, replicas: int):
    """Run independent replicas; replica r reseeds with params.seed XOR r."""

    def one(r: int):
        p = SimParams(
            N=params.N,
            T=params.T,
            beta_plus=params.beta_plus,
            beta_minus=params.beta_minus,
            rate=params.rate,
            gamma=params.gamma,
            tilt_G=params.tilt_G,
            tilt_H=params.tilt_H,
            seed=params.seed ^ r,
            sample_times=params.sample_times,
            tilt_substep=params.tilt_substep,
            record_events=params.record_events,
            max_events=params.max_events,
        )
        return run(p)

    if replicas == 1:
        return [one(0)]
    with ThreadPoolExecutor(max_workers=_n_threads()) as pool:
        return list(pool.map(one, range(replicas)))


def compare_micro_macro(results, traj: TrajectoryGrid, phis) -> list:
    """Law-of-large-numbers gap table between replica-averaged empirical
    measures and a hydrodynamic solution.

    For each test function phi returns a dict with the time-integrated
    density gap, the terminal conservative-current gap against
    -1/2 int <phi grad rho> dt and the terminal reaction-current gap against
    int <phi (C - A)(rho)> dt.
    """
    grid = traj.grid
    sample_times = np.array([s.t for s in results[0].snapshots])
    R = len(results)
    out = []
    coeffs = None
    for phi in phis:
        dens_micro = np.zeros(sample_times.size)
        qT = 0.0
        kT = 0.0
        for res in results:
            for j, snap in enumerate(res.snapshots):
                dens_micro[j] += empirical.pair_site_measure(snap, phi, "density")
            qT += empirical.pair_Q_measure(res.snapshots[-1], phi)
            kT += empirical.pair_site_measure(res.snapshots[-1], phi, "K")
        dens_micro /= R
        qT /= R
        kT /= R

        pv = np.asarray([float(phi(x)) for x in grid.x])
        dens_macro_t = integrate_x(traj.rho * pv, grid.dx)
        idx = np.rint(sample_times / grid.dt).astype(int)
        dens_gap = abs(
            float(np.trapezoid(dens_micro, sample_times))
            - float(np.trapezoid(dens_macro_t[idx], sample_times))
        )
        if coeffs is None:
            coeffs = macroscopic_coefficients(results[0].params.rate)
        grad_rho = centered_gradient(traj.rho, grid.dx)
        q_macro = -0.5 * float(integrate_t(integrate_x(grad_rho * pv, grid.dx), grid.dt))
        k_macro = float(
            integrate_t(
                integrate_x((coeffs.C(traj.rho) - coeffs.A(traj.rho)) * pv, grid.dx),
                grid.dt,
            )
        )
        out.append(
            {
                "density_gap": dens_gap,
                "current_gap": abs(qT - q_macro),
                "reaction_gap": abs(kT - k_macro),
            }
        )
    return out


# ---------------------------------------------------------------------------
# modes


def _sim_params(cfg: ExperimentConfig, record=False) -> SimParams:
    return SimParams(
        N=cfg.get_int("sim.n", required=True),
        T=cfg.get_float("sim.t", 1.0),
        beta_plus=cfg.get_float("sim.beta_plus", 1.0),
        beta_minus=cfg.get_float("sim.beta_minus", 1.0),
        rate=cfg.get_rate(),
        gamma=cfg.get_profile("sim.gamma", default=lambda x: 0.5 + 0.0 * np.asarray(x)),
        tilt_G=cfg.get_profile("sim.tilt_g"),
        tilt_H=cfg.get_profile("sim.tilt_h"),
        seed=cfg.seed,
        sample_times=cfg.get_floats("sim.sample_times", (cfg.get_float("sim.t", 1.0),)),
        tilt_substep=cfg.get_float("sim.tilt_substep"),
        record_events=record,
    )


def _mode_simulate(cfg: ExperimentConfig) -> int:
    params = _sim_params(cfg)
    results = run_replicas(params, cfg.replicas)
    N = params.N
    times = [s.t for s in results[0].snapshots]
    xs = np.arange(-N, N + 1) / N

    rho = np.zeros((len(times), 2 * N + 1))
    q = np.zeros((len(times), 2 * N))
    k = np.zeros((len(times), 2 * N + 1))
    for res in results:
        for j, snap in enumerate(res.snapshots):
            rho[j] += snap.occupancy
            q[j] += snap.Q / N
            k[j] += snap.K
    rho /= len(results)
    q /= len(results)
    k /= len(results)

    def rows(arr, xvals):
        for j, t in enumerate(times):
            for i, x in enumerate(xvals):
                yield (len(results), t, x, arr[j, i])

    write_csv(os.path.join(cfg.out_dir, "rho.csv"), ["run_count", "t", "x", "value"], rows(rho, xs))
    write_csv(os.path.join(cfg.out_dir, "q.csv"), ["run_count", "t", "x", "value"], rows(q, xs[:-1]))
    write_csv(os.path.join(cfg.out_dir, "k.csv"), ["run_count", "t", "x", "value"], rows(k, xs))
    write_summary(
        os.path.join(cfg.out_dir, "summary.json"),
        {"replicas": len(results), "n": N, "t_final": times[-1]},
    )
    return 0


def _hydro_traj(cfg: ExperimentConfig):
    gamma = cfg.get_profile("sim.gamma", default=lambda x: 0.5 + 0.0 * np.asarray(x))
    from .rates import boundary_density

    beta_p = cfg.get_float("sim.beta_plus", 1.0)
    beta_m = cfg.get_float("sim.beta_minus", 1.0)
    return solve_hydro(
        gamma,
        boundary_density(beta_m),
        boundary_density(beta_p),
        cfg.get_rate(),
        G=cfg.get_profile("sim.tilt_g"),
        H=cfg.get_profile("sim.tilt_h"),
        nx=cfg.get_int("grid.nx", 64),
        nt=cfg.get_int("grid.nt"),
        T=cfg.get_float("sim.t", 1.0),
    )


def _mode_hydro(cfg: ExperimentConfig) -> int:
    traj = _hydro_traj(cfg)
    gf = cfg.get_profile("sim.tilt_g")
    hf = cfg.get_profile("sim.tilt_h")
    gv = traj.grid.sample(gf).values if gf else None
    hv = traj.grid.sample(hf).values if hf else None
    write_fields_csv(
        os.path.join(cfg.out_dir, "fields.csv"),
        traj,
        g=gv,
        h=hv,
        stride=cfg.get_int("grid.csv_stride", 0),
    )
    write_summary(
        os.path.join(cfg.out_dir, "summary.json"),
        {
            "nx": traj.grid.nx,
            "nt": traj.grid.nt,
            "max_rho": float(traj.rho.max()),
            "min_rho": float(traj.rho.min()),
            "max_abs_deviation_from_initial": float(np.max(np.abs(traj.rho - traj.rho[0]))),
        },
    )
    return 0


def _mode_rate_eval(cfg: ExperimentConfig) -> int:
    traj = _hydro_traj(cfg)
    gamma = cfg.get_profile("sim.gamma_ref")
    breakdown = evaluate_I0_explicit(traj, cfg.get_rate(), gamma=gamma)
    G, H = recover_drifts(traj, cfg.get_rate())
    write_fields_csv(
        os.path.join(cfg.out_dir, "fields.csv"),
        traj,
        g=G.values,
        h=H.values,
        stride=cfg.get_int("grid.csv_stride", 0),
    )
    write_summary(os.path.join(cfg.out_dir, "summary.json"), breakdown.as_dict())
    return 0


def _mode_contract(cfg: ExperimentConfig) -> int:
    traj = _hydro_traj(cfg)
    result = solve_optimal_drift(traj, cfg.get_rate())
    write_fields_csv(
        os.path.join(cfg.out_dir, "fields.csv"),
        result.optimal_trajectory(),
        h=result.H_opt.values,
        stride=cfg.get_int("grid.csv_stride", 0),
    )
    write_summary(
        os.path.join(cfg.out_dir, "summary.json"),
        {
            "f_rho": result.F_rho,
            "residual": result.residual,
            "newton_iters_max": max(result.newton_iters),
            "newton_iters_total": sum(result.newton_iters),
            "damping_events": result.damping_events,
        },
    )
    return 0


def _mode_oracle(cfg: ExperimentConfig) -> int:
    params = _sim_params(cfg)
    moment = exact_tilted_moment(params)
    summary = {"moment": moment}
    paths = cfg.get_int("oracle.paths", 0)
    if paths:
        untilted = _sim_params(cfg, record=True)
        untilted.tilt_G = None
        untilted.tilt_H = None
        ws = np.empty(paths)
        for r in range(paths):
            p = SimParams(
                N=untilted.N,
                T=untilted.T,
                beta_plus=untilted.beta_plus,
                beta_minus=untilted.beta_minus,
                rate=untilted.rate,
                gamma=untilted.gamma,
                seed=cfg.seed ^ r,
                sample_times=untilted.sample_times,
                record_events=True,
            )
            res = run(p)
            ws[r] = np.exp(log_radon_nikodym(res.events, params))
        summary["mc_mean"] = float(ws.mean())
        summary["mc_stderr"] = float(ws.std(ddof=1) / np.sqrt(paths))
        summary["mc_paths"] = paths
    write_summary(os.path.join(cfg.out_dir, "summary.json"), summary)
    return 0


def _mode_validate(cfg: ExperimentConfig) -> int:
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "tests/test_acceptance.py", "-v"],
        cwd=os.getcwd(),
    )
    return 0 if proc.returncode == 0 else 1


def run_experiment(cfg: ExperimentConfig) -> int:
    os.makedirs(cfg.out_dir, exist_ok=True)
    write_manifest(cfg, os.path.join(cfg.out_dir, "manifest.json"))
    handlers = {
        "simulate": _mode_simulate,
        "hydro": _mode_hydro,
        "rate-eval": _mode_rate_eval,
        "contract": _mode_contract,
        "oracle": _mode_oracle,
        "validate": _mode_validate,
    }
    return handlers[cfg.mode](cfg)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="fluctlat", description=__doc__)
    parser.add_argument("mode", choices=MODES)
    parser.add_argument("--config", default=None)
    parser.add_argument("--out", default=".")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--replicas", type=int, default=1)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        raw = parse_config_file(args.config) if args.config else {}
        cfg = ExperimentConfig(
            mode=args.mode,
            raw=raw,
            seed=args.seed,
            replicas=args.replicas,
            out_dir=args.out,
        )
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        return run_experiment(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FluctlatError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
