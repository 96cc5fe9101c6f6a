"""Experiment drivers: the runnable surface behind the CLI.

Each driver takes a validated RunConfig, writes its artifacts (CSV traces,
JSON reports) into the output directory, and returns a JSON-serializable
report.  run_experiment maps outcomes to exit codes:

    0  success
    2  an asserted experimental property failed (ExperimentFailure)
    3  solver or input error

All failures leave a diagnostic failure.json in the output directory.
Ensemble members run concurrently up to the PE3D_THREADS worker cap
(default 1); each member writes only its own files and the aggregate
report is written last.
"""

from __future__ import annotations

import glob
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .config import RunConfig
from .dynamics import SimulationParams
from .errors import InputError, SolverError
from .estimates import (TrajectoryDiagnostics, check_growth_bound,
                        continuity_probe, detect_absorbing, eta_partition,
                        fit_growth_constant, measure_decay_time,
                        record_trajectory)
from .fields import HorizontalField
from .grid import GridSpec
from .kicks import (OBSERVABLES, KickConfig, run_chain, wasserstein1,
                    wasserstein1_measures)
from .norms import norm_H, norm_V
from .sampling import random_smooth_field
from .verification import verify_manufactured


class ExperimentFailure(Exception):
    """An asserted experimental property failed (exit code 2)."""


# ---------------------------------------------------------------------------
# Worker pool
# ---------------------------------------------------------------------------

def n_workers() -> int:
    raw = os.environ.get("PE3D_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InputError(f"PE3D_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise InputError("PE3D_THREADS must be >= 1")
    return n


def _pmap(fn, items):
    items = list(items)
    workers = min(n_workers(), len(items))
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# CSV persistence (17 significant digits, lossless f64 round-trip)
# ---------------------------------------------------------------------------

TRAJECTORY_HEADER = "t,H2,E2,J,K,Kbar,budget_slack"
CHAIN_HEADER = "n,H2,E2,J,K,kick_V2,rescaled"


def write_trajectory_csv(path, diag: TrajectoryDiagnostics) -> None:
    with open(path, "w") as fh:
        fh.write(TRAJECTORY_HEADER + "\n")
        for row in zip(diag.t, diag.H2, diag.E2, diag.J, diag.K,
                       diag.Kbar, diag.slack):
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def read_trajectory_csv(path) -> TrajectoryDiagnostics:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != TRAJECTORY_HEADER:
        raise InputError(f"{path}: expected header {TRAJECTORY_HEADER!r}")
    try:
        data = np.array([[float(x) for x in ln.split(",")] for ln in lines[1:]])
    except ValueError as e:
        raise InputError(f"{path}: {e}")
    if data.ndim != 2 or data.shape[1] != 7:
        raise InputError(f"{path}: expected 7 columns")
    return TrajectoryDiagnostics(t=data[:, 0], H2=data[:, 1], E2=data[:, 2],
                                 J=data[:, 3], K=data[:, 4], Kbar=data[:, 5],
                                 slack=data[:, 6])


def write_chain_csv(path, trace) -> None:
    with open(path, "w") as fh:
        fh.write(CHAIN_HEADER + "\n")
        for n, H2, E2, J, K, V2, r in zip(trace.n, trace.H2, trace.E2,
                                          trace.J, trace.K, trace.kick_V2,
                                          trace.rescaled):
            fh.write(f"{n:d}," + ",".join(
                f"{v:.17g}" for v in (H2, E2, J, K, V2)) + f",{int(r)}\n")


def _write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Shared setup
# ---------------------------------------------------------------------------

def _sim_params(cfg: RunConfig, f: HorizontalField | None = None,
                t_end: float | None = None) -> SimulationParams:
    mode = "constant" if f is not None else "zero"
    return SimulationParams(nu=cfg.sim.nu, dt_max=cfg.sim.dt_max,
                            cfl=cfg.sim.cfl,
                            t_end=cfg.sim.t_end if t_end is None else t_end,
                            forcing_mode=mode, f=f)


def _scaled_ic(grid: GridSpec, seed: int, target_E2: float) -> HorizontalField:
    """Random smooth field in H rescaled so |v|_V^2 equals target_E2."""
    v = random_smooth_field(np.random.default_rng(seed), grid)
    if target_E2 == 0.0:
        return HorizontalField.zeros(grid)
    E2 = norm_V(v) ** 2
    return float(np.sqrt(target_E2 / E2)) * v


def _forcing_field(grid: GridSpec, seed: int, target_H2: float) -> HorizontalField | None:
    """Fixed smooth forcing with |f|_H^2 equal to target_H2 (None if zero)."""
    if target_H2 == 0.0:
        return None
    f = random_smooth_field(np.random.default_rng(seed), grid)
    return float(np.sqrt(target_H2 / norm_H(f) ** 2)) * f


# ---------------------------------------------------------------------------
# Drivers
# ---------------------------------------------------------------------------

def run_verify(cfg: RunConfig, outdir: Path) -> dict:
    rep = verify_manufactured(_sim_params(cfg))
    report = rep.to_dict()
    _write_json(outdir / "convergence.json", report)
    if rep.spatial_order < 1.8:
        raise ExperimentFailure(
            f"spatial convergence order {rep.spatial_order:.3f} < 1.8")
    if rep.temporal_order < 0.9:
        raise ExperimentFailure(
            f"temporal convergence order {rep.temporal_order:.3f} < 0.9")
    return report


def run_decay(cfg: RunConfig, outdir: Path) -> dict:
    params = _sim_params(cfg)

    def member(i: int):
        v0 = _scaled_ic(cfg.grid, cfg.kick.seed + i, cfg.exp.R)
        diag, _ = record_trajectory(v0, params, cfg.record_every)
        write_trajectory_csv(outdir / f"decay_{i}.csv", diag)
        return measure_decay_time(diag, cfg.exp.eps)

    T_V = _pmap(member, range(cfg.exp.n_ic))
    report = {"R": cfg.exp.R, "eps": cfg.exp.eps, "T_V": T_V,
              "t_end": params.t_end}
    if any(T is None for T in T_V):
        raise ExperimentFailure(
            f"some trajectories never settled below eps={cfg.exp.eps}: {T_V}")
    return report


def run_absorb(cfg: RunConfig, outdir: Path) -> dict:
    f = _forcing_field(cfg.grid, cfg.kick.seed + 9001, cfg.exp.f_H2)
    params = _sim_params(cfg, f=f)

    def member(i: int):
        v0 = _scaled_ic(cfg.grid, cfg.kick.seed + i, cfg.exp.R)
        diag, _ = record_trajectory(v0, params, cfg.record_every)
        write_trajectory_csv(outdir / f"absorb_{i}.csv", diag)
        return diag

    diags = _pmap(member, range(cfg.exp.n_ic))
    rep = detect_absorbing(diags, window=cfg.exp.window_frac * params.t_end)
    report = {"K_ball": rep.K_ball, "T_V": rep.T_V, "stayed": rep.stayed,
              "inconclusive": rep.inconclusive, "f_H2": cfg.exp.f_H2}
    if not all(rep.stayed):
        raise ExperimentFailure(f"trajectories left the ball: stayed={rep.stayed}")
    if any(rep.inconclusive):
        raise ExperimentFailure(
            f"tail still trending upward: inconclusive={rep.inconclusive}")
    return report


def measure_T_V(cfg: RunConfig, n_probes: int = 3,
                safety: float = 2.0) -> tuple[float, list[float]]:
    """The Theorem-3 inter-kick time: run unforced trajectories from
    |v0|_V^2 = 4R down to eps = R, take the worst decay time, and apply a
    safety factor (floored at 0.01 so the operator always advances)."""
    R = cfg.kick.R
    params = _sim_params(cfg)
    times = []
    for i in range(n_probes):
        v0 = _scaled_ic(cfg.grid, cfg.kick.seed + 5000 + i, 4.0 * R)
        diag, _ = record_trajectory(v0, params, cfg.record_every)
        T = measure_decay_time(diag, R) if R > 0 else 0.0
        if T is None:
            raise ExperimentFailure(
                f"T_V(4R, R) not reached within t_end={params.t_end}")
        times.append(T)
    return max(safety * max(times), 0.01), times


def run_kicks(cfg: RunConfig, outdir: Path) -> dict:
    R = cfg.kick.R
    if cfg.kick.T > 0:
        T, probe_times = cfg.kick.T, []
    else:
        T, probe_times = measure_T_V(cfg)
    params = _sim_params(cfg)

    def member(k: int):
        kc = KickConfig(T=T, R=R, n_modes=cfg.kick.n_modes,
                        seed=cfg.kick.seed, N=cfg.kick.N,
                        burn_in=cfg.kick.burn_in)
        v0 = _scaled_ic(cfg.grid, cfg.kick.seed + 100 + k, R)
        trace, pooled, windows = run_chain(kc, params, v0, chain_index=k)
        write_chain_csv(outdir / f"chain_{k}.csv", trace)
        _write_json(outdir / f"measure_{k}.json", pooled.to_dict())
        series = [wasserstein1_measures(a, b, "E2")
                  for a, b in zip(windows, windows[1:])]
        return trace, pooled, series

    results = _pmap(member, range(cfg.exp.n_chains))
    max_E2 = max(float(tr.E2.max()) for tr, _, _ in results) if results else 0.0
    pooled_E2 = [p.samples["E2"] for _, p, _ in results]
    report = {
        "T": T, "T_probe_times": probe_times, "R": R,
        "n_chains": cfg.exp.n_chains, "N": cfg.kick.N,
        "burn_in": cfg.kick.burn_in,
        "max_E2": max_E2, "bound_4R": 4.0 * R,
        "window_wasserstein_E2": [s for _, _, s in results],
        "rescale_fraction": float(np.mean(
            [tr.rescaled.mean() for tr, _, _ in results])),
    }
    if cfg.exp.n_chains >= 2:
        half = cfg.exp.n_chains // 2
        g1 = np.concatenate(pooled_E2[:half])
        g2 = np.concatenate(pooled_E2[half:])
        report["split_wasserstein_E2"] = wasserstein1(g1, g2)
        report["pooled_iqr_E2"] = float(np.subtract(
            *np.percentile(np.concatenate(pooled_E2), [75, 25])))
    if max_E2 > 4.0 * R * (1.0 + 1e-6):
        raise ExperimentFailure(
            f"chain boundedness violated: max |X|_V^2 = {max_E2:.6g} "
            f"> 4R = {4.0 * R:.6g}")
    return report


def run_diag(cfg: RunConfig, outdir: Path) -> dict:
    pattern = cfg.exp.input
    if not pattern:
        raise InputError("diag: experiment.input must name a directory or glob "
                         "of trajectory CSVs")
    if os.path.isdir(pattern):
        paths = sorted(glob.glob(os.path.join(pattern, "*.csv")))
    else:
        paths = sorted(glob.glob(pattern))
    if not paths:
        raise InputError(f"diag: no trajectory CSVs match {pattern!r}")
    entries = []
    all_ok = True
    for path in paths:
        diag = read_trajectory_csv(path)
        ivs = eta_partition(diag, cfg.exp.eta)
        gp = fit_growth_constant(diag, cfg.exp.eta, f_H2=cfg.exp.f_H2)
        ok = check_growth_bound(diag, gp)
        all_ok = all_ok and ok
        entries.append({"path": path, "n_intervals": len(ivs),
                        "n_degenerate": sum(iv.degenerate for iv in ivs),
                        "C": gp.C, "bound_holds": ok})
    report = {"eta": cfg.exp.eta, "f_H2": cfg.exp.f_H2, "trajectories": entries}
    if not all_ok:
        raise ExperimentFailure("fitted growth bound violated on some trajectory")
    return report


def run_probe(cfg: RunConfig, outdir: Path) -> dict:
    params = _sim_params(cfg)
    v0 = _scaled_ic(cfg.grid, cfg.kick.seed + 1, cfg.exp.R)
    w = random_smooth_field(np.random.default_rng(cfg.kick.seed + 2), cfg.grid)
    ratios = continuity_probe(v0, w, list(cfg.exp.deltas), cfg.exp.probe_t, params)
    spread = max(ratios) / min(ratios)
    report = {"t": cfg.exp.probe_t, "deltas": list(cfg.exp.deltas),
              "ratios": ratios, "spread": spread}
    if not all(np.isfinite(ratios)):
        raise ExperimentFailure(f"non-finite sensitivity ratios: {ratios}")
    if spread > 3.0:
        raise ExperimentFailure(
            f"sensitivity ratio spread {spread:.3f} > 3 across the delta ladder")
    return report


_DRIVERS = {"verify": run_verify, "decay": run_decay, "absorb": run_absorb,
            "kicks": run_kicks, "diag": run_diag, "probe": run_probe}


def run_experiment(cfg: RunConfig, seed: int | None = None,
                   output: str | None = None) -> int:
    """Run one experiment end to end; returns the process exit code."""
    if seed is not None:
        cfg = replace(cfg, kick=replace(cfg.kick, seed=seed))
    if output is not None:
        cfg = replace(cfg, output_dir=output)
    cfg.validate()
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    try:
        report = _DRIVERS[cfg.experiment](cfg, outdir)
    except ExperimentFailure as e:
        _write_json(outdir / "failure.json",
                    {"experiment": cfg.experiment, "kind": "assertion",
                     "detail": str(e)})
        print(f"FAIL ({cfg.experiment}): {e}")
        return 2
    except (InputError, SolverError) as e:
        _write_json(outdir / "failure.json",
                    {"experiment": cfg.experiment, "kind": "error",
                     "detail": str(e)})
        print(f"ERROR ({cfg.experiment}): {e}")
        return 3
    _write_json(outdir / f"{cfg.experiment}_report.json", report)
    print(f"OK ({cfg.experiment}): report in {outdir}")
    return 0
