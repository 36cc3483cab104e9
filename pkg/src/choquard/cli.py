"""Command line front end.

Subcommands: params, ground, evolve, sweep, check, plots-data.  Exit codes:
0 success, 1 invalid parameters or config, 2 ground-state non-convergence,
3 overflow during evolution, 4 failed checks.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import io as cio
from .evolve import AdaptConfig, EvolveConfig, evolve
from .grid import BoxGrid, Field, make_grid
from .groundstate import (ConvergenceError, GroundState, GroundStateOptions,
                          compute_ground_state, me_gm)
from .hartree import Model
from .params import derived_exponents, validate_params

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NO_CONVERGENCE = 2
EXIT_OVERFLOW = 3
EXIT_CHECK_FAILED = 4


def _radial_engine_available(params) -> bool:
    return params.N == 3


def ground_state_for(cfg: cio.RunConfig, grid: BoxGrid):
    """Radial ground state for the config's parameters, or None when the
    radial engine does not apply (me/gm columns then stay nan)."""
    params = cfg.model_params()
    if not _radial_engine_available(params):
        return None
    opts = GroundStateOptions(seed=cfg.seed)
    return compute_ground_state(grid, params, opts)


def phi_provenance_hash(gs: GroundState | None) -> str | None:
    if gs is None:
        return None
    h = hashlib.sha256()
    h.update(repr(gs.params).encode())
    prof = getattr(gs.phi, "profile", None)
    if prof is not None:
        h.update(np.float64(prof.rmax).tobytes())
        h.update(np.ascontiguousarray(prof.values).tobytes())
    else:
        h.update(np.ascontiguousarray(gs.phi.values).tobytes())
    return h.hexdigest()


def initial_field(cfg: cio.RunConfig, grid: BoxGrid,
                  gs: GroundState | None) -> Field:
    r = grid.r
    kind = cfg.init_kind
    if kind == "gaussian":
        vals = cfg.init_amplitude * np.exp(-r ** 2 / (2.0 * cfg.init_width ** 2))
    elif kind == "ring":
        # radial shell centered at twice its width
        r0 = 2.0 * cfg.init_width
        vals = cfg.init_amplitude * np.exp(-((r - r0) / cfg.init_width) ** 2)
    elif kind == "groundstate_scaled":
        if gs is None:
            raise ValueError("groundstate_scaled init needs the radial "
                             "ground-state engine (N = 3)")
        prof = gs.phi.profile
        s = 1.0 / cfg.init_width
        # width rescales by the exact symmetry u -> s^sigma u(s x); c scales
        # the amplitude through the threshold family
        params = cfg.model_params()
        sigma = float((2 + params.alpha + 2 * params.b)
                      / (2 * (params.p - 1)))
        vals = cfg.init_c * s ** sigma * prof(s * r)
    else:
        raise ValueError(f"unknown init kind {kind!r}")
    return Field(grid, vals.astype(complex))


def _evolve_config(cfg: cio.RunConfig) -> EvolveConfig:
    return EvolveConfig(
        dt=cfg.evolve_dt,
        t_end=cfg.evolve_t_end,
        output_stride=cfg.evolve_output_stride,
        snapshot_stride=cfg.evolve_snapshot_stride,
        fft_precision=cfg.evolve_fft_precision,
        linear_only=cfg.linear_only,
        adapt=AdaptConfig(
            enabled=cfg.evolve_adapt_enabled,
            grad_growth_trigger=cfg.evolve_adapt_grad_growth_trigger,
            dt_min=cfg.evolve_adapt_dt_min,
        ),
    )


def run_evolve(cfg: cio.RunConfig, out_dir) -> int:
    """Run one trajectory and write the run directory; returns exit code."""
    t_start = time.time()
    params = cfg.model_params()
    report = validate_params(params)
    if not report.valid:
        print(json.dumps({"error": "invalid parameters",
                          "violations": list(report.violations)}))
        return EXIT_INVALID
    grid = make_grid(cfg.grid_M, cfg.grid_L)
    gs = ground_state_for(cfg, grid)
    u0 = initial_field(cfg, grid, gs)
    hook = dg.record_hook(params, gs=gs, level=cfg.diagnostics_level,
                          loc_radii=tuple(cfg.diagnostics_R_list),
                          linear=cfg.linear_only)
    traj = evolve(u0, _evolve_config(cfg), params, hooks=(hook,))

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cio.atomic_write_text(out_dir / cio.CONFIG_NAME, cfg.config_text())
    cio.write_diagnostics(out_dir, traj.records)
    if cfg.diagnostics_R_list:
        cio.write_morawetz(out_dir, traj.times, traj.records,
                           cfg.diagnostics_R_list)
    if traj.snapshots:
        cio.save_snapshots(out_dir, traj.snapshots)

    verdict = None
    if traj.status != "overflow":
        th = dict(cfg.diagnostics_thresholds) or None
        result = dg.classify(traj, params, th)
        verdict = result.verdict
        cio.atomic_write_text(out_dir / cio.VERDICT_NAME,
                              json.dumps(result.to_json(), indent=1,
                                         sort_keys=True) + "\n")
    cio.write_manifest(
        out_dir, cfg,
        phi_hash=phi_provenance_hash(gs),
        t_wrap=traj.meta["t_wrap"],
        wall_time=time.time() - t_start,
        verdict=verdict,
        status=traj.status,
        extra={"n_steps": traj.meta["n_steps"],
               "dt_final": traj.meta["dt_final"],
               "reason": traj.reason},
    )
    if traj.status == "overflow":
        print(json.dumps({"status": "overflow", "reason": traj.reason}))
        return EXIT_OVERFLOW
    print(json.dumps({"status": traj.status, "verdict": verdict,
                      "dir": str(out_dir)}))
    return EXIT_OK


def sweep_point(cfg_flat: dict, point: tuple) -> dict:
    """One sweep row; runs in a worker process.  point = (c, p, b)."""
    c, p_val, b_val = point
    cfg = cio.RunConfig.from_flat(cfg_flat)
    cfg.init_c, cfg.model_p, cfg.model_b = c, p_val, b_val
    row = {"c": c, "N": cfg.model_N, "alpha": cfg.model_alpha,
           "b": b_val, "p": p_val,
           "M": cfg.grid_M, "L": cfg.grid_L,
           "ME": math.nan, "GM": math.nan, "verdict": "error",
           "local_mass_inf": math.nan, "grad_sup_ratio": math.nan,
           "decay_exponent_fit": math.nan, "cauchy_defect": math.nan}
    try:
        params = cfg.model_params()
        if not validate_params(params).valid:
            return row
        grid = make_grid(cfg.grid_M, cfg.grid_L)
        gs = ground_state_for(cfg, grid)
        u0 = initial_field(cfg, grid, gs)
        if gs is not None:
            ratios = me_gm(u0, gs)
            row["ME"], row["GM"] = ratios["ME"], ratios["GM"]
        hook = dg.record_hook(params, gs=gs, level="standard",
                              linear=cfg.linear_only)
        traj = evolve(u0, _evolve_config(cfg), params, hooks=(hook,))
        if traj.status == "overflow":
            return row
        th = dict(cfg.diagnostics_thresholds) or None
        result = dg.classify(traj, params, th)
        row["verdict"] = result.verdict
        row.update({k: result.evidence[k] for k in
                    ("local_mass_inf", "grad_sup_ratio",
                     "decay_exponent_fit", "cauchy_defect")})
    except Exception:
        row["verdict"] = "error"
    return row


SWEEP_COLUMNS = ("c", "N", "alpha", "b", "p", "M", "L", "ME", "GM", "verdict",
                 "local_mass_inf", "grad_sup_ratio", "decay_exponent_fit",
                 "cauchy_defect")


def sweep_axis(cfg: cio.RunConfig) -> list:
    """Axis points (c, p, b): the amplitude list crossed with the zipped
    (p, b) pairs when those lists are set, else the config's own (p, b)."""
    if cfg.sweep_p_list or cfg.sweep_b_list:
        ps = cfg.sweep_p_list or [cfg.model_p]
        bs = cfg.sweep_b_list or [cfg.model_b]
        if len(ps) != len(bs):
            if len(ps) == 1:
                ps = ps * len(bs)
            elif len(bs) == 1:
                bs = bs * len(ps)
            else:
                raise ValueError("sweep.p_list and sweep.b_list lengths "
                                 "must match (they are zipped)")
        pb = list(zip(ps, bs))
    else:
        pb = [(cfg.model_p, cfg.model_b)]
    return [(float(c), float(p), float(b))
            for c in cfg.sweep_c_list for (p, b) in pb]


def run_sweep(cfg: cio.RunConfig, points, out_path, workers: int = 1) -> int:
    flat = {k: cio._fmt(v) for k, v in cfg.to_flat().items()}
    if workers > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_point, [flat] * len(points), points))
    else:
        rows = [sweep_point(flat, pt) for pt in points]
    rows.sort(key=lambda r: (r["c"], r["p"], r["b"]))
    cio.write_csv(out_path, SWEEP_COLUMNS,
                  [[row[k] for k in SWEEP_COLUMNS] for row in rows])
    print(json.dumps({"points": len(rows), "out": str(out_path)}))
    return EXIT_OK


def cmd_params(args) -> int:
    cfg = _load_config(args)
    params = cfg.model_params()
    report = validate_params(params)
    out = {
        "params": {"N": params.N, "alpha": str(params.alpha),
                   "b": str(params.b), "p": str(params.p)},
        "valid": report.valid,
        "violations": list(report.violations),
    }
    if report.structural_ok:
        out["derived_exponents"] = cio.exponents_block(params)
    text = json.dumps(out, indent=1, sort_keys=True)
    print(text)
    if args.out:
        cio.atomic_write_text(args.out, text + "\n")
    return EXIT_OK if report.valid else EXIT_INVALID


def cmd_ground(args) -> int:
    cfg = _load_config(args)
    params = cfg.model_params()
    report = validate_params(params)
    if not report.valid:
        print(json.dumps({"error": "invalid parameters",
                          "violations": list(report.violations)}))
        return EXIT_INVALID
    grid = make_grid(cfg.grid_M, cfg.grid_L)
    try:
        gs = compute_ground_state(grid, params,
                                  GroundStateOptions(seed=cfg.seed))
    except ConvergenceError as exc:
        print(json.dumps({"error": "no convergence", "detail": str(exc)}))
        return EXIT_NO_CONVERGENCE
    out_dir = Path(args.out or cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prof = getattr(gs.phi, "profile", None)
    if prof is not None:
        import io as _stdio
        buf = _stdio.BytesIO()
        np.save(buf, np.ascontiguousarray(prof.values))
        cio.atomic_write_bytes(out_dir / "phi_profile.npy", buf.getvalue())
    scalars = {
        "C_gn": gs.C_gn,
        "el_residual": gs.el_residual,
        "pohozaev_res": list(gs.pohozaev_res),
        "thresholds": list(gs.thresholds),
        "m_action": gs.m_action,
        "engine": gs.engine,
        "iterations": gs.iterations,
        "phi_mass": gs.phi_mass,
        "phi_grad_sq": gs.phi_grad_sq,
        "phi_energy": gs.phi_energy,
        "phi_interaction": gs.phi_interaction,
        "phi_hash": phi_provenance_hash(gs),
        "seed": cfg.seed,
    }
    cio.atomic_write_text(out_dir / "groundstate.json",
                          json.dumps(scalars, indent=1, sort_keys=True) + "\n")
    print(json.dumps({"C_gn": gs.C_gn, "engine": gs.engine,
                      "el_residual": gs.el_residual, "dir": str(out_dir)}))
    return EXIT_OK


def cmd_evolve(args) -> int:
    cfg = _load_config(args)
    return run_evolve(cfg, args.out or cfg.output_dir)


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    out = args.out or (Path(cfg.output_dir) / "sweep.csv")
    return run_sweep(cfg, sweep_axis(cfg), out, workers=args.workers)


def cmd_check(args) -> int:
    from . import checks

    def show(res) -> None:
        status = "PASS" if res.passed else "FAIL"
        if not res.passed and res.known_limit:
            status = "FAIL (known discretization limit)"
        print(f"{status} {res.name}: {res.detail}", flush=True)

    def narrate(msg: str) -> None:
        print(f"# {msg}", flush=True)

    results = checks.run_checks(tiny=args.tiny,
                                kernel_fault=args.inject_kernel_fault,
                                progress=show, log=narrate)
    lines = []
    n_fail = 0
    for res in results:
        n_fail += 0 if res.passed else 1
        lines.append({"check": res.name,
                      "status": "PASS" if res.passed else "FAIL",
                      "known_limit": res.known_limit,
                      "value": res.value, "tolerance": res.tolerance,
                      "detail": res.detail})
    payload = json.dumps({"results": lines, "failures": n_fail},
                         indent=1, sort_keys=True)
    if args.out:
        cio.atomic_write_text(args.out, payload + "\n")
    return EXIT_CHECK_FAILED if n_fail else EXIT_OK


def cmd_plots_data(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / cio.DIAGNOSTICS_NAME).exists():
        print(json.dumps({"error": f"no diagnostics in {run_dir}"}))
        return EXIT_INVALID
    written = write_plots_data(run_dir)
    print(json.dumps({"written": [str(p) for p in written]}))
    return EXIT_OK


def write_plots_data(run_dir) -> list:
    """Derived tables for the plotting front end.

    Everything here is arithmetic on stored outputs: finite differences of
    recorded columns, shell averages of stored snapshots.  No equation
    physics is recomputed.
    """
    run_dir = Path(run_dir)
    written = []
    header, rows = cio.read_csv(run_dir / cio.DIAGNOSTICS_NAME)

    def col(name):
        i = header.index(name)
        return np.array([float(row[i]) for row in rows])

    t = col("t")

    # identity_defect table: centered second difference of v_a, first
    # difference of m_a, against the recorded five-term total
    va, ma, tot = col("v_a"), col("m_a"), col("vpp_total")
    if len(t) >= 5 and np.isfinite(va).all() and np.isfinite(tot).all():
        dt = t[1] - t[0]
        vpp = np.full_like(va, np.nan)
        vpp[1:-1] = (va[2:] - 2 * va[1:-1] + va[:-2]) / dt ** 2
        mp = np.full_like(ma, np.nan)
        mp[1:-1] = (ma[2:] - ma[:-2]) / (2 * dt)
        out = run_dir / "identity.csv"
        cio.write_csv(out, ("t", "vpp_fd", "mp_fd", "rhs_total",
                            "defect_vpp", "defect_mp"),
                      [[t[i], vpp[i], mp[i], tot[i], vpp[i] - tot[i],
                        mp[i] - tot[i]] for i in range(len(t))])
        written.append(out)

    # morawetz kappa table from the localized-norm side table
    mor = run_dir / cio.MORAWETZ_NAME
    if mor.exists():
        mh, mrows = cio.read_csv(mor)
        mt = np.array([row[0] for row in mrows], dtype=float)
        fit_rows = []
        from .params import ModelParams
        man = cio.read_manifest(run_dir)
        p = ModelParams(N=int(float(man["config"]["model.N"])),
                        alpha=float(man["config"]["model.alpha"]),
                        b=float(man["config"]["model.b"]),
                        p=float(man["config"]["model.p"]))
        ex = derived_exponents(p).as_floats()
        for j, name in enumerate(mh[1:], start=1):
            R = float(name.split("R")[-1])
            series = np.array([row[j] for row in mrows], dtype=float)
            for T in (mt[-1] / 4.0, mt[-1] / 2.0, mt[-1]):
                sel = mt <= T + 1e-12
                if sel.sum() < 2:
                    continue
                lhs = float(np.trapezoid(series[sel] ** 2, mt[sel]) / T)
                rhs = R / T + R ** (-(p.N - 1) * ex["B"] / p.N)
                fit_rows.append([R, T, lhs, rhs, lhs / rhs])
        out = run_dir / "morawetz_fit.csv"
        cio.write_csv(out, ("R", "T", "lhs_avg", "rhs_model", "kappa_fit"),
                      fit_rows)
        written.append(out)

    # radial profile of the first and last snapshot
    snap_index = run_dir / cio.SNAP_DIR / "index.json"
    if snap_index.exists():
        man = cio.read_manifest(run_dir)
        M = int(float(man["config"]["grid.M"]))
        L = float(man["config"]["grid.L"])
        grid = make_grid(M, L)
        snaps = cio.load_snapshots(run_dir, grid)
        first_t, first = snaps[0]
        last_t, last = snaps[-1]
        nbins = M // 2
        edges = np.linspace(0.0, L / 2.0, nbins + 1)
        rflat = grid.r.ravel()
        idx = np.clip(np.digitize(rflat, edges) - 1, 0, nbins - 1)
        counts = np.bincount(idx, minlength=nbins)
        mids = 0.5 * (edges[:-1] + edges[1:])
        prof_first = np.bincount(idx, weights=np.abs(first.values).ravel(),
                                 minlength=nbins) / np.maximum(counts, 1)
        prof_last = np.bincount(idx, weights=np.abs(last.values).ravel(),
                                minlength=nbins) / np.maximum(counts, 1)
        prof_rows = [[mids[i], prof_first[i], prof_last[i]]
                     for i in range(nbins)]
        out = run_dir / "radial_profile.csv"
        cio.write_csv(out, ("r", f"abs_u_t{first_t:g}", f"abs_u_t{last_t:g}"),
                      prof_rows)
        written.append(out)
    return written


def _load_config(args) -> cio.RunConfig:
    if args.config:
        cfg = cio.RunConfig.from_file(args.config)
    else:
        cfg = cio.RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "linear_only", False):
        cfg.linear_only = True
    return cfg


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="choquard",
        description="Pseudo-spectral simulator and variational toolkit for "
                    "the focusing inhomogeneous Hartree equation")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--out", help="output file or directory")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--linear-only", action="store_true",
                       dest="linear_only",
                       help="drop the nonlinearity (free flow)")

    p = sub.add_parser("params", help="validate parameters, print exponents")
    common(p)
    p.set_defaults(fn=cmd_params)

    p = sub.add_parser("ground", help="compute the ground state")
    common(p)
    p.set_defaults(fn=cmd_ground)

    p = sub.add_parser("evolve", help="run one trajectory")
    common(p)
    p.set_defaults(fn=cmd_evolve)

    p = sub.add_parser("sweep", help="classify an amplitude sweep")
    common(p)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("check", help="run the acceptance checks")
    common(p)
    p.add_argument("--tiny", action="store_true",
                   help="16^3 smoke mode, under a minute")
    p.add_argument("--inject-kernel-fault", type=float, default=None,
                   metavar="SCALE",
                   help="corrupt the convolution multiplier by SCALE to "
                        "verify the oracle checks catch it")
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("plots-data",
                       help="derived tables for the plotting front end")
    p.add_argument("run_dir")
    p.add_argument("--out", default=None)
    p.set_defaults(fn=cmd_plots_data)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (KeyError, ValueError) as exc:
        # bad configs and out-of-range arguments all land here
        print(json.dumps({"error": str(exc)}))
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
