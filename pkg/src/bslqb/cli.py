"""Batch command line: run scenes, convergence sweeps, config validation."""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import projection
from .config import ConfigError, load_config
from .frames import CsvWriter, DIAGNOSTICS_COLUMNS, ERRORS_COLUMNS, write_frame_array
from .sim import run

DEFAULT_CONVERGENCE_DX = [1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256]


def _resolve_threads(args_threads):
    if args_threads is not None:
        return args_threads
    env = os.environ.get("BSLQB_THREADS")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"BSLQB_THREADS={env!r} is not an integer")
    return None


def _apply_overrides(cfg, args):
    threads = _resolve_threads(args.threads)
    if threads is not None:
        cfg.threads = threads
    if args.seed is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.out_dir = args.out
    return cfg.validate()


def _cmd_validate(args) -> int:
    load_config(args.config)
    print("OK")
    return 0


def _write_frames(state, out_dir):
    i = state.step_index
    g = state.grid
    write_frame_array(
        state.u.coeffs, "velocity", g.dx, state.time,
        os.path.join(out_dir, f"velocity_{i:06d}.bsl"),
    )
    if state.last_solution is not None:
        write_frame_array(
            state.last_solution.pressure_nodal, "pressure", g.dx, state.time,
            os.path.join(out_dir, f"pressure_{i:06d}.bsl"),
        )
    if state.fluid_phi is not None:
        write_frame_array(
            state.fluid_phi.values, "phi", g.dx, state.time,
            os.path.join(out_dir, f"phi_{i:06d}.bsl"),
        )
    if state.dye is not None:
        write_frame_array(
            state.dye, "dye", g.dx, state.time,
            os.path.join(out_dir, f"dye_{i:06d}.bsl"),
        )


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    os.makedirs(cfg.out_dir, exist_ok=True)
    diag_path = os.path.join(cfg.out_dir, "diagnostics.csv")
    with CsvWriter(diag_path, DIAGNOSTICS_COLUMNS) as diag:
        def on_step(state):
            diag.write_row(state.last_diag.row())
            if cfg.frame_interval and state.step_index % cfg.frame_interval == 0:
                _write_frames(state, cfg.out_dir)
            if cfg.debug_dump and state.system is not None and state.step_index == 1:
                projection.dump_system(
                    state.system, os.path.join(cfg.out_dir, "matrices")
                )

        state = run(cfg, on_step=on_step)
    print(
        f"{cfg.scene}: {state.step_index} steps to t={state.time:.6g}, "
        f"diagnostics in {diag_path}"
    )
    return 0


def _convergence_error(cfg, dx, scheme, lam_c=None, lam=None) -> float:
    from dataclasses import replace

    n = int(round(1.0 / dx))
    sub = replace(
        cfg,
        cells=(n, n),
        dx=dx,
        dt_fixed=dx,
        cfl=None,
        scheme=scheme,
        lam=lam,
        lambda_c=lam_c,
        max_steps=None,
    )
    sub.validate()
    state = run(sub)
    g = state.grid
    pts = g.cell_center_points().reshape(n, n, 2)[1:-1, 1:-1].reshape(-1, 2)
    exact = state.scene.oracle(pts, state.time)
    err = state.u.eval(pts) - exact
    return float(np.max(np.abs(err)))


def _cmd_convergence(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.scene != "burgers_convergence":
        raise ConfigError("convergence expects the burgers_convergence scene")
    dx_list = cfg.scene_params.get("dx_list", DEFAULT_CONVERGENCE_DX)
    c = 2.95
    os.makedirs(cfg.out_dir, exist_ok=True)
    path = os.path.join(cfg.out_dir, "errors.csv")
    with CsvWriter(path, ERRORS_COLUMNS) as out:
        for dx in dx_list:
            e_sl = _convergence_error(cfg, dx, "sl", lam=1.0)
            e_l1 = _convergence_error(cfg, dx, "bslqb", lam=1.0)
            e_lc = _convergence_error(cfg, dx, "bslqb", lam_c=c)
            out.write_row([dx, e_sl, e_l1, e_lc])
            print(
                f"dx={dx:.6g}: sl={e_sl:.4e} bslqb(l=1)={e_l1:.4e} "
                f"bslqb(l=1-{c}dx)={e_lc:.4e}"
            )
    print(f"errors in {path}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="bslqb",
        description="Collocated B-spline incompressible flow solver (2D)",
    )
    p.add_argument("--threads", type=int, default=None,
                   help="worker threads (reserved; runs are single-threaded)")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--out", default=None, help="override output directory")
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, doc in (
        ("run", _cmd_run, "simulate a scene, writing frames and diagnostics.csv"),
        ("convergence", _cmd_convergence,
         "grid-refinement error sweep, writes errors.csv"),
        ("validate", _cmd_validate, "parse and validate a config"),
    ):
        sp = sub.add_parser(name, help=doc)
        sp.add_argument("config")
        sp.set_defaults(fn=fn)
    return p


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
