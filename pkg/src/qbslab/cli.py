"""Command line entry point.

Subcommands: moments | simulate | oracle | compare.  Commands that write
artifacts take --out-dir, falling back to the QBS_OUT_DIR environment
variable.  Flags override the corresponding config keys; the merged
config is echoed into run_manifest.json so every output directory is
self-describing.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .blur import BlurError
from .core import ConfigError, ModelKind, load_config
from .engine import EngineError, make_kernel, simulate
from .moments import MomentError, Variable, solve_rotation_moments, translation_moment
from .oracle import (DensityGrid, OracleError, StabilityError, classical_density,
                     compare_densities, particle_vs_pde, solve_truncated_fp)
from .report import ReportError, emit, kernel_parameters, run_id

_DEFAULT_ORACLE_CELLS = 400


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _versions() -> dict:
    return {"qbslab": __version__, "numpy": np.__version__,
            "scipy": scipy.__version__, "python": platform.python_version()}


def _write_json(path: Path, doc: dict):
    path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8", newline="")


def _resolve_out_dir(flag_value) -> Path:
    if flag_value:
        return Path(flag_value)
    env = os.environ.get("QBS_OUT_DIR")
    if env:
        return Path(env)
    raise ConfigError("no output directory: pass --out-dir or set QBS_OUT_DIR")


def _manifest_start(out_dir: Path, config, kernel, command: str, threads: int) -> dict:
    # written before the run starts so a crash still leaves a record
    doc = {
        "command": command,
        "status": "running",
        "run_id": run_id(config),
        "config": config.as_dict(),
        "kernel": kernel_parameters(kernel),
        "seed": config.seed,
        "threads": threads,
        "tool_version": __version__,
        "started_utc": _utc_now(),
        "finished_utc": None,
    }
    _write_json(out_dir / "run_manifest.json", doc)
    return doc


def _manifest_finish(out_dir: Path, doc: dict):
    doc["status"] = "complete"
    doc["finished_utc"] = _utc_now()
    _write_json(out_dir / "run_manifest.json", doc)


def _apply_overrides(cfg, args):
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "paths", None) is not None:
        overrides["n_paths"] = args.paths
    if getattr(args, "steps", None) is not None:
        overrides["n_steps"] = args.steps
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)
    return cfg


def cmd_moments(args) -> int:
    cfg = load_config(args.config)
    order = args.max_order
    if order < 0:
        raise ConfigError("--max-order must be >= 0")
    if cfg.model_kind is ModelKind.TRANSLATION_1D:
        print("order,moment")
        for i in range(order + 1):
            print(f"{i},{translation_moment(i, cfg.eps_transform):.10g}")
    else:
        print("order,variable,polynomial")
        for var in (Variable.X, Variable.SPREAD):
            ms = solve_rotation_moments(var, cfg.eps_transform, max(order, 2))
            for n, poly in enumerate(ms.polys):
                if n > order:
                    break
                print(f'{n},{var.value},"{poly.to_text()}"')
    return 0


def cmd_simulate(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out_dir = _resolve_out_dir(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    kernel = make_kernel(cfg)
    manifest = _manifest_start(out_dir, cfg, kernel, "simulate", args.threads)
    sim = simulate(cfg, threads=args.threads)
    files = emit(sim, out_dir, versions=_versions())
    _manifest_finish(out_dir, manifest)
    print(f"run {manifest['run_id']}: wrote {len(files)} files to {out_dir}")
    return 0


def _classical_reference(cfg, truncation: int, cells, t_final):
    """Truncated solve against the closed-form lognormal law (no blur)."""
    law = classical_density(cfg.x0, cfg.g1_coeff, t_final)
    lo = math.exp(law.mu_log - 7.0 * law.sigma_log)
    hi = math.exp(law.mu_log + 7.0 * law.sigma_log)
    if cells is None:
        cells = _DEFAULT_ORACLE_CELLS
    pde = solve_truncated_fp(cfg.g1_coeff, 0.0, truncation, (lo, hi, cells),
                             t_final, initial=(cfg.x0, None))
    metrics = compare_densities(pde, law.on_grid(pde.edges))
    return pde, metrics, cells, "classical_lognormal"


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    if cfg.model_kind is not ModelKind.TRANSLATION_1D:
        raise OracleError("oracle subcommand supports the translation model only")
    out_dir = _resolve_out_dir(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    truncation = args.truncation

    if args.t_final is not None:
        if args.t_final <= 0:
            raise ConfigError("--t-final must be positive")
        steps = max(2, round(args.t_final / cfg.dt))
        cfg = dataclasses.replace(cfg, n_steps=steps)
    t_final = cfg.n_steps * cfg.dt

    kernel = make_kernel(cfg)
    manifest = _manifest_start(out_dir, cfg, kernel, "oracle", args.threads)
    if cfg.eps_transform == 0.0:
        pde, metrics, cells, reference = _classical_reference(
            cfg, truncation, args.grid_cells, t_final)
    else:
        res = particle_vs_pde(cfg, truncation, cells=args.grid_cells,
                              threads=args.threads)
        pde, metrics = res["pde"], res["metrics"]
        cells, reference = res["cells"], "particle_empirical"

    lines = ["cell_left,cell_right,density"]
    for i in range(len(pde.density)):
        lines.append(f"{pde.edges[i]:.17g},{pde.edges[i + 1]:.17g},{pde.density[i]:.17g}")
    (out_dir / "density.csv").write_text("\n".join(lines) + "\n",
                                         encoding="utf-8", newline="")
    doc = {
        "l1": metrics["l1"],
        "ks": metrics["ks"],
        "K": truncation,
        "grid": {"x_min": float(pde.edges[0]), "x_max": float(pde.edges[-1]),
                 "cells": cells, "dx": float(pde.widths[0])},
        "t_final": t_final,
        "dt_pde": pde.dt_pde,
        "reference": reference,
        "eps_transform": cfg.eps_transform,
    }
    _write_json(out_dir / "comparison.json", doc)
    _manifest_finish(out_dir, manifest)
    print(f"K={truncation} vs {reference}: L1={metrics['l1']:.6g} KS={metrics['ks']:.6g}")
    return 0


def _load_summary(path: Path) -> dict:
    doc = json.loads(path.read_text(encoding="utf-8"))
    if "log_price" not in doc:
        raise ReportError(f"schema mismatch: no log_price block in {path}")
    return doc


def _load_hist(path: Path):
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "bucket_left,bucket_right,count,probability":
        raise ReportError(f"schema mismatch: unexpected header in {path}")
    left, right, prob = [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        left.append(float(parts[0]))
        right.append(float(parts[1]))
        prob.append(float(parts[3]))
    edges = np.array(left + [right[-1]])
    dens = np.array(prob) / np.diff(edges)
    return DensityGrid(edges=edges, density=dens)


def cmd_compare(args) -> int:
    dirs = (Path(args.dir_a), Path(args.dir_b))
    for d in dirs:
        for name in ("summary.json", "hist.csv"):
            if not (d / name).is_file():
                print(f"error: missing file {d / name}", file=sys.stderr)
                return 1
    docs = [_load_summary(d / "summary.json") for d in dirs]
    hists = [_load_hist(d / "hist.csv") for d in dirs]

    print("metric,a,b,delta,significant")
    for key in ("mean", "variance", "skewness", "excess_kurtosis"):
        va = docs[0]["log_price"][key]
        vb = docs[1]["log_price"][key]
        se_key = {"excess_kurtosis": "kurtosis_se"}.get(key, f"{key}_se")
        se = math.hypot(docs[0]["log_price"][se_key], docs[1]["log_price"][se_key])
        delta = vb - va
        flag = "yes" if abs(delta) > 3.0 * se else "no"
        print(f"{key},{va:.10g},{vb:.10g},{delta:.10g},{flag}")
    metrics = compare_densities(hists[0], hists[1])
    print(f"hist_l1,{metrics['l1']:.10g}")
    print(f"hist_ks,{metrics['ks']:.10g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qbslab",
        description="Blurred diffusion laboratory: moments, particle runs, "
                    "truncated-equation oracles, run comparison.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("moments", help="print blurring moments for a config")
    p.add_argument("config")
    p.add_argument("--max-order", type=int, default=4)

    p = sub.add_parser("simulate", help="run the particle engine and emit reports")
    p.add_argument("config")
    p.add_argument("--seed", type=int)
    p.add_argument("--paths", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("oracle", help="solve the truncated equation and compare")
    p.add_argument("config")
    p.add_argument("--truncation", type=int, default=4)
    p.add_argument("--grid-cells", type=int)
    p.add_argument("--t-final", type=float)
    p.add_argument("--out-dir")
    p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("compare", help="diff two run directories")
    p.add_argument("dir_a")
    p.add_argument("dir_b")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"moments": cmd_moments, "simulate": cmd_simulate,
               "oracle": cmd_oracle, "compare": cmd_compare}[args.command]
    try:
        return handler(args)
    except (ConfigError, MomentError, BlurError, EngineError, OracleError,
            StabilityError, ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
