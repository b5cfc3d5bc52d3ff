"""Command-line interface.

Subcommands: dispersion | factorize | semianalytic | direct | compare | sweep.
Exit codes: 0 ok, 1 runtime failure, 2 invalid configuration, 3 gate failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import os
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import fields
from pathlib import Path

import numpy as np

from .config import ConfigError, RunConfig, load_config
from .direct import write_field
from .kernel import epsilon_magnitude
from .lattice import LatticeSymbols, PassBandError
from .report import (CSV_HEADER, ComparisonReport, SemiAnalyticPipeline,
                     run_compare, run_direct, run_semianalytic,
                     save_angle_figure, save_compare_figure, save_field_figure,
                     write_csv, write_json, versions)

M0_RESIDUAL_GATE = 1e-8
OFFSET_RESIDUAL_FRACTION = 0.1

_INT_FIELDS = {"N", "M", "nodeCount", "Ngrid", "Npml"}


def _say(args, *msg) -> None:
    if not args.quiet:
        print(*msg)


def _prepare(args) -> tuple[RunConfig, Path]:
    cfg = load_config(args.config) if args.config else RunConfig()
    over = {}
    if args.paper_scale:
        over.update(Ngrid=448, Npml=270)
    if args.nodes:
        over["nodeCount"] = args.nodes
    if args.out:
        over["outputDir"] = args.out
    if over:
        cfg = cfg.replace(**over)
    else:
        cfg.validate()
    outdir = Path(cfg.outputDir)
    outdir.mkdir(parents=True, exist_ok=True)
    return cfg, outdir


def cmd_dispersion(cfg: RunConfig, outdir: Path, args) -> int:
    wave = cfg.wave()
    sym = LatticeSymbols(cfg.frequency(), wave)
    table = {
        "k": wave.k, "kx": wave.kx, "ky": wave.ky, "zP": wave.zP,
        "zh": sym.zh, "zr": sym.zr,
        "Rplus": sym.Rplus, "Rminus": sym.Rminus, "RL": sym.RL,
        "dispersion_residual": wave.dispersion_residual,
    }
    width = max(len(k) for k in table)
    for key, val in table.items():
        if isinstance(val, complex):
            _say(args, f"{key:>{width}} = {val.real:+.12e} {val.imag:+.12e}i")
        else:
            _say(args, f"{key:>{width}} = {val:.12e}")
    payload = {k: ([v.real, v.imag] if isinstance(v, complex) else v)
               for k, v in table.items()}
    payload["config"] = cfg.to_dict()
    payload["config_hash"] = cfg.hash()
    write_json(outdir / "dispersion.json", payload)
    return 0


def cmd_factorize(cfg: RunConfig, outdir: Path, args) -> int:
    pipe = SemiAnalyticPipeline.build(cfg)
    gates = pipe.gates()
    route = pipe.fk.gf.route
    if route == "numeric":
        _say(args, f"note: N = {cfg.N} has no closed Chebyshev product form; "
                   "using the numeric projector fallback")
    sup_k = float(np.abs(pipe.fk.kernel.K(
        np.exp(2j * np.pi * np.arange(512) / 512))).max())
    checks = {}
    if cfg.M == 0:
        checks["exactness(M=0): residual < 1e-8"] = \
            gates["kernel_residual"] < M0_RESIDUAL_GATE
    else:
        checks[f"asymptotic sanity: residual < {OFFSET_RESIDUAL_FRACTION} sup|K|"] = \
            gates["kernel_residual"] < OFFSET_RESIDUAL_FRACTION * sup_k
    checks["WH residual <= 4 * kernel residual * sup|v^i| (or 1e-8 at M=0)"] = (
        gates["wh_residual"] < M0_RESIDUAL_GATE if cfg.M == 0 else
        gates["wh_residual"] <= 4.0 * gates["kernel_residual"] * gates["v_incident_sup"])
    _say(args, f"factorization route: {route} (node count {gates['node_count']})")
    _say(args, f"residual estimate = {gates['kernel_residual']:.6e}")
    _say(args, f"epsilon           = {gates['epsilon']:.6e}")
    _say(args, f"WH residual       = {gates['wh_residual']:.6e}")
    ok = True
    for name, passed in checks.items():
        _say(args, f"[{'PASS' if passed else 'FAIL'}] {name}")
        ok &= passed
    payload = dict(gates)
    payload.update(route=route, sup_K=sup_k,
                   checks={k: bool(v) for k, v in checks.items()},
                   config=cfg.to_dict(), config_hash=cfg.hash(),
                   versions=versions())
    write_json(outdir / "factorize.json", payload)
    return 0 if ok else 3


def cmd_semianalytic(cfg: RunConfig, outdir: Path, args) -> int:
    pipe = SemiAnalyticPipeline.build(cfg)
    rows = run_semianalytic(cfg, pipe)
    csv_rows = []
    for r in rows:
        v = r["semi"] if r["semi"] is not None else complex(float("nan"), float("nan"))
        csv_rows.append([r["theta_deg"], abs(v), v.real, v.imag,
                         r["excluded"] or ""])
    write_csv(outdir / "semianalytic.csv",
              ["theta_deg", "abs_u_semi", "re_semi", "im_semi", "excluded"],
              csv_rows)
    write_json(outdir / "semianalytic.json", {
        "gates": pipe.gates(), "config": cfg.to_dict(),
        "config_hash": cfg.hash(), "versions": versions()})
    th = [r["theta_deg"] for r in rows]
    vals = [r["semi"] if r["semi"] is not None else np.nan for r in rows]
    save_angle_figure(outdir / "semianalytic.png", th, np.array(vals, dtype=complex),
                      "Wiener-Hopf far field",
                      f"far field, radius {cfg.circleRadius:g}")
    _say(args, f"wrote {outdir / 'semianalytic.csv'}")
    return 0


def cmd_direct(cfg: RunConfig, outdir: Path, args) -> int:
    grid, circ = run_direct(cfg)
    rows = [[float(t), int(x), int(y), abs(complex(u)), complex(u).real, complex(u).imag]
            for t, x, y, u in zip(circ["theta_deg"], circ["x"], circ["y"], circ["u"])]
    write_csv(outdir / "direct.csv",
              ["theta_deg", "x", "y", "abs_u_num", "re_num", "im_num"], rows)
    from .direct import stencil_residual
    write_json(outdir / "direct.json", {
        "solve_residual": grid.solve_residual,
        "stencil_residual": stencil_residual(grid),
        "config": cfg.to_dict(), "config_hash": cfg.hash(),
        "versions": versions()})
    save_field_figure(outdir / "direct_field.png", grid,
                      f"scattered field, N={cfg.N}, M={cfg.M}")
    save_angle_figure(outdir / "direct.png", circ["theta_deg"], circ["u"],
                      "direct solver", f"circle radius {cfg.circleRadius:g}")
    if args.dump_field:
        write_field(args.dump_field, grid)
        _say(args, f"dumped field to {args.dump_field}")
    _say(args, f"wrote {outdir / 'direct.csv'} (solve residual "
               f"{grid.solve_residual:.2e})")
    return 0


def cmd_compare(cfg: RunConfig, outdir: Path, args) -> int:
    report = run_compare(cfg)
    write_csv(outdir / "compare.csv", CSV_HEADER, report.csv_rows())
    write_json(outdir / "compare.json", report.summary)
    save_compare_figure(outdir / "compare.png", report,
                        f"N={cfg.N}, M={cfg.M}, radius {cfg.circleRadius:g}")
    med = report.summary["median_rel_diff"]
    _say(args, f"median relative |u| difference: {med:.4f} over "
               f"{report.summary['included_angles']} angles")
    _say(args, f"wrote {outdir / 'compare.csv'}")
    return 0


def _sweep_point(cfg_dict: dict, subdir: str) -> dict:
    cfg = RunConfig.from_dict(cfg_dict)
    out = Path(subdir)
    out.mkdir(parents=True, exist_ok=True)
    report = run_compare(cfg)
    write_csv(out / "compare.csv", CSV_HEADER, report.csv_rows())
    write_json(out / "compare.json", report.summary)
    save_compare_figure(out / "compare.png", report,
                        f"N={cfg.N}, M={cfg.M}, radius {cfg.circleRadius:g}")
    return {"median_rel_diff": report.summary["median_rel_diff"],
            "included_angles": report.summary["included_angles"]}


def _parse_vary(specs: list[str]) -> dict[str, list]:
    valid = {f.name for f in fields(RunConfig)}
    vary = {}
    for spec in specs or []:
        if "=" not in spec:
            raise ConfigError(f"--vary expects key=v1,v2,..., got {spec!r}")
        key, _, vals = spec.partition("=")
        if key not in valid:
            raise ConfigError(f"--vary: unknown configuration key {key!r}")
        conv = int if key in _INT_FIELDS else float
        try:
            vary[key] = [conv(v) for v in vals.split(",") if v != ""]
        except ValueError as exc:
            raise ConfigError(f"--vary {key}: {exc}") from exc
        if not vary[key]:
            raise ConfigError(f"--vary {key}: empty value list")
    return vary


def cmd_sweep(cfg: RunConfig, outdir: Path, args) -> int:
    vary = _parse_vary(args.vary)
    keys = sorted(vary)
    combos = list(itertools.product(*(vary[k] for k in keys))) if keys else [()]
    points = []
    for combo in combos:
        over = dict(zip(keys, combo))
        name = "_".join(f"{k}-{v:g}" for k, v in over.items()) or "single"
        sub = outdir / name
        try:
            pcfg = cfg.replace(**over, outputDir=str(sub))
        except ConfigError as exc:
            points.append({"name": name, "status": "invalid", "error": str(exc)})
            continue
        points.append({"name": name, "status": "pending", "config": pcfg,
                       "subdir": str(sub)})
    jobs = [p for p in points if p["status"] == "pending"]
    workers = max(1, min(args.workers, len(jobs) or 1))
    if workers == 1:
        for p in jobs:
            try:
                p.update(_sweep_point(p["config"].to_dict(), p["subdir"]),
                         status="ok")
            except Exception as exc:  # per-point failures recorded, sweep continues
                p.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = {pool.submit(_sweep_point, p["config"].to_dict(), p["subdir"]): p
                    for p in jobs}
            for fut in as_completed(futs):
                p = futs[fut]
                try:
                    p.update(fut.result(), status="ok")
                except Exception as exc:
                    p.update(status="failed", error=f"{type(exc).__name__}: {exc}")
    for p in points:
        p.pop("config", None)
        _say(args, f"[{p['status']:>7}] {p['name']}"
             + (f"  median {p['median_rel_diff']:.4f}" if p["status"] == "ok" else "")
             + (f"  ({p.get('error', '')})" if p["status"] == "failed" else ""))
    write_json(outdir / "sweep.json", {
        "points": points, "vary": vary, "config": cfg.to_dict(),
        "config_hash": cfg.hash(), "versions": versions()})
    return 0 if all(p["status"] == "ok" for p in points) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="crackscatter",
        description="Lattice-wave scattering by two staggered semi-infinite "
                    "cracks: Wiener-Hopf pipeline and direct-solver cross check.")
    ap.add_argument("--config", help="path to a flat JSON configuration")
    ap.add_argument("--out", help="output directory (overrides outputDir)")
    ap.add_argument("--paper-scale", action="store_true",
                    help="use the large grid (Ngrid=448, Npml=270)")
    ap.add_argument("--nodes", type=int, help="override nodeCount")
    ap.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("dispersion", help="wavenumber, branch points, annulus radii")
    sub.add_parser("factorize", help="kernel factorization residual gates")
    sub.add_parser("semianalytic", help="far-field values on the circle")
    pd = sub.add_parser("direct", help="sparse solve and circle extraction")
    pd.add_argument("--dump-field", metavar="PATH",
                    help="binary dump of the full field grid")
    sub.add_parser("compare", help="cross-validate the two pipelines")
    ps = sub.add_parser("sweep", help="Cartesian sweep of compare runs")
    ps.add_argument("--vary", action="append", metavar="KEY=V1,V2,...",
                    help="parameter list to sweep (repeatable)")
    ps.add_argument("--workers", type=int, default=min(4, os.cpu_count() or 1),
                    help="concurrent sweep workers")
    return ap


_HANDLERS = {
    "dispersion": cmd_dispersion,
    "factorize": cmd_factorize,
    "semianalytic": cmd_semianalytic,
    "direct": cmd_direct,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg, outdir = _prepare(args)
        return _HANDLERS[args.command](cfg, outdir, args)
    except (ConfigError, PassBandError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        if not getattr(args, "quiet", False):
            traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
