"""Comparison harness, delimited output, JSON sidecars and figure rendering.

One angular table drives everything: for each observation angle the nearest
lattice node on the extraction circle is chosen, the far-field module is
evaluated at that node's exact polar coordinates, and the direct solver
contributes the node value.  Angles inside the declared exclusion bands
(pole directions, quadrant boundaries, the region boundary along the crack
line, and nodes falling on the waveguide rows) are kept in the table but
left out of the summary statistics.

CSV files are written with 17 significant digits and '.' decimals; the JSON
sidecar echoes the configuration, its hash, the residual gates that were
actually achieved, and library versions.  Both are byte-deterministic for
a fixed configuration.
"""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass

import matplotlib
import numpy as np

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import __version__
from .config import (DELTA_POLE_DEG, DELTA_QUADRANT_DEG, DELTA_REGION_DEG,
                     RunConfig)
from .direct import assemble, extract_circle, solve, stencil_residual
from .farfield import FarField
from .kernel import FactorizedKernel, MatrixKernel
from .lattice import LatticeSymbols
from .solver import SpectralSolution

__all__ = [
    "ComparisonReport",
    "SemiAnalyticPipeline",
    "run_compare",
    "run_direct",
    "run_semianalytic",
    "write_csv",
    "write_json",
]

QUADRANT_DEG = (45.0, 135.0, 225.0, 315.0)
REGION_DEG = (0.0, 180.0, 360.0)


def fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def write_json(path, obj: dict) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def versions() -> dict:
    import scipy
    return {
        "crackscatter": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


@dataclass
class SemiAnalyticPipeline:
    """Everything the Wiener-Hopf side needs, built once per configuration."""

    config: RunConfig
    sym: LatticeSymbols
    fk: FactorizedKernel
    sol: SpectralSolution
    ff: FarField

    @classmethod
    def build(cls, config: RunConfig) -> "SemiAnalyticPipeline":
        wave = config.wave()
        sym = LatticeSymbols(config.frequency(), wave)
        kernel = MatrixKernel(sym, config.geometry())
        fk = FactorizedKernel(kernel, node_count=config.nodeCount,
                              delta_off=config.deltaOff)
        sol = SpectralSolution(fk, wave)
        return cls(config=config, sym=sym, fk=fk, sol=sol,
                   ff=FarField(sol, delta_pole_deg=DELTA_POLE_DEG))

    def gates(self) -> dict:
        probes = self.sol.annulus_probes(64)
        vi_sup = float(np.abs(self.sol.v_incident(
            np.exp(2j * np.pi * np.arange(4096) / 4096))).max())
        return {
            "kernel_residual": self.fk.residual_estimate,
            "epsilon": self.fk.epsilon,
            "node_count": self.fk.node_count,
            "wh_residual": self.sol.wh_residual(probes),
            "v_incident_sup": vi_sup,
        }


def circle_nodes(config: RunConfig) -> np.ndarray:
    """Angle grid and nearest lattice nodes, without solving anything."""
    thetas = np.arange(0.0, 360.0, config.thetaStepDeg)
    R = config.circleRadius
    x = np.rint(R * np.cos(np.radians(thetas))).astype(int)
    y = np.rint(R * np.sin(np.radians(thetas))).astype(int)
    out = np.zeros(len(thetas), dtype=[("theta_deg", float), ("x", int), ("y", int)])
    out["theta_deg"], out["x"], out["y"] = thetas, x, y
    return out


def exclusion_reason(theta_deg: float, y: int, R: float, config: RunConfig,
                     xi_h_real: float) -> str | None:
    if 1 <= y <= config.N:
        return "interior-rows"
    if min(abs(theta_deg - b) for b in REGION_DEG) < DELTA_REGION_DEG:
        return "region-boundary"
    pole = (abs(config.ThetaDeg), 360.0 - abs(config.ThetaDeg))
    if min(abs(theta_deg - p) for p in pole) < DELTA_POLE_DEG:
        return "pole"
    if min(abs(theta_deg - q) for q in QUADRANT_DEG) < DELTA_QUADRANT_DEG:
        return "quadrant-boundary"
    if R * xi_h_real < 10.0:
        return "near-field"
    return None


def run_semianalytic(config: RunConfig,
                     pipeline: SemiAnalyticPipeline | None = None) -> list[dict]:
    """Far-field values on the circle-node angle table."""
    pipe = pipeline or SemiAnalyticPipeline.build(config)
    nodes = circle_nodes(config)
    rows = []
    for rec in nodes:
        x, y = int(rec["x"]), int(rec["y"])
        R = math.hypot(x, y)
        th_exact = math.atan2(y, x) % (2.0 * math.pi)
        reason = exclusion_reason(float(rec["theta_deg"]), y, R, config,
                                  pipe.ff.xi_h.real)
        row = {"theta_deg": float(rec["theta_deg"]), "x": x, "y": y,
               "R": R, "excluded": reason, "semi": None}
        if reason not in ("interior-rows", "region-boundary"):
            try:
                row["semi"] = pipe.ff.sample(th_exact, R).value
            except (ArithmeticError, ValueError) as exc:
                row["excluded"] = row["excluded"] or f"far-field-error"
                row["error"] = str(exc)
        rows.append(row)
    return rows


def run_direct(config: RunConfig, method: str = "auto"):
    """Direct-solver field and its circle extraction."""
    grid = solve(assemble(config.gridspec(), config.wave(), config.geometry()),
                 method=method)
    circ = extract_circle(grid, config.circleRadius, config.thetaStepDeg)
    return grid, circ


@dataclass
class ComparisonReport:
    rows: list[dict]
    summary: dict

    def csv_rows(self) -> list[list]:
        out = []
        for r in self.rows:
            semi = r["semi"] if r["semi"] is not None else complex(float("nan"), float("nan"))
            num = r["num"]
            out.append([r["theta_deg"], abs(semi), abs(num),
                        semi.real, semi.imag, num.real, num.imag, r["rel_diff"]])
        return out


CSV_HEADER = ["theta_deg", "abs_u_semi", "abs_u_num", "re_semi", "im_semi",
              "re_num", "im_num", "rel_diff"]


def run_compare(config: RunConfig, pipeline: SemiAnalyticPipeline | None = None,
                method: str = "auto") -> ComparisonReport:
    pipe = pipeline or SemiAnalyticPipeline.build(config)
    semi_rows = run_semianalytic(config, pipe)
    grid, circ = run_direct(config, method=method)
    rows = []
    rel_included = []
    excluded = []
    for r, rec in zip(semi_rows, circ):
        num = complex(rec["u"])
        semi = r["semi"]
        if semi is not None and abs(num) > 0:
            rel = abs(abs(semi) - abs(num)) / abs(num)
        else:
            rel = float("nan")
        row = dict(r)
        row["num"] = num
        row["rel_diff"] = rel
        rows.append(row)
        if row["excluded"] is None and math.isfinite(rel):
            rel_included.append(rel)
        elif row["excluded"] is not None:
            excluded.append({"theta_deg": row["theta_deg"], "reason": row["excluded"]})
    rel_arr = np.array(rel_included)
    gates = pipe.gates()
    gates["solve_residual"] = grid.solve_residual
    gates["stencil_residual"] = stencil_residual(grid)
    summary = {
        "median_rel_diff": float(np.median(rel_arr)) if rel_arr.size else None,
        "p90_rel_diff": float(np.percentile(rel_arr, 90)) if rel_arr.size else None,
        "included_angles": int(rel_arr.size),
        "excluded_angles": excluded,
        "bands_deg": {"pole": DELTA_POLE_DEG, "quadrant": DELTA_QUADRANT_DEG,
                      "region": DELTA_REGION_DEG},
        "gates": gates,
        "config": config.to_dict(),
        "config_hash": config.hash(),
        "versions": versions(),
    }
    return ComparisonReport(rows=rows, summary=summary)


# -- figures -------------------------------------------------------------------


def save_compare_figure(path, report: ComparisonReport, title: str = "") -> None:
    rows = report.rows
    th = np.array([r["theta_deg"] for r in rows])
    semi = np.array([abs(r["semi"]) if r["semi"] is not None else np.nan for r in rows])
    num = np.array([abs(r["num"]) for r in rows])
    fig, ax = plt.subplots(figsize=(8.0, 4.5))
    ax.plot(th, num, "k-", lw=1.2, label="direct solver")
    ax.plot(th, semi, ".", color="tab:blue", ms=3.5, label="Wiener-Hopf far field")
    for band in _excluded_spans(rows):
        ax.axvspan(band[0], band[1], color="0.9", zorder=0)
    ax.set_xlabel(r"observation angle $\theta$ (deg)")
    ax.set_ylabel(r"$|u|$")
    ax.set_xlim(0, 360)
    med = report.summary.get("median_rel_diff")
    extra = f"   median rel. diff {med:.3f}" if med is not None else ""
    ax.set_title((title or "diffracted field on the extraction circle") + extra)
    ax.legend(loc="upper right", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _excluded_spans(rows) -> list[tuple[float, float]]:
    spans = []
    start = None
    step = rows[1]["theta_deg"] - rows[0]["theta_deg"] if len(rows) > 1 else 1.0
    for r in rows:
        if r["excluded"] is not None:
            if start is None:
                start = r["theta_deg"]
            end = r["theta_deg"]
        else:
            if start is not None:
                spans.append((start - step / 2, end + step / 2))
                start = None
    if start is not None:
        spans.append((start - step / 2, end + step / 2))
    return spans


def save_angle_figure(path, thetas, values, label: str, title: str) -> None:
    fig, ax = plt.subplots(figsize=(8.0, 4.0))
    ax.plot(thetas, np.abs(values), "-", lw=1.0, label=label)
    ax.set_xlabel(r"observation angle $\theta$ (deg)")
    ax.set_ylabel(r"$|u|$")
    ax.set_xlim(0, 360)
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_field_figure(path, grid, title: str = "scattered field") -> None:
    n = grid.spec.ngrid
    mag = np.abs(grid.values)
    fig, ax = plt.subplots(figsize=(6.0, 5.2))
    im = ax.imshow(mag, origin="lower", extent=(-n, n, -n, n), cmap="magma",
                   vmax=np.percentile(mag, 99.5))
    lim = n - grid.spec.npml
    ax.plot([-lim, lim, lim, -lim, -lim], [-lim, -lim, lim, lim, -lim],
            "w--", lw=0.7, alpha=0.7)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    fig.colorbar(im, ax=ax, label=r"$|u|$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
