"""Static figures rendered from sweep CSV files. Nothing here computes."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "dcgrid"
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import SymLogNorm  # noqa: E402

MINC_HEADER = ["D", "L_H", "C_min_F", "criterion", "found"]
RMAX_HEADER = ["op", "D", "L_H", "C_F", "r_max", "error"]
TAU_HEADER = ["tau_s", "counterexamples"]


def _read(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _save(fig, out: Path) -> None:
    # fixed metadata keeps repeated renders byte-identical
    fig.savefig(out, format="svg", metadata={"Date": None, "Creator": "dcgrid"})
    plt.close(fig)


def plot_minc(rows: list[dict[str, str]], out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    groups: dict[tuple[str, str], list[tuple[float, float]]] = {}
    for r in rows:
        if r["found"] != "1":
            continue
        key = (r["criterion"], r["D"])
        groups.setdefault(key, []).append((float(r["L_H"]), float(r["C_min_F"])))
    for (criterion, d), pts in sorted(groups.items(), key=lambda kv: (kv[0][0], float(kv[0][1]))):
        pts.sort()
        ls = "-" if criterion == "ssasc" else "--"
        ax.plot([p[0] * 1e3 for p in pts], [p[1] * 1e3 for p in pts], ls, marker="o",
                label=f"D = {float(d):g} ({criterion})")
    ax.set_xlabel("branch inductance L [mH]")
    ax.set_ylabel("minimum bus capacitance C [mF]")
    ax.grid(True, alpha=0.3)
    if groups:
        ax.legend(fontsize=8)
    _save(fig, out)


def plot_rmax(rows: list[dict[str, str]], out: Path) -> None:
    panels: dict[tuple[str, str], list[tuple[float, float, float]]] = {}
    for r in rows:
        if not r["r_max"]:
            continue
        panels.setdefault((r["op"], r["D"]), []).append(
            (float(r["C_F"]), float(r["L_H"]), float(r["r_max"])))
    keys = sorted(panels, key=lambda k: (k[0], float(k[1])))
    if not keys:
        fig, ax = plt.subplots(figsize=(6, 4))
        ax.set_xlabel("C [mF]")
        ax.set_ylabel("L [mH]")
        _save(fig, out)
        return
    ncol = min(3, len(keys))
    nrow = -(-len(keys) // ncol)
    fig, axes = plt.subplots(nrow, ncol, figsize=(4.2 * ncol, 3.4 * nrow), squeeze=False)
    for ax, key in zip(axes.flat, keys):
        pts = panels[key]
        cs = sorted({p[0] for p in pts})
        ls = sorted({p[1] for p in pts})
        z = np.full((len(ls), len(cs)), np.nan)
        for c, l, r in pts:
            z[ls.index(l), cs.index(c)] = r
        lim = max(float(np.nanmax(np.abs(z))), 1e-12)
        mesh = ax.pcolormesh(np.array(cs) * 1e3, np.array(ls) * 1e3, z, shading="nearest",
                             cmap="coolwarm", norm=SymLogNorm(linthresh=1.0, vmin=-lim, vmax=lim))
        if z.shape[0] > 1 and z.shape[1] > 1:
            ax.contour(np.array(cs) * 1e3, np.array(ls) * 1e3, z, levels=[0.0],
                       colors="k", linewidths=1.0)
        fig.colorbar(mesh, ax=ax, label="r_max [1/s]")
        ax.set_title(f"op {key[0]}, D = {float(key[1]):g}")
        ax.set_xlabel("C [mF]")
        ax.set_ylabel("L [mH]")
    for ax in list(axes.flat)[len(keys):]:
        ax.set_visible(False)
    fig.tight_layout()
    _save(fig, out)


def plot_tau(rows: list[dict[str, str]], out: Path) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    if rows:
        ax.plot([float(r["tau_s"]) * 1e3 for r in rows],
                [int(r["counterexamples"]) for r in rows], marker="o")
    ax.set_xlabel("converter delay tau [ms]")
    ax.set_ylabel("sufficiency counterexamples")
    ax.grid(True, alpha=0.3)
    _save(fig, out)


def plot_csv(csv_in: str | Path, svg_out: str | Path) -> str:
    """Render ``csv_in`` to ``svg_out``; the figure type follows the CSV header."""
    csv_in, svg_out = Path(csv_in), Path(svg_out)
    header, rows = _read(csv_in)
    if header == MINC_HEADER:
        plot_minc(rows, svg_out)
        return "minc"
    if header == RMAX_HEADER:
        plot_rmax(rows, svg_out)
        return "rmax"
    if header == TAU_HEADER:
        plot_tau(rows, svg_out)
        return "tau"
    raise ValueError(f"{csv_in}: unrecognised CSV header {header}")
