#!/usr/bin/env python3
"""Plots for conelab output directories.

    python scripts/plot.py out/weylC2_rademacher [--p 4] [-o figs/]

Reads whichever of curves.csv, survival.csv, harmonic.jsonl and
paths.jsonl are present and writes PNGs next to them (or under -o).
"""

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def read_curves(path):
    df = pd.read_csv(path, comment="#", dtype={"x": str})
    return df.sort_values(["x", "method", "n"])


def plot_survival(df, p, out):
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
    for (x, method), g in df.groupby(["x", "method"]):
        n, est, se = g["n"].to_numpy(), g["estimate"].to_numpy(), g["std_error"].to_numpy()
        label = f"x=({x.replace(';', ', ')}) {method}"
        ax1.errorbar(n, est, yerr=se, marker="o", ms=3, label=label)
        if p is not None:
            ax2.plot(n, est * n.astype(float) ** (p / 2), marker="o", ms=3, label=label)
    ax1.set(xscale="log", yscale="log", xlabel="n", ylabel="P(τ > n)")
    ax1.legend(fontsize=7)
    if p is not None:
        ax2.set(xscale="log", xlabel="n", ylabel=f"n^({p:g}/2) · P(τ > n)")
    else:
        ax2.set_visible(False)
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def plot_harmonic(path, out):
    rows = [json.loads(l) for l in path.read_text().splitlines() if l.strip()]
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in sorted({r["method"] for r in rows}):
        rs = [r for r in rows if r["method"] == method]
        h = np.array([r["h"] for r in rs])
        ax.plot(h, [r["v_over_h"] for r in rs], "o", label=method)
    ax.axhline(1.0, color="grey", lw=0.8)
    ax.set(xscale="log", xlabel="h(x)", ylabel="V(x)/h(x)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def plot_paths(path, out, limit=50):
    rows = [json.loads(l) for l in path.read_text().splitlines() if l.strip()]
    fig, ax = plt.subplots(figsize=(6, 5))
    for r in rows[:limit]:
        pts = np.array(r["points"])
        if pts.shape[1] == 1:
            ax.plot(np.arange(len(pts)), pts[:, 0], lw=0.6)
        else:
            ax.plot(pts[:, 0], pts[:, 1], lw=0.6)
    if rows and np.array(rows[0]["points"]).shape[1] == 1:
        ax.set(xlabel="k", ylabel="x + S(k)")
    else:
        ax.set(xlabel="x1", ylabel="x2", aspect="equal")
    fig.tight_layout()
    fig.savefig(out, dpi=130)
    plt.close(fig)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("dir", type=Path)
    ap.add_argument("--p", type=float, help="degree of h, for the rescaled survival panel")
    ap.add_argument("-o", "--out", type=Path)
    args = ap.parse_args()
    out = args.out or args.dir
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in ("curves.csv", "survival.csv"):
        f = args.dir / name
        if f.exists():
            target = out / f"{f.stem}.png"
            plot_survival(read_curves(f), args.p, target)
            written.append(target)
    if (args.dir / "harmonic.jsonl").exists():
        written.append(out / "harmonic.png")
        plot_harmonic(args.dir / "harmonic.jsonl", written[-1])
    if (args.dir / "paths.jsonl").exists():
        written.append(out / "paths.png")
        plot_paths(args.dir / "paths.jsonl", written[-1])
    for w in written:
        print(w)
    if not written:
        raise SystemExit(f"no conelab outputs in {args.dir}")


if __name__ == "__main__":
    main()
