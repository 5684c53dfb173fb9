#!/usr/bin/env python3
"""Render the CSVs written by fwa_lab. Optional; needs pandas and matplotlib."""

import argparse
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402


def plot_convergence(csv: Path, out: Path) -> None:
    df = pd.read_csv(csv)
    mean = df.groupby(["scheme", "step"], sort=False)["suboptimality"].mean().reset_index()
    fig, ax = plt.subplots(figsize=(6, 4))
    for scheme, part in mean.groupby("scheme", sort=False):
        ax.plot(part["step"], part["suboptimality"], label=scheme)
    ax.set_yscale("log")
    ax.set_xlabel("step")
    ax.set_ylabel("F(w_avg) - F(w*), mean over seeds")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out)


def plot_stability(csv: Path, out: Path) -> None:
    df = pd.read_csv(csv)
    mean = df.groupby(["scheme", "epoch"], sort=False)[["param_distance", "gen_error"]].mean().reset_index()
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for scheme, part in mean.groupby("scheme", sort=False):
        axes[0].plot(part["epoch"], part["param_distance"], label=scheme)
        axes[1].plot(part["epoch"], part["gen_error"], label=scheme)
    axes[0].set_ylabel("parameter distance")
    axes[1].set_ylabel("generalization error")
    for ax in axes:
        ax.set_xlabel("epoch")
        ax.legend()
    fig.tight_layout()
    fig.savefig(out)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("run_dir", type=Path, help="output directory of a convergence or stability run")
    args = parser.parse_args()
    rendered = False
    for name, render in (("convergence.csv", plot_convergence), ("stability.csv", plot_stability)):
        csv = args.run_dir / name
        if csv.exists():
            target = csv.with_suffix(".png")
            render(csv, target)
            print(f"wrote {target}")
            rendered = True
    if not rendered:
        raise SystemExit(f"no convergence.csv or stability.csv in {args.run_dir}")


if __name__ == "__main__":
    main()
