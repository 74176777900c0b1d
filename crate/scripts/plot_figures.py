#!/usr/bin/env python3
"""Render the standard entanglement-scaling figures from sweep CSVs.

Runs the `opagbs` binary over the checked-in configs (or reuses existing
CSVs with --skip-sweeps) and draws one PNG per config:

    depth_scaling          E_N vs depth, per partition, r = 0.8 / 1.6
    squeezing_scaling      E_N vs r, per partition
    mode_scaling_lossy     E_N vs mode count, per transmittance
    depth_saturation_lossy E_N vs depth under loss
    loss_scaling           E_N vs transmittance

Usage:
    cargo build --release -p opagbs-cli
    python3 scripts/plot_figures.py --binary target/release/opagbs --out figures/
"""

import argparse
import csv
import pathlib
import subprocess
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

CONFIGS = [
    "depth_scaling",
    "squeezing_scaling",
    "mode_scaling_lossy",
    "depth_saturation_lossy",
    "loss_scaling",
]


def load_rows(path):
    rows = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            if row["partition"].startswith("fit="):
                continue
            rows.append(
                {
                    "n": int(row["n"]),
                    "d": int(row["d"]),
                    "r": float(row["r"]),
                    "t": float(row["t"]),
                    "partition": row["partition"],
                    "e_n": float(row["e_n"]),
                    "engine": row["engine"],
                }
            )
    return rows


def series(rows, x_key, group_keys):
    """Split rows into {group-label: ([x], [y])}."""
    out = {}
    for row in rows:
        label = ", ".join(f"{k}={row[k]}" for k in group_keys)
        xs, ys = out.setdefault(label, ([], []))
        xs.append(row[x_key])
        ys.append(row["e_n"])
    return out


PLOTS = {
    "depth_scaling": ("d", ["r", "partition"], "depth d"),
    "squeezing_scaling": ("r", ["partition"], "squeezing r"),
    "mode_scaling_lossy": ("n", ["t"], "modes n"),
    "depth_saturation_lossy": ("d", ["t"], "depth d"),
    "loss_scaling": ("t", ["partition"], "transmittance t"),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--binary", default="target/release/opagbs")
    ap.add_argument("--configs", default="configs")
    ap.add_argument("--out", default="figures")
    ap.add_argument("--skip-sweeps", action="store_true", help="reuse existing CSVs in --out")
    args = ap.parse_args()

    cfg_dir = pathlib.Path(args.configs)
    out_dir = pathlib.Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    for name in CONFIGS:
        csv_path = out_dir / f"{name}.csv"
        if not args.skip_sweeps:
            cmd = [
                args.binary,
                "--config",
                str(cfg_dir / f"{name}.ini"),
                "--output",
                str(csv_path),
                "sweep",
            ]
            print("+", " ".join(cmd), flush=True)
            subprocess.run(cmd, check=True)
        if not csv_path.exists():
            print(f"missing {csv_path}; run without --skip-sweeps", file=sys.stderr)
            return 1

        x_key, group_keys, x_label = PLOTS[name]
        rows = load_rows(csv_path)
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for label, (xs, ys) in sorted(series(rows, x_key, group_keys).items()):
            order = sorted(range(len(xs)), key=lambda i: xs[i])
            ax.plot([xs[i] for i in order], [ys[i] for i in order], "o-", ms=4, label=label)
        ax.set_xlabel(x_label)
        ax.set_ylabel(r"$E_N$ (bits)")
        ax.set_title(name.replace("_", " "))
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
        fig.tight_layout()
        png = out_dir / f"{name}.png"
        fig.savefig(png, dpi=150)
        plt.close(fig)
        print(f"wrote {png}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
