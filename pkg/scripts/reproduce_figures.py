"""Regenerate the data of every preset figure into one output directory.

Usage: python3 scripts/reproduce_figures.py [--out out/] [--workers 0] [--quick] [--plot]

``--quick`` divides the ensemble sizes by 10 (keeping the 100-member floor of
the delay-spread CDF). ``--plot`` renders PNGs next to the data files and
needs matplotlib.
"""

from __future__ import annotations

import argparse
import time
from pathlib import Path

import numpy as np

from irs_gbsm.config import preset
from irs_gbsm.experiments import run_acf, run_ccf, run_ds_cdf, run_pathloss

JOBS = [("fig5", run_acf), ("fig6", run_acf), ("fig7", run_ccf), ("fig8", run_ds_cdf), ("fig5", run_pathloss)]


def plot(paths, out: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for path in paths:
        header = [line for line in path.read_text().splitlines() if line.startswith("# columns:")][0]
        cols = header.split(":", 1)[1].split()
        data = np.atleast_2d(np.loadtxt(path))
        fig, ax = plt.subplots(figsize=(5, 3.5))
        if "sim_abs" in cols:
            x = data[:, cols.index("lag")]
            ax.plot(x, data[:, cols.index("sim_abs")], "o", ms=3, label="simulated")
            ax.plot(x, data[:, cols.index("ana_abs")], "-", label="analytical")
            ax.set_xlabel("lag")
            ax.set_ylabel("|correlation|")
            ax.legend()
        elif "cdf" in cols:
            ax.step(data[:, 0] * 1e9, data[:, 1], where="post")
            ax.set_xlabel("RMS delay spread (ns)")
            ax.set_ylabel("CDF")
        else:
            ax.plot(data[:, cols.index("elements")], data[:, cols.index("pl_biu")], "o-", label="optimised surface")
            ax.plot(data[:, cols.index("elements")], data[:, cols.index("pl_coherent_ideal")], "--", label="M^2 law")
            ax.set_xscale("log")
            ax.set_xlabel("IRS elements")
            ax.set_ylabel("PL_BIU (dB)")
            ax.legend()
        ax.set_title(path.stem, fontsize=9)
        fig.tight_layout()
        fig.savefig(out / f"{path.stem}.png", dpi=120)
        plt.close(fig)


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", type=Path, default=Path("out"))
    parser.add_argument("--workers", type=int, default=0)
    parser.add_argument("--quick", action="store_true")
    parser.add_argument("--plot", action="store_true")
    args = parser.parse_args()

    written = []
    for name, runner in JOBS:
        cfg = preset(name).replace(**{"run.workers": args.workers})
        if args.quick:
            floor = 100 if runner is run_ds_cdf else 1
            cfg = cfg.replace(**{"run.ensemble": max(floor, cfg.run.ensemble // 10)})
        start = time.perf_counter()
        paths = runner(cfg, args.out)
        print(f"{name:5s} {runner.__name__:12s} {time.perf_counter() - start:6.1f}s  " + " ".join(p.name for p in paths))
        written += paths
    if args.plot:
        plot(written, args.out)


if __name__ == "__main__":
    main()
