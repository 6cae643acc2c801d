"""Impermanent loss of an equal-weight pool versus two 80/20 weighted pools.

Writes one CSV per pool (``t,il`` over t in [0.1, 10], 101 log-spaced points)
through the ``ammil sweep`` command. Plotting is left to the reader; with
matplotlib installed, ``--plot`` also renders a PNG next to the CSVs.

    python3 scripts/weighted_pool_curves.py --out-dir curves
"""

import argparse
import pathlib
import sys

from ammil import cli

ROOT = pathlib.Path(__file__).resolve().parent.parent
POOLS = {
    "equal_weight": ROOT / "specs" / "balancer_50_50.json",
    "weights_20_80": ROOT / "specs" / "balancer_20_80.json",
    "weights_80_20": ROOT / "specs" / "balancer_80_20.json",
}
SWEEP = ["--level", "1", "--t-min", "0.1", "--t-max", "10", "--steps", "101", "--scale", "log"]


def reproduce(out_dir):
    out_dir = pathlib.Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}
    for name, spec in POOLS.items():
        path = out_dir / f"{name}.csv"
        code = cli.main(["sweep", "--spec", str(spec), "--out", str(path), *SWEEP])
        if code != 0:
            raise SystemExit(f"sweep for {name} exited with {code}")
        paths[name] = path
    return paths


def plot(paths, target):
    import csv

    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name, path in paths.items():
        with open(path, newline="") as fh:
            rows = [(float(r["t"]), float(r["il"])) for r in csv.DictReader(fh)]
        ax.plot(*zip(*rows), label=name.replace("_", " "))
    ax.set_xscale("log")
    ax.set_xlabel("exchange-rate ratio t")
    ax.set_ylabel("impermanent loss")
    ax.legend()
    fig.tight_layout()
    fig.savefig(target, dpi=150)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="curves")
    parser.add_argument("--plot", action="store_true", help="also render curves.png (needs matplotlib)")
    args = parser.parse_args(argv)
    paths = reproduce(args.out_dir)
    if args.plot:
        plot(paths, pathlib.Path(args.out_dir) / "curves.png")
    for path in paths.values():
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
