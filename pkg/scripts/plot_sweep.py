"""Reference plot for a `bdtp sweep` CSV (documentation, not part of the package).

    bdtp sweep --config hom.json --out hom.csv
    python scripts/plot_sweep.py hom.csv --x b --y value --group C --out hom.png

Needs matplotlib (`pip install -e .[plot]`).
"""

import argparse
import csv
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv")
    parser.add_argument("--x", default="b")
    parser.add_argument("--y", default="value")
    parser.add_argument("--group", default="C", help="column that splits the data into curves")
    parser.add_argument("--logx", action="store_true")
    parser.add_argument("--out", default="sweep.png")
    args = parser.parse_args()

    curves = defaultdict(list)
    with open(args.csv, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            if row.get("error"):
                continue
            curves[row.get(args.group, "")].append((float(row[args.x]), float(row[args.y])))

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for label, points in sorted(curves.items(), key=lambda kv: float(kv[0] or 0)):
        xs, ys = zip(*sorted(points))
        ax.plot(xs, ys, marker="o", ms=3, label=f"{args.group}={label}")
    if args.logx:
        ax.set_xscale("log")
    ax.set_xlabel(args.x)
    ax.set_ylabel(args.y)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)


if __name__ == "__main__":
    main()
