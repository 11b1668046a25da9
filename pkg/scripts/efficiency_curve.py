"""Efficiency curves for each scheme; writes CSV and, if matplotlib is present, a PNG."""

import argparse
import csv
import sys

from msqss.efficiency import efficiency_table, parse_m_range


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--protocols", default="ours,ours-derived,ghz,graph")
    ap.add_argument("--M-range", default="1..10")
    ap.add_argument("--epsilon-list", default="0.125,0.5")
    ap.add_argument("--png", help="optional plot output path")
    args = ap.parse_args()

    rows = list(efficiency_table(args.protocols.split(","), parse_m_range(args.M_range), args.epsilon_list.split(",")))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["protocol", "M", "epsilon", "eta"])
    for name, M, eps, eta in rows:
        w.writerow([name, M, "" if eps is None else eps, f"{float(eta):.6f}"])

    if args.png:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        series = {}
        for name, M, eps, eta in rows:
            series.setdefault(name if eps is None else f"{name} eps={eps}", []).append((M, float(eta)))
        for label, pts in series.items():
            plt.plot(*zip(*pts), marker="o", label=label)
        plt.yscale("log")
        plt.xlabel("number of Bobs")
        plt.ylabel("qubit efficiency")
        plt.legend()
        plt.savefig(args.png, dpi=120)


if __name__ == "__main__":
    main()
