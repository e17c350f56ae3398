"""Plot a trajectory CSV written by ``arcsim simulate``.

    python demos/plot_run.py out/cow_staircase.csv barn.temperature u1 u2

Needs matplotlib (``pip install artifact[plot]``).
"""

import argparse

import matplotlib.pyplot as plt
import numpy as np


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("channels", nargs="*", help="columns to plot (default: all)")
    ap.add_argument("--save", help="write the figure to this file instead of showing it")
    args = ap.parse_args()

    data = np.genfromtxt(args.csv, delimiter=",", names=True, deletechars="")
    channels = args.channels or [n for n in data.dtype.names if n != "t"]
    fig, axes = plt.subplots(len(channels), 1, sharex=True, figsize=(8, 1.8 * len(channels)), squeeze=False)
    for ax, ch in zip(axes[:, 0], channels):
        ax.plot(data["t"], data[ch])
        ax.set_ylabel(ch)
    axes[-1, 0].set_xlabel("t [s]")
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save)
    else:
        plt.show()


if __name__ == "__main__":
    main()
