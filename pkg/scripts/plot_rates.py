"""Plot sweep CSVs (needs the ``plot`` extra)."""

import argparse

import matplotlib.pyplot as plt

from rsembed.cli import read_sweep_csv


def main():
    p = argparse.ArgumentParser()
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default="rates.png")
    args = p.parse_args()
    fig, axes = plt.subplots(1, len(args.csv), figsize=(6 * len(args.csv), 4.5), squeeze=False)
    for ax, path in zip(axes[0], args.csv):
        rows = read_sweep_csv(path)
        for m in sorted({r["m"] for r in rows}):
            sub = [r for r in rows if r["m"] == m]
            snr = [r["snr_db"] for r in sub]
            line, = ax.plot(snr, [r["rs_rate_bits"] for r in sub], "-o", label=f"RS, M={m}")
            ax.plot(snr, [r["total_rate_bits"] for r in sub], "--", color=line.get_color(), label=f"total, M={m}")
        ue = [r for r in rows if r["m"] == rows[0]["m"]]
        ax.plot([r["snr_db"] for r in ue], [r["ue_rate_bits"] for r in ue], "k:", label="UE sum")
        ax.set_xlabel("Es/N0 [dB]")
        ax.set_ylabel("rate [bits/channel use]")
        ax.set_title(path)
        ax.grid(alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print("wrote", args.out)


if __name__ == "__main__":
    main()
