"""High-SNR slopes of the RS rate and the total rate against log2(Es/N0)."""

import argparse

from rsembed.channel import SignalParams
from rsembed.numerics import RngStream
from rsembed.pdf import make_pdf_context
from rsembed.rates import mux_gain_estimate, rate_breakdown


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--cases", default="4x2,5x4,8x4", help="comma list of MxK")
    p.add_argument("--snr", default="30,35,40")
    p.add_argument("--samples", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    snrs = [float(s) for s in args.snr.split(",")]
    print(f"{'M':>3} {'K':>3} {'rs slope':>9} {'M-K':>4} {'total slope':>12} {'M':>3}")
    for case in args.cases.split(","):
        m, k = (int(v) for v in case.split("x"))
        rng = RngStream(args.seed, m * 100 + k)
        bds = [(s, rate_breakdown(make_pdf_context(SignalParams.from_snr_db(s), m, k), args.samples, rng))
               for s in snrs]
        total, rs = mux_gain_estimate(bds)
        print(f"{m:>3} {k:>3} {rs:>9.3f} {m - k:>4} {total:>12.3f} {m:>3}")


if __name__ == "__main__":
    main()
