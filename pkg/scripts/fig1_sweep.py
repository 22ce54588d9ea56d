"""RS / UE / total rate versus SNR for K = 4 and M in {5, 8, 16}, both beta modes.

    python scripts/fig1_sweep.py --samples 100000 --outdir results
"""

import argparse
from pathlib import Path

from rsembed.cli import BetaMode, ExperimentConfig, run_sweep


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--outdir", default="results")
    p.add_argument("--workers", type=int, default=None)
    args = p.parse_args()
    for mode in BetaMode:
        cfg = ExperimentConfig(k=4, m_list=[5, 8, 16], beta_mode=mode,
                               snr_db_grid=[float(s) for s in range(0, 31, 5)],
                               num_samples=args.samples, seed=args.seed, workers=args.workers,
                               output_path=str(Path(args.outdir) / f"rates_{mode.value}.csv"))
        print("wrote", run_sweep(cfg))


if __name__ == "__main__":
    main()
