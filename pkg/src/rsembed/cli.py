"""Command-line experiment runner.

    rsembed sweep [--config cfg.json] [--k 4 --m 5,8,16 --beta-mode unit ...]
    rsembed validate --level quick|full
    rsembed solve --kind aris|fris --m 3 --k 2 --n 8 --seed 0

Exit codes: 0 success, 1 validation failure, 2 invalid input / I/O error.
"""

from __future__ import annotations

import argparse
import csv
import enum
import json
import subprocess
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .channel import SignalParams, SystemDims, generate_channels, random_target
from .errors import InfeasibleDims, InvalidDims, RankDeficient
from .numerics import RngStream
from .pdf import make_pdf_context
from .rates import default_workers, rate_breakdown
from .solver import RsKind, solve, verify_orthogonalization
from .validate import run_validate

CSV_HEADER = ["snr_db", "m", "k", "beta", "ue_rate_bits", "rs_rate_bits", "total_rate_bits",
              "rs_rate_std_err", "num_samples", "seed"]


class BetaMode(enum.Enum):
    UNIT = "unit"              # beta = 1
    ARRAY_GAIN = "array_gain"  # beta = M

    def beta(self, m: int) -> float:
        return 1.0 if self is BetaMode.UNIT else float(m)


@dataclass
class ExperimentConfig:
    k: int = 4
    m_list: list[int] = field(default_factory=lambda: [5, 8, 16])
    beta_mode: BetaMode = BetaMode.UNIT
    snr_db_grid: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    num_samples: int = 100_000
    seed: int = 0
    es: float = 1.0
    output_path: str = "rates.csv"
    workers: int | None = None

    def __post_init__(self):
        if isinstance(self.beta_mode, str):
            self.beta_mode = BetaMode(self.beta_mode.lower())
        self.m_list = [int(m) for m in self.m_list]
        self.snr_db_grid = [float(s) for s in self.snr_db_grid]

    def validate(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not self.m_list:
            raise ValueError("m_list is empty")
        bad = [m for m in self.m_list if m <= self.k]
        if bad:
            raise ValueError(f"every m must exceed k={self.k}; got {bad}")
        if not self.snr_db_grid or any(b <= a for a, b in zip(self.snr_db_grid, self.snr_db_grid[1:])):
            raise ValueError("snr_db_grid must be non-empty and strictly increasing")
        if self.num_samples < 100:
            raise ValueError("num_samples must be >= 100")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.es <= 0:
            raise ValueError("es must be positive")
        if self.workers is not None and self.workers < 1:
            raise ValueError("workers must be >= 1")

    @classmethod
    def from_json(cls, path: str | Path) -> ExperimentConfig:
        data = json.loads(Path(path).read_text())
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def build_id() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--tags"], cwd=Path(__file__).parent,
                             capture_output=True, text=True, timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def run_sweep(cfg: ExperimentConfig) -> Path:
    """Evaluate the rate breakdown on the (m, snr) grid and write one CSV row per point.

    Every SNR point for a given m reuses the stream (seed, m): common random
    numbers across the grid.
    """
    cfg.validate()
    workers = cfg.workers or default_workers()
    out = Path(cfg.output_path)
    rows = []
    for m in cfg.m_list:
        beta = cfg.beta_mode.beta(m)
        rng = RngStream(cfg.seed, m)
        for snr_db in cfg.snr_db_grid:
            params = SignalParams.from_snr_db(snr_db, beta=beta, es=cfg.es)
            ctx = make_pdf_context(params, m, cfg.k)
            b = rate_breakdown(ctx, cfg.num_samples, rng, workers)
            rows.append([snr_db, m, cfg.k, beta, b.ue_rate_bits, b.rs_rate_bits, b.total_rate_bits,
                         b.rs_rate_std_error, cfg.num_samples, cfg.seed])
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        fh.write(f"# rsembed sweep build={build_id()} seed={cfg.seed} num_samples={cfg.num_samples} "
                 f"workers={workers} es={cfg.es!r} beta_mode={cfg.beta_mode.value} "
                 f"snr=Es/N0 rates=bits(log2)\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows([[repr(v) if isinstance(v, float) else v for v in row] for row in rows])
    return out


def read_sweep_csv(path: str | Path) -> list[dict]:
    with Path(path).open() as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    for r in rows:
        for key in r:
            r[key] = int(r[key]) if key in ("m", "k", "num_samples", "seed") else float(r[key])
    return rows


def run_solve_demo(dims: SystemDims, kind: RsKind, seed: int, rank_tol: float | None = None) -> dict:
    gen = RngStream(seed, 0).generator()
    ch = generate_channels(dims, gen)
    beta = float(dims.m)
    target = random_target(dims.m, dims.k, beta, gen)
    cfg = solve(ch, target, kind, rank_tol)
    h = ch.h0 + ch.h1 @ cfg.theta @ ch.h2
    return {
        "kind": kind.name,
        "m": dims.m, "k": dims.k, "n": dims.n, "seed": seed, "beta": beta,
        "residual": verify_orthogonalization(ch, cfg, target),
        "orthogonality_error": float(np.abs(h.conj().T @ h - beta * np.eye(dims.k)).max()),
        "config_norm": cfg.norm,
        "config_norm_kind": "l2(alpha)" if kind is RsKind.ARIS else "frobenius(theta)",
    }


def _csv_list(cast):
    def parse(text: str):
        return [cast(v) for v in text.replace(" ", "").split(",") if v]
    return parse


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rsembed", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sweep", help="rate breakdown over an SNR x M grid, written as CSV")
    s.add_argument("--config", help="JSON file with ExperimentConfig keys; flags override it")
    s.add_argument("--k", type=int)
    s.add_argument("--m", type=_csv_list(int), dest="m_list", help="comma-separated, e.g. 5,8,16")
    s.add_argument("--beta-mode", choices=[b.value for b in BetaMode])
    s.add_argument("--snr", type=_csv_list(float), dest="snr_db_grid", help="Es/N0 grid in dB, comma-separated")
    s.add_argument("--samples", type=int, dest="num_samples")
    s.add_argument("--seed", type=int)
    s.add_argument("--es", type=float)
    s.add_argument("--out", dest="output_path")
    s.add_argument("--workers", type=int, help="MC worker threads (default: $RSEMBED_WORKERS or CPU count)")

    v = sub.add_parser("validate", help="run the built-in property checks")
    v.add_argument("--level", choices=["quick", "full"], default="quick")
    v.add_argument("--workers", type=int, default=1)

    d = sub.add_parser("solve", help="solve one random ARIS/FRIS instance and print a JSON report")
    d.add_argument("--kind", choices=["aris", "fris"], required=True)
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--k", type=int, required=True)
    d.add_argument("--n", type=int, required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--rank-tol", type=float, help="relative singular-value cutoff override")
    return p


def _sweep_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_json(args.config) if args.config else ExperimentConfig()
    overrides = {k: getattr(args, k) for k in
                 ("k", "m_list", "beta_mode", "snr_db_grid", "num_samples", "seed", "es", "output_path", "workers")
                 if getattr(args, k) is not None}
    return replace(cfg, **overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            cfg = _sweep_config(args)
            out = run_sweep(cfg)
            print(f"wrote {out}")
            return 0
        if args.command == "validate":
            return 0 if run_validate(args.level, workers=args.workers) else 1
        if args.command == "solve":
            dims = SystemDims(args.m, args.k, args.n)
            report = run_solve_demo(dims, RsKind(args.kind), args.seed, args.rank_tol)
            print(json.dumps(report, indent=2))
            return 0
    except (InfeasibleDims, RankDeficient, InvalidDims, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
