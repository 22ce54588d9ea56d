"""Mutual-information decomposition I(y; s, U~) = I(y; U~) + I(y; s | U~).

All rates are in bits.  h(y) is estimated by Monte Carlo over samples of y
drawn from the model; everything else is closed form.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .channel import SignalParams, sample_received_batch
from .errors import FewerThanTwoPoints
from .numerics import RngStream, as_generator
from .pdf import PdfContext, log_pdf_array, mc_oracle_log_pdf

LN2 = math.log(2.0)
CHUNK = 1 << 15


@dataclass(frozen=True)
class EntropyEstimate:
    mean_bits: float
    std_error_bits: float
    num_samples: int


@dataclass(frozen=True)
class RateBreakdown:
    ue_rate_bits: float     # I(y; s | U~)
    rs_rate_bits: float     # I(y; U~)
    total_rate_bits: float  # I(y; s, U~)
    rs_rate_std_error: float

    @classmethod
    def from_parts(cls, ue: float, rs: float, rs_se: float) -> RateBreakdown:
        return cls(ue, rs, ue + rs, rs_se)


def ue_sum_rate(params: SignalParams, k: int) -> float:
    return k * math.log1p(params.beta * params.es / params.n0) / LN2


def cond_entropy_y_given_u(params: SignalParams, m: int, k: int) -> float:
    """h(y | U~) in bits; y | U~ is Gaussian with K signal and M-K noise-only dimensions."""
    if not (1 <= k <= m):
        raise ValueError(f"need 1 <= K <= M, got M={m}, K={k}")
    sig = params.beta * params.es + params.n0
    nats = k * math.log(math.pi * math.e * sig) + (m - k) * math.log(math.pi * math.e * params.n0)
    return nats / LN2


def default_workers() -> int:
    env = os.environ.get("RSEMBED_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _split(n: int, parts: int) -> list[int]:
    base, extra = divmod(n, parts)
    return [base + (1 if w < extra else 0) for w in range(parts)]


def _worker_neg_log2(ctx: PdfContext, n: int, gen: np.random.Generator, method: str,
                     inner: int) -> np.ndarray:
    out = np.empty(n)
    done = 0
    while done < n:
        b = min(CHUNK, n - done)
        y = sample_received_batch(ctx.m, ctx.k, ctx.params, b, gen)
        if method == "closed":
            logp = log_pdf_array(np.einsum("ti,ti->t", y.conj(), y).real, ctx)
        else:
            logp = mc_oracle_log_pdf(y, ctx, inner, gen)
        out[done:done + b] = -logp / LN2
        done += b
    return out


def sample_neg_log2_pdf(ctx: PdfContext, num_samples: int, rng: RngStream | np.random.Generator,
                        workers: int = 1, method: str | None = None, inner_samples: int | None = None
                        ) -> np.ndarray:
    """Per-sample -log2 p(y_t) with y_t drawn from the model (fresh Haar U~ each).

    ``method`` is "closed" (default when M > K) or "oracle" (Monte-Carlo
    density; forced when K == M, where it is exact with a single inner draw).
    Worker w draws from ``rng.child(w)``; results are concatenated in worker
    order, so output is reproducible for a fixed (seed, workers).
    """
    if method is None:
        method = "closed" if ctx.closed_form else "oracle"
    if method not in ("closed", "oracle"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" and not ctx.closed_form:
        raise ValueError("closed-form density needs M > K")
    if inner_samples is None:
        inner_samples = 1 if not ctx.closed_form else 4096
    if workers == 1:
        gens = [as_generator(rng if isinstance(rng, np.random.Generator) else rng.child(0))]
    else:
        if not isinstance(rng, RngStream):
            raise TypeError("parallel sampling needs an RngStream")
        gens = [rng.child(w).generator() for w in range(workers)]
    quotas = _split(num_samples, len(gens))
    if len(gens) == 1:
        parts = [_worker_neg_log2(ctx, quotas[0], gens[0], method, inner_samples)]
    else:
        with ThreadPoolExecutor(max_workers=len(gens)) as pool:
            parts = list(pool.map(lambda a: _worker_neg_log2(ctx, a[0], a[1], method, inner_samples),
                                  zip(quotas, gens)))
    return np.concatenate(parts)


def estimate_entropy_y(ctx: PdfContext, num_samples: int, rng: RngStream | np.random.Generator,
                       workers: int = 1, method: str | None = None,
                       inner_samples: int | None = None) -> EntropyEstimate:
    """Monte-Carlo h(y) = -E[log2 p(y)] in bits."""
    if num_samples < 100:
        raise ValueError("num_samples must be >= 100")
    vals = sample_neg_log2_pdf(ctx, num_samples, rng, workers, method, inner_samples)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError("non-finite log density encountered")
    return EntropyEstimate(float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(num_samples)),
                           num_samples)


def rs_rate(ctx: PdfContext, num_samples: int, rng: RngStream | np.random.Generator,
            workers: int = 1, **kw) -> tuple[float, float]:
    """I(y; U~) = h(y) - h(y | U~) in bits, with the MC standard error of h(y)."""
    h = estimate_entropy_y(ctx, num_samples, rng, workers, **kw)
    return h.mean_bits - cond_entropy_y_given_u(ctx.params, ctx.m, ctx.k), h.std_error_bits


def rate_breakdown(ctx: PdfContext, num_samples: int, rng: RngStream | np.random.Generator,
                   workers: int = 1, **kw) -> RateBreakdown:
    rs, se = rs_rate(ctx, num_samples, rng, workers, **kw)
    return RateBreakdown.from_parts(ue_sum_rate(ctx.params, ctx.k), rs, se)


def snr_db_to_log2(snr_db) -> np.ndarray:
    return np.asarray(snr_db, dtype=float) / 10.0 * math.log2(10.0)


def slope_fit(snr_db: Sequence[float], rates: Sequence[float]) -> float:
    """OLS slope of rate (bits) against log2(Es/N0)."""
    if len(snr_db) < 2:
        raise FewerThanTwoPoints("slope needs at least two SNR points")
    x = snr_db_to_log2(snr_db)
    y = np.asarray(rates, dtype=float)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def mux_gain_estimate(breakdowns: Sequence[tuple[float, RateBreakdown]]) -> tuple[float, float]:
    """High-SNR pre-log estimates: (slope of total rate, slope of RS rate)."""
    if len(breakdowns) < 2:
        raise FewerThanTwoPoints("slope needs at least two SNR points")
    snr = [s for s, _ in breakdowns]
    total = slope_fit(snr, [b.total_rate_bits for _, b in breakdowns])
    rs = slope_fit(snr, [b.rs_rate_bits for _, b in breakdowns])
    return total, rs
