"""Self-checks behind ``rsembed validate``."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .channel import SignalParams, SystemDims, generate_channels, random_target, sample_received_batch
from .numerics import RngStream, sample_haar_unitary
from .pdf import (hciz_perturbed_oracle, log_pdf, make_pdf_context, mc_oracle_pdf,
                  radial_normalization)
from .rates import mux_gain_estimate, rate_breakdown, rs_rate
from .solver import RsKind, solve, verify_orthogonalization

ContextFactory = Callable[..., object]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.1f}s)"


def check_haar_moment(samples: int = 20000, m: int = 4, seed: int = 11) -> CheckResult:
    u = sample_haar_unitary(m, RngStream(seed, 0), size=samples)
    x = np.abs(u[:, 0, 0]) ** 2
    se = x.std(ddof=1) / math.sqrt(samples)
    unit_err = np.abs(np.conj(np.swapaxes(u, -1, -2)) @ u - np.eye(m)).max()
    ok = abs(x.mean() - 1 / m) <= 3 * se and unit_err <= 1e-12
    return CheckResult("haar moments", ok,
                       f"E|U11|^2={x.mean():.5f} (1/M={1 / m:.5f}, se={se:.1e}), max|U^H U - I|={unit_err:.1e}")


def check_solver_residuals(instances: int = 20, seed: int = 12) -> CheckResult:
    worst_res = 0.0
    worst_orth = 0.0
    cases = [(RsKind.ARIS, (2, 1, 4)), (RsKind.ARIS, (3, 2, 8)), (RsKind.FRIS, (4, 2, 8)), (RsKind.FRIS, (6, 4, 12))]
    for ci, (kind, (m, k, n)) in enumerate(cases):
        for i in range(instances):
            rng = RngStream(seed, ci).child(i)
            gen = rng.generator()
            beta = float(m)
            ch = generate_channels(SystemDims(m, k, n), gen)
            target = random_target(m, k, beta, gen)
            cfg = solve(ch, target, kind)
            worst_res = max(worst_res, verify_orthogonalization(ch, cfg, target))
            h = ch.h0 + ch.h1 @ cfg.theta @ ch.h2
            worst_orth = max(worst_orth, np.abs(h.conj().T @ h - beta * np.eye(k)).max())
    ok = worst_res <= 1e-8 and worst_orth <= 1e-7
    return CheckResult("solver residuals", ok, f"max residual={worst_res:.1e}, max|H^H H - beta I|={worst_orth:.1e}")


def check_normalization(cases=((2, 1), (4, 2), (6, 4)), snrs=(1.0, 100.0),
                        make_context: ContextFactory = make_pdf_context) -> CheckResult:
    worst = 0.0
    try:
        for m, k in cases:
            for snr in snrs:
                for beta in (1.0, float(m)):
                    ctx = make_context(SignalParams(1.0, 1.0 / snr, beta), m, k)
                    worst = max(worst, abs(radial_normalization(ctx) - 1.0))
    except (ArithmeticError, ValueError, RuntimeError) as exc:
        return CheckResult("pdf normalization", False, f"error: {exc}")
    ok = bool(worst <= 1e-6)
    return CheckResult("pdf normalization", ok, f"max |integral - 1| = {worst:.1e}")


def check_closed_form_point() -> CheckResult:
    ctx = make_pdf_context(SignalParams(1.0, 1.0, 1.0), 2, 1)
    want = math.exp(-2.0) * (math.e - 1.0) / (2.0 * math.pi ** 2)
    got = math.exp(log_pdf(2.0, ctx))
    rel = abs(got - want) / want
    return CheckResult("hand-derived (2,1) density", rel <= 1e-10, f"p={got:.10f}, rel err={rel:.1e}")


def check_oracle_triangle(cases=((2, 1), (3, 2), (4, 2)), points: int = 5, mc_samples: int = 100_000,
                          seed: int = 13) -> CheckResult:
    worst_z = 0.0
    worst_ratio = math.inf
    for ci, (m, k) in enumerate(cases):
        params = SignalParams(1.0, 1.0, 1.0)
        ctx = make_pdf_context(params, m, k)
        base = RngStream(seed, ci)
        ys = sample_received_batch(m, k, params, points, base.child(0))
        unorm = np.einsum("pi,pi->p", ys.conj(), ys).real
        closed = np.exp(log_pdf(unorm, ctx))
        mean, se = mc_oracle_pdf(ys, ctx, mc_samples, base.child(1))
        worst_z = max(worst_z, float(np.max(np.abs(mean - closed) / se)))
        for u, p in zip(unorm, closed):
            errs = [abs(hciz_perturbed_oracle(float(u), ctx, e) - p) for e in (1e-2, 1e-3, 1e-4)]
            worst_ratio = min(worst_ratio, errs[0] / errs[1], errs[1] / errs[2])
    ok = worst_z <= 3.0 and worst_ratio >= 5.0
    return CheckResult("oracle triangle", ok,
                       f"max |closed - MC|/se = {worst_z:.2f}, min HCIZ error ratio per decade = {worst_ratio:.1f}")


def check_square_zero_rate(ms=(2, 3), samples: int = 20000, seed: int = 14) -> CheckResult:
    details = []
    ok = True
    for m in ms:
        ctx = make_pdf_context(SignalParams(1.0, 0.1, 1.0), m, m, oracle_only=True)
        rate, se = rs_rate(ctx, samples, RngStream(seed, m))
        ok &= abs(rate) <= 3 * se
        details.append(f"M=K={m}: {rate:+.4f}+-{se:.4f}")
    return CheckResult("K=M zero RS rate", ok, ", ".join(details))


def check_slopes(cases=((4, 2), (5, 4)), snrs=(30.0, 35.0, 40.0), samples: int = 1_000_000,
                 seed: int = 15, workers: int = 1) -> CheckResult:
    ok = True
    details = []
    for m, k in cases:
        rng = RngStream(seed, m * 100 + k)
        bds = []
        for snr in snrs:
            ctx = make_pdf_context(SignalParams.from_snr_db(snr), m, k)
            bds.append((snr, rate_breakdown(ctx, samples, rng, workers)))
        total, rs = mux_gain_estimate(bds)
        ok &= abs(rs - (m - k)) <= 0.1 * (m - k) and abs(total - m) <= 0.1 * m
        details.append(f"(M,K)=({m},{k}): rs slope {rs:.3f} (want {m - k}), total slope {total:.3f} (want {m})")
    return CheckResult("multiplexing-gain slopes", ok, "; ".join(details))


def run_validate(level: str = "quick", workers: int = 1, echo: Callable[[str], None] = print) -> bool:
    level = level.lower()
    if level not in ("quick", "full"):
        raise ValueError("level must be quick or full")
    checks: list[Callable[[], CheckResult]] = [
        check_haar_moment,
        check_solver_residuals,
        check_closed_form_point,
        check_normalization,
        check_oracle_triangle,
        check_square_zero_rate,
    ]
    if level == "full":
        checks = [
            lambda: check_haar_moment(samples=100_000),
            lambda: check_solver_residuals(instances=100),
            check_closed_form_point,
            lambda: check_normalization(cases=((2, 1), (3, 1), (3, 2), (4, 2), (6, 4)), snrs=(0.1, 1.0, 10.0, 100.0)),
            lambda: check_oracle_triangle(points=20, mc_samples=1_000_000),
            lambda: check_square_zero_rate(ms=(2, 3, 4), samples=100_000),
            lambda: check_slopes(workers=workers),
        ]
    all_ok = True
    for check in checks:
        t0 = time.perf_counter()
        res = check()
        res.seconds = time.perf_counter() - t0
        echo(res.line())
        all_ok &= res.passed
    echo("validation " + ("PASSED" if all_ok else "FAILED"))
    return bool(all_ok)
