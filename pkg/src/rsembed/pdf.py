"""Closed-form density of the received vector under a Haar-distributed U~.

With s ~ CN(0, Es I_K), n ~ CN(0, N0 I_M) and H = sqrt(beta) U~, the density
depends on y only through t = gamma ||y||^2 and reads

    p(y) = exp(-||y||^2/N0) (M-1)! det Z
           / [(-1)^{K(M-K)} (pi(beta Es+N0))^K (pi N0)^{M-K} (-t)^{M-1}
              prod_{k<K} k! prod_{n<M-K} n!]

where only the first row of the M x M matrix Z depends on t.  det Z is
evaluated by expanding along that row; the M minors of the constant integer
block are computed once, exactly.  Writing det Z = e^t A(t) + B(t) with
polynomials A, B, two evaluation branches are used:

* t >= ``SERIES_T_MAX``: log-domain signed sum of the expansion terms
  (no overflow for t in the thousands);
* t <  ``SERIES_T_MAX``: Taylor series of det Z / t^{M-1}, whose exact
  rational coefficients come from the same minors.  Near t = 0 the first
  M-1 coefficients of det Z cancel exactly, which the direct expansion can
  only reproduce with catastrophic cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import integrate, stats
from scipy.special import logsumexp

from .channel import SignalParams
from .errors import (DegenerateGamma, EigenvalueCollision, InvalidDims,
                     QuadratureNonConvergence, ZeroNorm)
from .numerics import (RngStream, SignedLogReal, as_generator, log_factorial,
                       sample_haar_unitary, signed_log_sum)

SERIES_T_MAX = 24.0
SERIES_TERMS = 120


# -- exact integer machinery ----------------------------------------------------

def _bareiss_det(rows: Sequence[Sequence[int]]) -> int:
    """Exact determinant of an integer matrix (fraction-free elimination)."""
    a = [list(r) for r in rows]
    n = len(a)
    if n == 0:
        return 1
    sign = 1
    prev = 1
    for p in range(n - 1):
        if a[p][p] == 0:
            swap = next((r for r in range(p + 1, n) if a[r][p] != 0), None)
            if swap is None:
                return 0
            a[p], a[swap] = a[swap], a[p]
            sign = -sign
        for i in range(p + 1, n):
            for j in range(p + 1, n):
                a[i][j] = (a[i][j] * a[p][p] - a[i][p] * a[p][j]) // prev
        prev = a[p][p]
    return sign * a[n - 1][n - 1]


def z_lower_block(m: int, k: int) -> list[list[int]]:
    """Rows 2..M of Z: integer factorial ratios, independent of y."""
    rows = []
    for i in range(2, m + 1):
        it = i - 1
        row = []
        for j in range(1, m + 1):
            if j <= k:
                row.append(math.factorial(it - 1) // math.factorial(it - j) if it >= j else 0)
            else:
                row.append(math.factorial(it - 1) if it == j - k else 0)
        rows.append(row)
    return rows


@lru_cache(maxsize=None)
def first_row_minors(m: int, k: int) -> tuple[int, ...]:
    """Minors C_j of Z along its first row, so det Z = sum_j (-1)^(1+j) Z_1j C_j."""
    low = z_lower_block(m, k)
    return tuple(_bareiss_det([r[:j] + r[j + 1:] for r in low]) for j in range(m))


def _prefactor_sign(m: int, k: int) -> int:
    # (-1)^{K(M-K)} and (-1)^{M-1} from (-t)^{M-1}, both in the denominator
    return -1 if (k * (m - k) + m - 1) % 2 else 1


@lru_cache(maxsize=None)
def _series_coefficients(m: int, k: int, minors: tuple[int, ...], terms: int) -> np.ndarray:
    """Taylor coefficients of sign * det Z / t^{M-1}, as floats."""
    sgn = _prefactor_sign(m, k)
    # det Z = e^t A(t) + B(t); coefficient of t^n
    a = [(-1) ** j * minors[j] for j in range(k)]           # t^j, j = 0..K-1
    b = [(-1) ** (k + jt) * minors[k + jt] for jt in range(m - k)]  # t^jt
    coeffs = []
    for n in range(m - 1 + terms):
        c = Fraction(0)
        for j, aj in enumerate(a):
            if n >= j:
                c += Fraction(aj, math.factorial(n - j))
        if n < len(b):
            c += b[n]
        coeffs.append(c)
    if any(c != 0 for c in coeffs[:m - 1]):
        raise ArithmeticError(f"cofactors for (M, K) = ({m}, {k}) do not cancel at t = 0")
    return np.array([float(sgn * c) for c in coeffs[m - 1:]])


# -- context -------------------------------------------------------------------

@dataclass(frozen=True)
class PdfContext:
    m: int
    k: int
    beta: float
    es: float
    n0: float
    gamma: float
    log_prefactor_const: float  # log of |y-independent factors|
    prefactor_sign: int         # sign folded out of the prefactor and (-t)^{M-1}
    minors: tuple[int, ...]     # exact first-row minors of Z; empty when K == M

    @property
    def closed_form(self) -> bool:
        return self.m > self.k

    @property
    def cofactors(self) -> list[SignedLogReal]:
        return [SignedLogReal.from_int(c) for c in self.minors]

    @property
    def params(self) -> SignalParams:
        return SignalParams(es=self.es, n0=self.n0, beta=self.beta)

    @property
    def signal_var(self) -> float:
        return self.beta * self.es + self.n0


def make_pdf_context(params: SignalParams, m: int, k: int, *, oracle_only: bool = False) -> PdfContext:
    """Precompute everything that does not depend on y.

    ``oracle_only=True`` also admits K == M, where only the Monte-Carlo oracle
    applies (the closed form assumes M > K).
    """
    if not (1 <= k <= m) or (k == m and not oracle_only):
        raise InvalidDims(f"need M > K >= 1, got M={m}, K={k}")
    bes = params.beta * params.es
    gamma = bes / (params.n0 * (bes + params.n0))
    if gamma == 0.0:
        raise DegenerateGamma("gamma = 0 (Es = 0): use the noise-only Gaussian density")
    if k == m:
        return PdfContext(m, k, params.beta, params.es, params.n0, gamma,
                          -m * math.log(math.pi * (bes + params.n0)), 1, ())
    log_const = (log_factorial(m - 1)
                 - k * math.log(math.pi * (bes + params.n0))
                 - (m - k) * math.log(math.pi * params.n0)
                 - sum(log_factorial(q) for q in range(1, k))
                 - sum(log_factorial(q) for q in range(1, m - k)))
    return PdfContext(m, k, params.beta, params.es, params.n0, gamma, log_const,
                      _prefactor_sign(m, k), first_row_minors(m, k))


# -- Z matrices ----------------------------------------------------------------

@dataclass(frozen=True)
class ZMatrixSpec:
    m: int
    k: int
    t: float

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("t must be non-negative")


def _log_pow(t: float, p: int) -> SignedLogReal:
    # 0**0 == 1
    if p == 0:
        return SignedLogReal(1, 0.0)
    if t == 0:
        return SignedLogReal.zero()
    return SignedLogReal(1, p * math.log(t))


def z_matrix(spec: ZMatrixSpec) -> list[list[SignedLogReal]]:
    """Z entries in signed-log form (row 1 holds e^t terms that may overflow)."""
    m, k, t = spec.m, spec.k, spec.t
    first = []
    for j in range(1, m + 1):
        if j <= k:
            e = _log_pow(t, j - 1)
            first.append(SignedLogReal(e.sign, e.log_mag + t) if e.sign else e)
        else:
            first.append(_log_pow(t, j - k - 1))
    rest = [[SignedLogReal.from_int(v) for v in row] for row in z_lower_block(m, k)]
    return [first] + rest


def z_tilde_matrix(m: int, k: int) -> list[list[SignedLogReal]]:
    """High-SNR variant: first row is the indicator of column K."""
    first = [SignedLogReal(1, 0.0) if j == k else SignedLogReal.zero() for j in range(1, m + 1)]
    rest = [[SignedLogReal.from_int(v) for v in row] for row in z_lower_block(m, k)]
    return [first] + rest


def log_det_z(m: int, k: int, t: float) -> SignedLogReal:
    """det Z by first-row expansion in the log domain."""
    row = z_matrix(ZMatrixSpec(m, k, t))[0]
    minors = first_row_minors(m, k)
    terms = []
    for j in range(m):
        term = row[j] * SignedLogReal.from_int(minors[j])
        terms.append(term if j % 2 == 0 else -term)
    return signed_log_sum(terms)


# -- evaluation ----------------------------------------------------------------

def _check_closed(ctx: PdfContext) -> None:
    if not ctx.closed_form:
        raise InvalidDims("closed-form density needs M > K; use mc_oracle_pdf for K == M")
    if ctx.gamma == 0.0:
        raise DegenerateGamma("gamma = 0")


def _log_scaled_det_no_exp(t: np.ndarray, ctx: PdfContext) -> np.ndarray:
    """log of sign * det Z e^{-t} / t^{M-1}, for t >= SERIES_T_MAX (log domain)."""
    m, k = ctx.m, ctx.k
    logt = np.log(t)
    logs, signs = [], []
    # det Z / e^t = A(t) + B(t) e^{-t}
    for j, c in enumerate(ctx.minors):
        if c == 0:
            continue
        s = ctx.prefactor_sign * (-1) ** j * (1 if c > 0 else -1)
        lc = math.log(abs(c))
        if j < k:
            logs.append(lc + j * logt)
        else:
            logs.append(lc + (j - k) * logt - t)
        signs.append(np.full_like(t, s))
    val, sgn = logsumexp(np.stack(logs), b=np.stack(signs), axis=0, return_sign=True)
    val = np.where(sgn > 0, val, np.nan)
    return val - (m - 1) * logt


def _log_scaled_det_series(t: np.ndarray, ctx: PdfContext) -> np.ndarray:
    coeffs = _series_coefficients(ctx.m, ctx.k, ctx.minors, SERIES_TERMS)
    s = np.polyval(coeffs[::-1], t)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(s > 0, np.log(np.abs(s)), np.nan)


def log_pdf_array(y_norm_sq, ctx: PdfContext) -> np.ndarray:
    """Vectorised ln p(y) over ||y||^2 >= 0 (t = 0 handled by the series limit)."""
    _check_closed(ctx)
    u = np.asarray(y_norm_sq, dtype=float)
    if np.any(u < 0):
        raise ValueError("||y||^2 must be non-negative")
    t = ctx.gamma * u
    out = np.empty_like(t)
    small = t < SERIES_T_MAX
    if np.any(small):
        ts = t[small]
        out[small] = (ctx.log_prefactor_const - u[small] / ctx.n0
                      + _log_scaled_det_series(ts, ctx))
    if np.any(~small):
        # -||y||^2/N0 + t == -||y||^2/(beta Es + N0) absorbs the e^t of det Z
        out[~small] = (ctx.log_prefactor_const - u[~small] / ctx.signal_var
                       + _log_scaled_det_no_exp(t[~small], ctx))
    return out


def log_pdf(y_norm_sq, ctx: PdfContext):
    """ln p(y) as a function of ||y||^2 (scalar or array)."""
    u = np.asarray(y_norm_sq, dtype=float)
    if np.any(u == 0):
        raise ZeroNorm("||y||^2 = 0: use log_pdf_at_origin for the t -> 0+ limit")
    out = log_pdf_array(u, ctx)
    return float(out) if out.ndim == 0 else out


def log_pdf_at_origin(ctx: PdfContext) -> float:
    return float(log_pdf_array(0.0, ctx))


def log_pdf_high_snr(y_norm_sq, ctx: PdfContext):
    """ln of the N0 -> 0 limit of p(y); depends on beta*Es only.

    Uses Z~ (first row = indicator of column K), so only the K-th minor
    survives.  The limit carries the factor exp(-||y||^2/(beta Es)) and the
    product of k! up to K-1, which together make it a normalised density.
    """
    _check_closed(ctx)
    u = np.asarray(y_norm_sq, dtype=float)
    if np.any(u == 0):
        raise ZeroNorm("||y||^2 = 0")
    m, k = ctx.m, ctx.k
    bes = ctx.beta * ctx.es
    det_zt = (-1) ** (1 + k) * ctx.minors[k - 1]
    sign = (-1) ** (((k + 1) * m - k * k - 1) % 2)
    if det_zt * sign <= 0:
        raise ArithmeticError("high-SNR limit has non-positive sign")
    const = (log_factorial(m - 1) + math.log(abs(det_zt)) - k * math.log(bes)
             - m * math.log(math.pi)
             - sum(log_factorial(q) for q in range(1, k))
             - sum(log_factorial(q) for q in range(1, m - k)))
    out = const + (k - m) * np.log(u) - u / bes
    return float(out) if out.ndim == 0 else out


# -- oracles -------------------------------------------------------------------

def _oracle_log_densities(y: np.ndarray, ctx: PdfContext, u_t: np.ndarray) -> np.ndarray:
    """log CN(y; 0, beta Es U~U~^H + N0 I) for every (y, U~) pair -> (P, L)."""
    m = ctx.m
    cov = ctx.beta * ctx.es * (u_t @ np.conj(np.swapaxes(u_t, -1, -2))) + ctx.n0 * np.eye(m)
    _, logdet = np.linalg.slogdet(cov)
    cinv = np.linalg.inv(cov)
    quad = np.einsum("pi,lij,pj->pl", y.conj(), cinv, y).real
    return -quad - logdet[None, :] - m * math.log(math.pi)


def mc_oracle_pdf(y, ctx: PdfContext, num_samples: int, rng: RngStream | np.random.Generator,
                  chunk: int = 1 << 15):
    """Monte-Carlo p(y) = E_U[CN(y; 0, beta Es U~U~^H + N0 I)] over Haar U.

    ``y`` may be one vector (M,) or a batch (P, M); a batch reuses the same
    Haar draws for every point.  Returns ``(mean, std_error)``.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be >= 1")
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y2 = y[None, :] if single else y
    gen = as_generator(rng)
    total = np.zeros(y2.shape[0])
    total_sq = np.zeros(y2.shape[0])
    done = 0
    while done < num_samples:
        n = min(chunk, num_samples - done)
        u_t = sample_haar_unitary(ctx.m, gen, size=n)[:, :, :ctx.k]
        dens = np.exp(_oracle_log_densities(y2, ctx, u_t))
        total += dens.sum(axis=1)
        total_sq += (dens ** 2).sum(axis=1)
        done += n
    mean = total / num_samples
    if num_samples > 1:
        var = np.maximum(total_sq - num_samples * mean ** 2, 0.0) / (num_samples - 1)
        se = np.sqrt(var / num_samples)
    else:
        se = np.full_like(mean, np.inf)
    if single:
        return float(mean[0]), float(se[0])
    return mean, se


def mc_oracle_log_pdf(y: np.ndarray, ctx: PdfContext, inner: int,
                      rng: RngStream | np.random.Generator) -> np.ndarray:
    """log of the MC-oracle density for a batch of y, shared inner Haar draws."""
    gen = as_generator(rng)
    u_t = sample_haar_unitary(ctx.m, gen, size=inner)[:, :, :ctx.k]
    logd = _oracle_log_densities(np.atleast_2d(y), ctx, u_t)
    return logsumexp(logd, axis=1) - math.log(inner)


def vandermonde(values: Sequence) -> object:
    """prod_{i<j} (v_j - v_i); callers pass values in decreasing order."""
    out = 1
    for i in range(len(values)):
        for j in range(i + 1, len(values)):
            out = out * (values[j] - values[i])
    return out


def perturbed_spectra(m: int, k: int, t: float, eps: float) -> tuple[list[float], list[float]]:
    """Distinct stand-ins for the degenerate spectra of I~ and gamma y y^H.

    a: 1 + (j-1) eps for the K unit eigenvalues, (j-K) eps for the M-K zeros.
    b: t, then (i-1) eps t for the M-1 zeros.
    """
    a = [1.0 + (j - 1) * eps for j in range(1, k + 1)] + [(j - k) * eps for j in range(k + 1, m + 1)]
    b = [t] + [(i - 1) * eps * t for i in range(2, m + 1)]
    return a, b


def hciz_perturbed_oracle(y_norm_sq: float, ctx: PdfContext, eps: float, dps: int | None = None) -> float:
    """p(y) from the HCIZ determinant ratio at perturbed (distinct) spectra.

    The ratio det G / (Delta(b) Delta(a)) suffers cancellation of order
    eps^(#near pairs), so it is evaluated with mpmath at enough digits.
    Converges to exp(log_pdf) as eps -> 0.
    """
    import mpmath

    _check_closed(ctx)
    if not (0 < eps < 0.1):
        raise ValueError("eps must lie in (0, 0.1)")
    if y_norm_sq <= 0:
        raise ZeroNorm("||y||^2 must be positive")
    m, k = ctx.m, ctx.k
    t = ctx.gamma * y_norm_sq
    a, b = perturbed_spectra(m, k, t, eps)
    tiny = 1e3 * np.finfo(float).eps
    for spec in (a, b):
        gaps = np.diff(np.sort(spec))
        if np.any(gaps < tiny * max(1.0, max(abs(v) for v in spec))):
            raise EigenvalueCollision(f"perturbed eigenvalues collide at eps={eps}")
    pairs = k * (k - 1) // 2 + (m - k) * (m - k - 1) // 2 + (m - 1) * (m - 2) // 2
    if dps is None:
        dps = 30 + pairs * int(math.ceil(-math.log10(eps))) + int(t / math.log(10))
    with mpmath.workdps(dps):
        am = [mpmath.mpf(v) for v in a]
        bm = [mpmath.mpf(v) for v in b]
        g = mpmath.matrix(m, m)
        for i in range(m):
            for j in range(m):
                g[i, j] = mpmath.exp(bm[i] * am[j])
        ratio = mpmath.det(g) / (vandermonde(bm) * vandermonde(am))
        log_hciz = mpmath.log(mpmath.fprod(mpmath.factorial(q) for q in range(1, m)) * ratio)
        log_p = (log_hciz - mpmath.mpf(y_norm_sq) / ctx.n0
                 - k * mpmath.log(mpmath.pi * ctx.signal_var)
                 - (m - k) * mpmath.log(mpmath.pi * ctx.n0))
        return float(mpmath.exp(log_p))


@dataclass(frozen=True)
class QuadSettings:
    epsabs: float = 1e-9
    epsrel: float = 1e-10
    limit: int = 400
    tail_mass: float = 1e-12


def radial_normalization(ctx: PdfContext, quad: QuadSettings = QuadSettings()) -> float:
    """Integral of p over C^M, reduced to 1-D in u = ||y||^2.

    int p(y) dy = int_0^inf p(u) pi^M u^{M-1} / (M-1)! du.  ||y||^2 is
    stochastically below Gamma(M, beta Es + N0), which sets the upper cut.
    """
    _check_closed(ctx)
    m = ctx.m
    log_sphere = m * math.log(math.pi) - log_factorial(m - 1)
    u_max = float(stats.gamma.isf(quad.tail_mass, m, scale=ctx.signal_var))

    def integrand(u):
        if u <= 0.0:
            return 0.0
        return math.exp(float(log_pdf_array(u, ctx)) + log_sphere + (m - 1) * math.log(u))

    # breakpoints at the noise and signal scales
    pts = sorted({p for p in (ctx.n0 * m, ctx.signal_var, ctx.signal_var * m, SERIES_T_MAX / ctx.gamma)
                  if 0 < p < u_max})
    edges = [0.0, *pts, u_max]
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        val, err, info = integrate.quad(integrand, lo, hi, epsabs=quad.epsabs, epsrel=quad.epsrel,
                                        limit=quad.limit, full_output=True)[:3]
        if not np.isfinite(val) or err > max(quad.epsabs, quad.epsrel * abs(val)) * 100:
            raise QuadratureNonConvergence(f"quad on [{lo:g}, {hi:g}]: value={val}, err={err:g}")
        total += val
    return total
