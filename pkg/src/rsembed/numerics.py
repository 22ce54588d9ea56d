"""Log-domain arithmetic, Haar sampling and seeded random streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.special import logsumexp

__all__ = [
    "SignedLogReal",
    "RngStream",
    "signed_log_sum",
    "log_factorial",
    "complex_gaussian",
    "sample_haar_unitary",
    "log_det_signed",
    "as_generator",
]


@dataclass(frozen=True)
class SignedLogReal:
    """A real number stored as ``sign * exp(log_mag)``.

    ``sign == 0`` is exact zero; ``log_mag`` is then meaningless and kept at 0.
    """

    sign: int
    log_mag: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {self.sign}")
        if self.sign == 0 and self.log_mag != 0.0:
            object.__setattr__(self, "log_mag", 0.0)

    @classmethod
    def zero(cls) -> SignedLogReal:
        return cls(0, 0.0)

    @classmethod
    def from_real(cls, x: float) -> SignedLogReal:
        if x == 0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def from_int(cls, n: int) -> SignedLogReal:
        # math.log accepts arbitrarily large ints without overflowing
        if n == 0:
            return cls.zero()
        return cls(1 if n > 0 else -1, math.log(abs(n)))

    def to_real(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_mag)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __neg__(self) -> SignedLogReal:
        return SignedLogReal(-self.sign, self.log_mag)

    def __mul__(self, other: SignedLogReal) -> SignedLogReal:
        if self.sign == 0 or other.sign == 0:
            return SignedLogReal.zero()
        return SignedLogReal(self.sign * other.sign, self.log_mag + other.log_mag)

    def __truediv__(self, other: SignedLogReal) -> SignedLogReal:
        if other.sign == 0:
            raise ZeroDivisionError("division by exact zero")
        if self.sign == 0:
            return SignedLogReal.zero()
        return SignedLogReal(self.sign * other.sign, self.log_mag - other.log_mag)


def signed_log_sum(terms: Iterable[SignedLogReal]) -> SignedLogReal:
    """Sum of signed-log numbers via a signed log-sum-exp."""
    terms = list(terms)
    if not terms:
        raise ValueError("signed_log_sum needs at least one term")
    live = [t for t in terms if t.sign != 0]
    if not live:
        return SignedLogReal.zero()
    logs = np.array([t.log_mag for t in live])
    signs = np.array([t.sign for t in live], dtype=float)
    val, sgn = logsumexp(logs, b=signs, return_sign=True)
    if sgn == 0 or not np.isfinite(val):
        return SignedLogReal.zero()
    return SignedLogReal(int(sgn), float(val))


_LOG_FACT_EXACT_MAX = 1000


def log_factorial(n: int) -> float:
    """Natural log of ``n!``."""
    if n < 0:
        raise ValueError("log_factorial needs n >= 0")
    if n <= _LOG_FACT_EXACT_MAX:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream keyed by ``(seed, stream_id)``.

    The stream is a value: every call to :meth:`generator` restarts it, so
    passing the same ``RngStream`` twice yields the same draws.  Child streams
    (``child(i)``) give independent sub-streams for parallel workers.
    """

    seed: int
    stream_id: int = 0
    path: tuple[int, ...] = field(default=())

    def __post_init__(self):
        for v in (self.seed, self.stream_id, *self.path):
            if not 0 <= int(v) < 2**64:
                raise ValueError("seed, stream_id and child indices must be 64-bit unsigned")

    def seed_sequence(self) -> np.random.SeedSequence:
        return np.random.SeedSequence(self.seed, spawn_key=(self.stream_id, *self.path))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64DXSM(self.seed_sequence()))

    def child(self, index: int) -> RngStream:
        return RngStream(self.seed, self.stream_id, (*self.path, index))


def as_generator(rng: RngStream | np.random.Generator) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return rng.generator()


def complex_gaussian(gen: np.random.Generator, shape, scale: float = 1.0) -> np.ndarray:
    """i.i.d. CN(0, scale**2) entries."""
    re = gen.standard_normal(shape)
    im = gen.standard_normal(shape)
    return (re + 1j * im) * (scale / math.sqrt(2.0))


def sample_haar_unitary(m: int, rng: RngStream | np.random.Generator,
                        size: int | None = None) -> np.ndarray:
    """Haar-distributed ``m x m`` unitary (or a stack of ``size`` of them).

    QR of a complex Ginibre matrix, with each column of Q multiplied by the
    phase of the matching diagonal entry of R. Without that fix the
    distribution is not Haar.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    gen = as_generator(rng)
    shape = (m, m) if size is None else (size, m, m)
    z = complex_gaussian(gen, shape)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    ph = d / np.abs(d)
    return q * ph[..., None, :]


def log_det_signed(a) -> SignedLogReal | tuple[float, float]:
    """log|det a| together with its sign (real input) or phase (complex input).

    Rows are scaled by their largest magnitude before the pivoted LU so that
    matrices with widely ranging rows neither overflow nor underflow.
    Real input returns a :class:`SignedLogReal`; complex input returns
    ``(log_mag, phase)`` with phase in radians (``phase`` is nan for a zero
    determinant, and ``log_mag`` is -inf).
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("log_det_signed needs a square matrix")
    is_complex = np.iscomplexobj(a)
    scale = np.max(np.abs(a), axis=1)
    if np.any(scale == 0):
        return (-np.inf, float("nan")) if is_complex else SignedLogReal.zero()
    sgn, logdet = np.linalg.slogdet(a / scale[:, None])
    if sgn == 0:
        return (-np.inf, float("nan")) if is_complex else SignedLogReal.zero()
    logdet = float(logdet + np.sum(np.log(scale)))
    if is_complex:
        return logdet, float(np.angle(sgn))
    return SignedLogReal(int(np.sign(sgn.real)), logdet)
