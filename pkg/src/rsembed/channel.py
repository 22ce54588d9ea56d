"""Random channels and the orthogonal target channel.

Entries of H0, H1, H2 are i.i.d. CN(0, 1); any path-loss normalisation is
absorbed into the scalar gain ``beta`` of the target channel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidDims
from .numerics import RngStream, as_generator, complex_gaussian, sample_haar_unitary


@dataclass(frozen=True)
class SystemDims:
    m: int  # BS antennas
    k: int  # single-antenna UEs
    n: int  # surface elements

    def __post_init__(self):
        if not (self.m > self.k >= 1):
            raise InvalidDims(f"need M > K >= 1, got M={self.m}, K={self.k}")
        if self.n < 1:
            raise InvalidDims(f"need N >= 1, got N={self.n}")


@dataclass(frozen=True)
class ChannelTriple:
    h0: np.ndarray  # M x K direct
    h1: np.ndarray  # M x N, BS <- surface
    h2: np.ndarray  # N x K, surface <- UEs

    def __post_init__(self):
        m, k = self.h0.shape
        m1, n = self.h1.shape
        n2, k2 = self.h2.shape
        if m1 != m or n2 != n or k2 != k:
            raise ValueError(
                f"inconsistent shapes h0={self.h0.shape}, h1={self.h1.shape}, h2={self.h2.shape}")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.h0.shape[0], self.h0.shape[1], self.h1.shape[1]


@dataclass(frozen=True)
class TargetChannel:
    """Desired effective channel ``sqrt(beta) * u_tilde`` with orthonormal columns."""

    beta: float
    u_tilde: np.ndarray

    def __post_init__(self):
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        k = self.u_tilde.shape[1]
        gram = self.u_tilde.conj().T @ self.u_tilde
        if not np.allclose(gram, np.eye(k), rtol=0.0, atol=1e-10):
            raise ValueError("u_tilde must satisfy U^H U = I_K")

    @property
    def matrix(self) -> np.ndarray:
        return math.sqrt(self.beta) * self.u_tilde


@dataclass(frozen=True)
class SignalParams:
    es: float  # per-UE symbol energy; 0 allowed (noise only)
    n0: float  # noise variance
    beta: float = 1.0

    def __post_init__(self):
        if not (self.es >= 0 and self.n0 > 0 and self.beta > 0):
            raise ValueError(f"need es >= 0, n0 > 0, beta > 0: {self}")

    @classmethod
    def from_snr_db(cls, snr_db: float, beta: float = 1.0, es: float = 1.0) -> SignalParams:
        """SNR is Es/N0 (beta is not part of it)."""
        return cls(es=es, n0=es / 10.0 ** (snr_db / 10.0), beta=beta)

    @property
    def snr(self) -> float:
        return self.es / self.n0


def generate_channels(dims: SystemDims, rng: RngStream | np.random.Generator) -> ChannelTriple:
    gen = as_generator(rng)
    h0 = complex_gaussian(gen, (dims.m, dims.k))
    h1 = complex_gaussian(gen, (dims.m, dims.n))
    h2 = complex_gaussian(gen, (dims.n, dims.k))
    return ChannelTriple(h0, h1, h2)


def effective_channel(ch: ChannelTriple, theta: np.ndarray) -> np.ndarray:
    """H0 + H1 @ theta @ H2."""
    theta = np.asarray(theta)
    n = ch.h1.shape[1]
    if theta.shape != (n, n):
        raise ValueError(f"theta must be {n}x{n}, got {theta.shape}")
    return ch.h0 + ch.h1 @ theta @ ch.h2


def embed_semi_unitary(u: np.ndarray, k: int) -> np.ndarray:
    """First K columns of U, i.e. U @ [I_K; 0]."""
    m = u.shape[-1]
    if k > m:
        raise InvalidDims(f"K={k} exceeds M={m}")
    return u[..., :, :k]


def random_target(m: int, k: int, beta: float, rng: RngStream | np.random.Generator) -> TargetChannel:
    return TargetChannel(beta, embed_semi_unitary(sample_haar_unitary(m, rng), k))


def sample_received_vector(target: TargetChannel, params: SignalParams,
                           rng: RngStream | np.random.Generator) -> np.ndarray:
    """One draw of y = sqrt(beta) U~ s + n for a fixed U~."""
    if not math.isclose(target.beta, params.beta, rel_tol=1e-12):
        raise ValueError("target.beta and params.beta disagree")
    gen = as_generator(rng)
    m, k = target.u_tilde.shape
    s = complex_gaussian(gen, k, math.sqrt(params.es))
    noise = complex_gaussian(gen, m, math.sqrt(params.n0))
    return target.matrix @ s + noise


def sample_received_batch(m: int, k: int, params: SignalParams, size: int,
                          rng: RngStream | np.random.Generator) -> np.ndarray:
    """``size`` draws of y, each with a fresh Haar U~.  Returns shape (size, M)."""
    gen = as_generator(rng)
    u_t = embed_semi_unitary(sample_haar_unitary(m, gen, size=size), k)
    s = complex_gaussian(gen, (size, k), math.sqrt(params.es))
    noise = complex_gaussian(gen, (size, m), math.sqrt(params.n0))
    return math.sqrt(params.beta) * np.einsum("tmk,tk->tm", u_t, s) + noise
