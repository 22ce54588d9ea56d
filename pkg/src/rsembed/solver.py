"""ARIS / FRIS reflection configurations that realise an orthogonal channel."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .channel import ChannelTriple, TargetChannel, effective_channel
from .errors import InfeasibleDims, RankDeficient


class RsKind(enum.Enum):
    ARIS = "aris"
    FRIS = "fris"


@dataclass(frozen=True)
class RsConfiguration:
    kind: RsKind
    aris_alpha: np.ndarray | None = None
    fris_theta: np.ndarray | None = None

    def __post_init__(self):
        if self.kind is RsKind.ARIS and (self.aris_alpha is None or self.fris_theta is not None):
            raise ValueError("ARIS configuration carries exactly the alpha vector")
        if self.kind is RsKind.FRIS and (self.fris_theta is None or self.aris_alpha is not None):
            raise ValueError("FRIS configuration carries exactly the theta matrix")

    @property
    def theta(self) -> np.ndarray:
        if self.kind is RsKind.ARIS:
            return np.diag(self.aris_alpha)
        return self.fris_theta

    @property
    def norm(self) -> float:
        """||alpha||_2 for ARIS, ||Theta||_F for FRIS."""
        payload = self.aris_alpha if self.kind is RsKind.ARIS else self.fris_theta
        return float(np.linalg.norm(payload))


def default_rank_tol(a: np.ndarray, s_max: float) -> float:
    return max(a.shape) * np.finfo(float).eps * s_max


def _pinv_full_rank(a: np.ndarray, expected_rank: int, rank_tol: float | None, what: str) -> np.ndarray:
    """Moore-Penrose inverse via SVD; raises unless ``a`` has rank ``expected_rank``."""
    u, s, vh = np.linalg.svd(a, full_matrices=False)
    tol = default_rank_tol(a, s[0]) if rank_tol is None else rank_tol * s[0]
    if len(s) < expected_rank or s[expected_rank - 1] <= tol:
        smin = s[min(expected_rank, len(s)) - 1]
        raise RankDeficient(f"{what} is rank deficient (sigma_min={smin:.3e}, tol={tol:.3e})")
    r = expected_rank
    return (vh[:r].conj().T / s[:r]) @ u[:, :r].conj().T


def build_h12(ch: ChannelTriple) -> np.ndarray:
    """MK x N matrix whose i-th column is vec(h1_i h2_i^T) (column stacking).

    vec(a b^T) = b kron a, so column i is kron(h2[i, :], h1[:, i]).
    """
    m, k, n = ch.dims
    # (k, m, n) -> (k*m, n); row index k_idx*m + m_idx matches column-major vec
    return (ch.h2.T[:, None, :] * ch.h1[None, :, :]).reshape(k * m, n)


def _vec(a: np.ndarray) -> np.ndarray:
    return a.reshape(-1, order="F")


def solve_aris(ch: ChannelTriple, target: TargetChannel, rank_tol: float | None = None) -> RsConfiguration:
    """Minimum-norm diagonal coefficients alpha with H0 + H1 diag(alpha) H2 = sqrt(beta) U~.

    ``rank_tol`` is relative to the largest singular value; None picks
    max(rows, cols) * eps.
    """
    m, k, n = ch.dims
    if n <= m * k:
        raise InfeasibleDims(f"ARIS requires N > MK (N={n}, MK={m * k})")
    h12 = build_h12(ch)
    pinv = _pinv_full_rank(h12, m * k, rank_tol, "H12")
    alpha = pinv @ _vec(target.matrix - ch.h0)
    return RsConfiguration(RsKind.ARIS, aris_alpha=alpha)


def solve_fris(ch: ChannelTriple, target: TargetChannel, rank_tol: float | None = None) -> RsConfiguration:
    """Theta = pinv(H1) (sqrt(beta) U~ - H0) pinv(H2)."""
    m, k, n = ch.dims
    if n < max(m, k):
        raise InfeasibleDims(f"FRIS requires N >= max(M, K) (N={n}, M={m}, K={k})")
    h1_pinv = _pinv_full_rank(ch.h1, m, rank_tol, "H1")
    h2_pinv = _pinv_full_rank(ch.h2, k, rank_tol, "H2")
    theta = h1_pinv @ (target.matrix - ch.h0) @ h2_pinv
    return RsConfiguration(RsKind.FRIS, fris_theta=theta)


def solve(ch: ChannelTriple, target: TargetChannel, kind: RsKind, rank_tol: float | None = None) -> RsConfiguration:
    if kind is RsKind.ARIS:
        return solve_aris(ch, target, rank_tol)
    return solve_fris(ch, target, rank_tol)


def verify_orthogonalization(ch: ChannelTriple, cfg: RsConfiguration, target: TargetChannel) -> float:
    """Relative Frobenius residual of the realised channel against the target."""
    h = effective_channel(ch, cfg.theta)
    want = target.matrix
    return float(np.linalg.norm(h - want) / np.linalg.norm(want))
