"""
Minimum-power downlink precoding under per-user SINR targets.

Solved in the dual uplink: the virtual uplink powers ``q`` follow the
standard fixed-point iteration with MMSE receivers, and whenever the current
receivers admit an exact uplink power solution the iterate jumps to it. The
downlink precoder reuses the uplink MMSE directions with powers from the
corresponding linear system, so both links spend the same total power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import sinr
from .errors import ValidationError

__all__ = ["PrecoderSolution", "min_power_precoder"]


@dataclass(frozen=True)
class PrecoderSolution:
    """Outcome of :func:`min_power_precoder`.

    ``precoder`` is ``K_rf x K_users`` (one column per user) and ``None``
    when the targets are infeasible.
    """

    feasible: bool
    precoder: np.ndarray | None
    total_power: float
    iterations: int
    achieved_sinr: np.ndarray | None = None


def _link_matrix(Hn, U, gamma):
    """``M[k, j] = |h_k^H u_j|^2``, with the diagonal divided by ``gamma_k`` and off-diagonal negated."""
    C = np.abs(Hn.conj() @ U) ** 2
    M = -C
    np.fill_diagonal(M, np.diag(C) / gamma)
    return M


def _solve_positive(M, rhs):
    try:
        x = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(x)) or np.any(x <= 0):
        return None
    if np.max(np.abs(M @ x - rhs)) > 1e-8 * np.max(np.abs(rhs)):
        return None
    return x


def min_power_precoder(eff, gamma, noise_power: float, max_iter: int = 500,
                       tol: float = 1e-10, divergence: float = 1e12) -> PrecoderSolution:
    """Least-power precoder meeting ``SINR_k >= gamma_k`` for every user.

    Parameters
    ----------
    eff : ndarray, shape (K_users, K_rf)
        Effective channel, one row per user.
    gamma : array_like, shape (K_users,)
        Linear SINR targets.
    noise_power : float
        Receiver noise power in Watts.
    divergence : float
        Infeasibility threshold on the dual powers, relative to each user's
        interference-free power ``gamma_k / ||h_k||^2``.

    Returns
    -------
    PrecoderSolution
        Infeasibility is reported through ``feasible=False``, not raised.
    """
    eff = np.atleast_2d(np.asarray(eff, dtype=complex))
    K, n_rf = eff.shape
    gamma = np.broadcast_to(np.asarray(gamma, dtype=float), (K,)).copy()
    if np.any(gamma <= 0) or not noise_power > 0:
        raise ValidationError("SINR targets and noise power must be positive")
    if not np.all(np.isfinite(eff)):
        raise ValidationError("effective channel must be finite")
    if K == 0:
        return PrecoderSolution(True, np.zeros((n_rf, 0), complex), 0.0, 0, np.zeros(0))

    # noise-normalized channels: h / sigma, unit noise
    Hn = eff / np.sqrt(noise_power)
    Hc = Hn.T  # columns h_k
    gains = np.sum(np.abs(Hn) ** 2, axis=1)
    if np.any(gains == 0):
        return PrecoderSolution(False, None, float("inf"), 0)
    scale = gamma / gains

    q = np.zeros(K)
    certified = None  # last uplink power vector known to meet every target
    it = 0
    for it in range(1, max_iter + 1):
        T = np.eye(n_rf) + (Hc * q) @ Hc.conj().T
        X = np.linalg.solve(T, Hc)
        quad = np.real(np.sum(Hc.conj() * X, axis=0))
        U = X / np.linalg.norm(X, axis=0)
        q_lin = _solve_positive(_link_matrix(Hn, U, gamma).T, np.ones(K))
        if q_lin is not None:
            certified = q_lin
            q_new = q_lin
        else:
            q_new = gamma / ((1.0 + gamma) * quad)
        if np.any(q_new > divergence * scale):
            break
        change = np.max(np.abs(q_new - q) / np.maximum(q_new, 1e-300))
        q = q_new
        if certified is not None and change < tol:
            break

    if certified is None:
        return PrecoderSolution(False, None, float("inf"), it)

    q = certified
    T = np.eye(n_rf) + (Hc * q) @ Hc.conj().T
    X = np.linalg.solve(T, Hc)
    U = X / np.linalg.norm(X, axis=0)
    p = _solve_positive(_link_matrix(Hn, U, gamma), np.ones(K))
    if p is None:
        return PrecoderSolution(False, None, float("inf"), it)
    W = U * np.sqrt(p)
    return PrecoderSolution(True, W, float(np.sum(p)), it, sinr(eff, W, noise_power))
