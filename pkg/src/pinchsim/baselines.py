"""Fixed-position antenna arrays used as benchmarks for pinching-antenna systems."""

from __future__ import annotations

import numpy as np

from .channel import RadioParams
from .errors import SingularityError, ValidationError
from .precoding import PrecoderSolution, min_power_precoder

__all__ = [
    "ula_positions",
    "fixed_array_channel",
    "hybrid_analog_weights",
    "baseline_conventional_mimo",
    "baseline_massive_mimo_hybrid",
    "fixed_array_gain",
]

DEFAULT_ARRAY_AXIS = (0.0, 1.0, 0.0)


def ula_positions(center, n: int, spacing: float, axis=DEFAULT_ARRAY_AXIS) -> np.ndarray:
    """Element positions of a uniform linear array centred at ``center``."""
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.asarray(center, dtype=float) + np.outer(np.arange(n) - (n - 1) / 2, spacing * axis)


def fixed_array_channel(users, positions, radio: RadioParams) -> np.ndarray:
    """LoS channel ``beta / r * exp(-j k r)`` from each element to each user, shape ``(K, M)``."""
    users = np.asarray(users, dtype=float).reshape(-1, 3)
    r = np.linalg.norm(users[:, None, :] - np.asarray(positions)[None, :, :], axis=-1)
    if np.any(r == 0):
        raise SingularityError("user coincides with an array element")
    return radio.reference_gain / r * np.exp(-1j * radio.wavenumber * r)


def hybrid_analog_weights(H: np.ndarray, n_rf: int, antennas_per_rf: int) -> np.ndarray:
    """Block-diagonal analog combiner, ``(n_rf * M) x n_rf``.

    Sub-array ``r`` co-phases toward user ``r mod K`` (round-robin) and is
    scaled by ``1/sqrt(M)`` so that analog stage preserves transmit power.
    """
    K = H.shape[0]
    M = antennas_per_rf
    A = np.zeros((n_rf * M, n_rf), dtype=complex)
    for r in range(n_rf):
        rows = slice(r * M, (r + 1) * M)
        A[rows, r] = np.exp(-1j * np.angle(H[r % K, rows])) / np.sqrt(M)
    return A


def baseline_conventional_mimo(users, bs_position, n_antennas: int, gamma, radio: RadioParams,
                               axis=DEFAULT_ARRAY_AXIS) -> PrecoderSolution:
    """One RF chain per antenna on a half-wavelength ULA at the base station."""
    if n_antennas < 1:
        raise ValidationError("n_antennas must be >= 1")
    positions = ula_positions(bs_position, n_antennas, radio.wavelength / 2, axis)
    H = fixed_array_channel(users, positions, radio)
    return min_power_precoder(H, gamma, radio.noise_power)


def baseline_massive_mimo_hybrid(users, bs_position, n_rf: int, antennas_per_rf: int, gamma,
                                 radio: RadioParams, axis=DEFAULT_ARRAY_AXIS) -> PrecoderSolution:
    """Partially connected hybrid array: each RF chain drives its own sub-array."""
    if n_rf < 1 or antennas_per_rf < 1:
        raise ValidationError("n_rf and antennas_per_rf must be >= 1")
    positions = ula_positions(bs_position, n_rf * antennas_per_rf, radio.wavelength / 2, axis)
    H = fixed_array_channel(users, positions, radio)
    eff = H @ hybrid_analog_weights(H, n_rf, antennas_per_rf)
    return min_power_precoder(eff, gamma, radio.noise_power)


def fixed_array_gain(user, bs_position, n_antennas: int, radio: RadioParams,
                     reference_power: float, axis=DEFAULT_ARRAY_AXIS) -> float:
    """Matched-filter received power of a fixed ULA for unit transmit power, over ``reference_power``."""
    positions = ula_positions(bs_position, n_antennas, radio.wavelength / 2, axis)
    h = fixed_array_channel(user, positions, radio)[0]
    return float(np.sum(np.abs(h) ** 2) / reference_power)
