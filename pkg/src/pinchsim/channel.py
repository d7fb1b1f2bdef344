"""
Line-of-sight channel model for waveguide-fed pinching antennas.

The field a user receives from the antenna at offset ``d`` along a waveguide
is::

    g(d) = A(d) * (|beta| / r) * exp(-1j * 2*pi/lambda * (r + n_eff * d))

with ``r`` the free-space distance from the antenna to the user, ``A(d)`` the
in-waveguide amplitude attenuation and ``|beta| = lambda / (4 pi)`` the
free-space amplitude at 1 m. Antennas on one waveguide add coherently with
weights ``sqrt(P_n)`` taken from the power model.

Convention: rows of a channel matrix are the per-user channel vectors ``h_k``
and the received amplitude for precoder column ``w`` is ``h_k^H w``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .coupling import PowerModel, power_profile
from .errors import SingularityError, ValidationError

__all__ = [
    "SPEED_OF_LIGHT",
    "WaveguideLayout",
    "PinchConfig",
    "RadioParams",
    "SubConnected",
    "FullyConnected",
    "PsFullyConnected",
    "pa_coefficient",
    "pa_coefficients",
    "pa_coefficient_derivatives",
    "composite_channel",
    "channel_matrix",
    "effective_channel",
    "sinr",
]

SPEED_OF_LIGHT = 299792458.0
_OFFSET_TOL = 1e-12


def _vec3(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (3,) or not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be a finite 3-vector")
    return arr


@dataclass(frozen=True, eq=False)
class WaveguideLayout:
    """A straight dielectric waveguide fed at ``feed_point``.

    Parameters
    ----------
    feed_point : array_like, shape (3,)
        Position of the feed in meters.
    axis : array_like, shape (3,)
        Unit direction of the waveguide.
    length : float
        Length in meters.
    refractive_index : float
        Effective refractive index ``n_eff`` (>= 1).
    attenuation_db_per_m : float
        In-waveguide loss, dB/m (default 0).
    """

    feed_point: np.ndarray
    axis: np.ndarray
    length: float
    refractive_index: float = 1.4
    attenuation_db_per_m: float = 0.0

    def __post_init__(self):
        feed = _vec3(self.feed_point, "feed_point")
        axis = _vec3(self.axis, "axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ValidationError("axis must have unit norm")
        if not self.length > 0:
            raise ValidationError(f"length must be positive, got {self.length!r}")
        if not self.refractive_index >= 1:
            raise ValidationError(f"refractive_index must be >= 1, got {self.refractive_index!r}")
        if not self.attenuation_db_per_m >= 0:
            raise ValidationError("attenuation_db_per_m must be >= 0")
        feed.flags.writeable = False
        axis.flags.writeable = False
        object.__setattr__(self, "feed_point", feed)
        object.__setattr__(self, "axis", axis)

    def position(self, offset):
        """3D position(s) of the point(s) ``offset`` meters from the feed."""
        d = np.asarray(offset, dtype=float)
        return self.feed_point + d[..., None] * self.axis

    def foot_offset(self, point) -> float:
        """Offset of the waveguide point closest to ``point``."""
        t = float(np.dot(np.asarray(point, dtype=float) - self.feed_point, self.axis))
        return min(max(t, 0.0), self.length)

    def distance_to(self, point) -> float:
        return float(np.linalg.norm(self.position(self.foot_offset(point)) - point))

    def check_offsets(self, offsets):
        d = np.asarray(offsets, dtype=float)
        if d.size and (d.min() < -_OFFSET_TOL or d.max() > self.length + _OFFSET_TOL):
            raise ValidationError(f"offsets must lie in [0, {self.length}]")
        return d


@dataclass(frozen=True)
class PinchConfig:
    """Antenna offsets on one waveguide, strictly increasing from the feed."""

    offsets: tuple[float, ...]
    power_model: PowerModel = field(default_factory=PowerModel.equal)

    def __post_init__(self):
        offsets = tuple(float(d) for d in self.offsets)
        if any(b <= a for a, b in zip(offsets, offsets[1:])):
            raise ValidationError("offsets must be strictly increasing")
        object.__setattr__(self, "offsets", offsets)

    def fractions(self) -> np.ndarray:
        if not self.offsets:
            return np.zeros(0)
        return np.array(power_profile(self.power_model, len(self.offsets)).fractions)


@dataclass(frozen=True)
class RadioParams:
    wavelength: float
    noise_power: float = 1e-12
    reference_gain: float | None = None

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValidationError("wavelength must be positive")
        if not self.noise_power > 0:
            raise ValidationError("noise_power must be positive")
        if self.reference_gain is None:
            object.__setattr__(self, "reference_gain", self.wavelength / (4 * math.pi))
        elif not self.reference_gain > 0:
            raise ValidationError("reference_gain must be positive")

    @classmethod
    def from_frequency(cls, frequency_hz: float, noise_power: float = 1e-12) -> "RadioParams":
        return cls(SPEED_OF_LIGHT / frequency_hz, noise_power)

    @property
    def wavenumber(self) -> float:
        return 2 * math.pi / self.wavelength


# -- feed architectures --------------------------------------------------

@dataclass(frozen=True, eq=False)
class SubConnected:
    """Each waveguide has its own RF chain."""

    def feed_matrix(self, n_waveguides: int) -> np.ndarray:
        return np.eye(n_waveguides, dtype=complex)


@dataclass(frozen=True, eq=False)
class FullyConnected:
    """Every RF chain reaches every waveguide through fixed power splitters.

    ``splitter`` is ``n_waveguides x n_rf``; each column must have unit norm.
    When omitted, a single RF chain splits uniformly over the waveguides.
    """

    splitter: np.ndarray | None = None

    def __post_init__(self):
        if self.splitter is not None:
            s = np.asarray(self.splitter, dtype=complex)
            if s.ndim != 2 or not np.allclose(np.linalg.norm(s, axis=0), 1.0, atol=1e-9):
                raise ValidationError("splitter columns must have unit norm")
            object.__setattr__(self, "splitter", s)

    def feed_matrix(self, n_waveguides: int, n_rf: int = 1) -> np.ndarray:
        if self.splitter is None:
            return np.full((n_waveguides, n_rf), 1 / math.sqrt(n_waveguides), dtype=complex)
        if self.splitter.shape[0] != n_waveguides:
            raise ValidationError("splitter rows must match the number of waveguides")
        return self.splitter


@dataclass(frozen=True, eq=False)
class PsFullyConnected:
    """Fully connected feed with a unit-modulus phase shifter per (waveguide, RF chain)."""

    phases: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.phases, dtype=complex)
        if p.ndim != 2 or not np.allclose(np.abs(p), 1.0, atol=1e-9):
            raise ValidationError("phase shifter entries must have unit modulus")
        object.__setattr__(self, "phases", p)

    def feed_matrix(self, n_waveguides: int) -> np.ndarray:
        if self.phases.shape[0] != n_waveguides:
            raise ValidationError("phase matrix rows must match the number of waveguides")
        return self.phases / math.sqrt(n_waveguides)


# -- per-antenna coefficients --------------------------------------------

def _geometry(users, waveguide, offsets):
    users = np.atleast_2d(np.asarray(users, dtype=float))
    d = waveguide.check_offsets(offsets)
    diff = waveguide.position(d)[None, :, :] - users[:, None, :]
    r = np.linalg.norm(diff, axis=-1)
    if np.any(r == 0):
        raise SingularityError("user coincides with a pinching antenna")
    return users, d, diff, r


def pa_coefficients(users, waveguide: WaveguideLayout, offsets, radio: RadioParams) -> np.ndarray:
    """Vectorized ``g`` for every (user, offset) pair, shape ``(K, len(offsets))``."""
    _, d, _, r = _geometry(users, waveguide, offsets)
    amp = 10.0 ** (-waveguide.attenuation_db_per_m * d / 20.0)
    phase = radio.wavenumber * (r + waveguide.refractive_index * d)
    return amp * (radio.reference_gain / r) * np.exp(-1j * phase)


def pa_coefficient_derivatives(users, waveguide, offsets, radio):
    """``(g, dg/dd)`` for every (user, offset) pair."""
    _, d, diff, r = _geometry(users, waveguide, offsets)
    amp = 10.0 ** (-waveguide.attenuation_db_per_m * d / 20.0)
    phase = radio.wavenumber * (r + waveguide.refractive_index * d)
    g = amp * (radio.reference_gain / r) * np.exp(-1j * phase)
    dr = (diff @ waveguide.axis) / r
    log_amp = -waveguide.attenuation_db_per_m * math.log(10.0) / 20.0
    dg = g * (log_amp - dr / r - 1j * radio.wavenumber * (dr + waveguide.refractive_index))
    return g, dg


def pa_coefficient(user, waveguide: WaveguideLayout, offset: float, radio: RadioParams) -> complex:
    return complex(pa_coefficients(user, waveguide, [offset], radio)[0, 0])


def composite_channel(user, waveguide: WaveguideLayout, pinch: PinchConfig,
                      radio: RadioParams) -> complex:
    """Coherent sum of ``sqrt(P_n) * g_n`` over the antennas of one waveguide."""
    if not pinch.offsets:
        return 0j
    g = pa_coefficients(user, waveguide, pinch.offsets, radio)[0]
    return complex(np.sqrt(pinch.fractions()) @ g)


def channel_matrix(users, waveguides: Sequence[WaveguideLayout],
                   pinches: Sequence[PinchConfig], radio: RadioParams) -> np.ndarray:
    """Entry ``(k, w)`` is the composite channel of user ``k`` through waveguide ``w``."""
    if len(waveguides) != len(pinches):
        raise ValidationError("need exactly one PinchConfig per waveguide")
    users = np.asarray(users, dtype=float).reshape(-1, 3)
    H = np.zeros((len(users), len(waveguides)), dtype=complex)
    if len(users) == 0:
        return H
    for w, (wg, pinch) in enumerate(zip(waveguides, pinches)):
        if pinch.offsets:
            H[:, w] = pa_coefficients(users, wg, pinch.offsets, radio) @ np.sqrt(pinch.fractions())
    return H


def effective_channel(cm: np.ndarray, arch) -> np.ndarray:
    """Map the per-waveguide channel matrix to a per-RF-chain matrix."""
    cm = np.asarray(cm, dtype=complex)
    if isinstance(arch, SubConnected):
        return cm
    feed = arch.feed_matrix(cm.shape[1])
    if feed.shape[0] != cm.shape[1]:
        raise ValidationError("feed matrix does not match the number of waveguides")
    return cm @ feed


def sinr(eff: np.ndarray, precoder: np.ndarray, noise_power: float) -> np.ndarray:
    """Per-user SINR for precoder columns ``w_j`` (one column per user)."""
    eff = np.atleast_2d(np.asarray(eff, dtype=complex))
    W = np.asarray(precoder, dtype=complex).reshape(eff.shape[1], -1)
    if W.shape[1] != eff.shape[0]:
        raise ValidationError("precoder needs one column per user")
    A = np.abs(eff.conj() @ W) ** 2
    signal = np.diag(A)
    return signal / (A.sum(axis=1) - signal + noise_power)
