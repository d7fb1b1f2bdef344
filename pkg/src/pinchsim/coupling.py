"""
Coupled-mode power exchange between a waveguide and pinched dielectrics.

A pinching antenna behaves like an open-ended directional coupler: over a
contact length ``L`` with coupling coefficient ``kappa`` it pulls the fraction
``F * sin(kappa * L)**2`` of the guided power into the pinched dielectric,
where ``F <= 1`` is the maximum coupling efficiency. Chaining couplers along a
waveguide produces the per-antenna power profile used by the channel model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .errors import UnreachableFractionError, ValidationError

__all__ = [
    "CouplerSpec",
    "PowerModel",
    "PowerProfile",
    "coupled_power",
    "length_for_fraction",
    "power_profile",
    "cascade",
    "equal_power_coupler_chain",
    "proportional_coupler_chain",
]


def _check_coefficients(kappa, max_efficiency):
    if not kappa > 0 or not math.isfinite(kappa):
        raise ValidationError(f"coupling_coefficient must be positive, got {kappa!r}")
    if not 0 < max_efficiency <= 1:
        raise ValidationError(f"max_efficiency must lie in (0, 1], got {max_efficiency!r}")


@dataclass(frozen=True)
class CouplerSpec:
    """One pinching antenna seen as a coupler.

    Parameters
    ----------
    coupling_length : float
        Contact length with the waveguide, in meters.
    coupling_coefficient : float
        Coupling coefficient in rad/m.
    max_efficiency : float
        Peak extractable fraction of the guided power, in (0, 1].
    """

    coupling_length: float
    coupling_coefficient: float
    max_efficiency: float = 1.0

    def __post_init__(self):
        if not self.coupling_length >= 0:
            raise ValidationError(f"coupling_length must be >= 0, got {self.coupling_length!r}")
        _check_coefficients(self.coupling_coefficient, self.max_efficiency)


@dataclass(frozen=True)
class PowerModel:
    """Radiated-power profile along a waveguide.

    ``kind`` is ``"equal"`` (every antenna radiates the same power) or
    ``"proportional"`` (every antenna radiates the fraction ``alpha`` of the
    power still left in the waveguide).
    """

    kind: str = "equal"
    alpha: float | None = None

    def __post_init__(self):
        if self.kind == "equal":
            if self.alpha is not None:
                raise ValidationError("equal power model takes no alpha")
        elif self.kind == "proportional":
            if self.alpha is None or not 0 < self.alpha <= 1:
                raise ValidationError(f"proportional alpha must lie in (0, 1], got {self.alpha!r}")
        else:
            raise ValidationError(f"unknown power model {self.kind!r}")

    @classmethod
    def equal(cls) -> "PowerModel":
        return cls("equal")

    @classmethod
    def proportional(cls, alpha: float) -> "PowerModel":
        return cls("proportional", float(alpha))

    @classmethod
    def parse(cls, text: str) -> "PowerModel":
        """Parse ``"equal"`` or ``"proportional:<alpha>"``."""
        kind, _, alpha = text.strip().partition(":")
        if kind == "equal" and not alpha:
            return cls.equal()
        if kind == "proportional" and alpha:
            try:
                return cls.proportional(float(alpha))
            except ValueError:
                pass
        raise ValidationError(f"cannot parse power model {text!r}")

    def label(self) -> str:
        return "equal" if self.kind == "equal" else f"proportional:{self.alpha:g}"


@dataclass(frozen=True)
class PowerProfile:
    """Per-antenna radiated fractions of unit input power plus the leftover."""

    fractions: tuple[float, ...]
    residual: float

    def __post_init__(self):
        if any(f < 0 for f in self.fractions) or self.residual < -1e-15:
            raise ValidationError("power fractions must be nonnegative")
        if abs(math.fsum(self.fractions) + self.residual - 1.0) > 1e-12:
            raise ValidationError("power profile does not conserve unit power")


def coupled_power(spec: CouplerSpec) -> tuple[float, float]:
    """Return ``(p_guide, p_pinch)`` for unit guided input power."""
    s = math.sin(spec.coupling_coefficient * spec.coupling_length)
    p_pinch = spec.max_efficiency * s * s
    return 1.0 - p_pinch, p_pinch


def length_for_fraction(target: float, kappa: float, max_efficiency: float = 1.0) -> float:
    """Shortest coupling length that extracts ``target`` of the guided power.

    The coupling law is periodic in the length, so the branch in
    ``[0, pi / (2 kappa)]`` is returned.
    """
    _check_coefficients(kappa, max_efficiency)
    if target < 0:
        raise ValidationError(f"target fraction must be >= 0, got {target!r}")
    if target > max_efficiency:
        raise UnreachableFractionError(
            f"fraction {target!r} exceeds maximum coupling efficiency {max_efficiency!r}"
        )
    return math.asin(math.sqrt(target / max_efficiency)) / kappa


def power_profile(model: PowerModel, n_antennas: int) -> PowerProfile:
    if n_antennas < 1:
        raise ValidationError(f"n_antennas must be >= 1, got {n_antennas!r}")
    if model.kind == "equal":
        return PowerProfile((1.0 / n_antennas,) * n_antennas, 0.0)
    a = model.alpha
    fractions = tuple(a * (1.0 - a) ** n for n in range(n_antennas))
    return PowerProfile(fractions, (1.0 - a) ** n_antennas)


def cascade(chain: Sequence[CouplerSpec]) -> PowerProfile:
    """Push unit power through couplers in order and record what each radiates."""
    remaining = 1.0
    fractions = []
    for spec in chain:
        p_guide, p_pinch = coupled_power(spec)
        fractions.append(remaining * p_pinch)
        remaining *= p_guide
    return PowerProfile(tuple(fractions), remaining)


def equal_power_coupler_chain(n_antennas: int, kappa: float,
                              max_efficiency: float = 1.0) -> list[CouplerSpec]:
    """Coupler lengths that split unit power equally over ``n_antennas``.

    Stage ``k`` (1-based) must extract ``1 / (N - k + 1)`` of what reaches it,
    so the last stage drains the waveguide and needs ``F = 1``.

    Raises
    ------
    UnreachableFractionError
        For the first stage whose extraction ratio exceeds ``max_efficiency``;
        the stage index (0-based) is stored on the exception.
    """
    if n_antennas < 1:
        raise ValidationError(f"n_antennas must be >= 1, got {n_antennas!r}")
    chain = []
    for k in range(n_antennas):
        ratio = 1.0 / (n_antennas - k)
        try:
            length = length_for_fraction(ratio, kappa, max_efficiency)
        except UnreachableFractionError as exc:
            raise UnreachableFractionError(
                f"stage {k} needs extraction ratio {ratio:.6g} > F={max_efficiency:g}",
                stage=k,
            ) from exc
        chain.append(CouplerSpec(length, kappa, max_efficiency))
    return chain


def proportional_coupler_chain(n_antennas: int, alpha: float, kappa: float,
                               max_efficiency: float = 1.0) -> list[CouplerSpec]:
    """Identical couplers that each extract ``alpha`` of the remaining power."""
    if n_antennas < 1:
        raise ValidationError(f"n_antennas must be >= 1, got {n_antennas!r}")
    length = length_for_fraction(alpha, kappa, max_efficiency)
    return [CouplerSpec(length, kappa, max_efficiency)] * n_antennas
