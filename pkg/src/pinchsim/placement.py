"""
Pinching-antenna placement on a single waveguide serving a single user.

Two activation modes are supported. Continuous activation slides antennas
anywhere on the waveguide (multi-start projected gradient ascent). Discrete
activation picks ``N`` of the pre-installed candidate points (exhaustive for
small instances, greedy plus pairwise-swap local search otherwise).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import isotonic_regression, minimize

from .channel import RadioParams, WaveguideLayout, pa_coefficient_derivatives, pa_coefficients
from .coupling import PowerModel, power_profile
from .errors import ApertureError, ValidationError

__all__ = [
    "CandidateGrid",
    "PlacementResult",
    "amplitudes",
    "insertion_partials",
    "received_power",
    "power_gradient",
    "phase_align",
    "centered_offsets",
    "project_offsets",
    "optimize_discrete",
    "optimize_continuous",
    "array_gain_sweep",
]


@dataclass(frozen=True)
class CandidateGrid:
    """Pre-installed antenna positions every ``spacing`` meters from the feed."""

    length: float
    spacing: float = 0.5

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValidationError("candidate spacing must be positive")
        if not self.length > 0:
            raise ValidationError("length must be positive")

    @classmethod
    def for_waveguide(cls, waveguide: WaveguideLayout, spacing: float = 0.5) -> "CandidateGrid":
        return cls(waveguide.length, spacing)

    @property
    def offsets(self) -> np.ndarray:
        n = int(math.floor(self.length / self.spacing + 1e-9)) + 1
        return self.spacing * np.arange(n)


@dataclass(frozen=True)
class PlacementResult:
    offsets: tuple[float, ...]
    received_power: float
    iterations: int
    mode: str


def amplitudes(power_model: PowerModel, n: int) -> np.ndarray:
    """``sqrt(P_n)`` weights in waveguide order."""
    if n == 0:
        return np.zeros(0)
    return np.sqrt(power_profile(power_model, n).fractions)


def insertion_partials(g_fixed: np.ndarray, amps: np.ndarray) -> np.ndarray:
    """Channel contributed by fixed antennas for every rank a moving antenna can take.

    ``g_fixed`` holds the coefficients of the ``N - 1`` fixed antennas (last
    axis, waveguide order) and ``amps`` the ``N`` rank weights. Entry ``p`` of
    the last output axis is the fixed-antenna sum when the moving antenna sits
    at rank ``p``, so the antennas before it keep their weights and the ones
    after it shift down by one rank.
    """
    g_fixed = np.asarray(g_fixed)
    m = g_fixed.shape[-1]
    zero = np.zeros(g_fixed.shape[:-1] + (1,), dtype=complex)
    before = np.concatenate([zero, np.cumsum(g_fixed * amps[:m], axis=-1)], axis=-1)
    shifted = g_fixed * amps[1:m + 1]
    after = np.concatenate([np.cumsum(shifted[..., ::-1], axis=-1)[..., ::-1], zero], axis=-1)
    return before + after


def received_power(user, waveguide: WaveguideLayout, offsets, power_model: PowerModel,
                   radio: RadioParams) -> float:
    """``|h|^2`` for unit waveguide input power."""
    d = np.sort(np.asarray(offsets, dtype=float))
    if d.size == 0:
        return 0.0
    g = pa_coefficients(user, waveguide, d, radio)[0]
    return float(abs(amplitudes(power_model, d.size) @ g) ** 2)


def power_gradient(user, waveguide: WaveguideLayout, offsets, power_model: PowerModel,
                   radio: RadioParams) -> np.ndarray:
    """Analytic derivative of :func:`received_power` w.r.t. each offset.

    Offsets are taken in the given order, which must be the waveguide order;
    the power weights stay attached to the ranks.
    """
    return _power_and_gradient(user, waveguide, offsets, power_model, radio)[1]


def _power_and_gradient(user, waveguide, offsets, power_model, radio):
    d = np.asarray(offsets, dtype=float)
    if d.size == 0:
        return 0.0, np.zeros(0)
    g, dg = pa_coefficient_derivatives(user, waveguide, d, radio)
    a = amplitudes(power_model, d.size)
    h = a @ g[0]
    return float(abs(h) ** 2), 2.0 * np.real(np.conj(h) * a * dg[0])


def _phase(user, waveguide, offsets, radio):
    g, dg = pa_coefficient_derivatives(user, waveguide, offsets, radio)
    # -arg(g) = k (r + n_eff d); its derivative is -Im(dg / g)
    return -np.angle(g[0]), -np.imag(dg[0] / g[0])


def phase_align(user, waveguide: WaveguideLayout, offsets, radio: RadioParams,
                target_phase: float | None = None) -> np.ndarray:
    """Nudge each offset (by under half a phase period) so all arrivals share one phase.

    The target defaults to the arrival phase of the antenna closest to the
    user's foot point on the waveguide.
    """
    d = np.array(offsets, dtype=float)
    if d.size == 0:
        return d
    if target_phase is None:
        foot = waveguide.foot_offset(user)
        target_phase = _phase(user, waveguide, [d[np.argmin(abs(d - foot))]], radio)[0][0]
    for _ in range(8):
        phi, slope = _phase(user, waveguide, d, radio)
        delta = np.angle(np.exp(1j * (target_phase - phi)))
        if np.max(abs(delta)) < 1e-13:
            break
        step = delta / slope
        moved = d + step
        period = 2 * np.pi / slope
        moved = np.where(moved < 0, moved + period, moved)
        moved = np.where(moved > waveguide.length, moved - period, moved)
        d = np.clip(moved, 0.0, waveguide.length)
    return d


def centered_offsets(user, waveguide: WaveguideLayout, n: int, spacing: float) -> np.ndarray:
    """``n`` equally spaced offsets centred on the user's foot point."""
    foot = waveguide.foot_offset(user)
    d = foot + spacing * (np.arange(n) - (n - 1) / 2)
    if d[0] < 0 or d[-1] > waveguide.length:
        raise ApertureError(
            f"{n} antennas at {spacing} m spacing ({d[-1] - d[0]:.3f} m aperture) "
            f"around offset {foot:.3f} m do not fit on a {waveguide.length} m waveguide"
        )
    return d


def project_offsets(d, length: float, separation: float) -> np.ndarray:
    """Euclidean projection onto sorted offsets in ``[0, length]`` with a minimum gap."""
    d = np.asarray(d, dtype=float)
    n = d.size
    shift = separation * np.arange(n)
    top = length - separation * (n - 1)
    if top < 0:
        raise ApertureError(f"{n} antennas with {separation} m separation exceed {length} m")
    e = isotonic_regression(d - shift).x
    return np.clip(e, 0.0, top) + shift


# -- discrete activation -------------------------------------------------

def _best_combination(g, amps, n, chunk=200_000):
    best_val, best = -1.0, None
    combos = itertools.combinations(range(g.size), n)
    while True:
        block = np.fromiter(itertools.chain.from_iterable(itertools.islice(combos, chunk)),
                            dtype=np.intp)
        if block.size == 0:
            break
        block = block.reshape(-1, n)
        vals = np.abs(g[block] @ amps) ** 2
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = float(vals[i]), block[i]
    return best, best_val


def _set_power(g, idx, amps):
    return float(abs(amps @ g[np.sort(idx)]) ** 2)


def _swap_search(g, chosen, amps):
    """Best-improvement pairwise swaps until none improves."""
    chosen = np.sort(np.asarray(chosen))
    current = _set_power(g, chosen, amps)
    rounds = 0
    all_idx = np.arange(g.size)
    while True:
        rounds += 1
        free = np.setdiff1d(all_idx, chosen)
        if free.size == 0:
            break
        best = (current, None, None)
        for i in range(chosen.size):
            fixed = np.delete(chosen, i)
            partial = insertion_partials(g[fixed], amps)
            rank = np.searchsorted(fixed, free)
            vals = np.abs(partial[rank] + amps[rank] * g[free]) ** 2
            j = int(np.argmax(vals))
            if vals[j] > best[0] * (1 + 1e-13):
                best = (float(vals[j]), i, free[j])
        if best[1] is None:
            break
        chosen = np.sort(np.append(np.delete(chosen, best[1]), best[2]))
        current = best[0]
    return chosen, current, rounds


def _greedy(g, n, power_model, first=None):
    chosen = np.zeros(0, dtype=np.intp) if first is None else np.array([first], dtype=np.intp)
    for size in range(chosen.size + 1, n + 1):
        amps = amplitudes(power_model, size)
        free = np.setdiff1d(np.arange(g.size), chosen)
        partial = insertion_partials(g[chosen], amps)
        rank = np.searchsorted(chosen, free)
        vals = np.abs(partial[rank] + amps[rank] * g[free]) ** 2
        chosen = np.sort(np.append(chosen, free[int(np.argmax(vals))]))
    return chosen


def _local_search(g, n, power_model, n_starts):
    """Greedy + swap search, restarted from the ``n_starts`` strongest single candidates."""
    amps = amplitudes(power_model, n)
    firsts = np.argsort(-np.abs(g), kind="stable")[:n_starts]
    best = None
    rounds = 0
    for first in firsts:
        idx, val, r = _swap_search(g, _greedy(g, n, power_model, first), amps)
        rounds += r
        if best is None or val > best[1] or (val == best[1] and tuple(idx) < tuple(best[0])):
            best = (idx, val)
    return best[0], best[1], rounds


def optimize_discrete(user, waveguide: WaveguideLayout, grid: CandidateGrid, n_antennas: int,
                      power_model: PowerModel, radio: RadioParams, method: str = "auto",
                      exhaustive_limit: int = 10**6, n_starts: int = 8) -> PlacementResult:
    """Activate ``n_antennas`` of the grid's candidates to maximize received power.

    ``method="auto"`` enumerates every subset when there are at most
    ``exhaustive_limit`` of them and otherwise runs greedy selection followed
    by pairwise-swap local search, restarted from the ``n_starts`` strongest
    single candidates. Ties go to the lexicographically lowest offsets.
    """
    cand = grid.offsets
    cand = cand[cand <= waveguide.length + 1e-12]
    if not 1 <= n_antennas <= cand.size:
        raise ValidationError(
            f"n_antennas={n_antennas} must be between 1 and the {cand.size} candidates"
        )
    if method not in ("auto", "exhaustive", "local"):
        raise ValidationError(f"unknown method {method!r}")
    g = pa_coefficients(user, waveguide, np.minimum(cand, waveguide.length), radio)[0]
    amps = amplitudes(power_model, n_antennas)
    if method == "exhaustive" or (method == "auto"
                                  and math.comb(cand.size, n_antennas) <= exhaustive_limit):
        idx, val = _best_combination(g, amps, n_antennas)
        iterations = math.comb(cand.size, n_antennas)
    else:
        idx, val, iterations = _local_search(g, n_antennas, power_model, n_starts)
    return PlacementResult(tuple(float(x) for x in cand[idx]), val, iterations, "discrete")


# -- continuous activation -----------------------------------------------

def _ascend(objective, d0, length, separation, max_step, max_iter=50):
    """Projected gradient ascent with backtracking (Armijo) line search."""
    d = project_offsets(d0, length, separation)
    f, grad = objective(d)
    step = max_step / 4
    it = 0
    for it in range(1, max_iter + 1):
        scale = np.max(np.abs(grad))
        if scale == 0:
            break
        direction = grad / scale
        accepted = False
        while step > 1e-12:
            trial = project_offsets(d + step * direction, length, separation)
            f_trial, g_trial = objective(trial)
            if f_trial > f and f_trial >= f + 1e-4 * grad @ (trial - d):
                accepted = True
                break
            step /= 2
        if not accepted:
            break
        gain = f_trial - f
        d, f, grad = trial, f_trial, g_trial
        step = min(2 * step, max_step)
        if gain <= 1e-15 * abs(f):
            break
    return d, f, it


def optimize_continuous(user, waveguide: WaveguideLayout, n_antennas: int,
                        power_model: PowerModel, radio: RadioParams, restarts: int = 4,
                        seed: int = 0, grid_spacing: float = 0.5) -> PlacementResult:
    """Slide ``n_antennas`` anywhere on the waveguide to maximize received power.

    Starts are the best discrete placement on a ``grid_spacing`` grid, a
    phase-aligned cluster at the user's foot point and ``restarts`` uniform
    jitters of the discrete start. Antennas stay at least half a wavelength
    apart. The result never falls below the discrete start.
    """
    if n_antennas < 1:
        raise ValidationError("n_antennas must be >= 1")
    separation = radio.wavelength / 2
    rng = np.random.default_rng(seed)
    ref = received_power(user, waveguide, [waveguide.foot_offset(user)], PowerModel.equal(), radio)

    def objective(d):
        # rank weights follow array order; accepted placements are sorted
        f, grad = _power_and_gradient(user, waveguide, d, power_model, radio)
        return f / ref, grad / ref

    starts = []
    grid = CandidateGrid.for_waveguide(waveguide, grid_spacing)
    if n_antennas <= grid.offsets.size:
        discrete = optimize_discrete(user, waveguide, grid, n_antennas, power_model, radio)
        starts.append(np.array(discrete.offsets))
    try:
        cluster = centered_offsets(user, waveguide, n_antennas, 2 * radio.wavelength)
        starts.append(phase_align(user, waveguide, cluster, radio))
    except ApertureError:
        pass
    if not starts:
        starts.append(np.linspace(0, waveguide.length, n_antennas))
    base = starts[0]
    for _ in range(restarts):
        starts.append(base + rng.uniform(-grid_spacing / 2, grid_spacing / 2, size=n_antennas))

    results = []
    total_iter = 0
    for d0 in starts:
        d, f, it = _ascend(objective, d0, waveguide.length, separation, radio.wavelength / 2)
        total_iter += it
        d, f = _polish(objective, d, f, waveguide.length, separation)
        results.append((f, tuple(float(x) for x in d)))
    # seeded starts are feasible as given; keep the discrete start itself as a floor
    if n_antennas <= grid.offsets.size:
        results.append((objective(np.array(discrete.offsets))[0], discrete.offsets))
    f, offsets = min(results, key=lambda item: (-item[0], item[1]))
    return PlacementResult(offsets, received_power(user, waveguide, offsets, power_model, radio),
                           total_iter, "continuous")


def _polish(objective, d, f, length, separation):
    """Quasi-Newton refinement inside the box; kept only if it stays feasible and improves."""
    res = minimize(lambda x: tuple(-v for v in objective(x)), d, jac=True, method="L-BFGS-B",
                   bounds=[(0.0, length)] * d.size,
                   options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 200})
    x = res.x
    if np.all(np.diff(x) >= separation - 1e-12) and -res.fun > f:
        return x, -res.fun
    return d, f


def array_gain_sweep(user, waveguide: WaveguideLayout, n_list, spacing: float,
                     power_model: PowerModel, radio: RadioParams,
                     aligned: bool = True) -> list[tuple[int, float]]:
    """Received power of ``N`` equally spaced antennas relative to one antenna at the foot point.

    The antennas are centred on the user's foot point; with ``aligned`` each
    one is nudged so that all arrivals add in phase.
    """
    ref = received_power(user, waveguide, [waveguide.foot_offset(user)], power_model, radio)
    out = []
    for n in n_list:
        d = centered_offsets(user, waveguide, int(n), spacing)
        if aligned:
            d = phase_align(user, waveguide, d, radio)
        out.append((int(n), received_power(user, waveguide, d, power_model, radio) / ref))
    return out
