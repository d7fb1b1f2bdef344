"""
Joint transmit and pinching beamforming for multi-waveguide downlink.

The minimum-power problem couples the digital precoder with the antenna
offsets on every waveguide. It is attacked by block-coordinate descent:

1. with placements fixed, :func:`~pinchsim.precoding.min_power_precoder`
   returns the optimal precoder on the effective channel;
2. with the precoder fixed, each antenna in turn is moved by a 1D search to
   the offset that maximizes the smallest ``SINR_k / gamma_k`` margin, and
   the precoder is re-solved. A move is kept only if the re-solved power
   drops, so total power never increases across rounds.

Small discrete instances are solved by enumerating every placement.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .baselines import baseline_conventional_mimo, baseline_massive_mimo_hybrid
from .channel import (
    PinchConfig,
    RadioParams,
    SubConnected,
    WaveguideLayout,
    channel_matrix,
    effective_channel,
    pa_coefficients,
)
from .coupling import PowerModel
from .errors import ValidationError
from .placement import (
    CandidateGrid,
    amplitudes,
    insertion_partials,
    optimize_continuous,
    optimize_discrete,
)
from .precoding import PrecoderSolution, min_power_precoder

__all__ = [
    "SYSTEMS",
    "JointProblem",
    "BeamformingSolution",
    "assign_waveguides",
    "joint_min_power",
    "power_vs_sinr_sweep",
]

SYSTEMS = ("pass_continuous", "pass_discrete", "conventional", "massive")


@dataclass(frozen=True, eq=False)
class JointProblem:
    """Multi-user downlink served by pinching antennas on several waveguides.

    ``activation`` is ``"continuous"`` or ``"discrete"``; discrete activation
    uses candidates every ``candidate_spacing`` meters.
    """

    users: np.ndarray
    waveguides: tuple[WaveguideLayout, ...]
    n_pa_per_waveguide: int
    sinr_targets: np.ndarray
    radio: RadioParams
    power_model: PowerModel = field(default_factory=lambda: PowerModel.proportional(0.9))
    activation: str = "continuous"
    candidate_spacing: float = 0.5
    architecture: object = field(default_factory=SubConnected)

    def __post_init__(self):
        users = np.asarray(self.users, dtype=float).reshape(-1, 3)
        gamma = np.broadcast_to(np.asarray(self.sinr_targets, dtype=float), (len(users),)).copy()
        if len(users) == 0 or len(self.waveguides) == 0:
            raise ValidationError("need at least one user and one waveguide")
        if np.any(gamma <= 0):
            raise ValidationError("SINR targets must be positive")
        if self.n_pa_per_waveguide < 1:
            raise ValidationError("n_pa_per_waveguide must be >= 1")
        if self.activation not in ("continuous", "discrete"):
            raise ValidationError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "users", users)
        object.__setattr__(self, "sinr_targets", gamma)
        object.__setattr__(self, "waveguides", tuple(self.waveguides))

    @property
    def separation(self) -> float:
        if self.activation == "discrete":
            return self.candidate_spacing
        return self.radio.wavelength / 2


@dataclass(frozen=True, eq=False)
class BeamformingSolution:
    feasible: bool
    precoder: np.ndarray | None
    placements: tuple[PinchConfig, ...]
    total_power: float
    achieved_sinr: np.ndarray | None
    iterations: int
    power_history: tuple[float, ...] = ()
    best_margin: float = float("nan")

    def summary(self) -> tuple:
        return (self.feasible, self.total_power, self.iterations,
                tuple(p.offsets for p in self.placements))


def assign_waveguides(users, waveguides) -> list[int]:
    """Nearest-first one-to-one user for each waveguide (reused round-robin if users run out)."""
    dist = np.array([[wg.distance_to(u) for wg in waveguides] for u in users])
    owner = [-1] * len(waveguides)
    free_users = set(range(len(users)))
    while -1 in owner:
        if not free_users:
            free_users = set(range(len(users)))
        best = None
        for k in sorted(free_users):
            for w in range(len(waveguides)):
                if owner[w] == -1 and (best is None or dist[k, w] < best[0]):
                    best = (dist[k, w], k, w)
        owner[best[2]] = best[1]
        free_users.discard(best[1])
    return owner


class _Evaluator:
    """Channel bookkeeping for one problem; offsets are per-waveguide sorted arrays."""

    def __init__(self, problem: JointProblem):
        self.p = problem
        n_wg = len(problem.waveguides)
        self.feed = problem.architecture.feed_matrix(n_wg)
        self.amps = amplitudes(problem.power_model, problem.n_pa_per_waveguide)
        self.noise = problem.radio.noise_power
        self._grids = {}

    def grid(self, w):
        """Candidate offsets and their coefficients for waveguide ``w`` (cached)."""
        if w not in self._grids:
            wg = self.p.waveguides[w]
            if self.p.activation == "discrete":
                cand = CandidateGrid.for_waveguide(wg, self.p.candidate_spacing).offsets
            else:
                step = self.p.radio.wavelength / 8
                cand = np.append(np.arange(0.0, wg.length, step), wg.length)
            self._grids[w] = (cand, pa_coefficients(self.p.users, wg, cand, self.p.radio))
        return self._grids[w]

    def channels(self, offsets):
        pinches = [PinchConfig(tuple(d), self.p.power_model) for d in offsets]
        return channel_matrix(self.p.users, self.p.waveguides, pinches, self.p.radio)

    def solve(self, offsets) -> PrecoderSolution:
        eff = effective_channel(self.channels(offsets), self.p.architecture)
        return min_power_precoder(eff, self.p.sinr_targets, self.noise)

    def surrogate_precoder(self, offsets):
        """High-power MMSE-direction precoder used to rank placements while infeasible."""
        eff = effective_channel(self.channels(offsets), self.p.architecture) / math.sqrt(self.noise)
        gains = np.sum(np.abs(eff) ** 2, axis=1)
        power = 1e3 * np.max(self.p.sinr_targets) / max(np.min(gains), 1e-300)
        Hc = eff.T
        T = np.eye(eff.shape[1]) + power * Hc @ Hc.conj().T
        X = np.linalg.solve(T, Hc)
        norms = np.linalg.norm(X, axis=0)
        return X / np.where(norms > 0, norms, 1.0) * math.sqrt(power * self.noise)

    def margins(self, w, others, cand, g_cand, precoder, offsets):
        """Smallest SINR margin for each candidate offset of one moving antenna on waveguide ``w``."""
        users = self.p.users
        wg = self.p.waveguides[w]
        H = self.channels(offsets)
        base = H @ self.feed - np.outer(H[:, w], self.feed[w])
        B = base.conj() @ precoder  # (K, K)
        c = self.feed[w].conj() @ precoder  # (K,)
        g_fixed = pa_coefficients(users, wg, others, self.p.radio) if len(others) else \
            np.zeros((len(users), 0), dtype=complex)
        partial = insertion_partials(g_fixed, self.amps)
        rank = np.searchsorted(others, cand)
        hw = partial[:, rank] + self.amps[rank] * g_cand  # (K, G)
        A = B[:, :, None] + hw.conj()[:, None, :] * c[None, :, None]  # (K, K, G)
        P = np.abs(A) ** 2
        signal = np.einsum("kkg->kg", P)
        interference = P.sum(axis=1) - signal
        ratio = signal / (interference + self.noise) / self.p.sinr_targets[:, None]
        return ratio.min(axis=0)


def _allowed(cand, others, separation, tol=1e-9):
    if len(others) == 0:
        return np.ones(cand.size, dtype=bool)
    gap = np.min(np.abs(cand[:, None] - np.asarray(others)[None, :]), axis=1)
    return gap >= separation - tol


def _best_offset(ev: _Evaluator, w, i, offsets, precoder):
    """1D search for antenna ``i`` on waveguide ``w``; returns ``(offset, margin)``."""
    p = ev.p
    current = offsets[w][i]
    others = np.delete(offsets[w], i)
    cand, g_cand = ev.grid(w)
    mask = _allowed(cand, others, p.separation)
    cand, g_cand = cand[mask], g_cand[:, mask]
    cur_margin = ev.margins(w, others, np.array([current]),
                            pa_coefficients(p.users, p.waveguides[w], [current], p.radio),
                            precoder, offsets)[0]
    if cand.size == 0:
        return current, cur_margin
    m = ev.margins(w, others, cand, g_cand, precoder, offsets)
    j = int(np.argmax(m))
    best_d, best_m = float(cand[j]), float(m[j])

    if p.activation == "continuous" and 0 < j < cand.size - 1:
        wg = p.waveguides[w]
        lo, hi = float(cand[j - 1]), float(cand[j + 1])

        def neg_margin(x):
            if not _allowed(np.array([x]), others, p.separation)[0] or not 0 <= x <= wg.length:
                return 0.0
            g = pa_coefficients(p.users, wg, [x], p.radio)
            return -ev.margins(w, others, np.array([x]), g, precoder, offsets)[0]

        try:
            res = minimize_scalar(neg_margin, bracket=(lo, best_d, hi), method="golden",
                                  options={"xtol": 1e-10})
            if lo <= res.x <= hi and -res.fun > best_m:
                best_d, best_m = float(res.x), float(-res.fun)
        except ValueError:
            pass
    if best_m <= cur_margin * (1 + 1e-12):
        return current, cur_margin
    return best_d, best_m


def _initial_offsets(problem: JointProblem, seed: int):
    owner = assign_waveguides(problem.users, problem.waveguides)
    offsets = []
    for w, wg in enumerate(problem.waveguides):
        user = problem.users[owner[w]]
        if problem.activation == "discrete":
            grid = CandidateGrid.for_waveguide(wg, problem.candidate_spacing)
            res = optimize_discrete(user, wg, grid, problem.n_pa_per_waveguide,
                                    problem.power_model, problem.radio)
        else:
            res = optimize_continuous(user, wg, problem.n_pa_per_waveguide, problem.power_model,
                                      problem.radio, restarts=2, seed=seed + w,
                                      grid_spacing=problem.candidate_spacing)
        offsets.append(np.array(res.offsets))
    return offsets


def _finish(ev, offsets, sol, rounds, history, margin):
    placements = tuple(PinchConfig(tuple(float(x) for x in d), ev.p.power_model) for d in offsets)
    if not sol.feasible:
        return BeamformingSolution(False, None, placements, float("inf"), None, rounds,
                                   tuple(history), margin)
    return BeamformingSolution(True, sol.precoder, placements, sol.total_power,
                               sol.achieved_sinr, rounds, tuple(history), 1.0)


def _enumerate(ev: _Evaluator):
    p = ev.p
    per_wg = [list(itertools.combinations(range(ev.grid(w)[0].size), p.n_pa_per_waveguide))
              for w in range(len(p.waveguides))]
    best = None
    count = 0
    for combo in itertools.product(*per_wg):
        offsets = [ev.grid(w)[0][list(idx)] for w, idx in enumerate(combo)]
        sol = ev.solve(offsets)
        count += 1
        if sol.feasible and (best is None or sol.total_power < best[0].total_power):
            best = (sol, offsets)
    if best is None:
        offsets = [ev.grid(w)[0][list(per_wg[w][0])] for w in range(len(p.waveguides))]
        return _finish(ev, offsets, ev.solve(offsets), count, [float("inf")], float("nan"))
    return _finish(ev, best[1], best[0], count, [best[0].total_power], 1.0)


def _descend(ev: _Evaluator, offsets, max_rounds, tol):
    p = ev.p
    offsets = [np.array(d, dtype=float) for d in offsets]
    sol = ev.solve(offsets)
    history = [sol.total_power]
    margin = float("nan")
    rounds = 0
    for rounds in range(1, max_rounds + 1):
        before = history[-1]
        for w in range(len(p.waveguides)):
            for i in range(p.n_pa_per_waveguide):
                precoder = sol.precoder if sol.feasible else ev.surrogate_precoder(offsets)
                d, m = _best_offset(ev, w, i, offsets, precoder)
                if d == offsets[w][i]:
                    continue
                trial = [x.copy() for x in offsets]
                trial[w] = np.sort(np.append(np.delete(trial[w], i), d))
                trial_sol = ev.solve(trial)
                if sol.feasible:
                    if trial_sol.feasible and trial_sol.total_power < sol.total_power:
                        offsets, sol = trial, trial_sol
                elif trial_sol.feasible or not m <= margin:
                    offsets, sol, margin = trial, trial_sol, m
        history.append(sol.total_power)
        if sol.feasible and math.isfinite(before) and before - sol.total_power <= tol * before:
            break
        if not sol.feasible and history[-1] == before and rounds > 1:
            break
    return _finish(ev, offsets, sol, rounds, history, margin)


def joint_min_power(problem: JointProblem, seed: int = 0, initial_placements=None,
                    max_rounds: int = 100, tol: float = 1e-6,
                    exhaustive_limit: int = 4096) -> BeamformingSolution:
    """Minimize total transmit power subject to every user's SINR target.

    Parameters
    ----------
    problem : JointProblem
    seed : int
        Seeds the jittered restarts of the single-user initial placement.
    initial_placements : sequence of PinchConfig or offset arrays, optional
        Extra starting point for the descent (e.g. a discrete solution when
        solving the continuous problem); the better of the two runs is kept.
    exhaustive_limit : int
        Discrete instances with at most this many joint placements are
        enumerated exactly instead.

    Returns
    -------
    BeamformingSolution
        With ``feasible=False`` and the best margin found when no visited
        placement admits the targets.
    """
    ev = _Evaluator(problem)
    if problem.activation == "discrete":
        total = 1
        for w in range(len(problem.waveguides)):
            total *= math.comb(ev.grid(w)[0].size, problem.n_pa_per_waveguide)
        if total <= exhaustive_limit:
            return _enumerate(ev)

    starts = []
    if initial_placements is not None:
        starts.append([np.asarray(getattr(pc, "offsets", pc), dtype=float)
                       for pc in initial_placements])
    starts.append(_initial_offsets(problem, seed))
    runs = [_descend(ev, s, max_rounds, tol) for s in starts]
    return min(runs, key=lambda s: (not s.feasible, s.total_power,
                                    -np.nan_to_num(s.best_margin, nan=-np.inf)))


def power_vs_sinr_sweep(template: JointProblem, gamma_db: Sequence[float],
                        systems: Sequence[str] = SYSTEMS, bs_position=None,
                        antennas_per_rf: int = 16, array_axis=(0.0, 1.0, 0.0),
                        seed: int = 0) -> list[dict]:
    """Minimum total power per SINR target for each requested system.

    Every system uses as many RF chains as the template has waveguides. The
    continuous PASS run is seeded with the discrete solution at the same
    target, so it can only match or beat it.
    """
    unknown = set(systems) - set(SYSTEMS)
    if unknown:
        raise ValidationError(f"unknown systems: {sorted(unknown)}")
    n_rf = len(template.waveguides)
    if bs_position is None:
        bs_position = np.mean([wg.feed_point for wg in template.waveguides], axis=0)
    rows = []
    for g_db in gamma_db:
        gamma = np.full(len(template.users), 10.0 ** (g_db / 10.0))
        results = {}
        if "pass_discrete" in systems or "pass_continuous" in systems:
            disc = joint_min_power(replace(template, sinr_targets=gamma, activation="discrete"),
                                   seed=seed)
            results["pass_discrete"] = (disc.feasible, disc.total_power, disc.iterations)
        if "pass_continuous" in systems:
            cont = joint_min_power(replace(template, sinr_targets=gamma, activation="continuous"),
                                   seed=seed, initial_placements=disc.placements)
            results["pass_continuous"] = (cont.feasible, cont.total_power, cont.iterations)
        if "conventional" in systems:
            sol = baseline_conventional_mimo(template.users, bs_position, n_rf, gamma,
                                             template.radio, array_axis)
            results["conventional"] = (sol.feasible, sol.total_power, sol.iterations)
        if "massive" in systems:
            sol = baseline_massive_mimo_hybrid(template.users, bs_position, n_rf, antennas_per_rf,
                                               gamma, template.radio, array_axis)
            results["massive"] = (sol.feasible, sol.total_power, sol.iterations)
        for name in systems:
            feasible, power, iterations = results[name]
            rows.append({"sinr_db": float(g_db), "system": name, "total_power": power,
                         "feasible": feasible, "iterations": iterations})
    return rows
