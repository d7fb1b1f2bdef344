"""
Scenario files.

Scenarios are YAML mappings whose keys carry their units (``length_m``,
``frequency_ghz``, ...). Unknown keys are rejected so that a typo cannot
silently fall back to a default. :func:`normalize` returns the canonical
mapping, which loads back to an identical scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .channel import SPEED_OF_LIGHT, FullyConnected, RadioParams, SubConnected, WaveguideLayout
from .coupling import PowerModel
from .errors import ValidationError
from .joint import JointProblem

__all__ = [
    "ScenarioError",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "normalize",
    "dump_scenario",
    "default_scenario_path",
]

_TOP_KEYS = {
    "frequency_ghz", "n_eff", "attenuation_db_per_m", "noise_dbm", "seed",
    "candidate_spacing_m", "pas_per_waveguide", "power_model", "architecture",
    "waveguides", "users_m", "baseline",
}
_REQUIRED = ("frequency_ghz", "waveguides", "users_m")
_WAVEGUIDE_KEYS = {"feed_m", "axis", "length_m"}
_BASELINE_KEYS = {"bs_position_m", "array_axis", "antennas_per_rf"}
_POWER_KEYS = {"kind", "alpha"}
_ARCHITECTURES = ("sub_connected", "fully_connected")


class ScenarioError(ValidationError):
    """Malformed or invalid scenario; ``field`` names the offending key."""

    def __init__(self, message, field=None, line=None):
        where = f"line {line}: " if line is not None else ""
        what = f"{field}: " if field else ""
        super().__init__(f"{where}{what}{message}")
        self.field = field
        self.line = line


@dataclass(frozen=True, eq=False)
class Scenario:
    frequency_ghz: float
    n_eff: float
    attenuation_db_per_m: float
    noise_dbm: float
    seed: int
    candidate_spacing_m: float
    pas_per_waveguide: int
    power_model: PowerModel
    architecture: str
    waveguides: tuple[WaveguideLayout, ...]
    users: np.ndarray
    bs_position: np.ndarray
    array_axis: np.ndarray
    antennas_per_rf: int

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / (self.frequency_ghz * 1e9)

    @property
    def noise_power(self) -> float:
        return 10.0 ** (self.noise_dbm / 10.0) / 1e3

    @property
    def radio(self) -> RadioParams:
        return RadioParams(self.wavelength, self.noise_power)

    def feed_architecture(self):
        if self.architecture == "sub_connected":
            return SubConnected()
        n = len(self.waveguides)
        # unitary DFT splitter keeps one RF chain per waveguide
        dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n) / math.sqrt(n)
        return FullyConnected(dft)

    def joint_problem(self, sinr_targets, activation="continuous") -> JointProblem:
        return JointProblem(self.users, self.waveguides, self.pas_per_waveguide,
                            sinr_targets, self.radio, self.power_model, activation,
                            self.candidate_spacing_m, self.feed_architecture())

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=int(seed))


# -- parsing -------------------------------------------------------------

def _line_index(node, path=(), out=None):
    """Map key paths to 1-based source lines from a composed YAML node tree."""
    if out is None:
        out = {}
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            sub = path + (key.value,)
            out[sub] = key.start_mark.line + 1
            _line_index(value, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, value in enumerate(node.value):
            sub = path + (i,)
            out[sub] = value.start_mark.line + 1
            _line_index(value, sub, out)
    return out


class _Reader:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, message):
        field = ".".join(str(p) for p in path)
        line = None
        for cut in range(len(path), 0, -1):
            line = self.lines.get(tuple(path[:cut]))
            if line is not None:
                break
        raise ScenarioError(message, field=field, line=line)

    def keys(self, mapping, allowed, path):
        if not isinstance(mapping, dict):
            self.fail(path, "expected a mapping")
        for key in mapping:
            if key not in allowed:
                self.fail(path + (key,), f"unknown key {key!r}")

    def number(self, value, path, *, positive=False, nonneg=False, minimum=None):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            self.fail(path, "must be finite")
        if positive and not value > 0:
            self.fail(path, f"must be positive, got {value!r}")
        if nonneg and value < 0:
            self.fail(path, f"must be >= 0, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value!r}")
        return value

    def integer(self, value, path, minimum=None):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value!r}")
        return value

    def vec3(self, value, path):
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            self.fail(path, "expected a list of three numbers")
        return np.array([self.number(v, path + (i,)) for i, v in enumerate(value)])

    def direction(self, value, path):
        v = self.vec3(value, path)
        norm = np.linalg.norm(v)
        if norm == 0:
            self.fail(path, "direction must be nonzero")
        # leave unit vectors untouched so normalized files round-trip exactly
        return v if abs(norm - 1.0) <= 1e-12 else v / norm


def _parse_power_model(r: _Reader, value, path):
    if isinstance(value, str):
        try:
            return PowerModel.parse(value)
        except ValidationError as exc:
            r.fail(path, str(exc))
    r.keys(value, _POWER_KEYS, path)
    kind = value.get("kind")
    if kind == "equal":
        if "alpha" in value:
            r.fail(path + ("alpha",), "equal power model takes no alpha")
        return PowerModel.equal()
    if kind == "proportional":
        alpha = r.number(value.get("alpha"), path + ("alpha",))
        if not 0 < alpha <= 1:
            r.fail(path + ("alpha",), f"must lie in (0, 1], got {alpha!r}")
        return PowerModel.proportional(alpha)
    r.fail(path + ("kind",), f"expected 'equal' or 'proportional', got {kind!r}")


def parse_scenario(text: str) -> Scenario:
    """Validate scenario YAML text."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ScenarioError(f"malformed YAML: {getattr(exc, 'problem', exc)}",
                            line=mark.line + 1 if mark else None) from None
    r = _Reader(_line_index(node) if node is not None else {})
    if data is None:
        data = {}
    r.keys(data, _TOP_KEYS, ())
    for key in _REQUIRED:
        if key not in data:
            r.fail((key,), "missing required key")

    freq = r.number(data["frequency_ghz"], ("frequency_ghz",), positive=True)
    n_eff = r.number(data.get("n_eff", 1.4), ("n_eff",), minimum=1.0)
    atten = r.number(data.get("attenuation_db_per_m", 0.0), ("attenuation_db_per_m",), nonneg=True)
    noise = r.number(data.get("noise_dbm", -90.0), ("noise_dbm",))
    seed = r.integer(data.get("seed", 0), ("seed",), minimum=0)
    spacing = r.number(data.get("candidate_spacing_m", 0.5), ("candidate_spacing_m",),
                       positive=True)
    n_pa = r.integer(data.get("pas_per_waveguide", 4), ("pas_per_waveguide",), minimum=1)
    power_model = _parse_power_model(
        r, data.get("power_model", {"kind": "proportional", "alpha": 0.9}), ("power_model",))
    arch = data.get("architecture", "sub_connected")
    if arch not in _ARCHITECTURES:
        r.fail(("architecture",), f"expected one of {_ARCHITECTURES}, got {arch!r}")

    raw_wgs = data["waveguides"]
    if not isinstance(raw_wgs, list) or not raw_wgs:
        r.fail(("waveguides",), "expected a nonempty list")
    waveguides = []
    for i, item in enumerate(raw_wgs):
        path = ("waveguides", i)
        r.keys(item, _WAVEGUIDE_KEYS, path)
        for key in sorted(_WAVEGUIDE_KEYS):
            if key not in item:
                r.fail(path + (key,), "missing required key")
        feed = r.vec3(item["feed_m"], path + ("feed_m",))
        axis = r.direction(item["axis"], path + ("axis",))
        length = r.number(item["length_m"], path + ("length_m",), positive=True)
        waveguides.append(WaveguideLayout(feed, axis, length, n_eff, atten))

    raw_users = data["users_m"]
    if not isinstance(raw_users, list) or not raw_users:
        r.fail(("users_m",), "expected a nonempty list of points")
    users = np.array([r.vec3(u, ("users_m", i)) for i, u in enumerate(raw_users)])

    base = data.get("baseline", {}) or {}
    r.keys(base, _BASELINE_KEYS, ("baseline",))
    if "bs_position_m" in base:
        bs = r.vec3(base["bs_position_m"], ("baseline", "bs_position_m"))
    else:
        bs = np.mean([wg.feed_point for wg in waveguides], axis=0)
    array_axis = r.direction(base.get("array_axis", [0.0, 1.0, 0.0]), ("baseline", "array_axis"))
    per_rf = r.integer(base.get("antennas_per_rf", 16), ("baseline", "antennas_per_rf"), minimum=1)

    return Scenario(freq, n_eff, atten, noise, seed, spacing, n_pa, power_model, arch,
                    tuple(waveguides), users, bs, array_axis, per_rf)


def default_scenario_path() -> Path:
    return Path(str(resources.files("pinchsim") / "data" / "desk.yaml"))


def load_scenario(path) -> Scenario:
    """Read and validate a scenario file; ``"desk"`` selects the bundled default."""
    p = default_scenario_path() if str(path) == "desk" else Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", field=str(path)) from None
    return parse_scenario(text)


def _floats(v):
    return [float(x) for x in v]


def normalize(s: Scenario) -> dict:
    """Canonical mapping with every default made explicit."""
    pm = {"kind": s.power_model.kind}
    if s.power_model.alpha is not None:
        pm["alpha"] = s.power_model.alpha
    return {
        "frequency_ghz": s.frequency_ghz,
        "n_eff": s.n_eff,
        "attenuation_db_per_m": s.attenuation_db_per_m,
        "noise_dbm": s.noise_dbm,
        "seed": s.seed,
        "candidate_spacing_m": s.candidate_spacing_m,
        "pas_per_waveguide": s.pas_per_waveguide,
        "power_model": pm,
        "architecture": s.architecture,
        "waveguides": [{"feed_m": _floats(wg.feed_point), "axis": _floats(wg.axis),
                        "length_m": float(wg.length)} for wg in s.waveguides],
        "users_m": [_floats(u) for u in s.users],
        "baseline": {"bs_position_m": _floats(s.bs_position),
                     "array_axis": _floats(s.array_axis),
                     "antennas_per_rf": s.antennas_per_rf},
    }


def dump_scenario(s: Scenario) -> str:
    return yaml.safe_dump(normalize(s), sort_keys=False, default_flow_style=None)
