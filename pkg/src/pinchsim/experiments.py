"""Experiment drivers that turn a scenario into CSV tables."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .coupling import PowerModel
from .errors import ValidationError
from .joint import SYSTEMS, power_vs_sinr_sweep
from .placement import array_gain_sweep
from .scenario import Scenario

__all__ = [
    "ARRAY_GAIN_COLUMNS",
    "MIN_POWER_COLUMNS",
    "SweepSpec",
    "run_array_gain",
    "run_min_power",
    "write_atomic",
]

ARRAY_GAIN_COLUMNS = ("n_antennas", "spacing_m", "power_model", "gain_linear", "gain_db")
MIN_POWER_COLUMNS = ("sinr_db", "system", "total_power_dbm", "feasible", "iterations")


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep.

    ``grid`` holds antenna counts for ``array_gain`` and SINR targets in dB
    for ``min_power``. ``power_model`` overrides the scenario's model when set.
    """

    experiment: str
    grid: tuple = ()
    systems: tuple[str, ...] = SYSTEMS
    output: str | None = None
    spacing_m: float = 0.25
    power_model: PowerModel | None = None
    aligned: bool = True

    def __post_init__(self):
        if self.experiment not in ("array_gain", "min_power"):
            raise ValidationError(f"unknown experiment {self.experiment!r}")
        unknown = set(self.systems) - set(SYSTEMS)
        if unknown:
            raise ValidationError(f"unknown systems: {sorted(unknown)}")
        if not self.spacing_m > 0:
            raise ValidationError("spacing_m must be positive")


def _to_csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    writer.writerows(rows)
    return buf.getvalue()


def write_atomic(path, text: str) -> None:
    """Write ``text`` to a sibling temp file, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def run_array_gain(scenario: Scenario, spec: SweepSpec) -> str:
    """Array gain of equally spaced antennas for the first user on the first waveguide."""
    if spec.experiment != "array_gain":
        raise ValidationError("run_array_gain needs experiment='array_gain'")
    model = spec.power_model or scenario.power_model
    n_list = sorted({int(n) for n in spec.grid})
    if any(n < 1 for n in n_list):
        raise ValidationError("antenna counts must be >= 1")
    gains = array_gain_sweep(scenario.users[0], scenario.waveguides[0], n_list, spec.spacing_m,
                             model, scenario.radio, aligned=spec.aligned)
    rows = [(n, repr(float(spec.spacing_m)), model.label(), repr(float(g)), repr(10 * math.log10(g)))
            for n, g in gains]
    text = _to_csv(ARRAY_GAIN_COLUMNS, rows)
    if spec.output:
        write_atomic(spec.output, text)
    return text


def _dbm(watts):
    return 10 * math.log10(watts) + 30 if math.isfinite(watts) and watts > 0 else math.inf


def run_min_power(scenario: Scenario, spec: SweepSpec) -> str:
    """Minimum total transmit power per (SINR target, system)."""
    if spec.experiment != "min_power":
        raise ValidationError("run_min_power needs experiment='min_power'")
    rows = []
    if spec.grid:
        template = scenario.joint_problem(np.ones(len(scenario.users)))
        if spec.power_model is not None:
            template = replace(template, power_model=spec.power_model)
        results = power_vs_sinr_sweep(template, [float(g) for g in spec.grid], spec.systems,
                                      bs_position=scenario.bs_position,
                                      antennas_per_rf=scenario.antennas_per_rf,
                                      array_axis=scenario.array_axis, seed=scenario.seed)
        rows = [(repr(float(r["sinr_db"])), r["system"], repr(float(_dbm(r["total_power"]))),
                 "true" if r["feasible"] else "false", r["iterations"]) for r in results]
    text = _to_csv(MIN_POWER_COLUMNS, rows)
    if spec.output:
        write_atomic(spec.output, text)
    return text
