"""Simulation and optimization of pinching-antenna systems (PASS)."""

from .channel import (
    FullyConnected,
    PinchConfig,
    PsFullyConnected,
    RadioParams,
    SubConnected,
    WaveguideLayout,
    channel_matrix,
    composite_channel,
    effective_channel,
    pa_coefficient,
    sinr,
)
from .coupling import (
    CouplerSpec,
    PowerModel,
    PowerProfile,
    cascade,
    coupled_power,
    equal_power_coupler_chain,
    length_for_fraction,
    power_profile,
)
from .errors import ApertureError, SingularityError, UnreachableFractionError, ValidationError
from .joint import BeamformingSolution, JointProblem, joint_min_power, power_vs_sinr_sweep
from .placement import (
    CandidateGrid,
    PlacementResult,
    array_gain_sweep,
    optimize_continuous,
    optimize_discrete,
    power_gradient,
    received_power,
)
from .precoding import PrecoderSolution, min_power_precoder
from .scenario import Scenario, load_scenario

__version__ = "0.1.0"
