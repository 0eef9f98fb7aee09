"""Single-photon scattering off a cavity with a three-level emitter, and the resulting photon-atom gate."""

from .analytic import (
    CharacteristicRoots,
    GateMatrix,
    adiabatic_final_multiplier,
    characteristic_roots,
    compose_protocol,
    gate_matrix,
    gate_phase,
    loss_probability,
    solve_sqrt_swap_detuning,
)
from .dynamics import Trajectory, integrate
from .errors import CavgateError, ConfigError, NumericalError
from .experiments import RunConfig, SweepConfig, fit_loglog_slope, run_single, simulate, sweep
from .model import AmplitudeState, ModeGrid, PulseSpec, SystemParams, build_mode_grid
from .observables import GateReport, fidelity_phase, numeric_loss

__version__ = "0.1.0"
