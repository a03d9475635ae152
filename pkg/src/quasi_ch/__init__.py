"""Non-isothermal phase separation of a quasi-incompressible binary fluid
with Cattaneo-Maxwell heat conduction, on uniform 1D/2D grids."""

from .config import RunConfig, parse_config
from .constitutive import InvalidStateError, MaterialParams
from .diagnostics import DiagnosticsRecord, ThresholdPolicy, check_thresholds, record
from .fields import Grid
from .scenarios import build_scenario
from .solver import SolverConfig, State, StepFailure, StepReport, run, step

__all__ = [
    "DiagnosticsRecord",
    "Grid",
    "InvalidStateError",
    "MaterialParams",
    "RunConfig",
    "SolverConfig",
    "State",
    "StepFailure",
    "StepReport",
    "ThresholdPolicy",
    "build_scenario",
    "check_thresholds",
    "parse_config",
    "record",
    "run",
    "step",
]

__version__ = "0.1.0"
