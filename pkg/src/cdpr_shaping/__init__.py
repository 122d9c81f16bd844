"""Elastic cable-driven parallel robots: modal analysis, input shaping,
feed-forward control simulation and shaper-robustness workspaces."""
from ._kernels import KERNEL
from .control_sim import (
    ControllerGains,
    FrictionParams,
    PlantState,
    SimulationTrace,
    VirtualPlant,
    control_torque,
    friction_torque,
    joint_setpoints,
    metrics,
    simulate,
)
from .errors import (
    CdprError,
    ConfigError,
    DegenerateCable,
    EmptyGrid,
    InvalidDuration,
    NoOscillationDetected,
    NumericalDivergence,
    SingularMass,
    SingularWrenchMatrix,
    SlackAllCables,
)
from .model import RobotModel, cable_geometry, jacobian, modal_analysis, natural_frequencies, stiffness_matrix
from .shaping import ImpulseSequence, ModeSpec, build, residual_vibration, shape_trajectory
from .tension import TensionLimits, solve_tensions
from .trajectory import PlatformTrajectory, bang_bang_line
from .workspace import GridSpec, ScalarField, ShaperBand, frequency_field, validate_path

__version__ = "0.1.0"
