"""Spectral Galerkin simulator for a regularized two-layer thin-film system."""

__version__ = "0.1.0"

from .basis import SpectralBasis, project, synthesize, uniform_grid
from .config import ScenarioConfig, initial_state, load_config, parse_config, reference_config
from .diagnostics import diagnostics_row, dissipation, energy, energy_balance, weak_residual
from .integrator import IntegratorControls, StiffnessAbort, TrajectoryRecord, integrate, step
from .regularization import MollifierFamily, a_eps, chi, default_mollifier
from .rhs import GalerkinState, NumericError, SystemParams, assemble_psi

__all__ = [
    "GalerkinState",
    "IntegratorControls",
    "MollifierFamily",
    "NumericError",
    "ScenarioConfig",
    "SpectralBasis",
    "StiffnessAbort",
    "SystemParams",
    "TrajectoryRecord",
    "__version__",
    "a_eps",
    "assemble_psi",
    "chi",
    "default_mollifier",
    "diagnostics_row",
    "dissipation",
    "energy",
    "energy_balance",
    "initial_state",
    "integrate",
    "load_config",
    "parse_config",
    "project",
    "reference_config",
    "step",
    "synthesize",
    "uniform_grid",
    "weak_residual",
]
