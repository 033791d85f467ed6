"""Symmetric hyperbolic evolution of the Einstein and Einstein-Euler
equations in a Lagrangian orthonormal-frame gauge on a periodic 3-torus."""

from .eos import Eos, eos_eval
from .fields import (ConnectionField, CurvatureField, FluidField, FrameField,
                     GridState, frame_matrix, spatial_metric, validate_state)
from .system import TimeDerivative, rhs, rhs_fluid, rhs_vacuum
from .blocks import char_speeds, fosh_check, principal_time_block, solve_time_block
from .initial_data import (EulerianData, curvature_from_constraints, flat_data,
                           flrw_data, flrw_perturbed_data, from_rest_eulerian,
                           kasner_data, spatial_riemann)
from .monitor import ResidualReport, compute_report, einstein_residual, norms
from .stencil import StencilConfig, coordinate_derivative
from .integrate import cfl_dt, evolve, rk4_step

__all__ = [
    "Eos", "eos_eval", "FrameField", "ConnectionField", "CurvatureField",
    "FluidField", "GridState", "frame_matrix", "spatial_metric",
    "validate_state", "TimeDerivative", "rhs", "rhs_vacuum", "rhs_fluid",
    "char_speeds", "fosh_check", "principal_time_block", "solve_time_block",
    "EulerianData", "curvature_from_constraints", "flat_data", "flrw_data",
    "flrw_perturbed_data", "from_rest_eulerian", "kasner_data",
    "spatial_riemann", "ResidualReport", "compute_report", "einstein_residual",
    "norms", "StencilConfig", "coordinate_derivative", "cfl_dt", "evolve",
    "rk4_step",
]

__version__ = "0.1.0"
