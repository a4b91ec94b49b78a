"""DUGKS solver for the BGK equation with a Taylor vortex verification harness."""

from ._dugks import (
    CheckpointError,
    ConfigError,
    DegenerateError,
    Error,
    IoError,
    NonPhysicalFieldError,
    RunConfig,
    Simulation,
    VelocitySet,
    compute_dt,
    d1q3,
    d2q9,
    equilibrium,
    fit_decay_viscosity,
    load_sweep_config,
    observed_order,
    run_case,
    run_convergence,
    run_sweep,
)

__all__ = [
    "CheckpointError",
    "ConfigError",
    "DegenerateError",
    "Error",
    "IoError",
    "NonPhysicalFieldError",
    "RunConfig",
    "Simulation",
    "VelocitySet",
    "compute_dt",
    "d1q3",
    "d2q9",
    "equilibrium",
    "fit_decay_viscosity",
    "load_sweep_config",
    "observed_order",
    "run_case",
    "run_convergence",
    "run_sweep",
]
