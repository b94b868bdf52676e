"""Closed-loop formation-flying GN&C simulator.

Two-CubeSat sun-aligned formation: nonlinear LVLH relative orbit dynamics,
quaternion attitude dynamics with reaction wheels, environmental
disturbances, sun-line guidance with a TRIAD reference attitude, and three
interchangeable control laws (adaptive smooth NFTSM, PD, LQR) driving a
2-DOF quantized thruster and torque-limited wheels.
"""

from .config import SimulationConfig, load_config, save_config
from .engine import (Metrics, SimulationLog, compute_metrics,
                     monte_carlo_batch, run_closed_loop)

__all__ = [
    "SimulationConfig",
    "load_config",
    "save_config",
    "Metrics",
    "SimulationLog",
    "compute_metrics",
    "monte_carlo_batch",
    "run_closed_loop",
]

__version__ = "0.1.0"
