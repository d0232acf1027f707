"""Triangular-lattice Ising model under heat-bath Glauber dynamics:
simulator, Monte Carlo estimator harness, and exact small-instance oracle for
crossing/arm events and noise-sensitivity measurements."""

__version__ = "0.1.0"

from . import lattice, ising, dynamics, events, oracle  # noqa: F401
