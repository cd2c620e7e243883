"""Fractional-step parallel kinetic Monte Carlo on periodic lattices."""
from .lattice import Configuration, Lattice, SiteUpdate, SpinSpace, apply_update
from .models import ArrheniusModel, ArrheniusParams, KawasakiModel, ZGBModel, ZGBParams, make_model
from .partition import Group, build_partition, nested_partition, strip_partition
from .rng import SeedPolicy
from .schedule import make_schedule
from .executor import FractionalStepExecutor, execute_substep, run_replicas, run_serial_replicas, run_simulation

__all__ = [
    "ArrheniusModel", "ArrheniusParams", "Configuration", "FractionalStepExecutor", "Group", "KawasakiModel",
    "Lattice", "SeedPolicy", "SiteUpdate", "SpinSpace", "ZGBModel", "ZGBParams", "apply_update",
    "build_partition", "execute_substep", "make_model", "make_schedule", "nested_partition",
    "run_replicas", "run_serial_replicas", "run_simulation", "strip_partition",
]
