"""Simulation and exact-arithmetic toolkit for window sums of i.i.d. random fields."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree without installation
    __version__ = "0.0.0"

from lslab.errors import (
    BudgetExceededError,
    ConfigError,
    DerivativeOrderError,
    IntegrationAccuracyError,
    LatticeOverflowError,
    PreconditionError,
)
from lslab.field import FieldSpec
from lslab.geometry import SubsequenceSpec
from lslab.harness import ExperimentConfig, run
from lslab.lattice import LatticeIndex
from lslab.windows import WindowSpec

__all__ = [
    "__version__",
    "BudgetExceededError",
    "ConfigError",
    "DerivativeOrderError",
    "ExperimentConfig",
    "FieldSpec",
    "IntegrationAccuracyError",
    "LatticeIndex",
    "LatticeOverflowError",
    "PreconditionError",
    "SubsequenceSpec",
    "WindowSpec",
    "run",
]
