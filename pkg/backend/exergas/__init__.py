"""exergas - bilans énergétique et exergétique d'un gazéifieur de biomasse."""

from .exceptions import (
    ConvergenceError,
    ExergasError,
    InfeasibleCompositionError,
    InvalidFuelError,
    InvalidInputError,
    MissingSpeciesError,
    ModelInconsistencyError,
    SpeciesDataError,
    SweepError,
    TemperatureRangeError,
)
from .fuel_model import BiomassFuel, ProximateAnalysis, UltimateAnalysis, load_fuel
from .gasifier_core import GasifierSpec, solve_producer_gas
from .sweep import SweepConfig, run_analysis, run_sweep
from .thermo_props import ReferenceEnvironment, SpeciesDatabase, default_database

__version__ = "0.1.0"
