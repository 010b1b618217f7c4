"""Numerical workbench for adiabatic switching and Gell-Mann--Low vectors on finite systems."""

from .dynamics import (
    IntegratorSettings,
    QuantumModel,
    SwitchingSchedule,
    UnitaryMap,
    asymptotic_interaction_propagator,
    compose,
    interaction_propagator,
    propagate,
)
from .errors import NumericalFailure, WorkbenchError
from .gml import adiabatic_sweep, gml_vector, sucher_shift
from .identities import DerivativeSettings

__all__ = [
    "DerivativeSettings",
    "IntegratorSettings",
    "NumericalFailure",
    "QuantumModel",
    "SwitchingSchedule",
    "UnitaryMap",
    "WorkbenchError",
    "adiabatic_sweep",
    "asymptotic_interaction_propagator",
    "compose",
    "gml_vector",
    "interaction_propagator",
    "propagate",
    "sucher_shift",
]
