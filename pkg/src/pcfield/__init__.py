"""Periodically correlated random fields on integer lattices."""

__version__ = "0.1.0"

from .errors import ContractError, PCFieldError, ToleranceError  # noqa: E402
from .lattice import (  # noqa: E402
    Frequency,
    LatticeSubgroup,
    QuotientStructure,
    annihilator,
    bezout_phi,
    character,
    quotient,
    smith_normal_form,
    weil_check,
)
from .model import (  # noqa: E402
    PCFieldModel,
    PeriodicField,
    UnitaryRep,
    amplitude_modulated,
    is_square_integrable,
    make_model,
    sample_paths,
    stationary_model,
    time_deformed,
)

__all__ = [
    "ContractError", "PCFieldError", "ToleranceError",
    "Frequency", "LatticeSubgroup", "QuotientStructure", "annihilator", "bezout_phi",
    "character", "quotient", "smith_normal_form", "weil_check",
    "PCFieldModel", "PeriodicField", "UnitaryRep", "amplitude_modulated",
    "is_square_integrable", "make_model", "sample_paths", "stationary_model", "time_deformed",
]
