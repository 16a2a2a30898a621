"""psusy: pseudo-supersymmetric factorization of the Dirac reduction with a
deformed Woods-Saxon potential, plus an independent finite-difference oracle."""
from .core import (
    DegenerateParameterError,
    DwsParams,
    Grid,
    GridMismatchError,
    InvalidGridError,
    MasslessError,
    NonNormalizableError,
    PhysicalConfig,
    PsusyError,
    SampledFunction,
)
from .dirac import effective_potential, recover_chi, standard_form
from .dws import (
    Branch,
    DwsSuperpotentialParams,
    dws_ground_state,
    dws_potential,
    dws_superpotential,
    energy_absolute,
    energy_closed_form,
    energy_special_case,
    solve_matching,
)
from .oracle import SpectralProblem, bound_states, refine_until
from .susy import Convention, Superpotential, factorization_audit, linear_superpotential

__version__ = "0.1.0"

__all__ = [
    "Branch", "Convention", "DegenerateParameterError", "DwsParams", "DwsSuperpotentialParams",
    "Grid", "GridMismatchError", "InvalidGridError", "MasslessError", "NonNormalizableError",
    "PhysicalConfig", "PsusyError", "SampledFunction", "SpectralProblem", "Superpotential",
    "bound_states", "dws_ground_state", "dws_potential", "dws_superpotential",
    "effective_potential", "energy_absolute", "energy_closed_form", "energy_special_case",
    "factorization_audit", "linear_superpotential", "recover_chi", "refine_until",
    "solve_matching", "standard_form", "__version__",
]
