from .grid import CameronMartinPath, DoleansWeight, PathBatch, TimeGrid, WienerPath, grid_for
from .drift import SimpleDrift
from .functional import FunctionalSpec, GrowthConstants, LinearFunctional, ParamFunctionalSpec, PsiFunction, make_psi
from .potential import NonconvexRegion, Potential1D

__all__ = [
    "TimeGrid", "WienerPath", "PathBatch", "CameronMartinPath", "DoleansWeight", "grid_for",
    "SimpleDrift",
    "FunctionalSpec", "GrowthConstants", "ParamFunctionalSpec", "LinearFunctional", "PsiFunction", "make_psi",
    "Potential1D", "NonconvexRegion",
]
