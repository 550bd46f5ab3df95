"""Physics-guided multi-step neural operator predictor."""

from .bdf import BdfScheme, bdf_coefficients
from .errors import ConfigError, ContractError, NumericalAbort, PmnoError, ShapeError
from .grid import Grid, GridField
from .predictor import HistoryWindow, PmnoPredictor, State

__version__ = "0.1.0"

__all__ = [
    "BdfScheme",
    "ConfigError",
    "ContractError",
    "Grid",
    "GridField",
    "HistoryWindow",
    "NumericalAbort",
    "PmnoError",
    "PmnoPredictor",
    "ShapeError",
    "State",
    "bdf_coefficients",
]
