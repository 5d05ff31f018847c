"""cubeplots: heatmap panels from cubelab sweep CSVs."""

from .errors import CubeplotsError, IncompleteGrid, MissingColumn
from .heatmap import Panel, PlotSpec, aggregate, load_sweep, render

__version__ = "0.1.0"
