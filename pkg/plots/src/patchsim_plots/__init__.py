"""Figure rendering for patchsim experiment CSVs."""

from .figures import (GRID_SCHEMA, OPTIMAL_SCHEMA, SERIES_SCHEMA,
                      EmptyInputError, FigureSpec, RenderData, SchemaError,
                      load_grid, read_rows, render)

__version__ = "0.1.0"
