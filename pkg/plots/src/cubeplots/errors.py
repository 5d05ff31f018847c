"""Exception types for sweep-CSV rendering."""


class CubeplotsError(Exception):
    """Base class for rendering errors."""


class MissingColumn(CubeplotsError):
    """A referenced column is absent from the CSV."""


class IncompleteGrid(CubeplotsError):
    """Some (d, log2n) cell has no rows after aggregation."""
