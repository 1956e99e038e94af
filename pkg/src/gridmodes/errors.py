"""Exception hierarchy shared by all gridmodes modules."""


class GridmodesError(Exception):
    """Base class for errors raised by this package."""


class DataError(GridmodesError):
    """Malformed or inconsistent input data (files, schemas, shapes)."""


class NumericalError(GridmodesError):
    """A numerical procedure failed (divergence, degenerate decomposition)."""
