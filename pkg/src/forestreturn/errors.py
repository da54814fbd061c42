"""Exception types raised across the package."""


class ConfigurationError(ValueError):
    """Bad or incomplete configuration (missing covariate, unknown key, ...)."""


class TableError(ValueError):
    """A data table could not be ingested or is missing a required row."""


class DegenerateStandError(ArithmeticError):
    """The stand or trajectory cannot support the requested computation."""


class ThinningSpecError(ValueError):
    """A thinning asks for something physically impossible."""
