"""Exception types shared across the package.

The CLI maps these onto exit codes: validation and construction failures
exit with 3, file format problems with 4.
"""


class ValidationError(ValueError):
    """Input or precondition violated (shapes, finiteness, tolerances)."""


class ConstructionError(ValidationError):
    """An iteration operator could not be built from the given data."""


class DivergenceError(RuntimeError):
    """An iterate became non-finite; carries the iteration index."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"iterate became non-finite at iteration {iteration}")


class ParseError(ValueError):
    """A file could not be parsed; message names the file (and line)."""
