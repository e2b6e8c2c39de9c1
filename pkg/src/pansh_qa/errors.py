"""Exception types shared across the package."""


class DataError(ValueError):
    """Raised when input data violates a documented contract.

    Covers malformed raster files, geometry mismatches, out-of-range
    parameters and degenerate numerical inputs. The CLI maps this (and
    I/O errors) to exit code 2.
    """
