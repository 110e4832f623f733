"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """A dataset or target file violates the expected CSV schema."""


class GridMismatchError(ValueError):
    """Two spectra (or a spectrum and a model) live on different wavelength grids."""


class BundleFormatError(ValueError):
    """A serialized model bundle is corrupt or has an unsupported version."""
