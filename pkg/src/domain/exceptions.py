"""Domain-level exceptions raised by entities and numerical services."""


class DomainError(ValueError):
    """Base domain error class."""

    pass


class ParameterDomainError(DomainError):
    """Raised when a physical parameter lies outside its valid range."""

    pass


class DictionaryConstructionError(DomainError):
    """Raised when a dictionary grid degenerates to zero samples."""

    pass


class DimensionMismatchError(DomainError):
    """Raised when array shapes or bit lengths are inconsistent."""

    pass


class IndexRangeError(DomainError):
    """Raised when a codeword index falls outside the codebook."""

    pass
