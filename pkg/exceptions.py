"""
Custom exceptions for the super star product engine.
"""


class SuperStarError(Exception):
    """Base exception for all engine errors."""
    pass


class DimensionError(SuperStarError):
    """Exception raised when operands live in different jet spaces or odd dimensions."""
    pass


class NotInvertibleError(SuperStarError):
    """Exception raised when an element or matrix has no inverse."""
    pass


class DomainError(SuperStarError):
    """Exception raised when a series function is applied outside its domain."""
    pass


class DivergentIntegralError(SuperStarError):
    """Exception raised when an integrand has no Gaussian decay."""
    pass


class NondegeneracyError(SuperStarError):
    """Exception raised when a potential has a singular Hessian at the base point."""
    pass


class NotAdmissibleError(SuperStarError):
    """Exception raised when the component matrix of u cannot be inverted over the star algebra."""
    pass


class InvalidTransitionError(SuperStarError):
    """Exception raised when transition matrices are singular or of the wrong type."""
    pass


class ConsistencyError(SuperStarError):
    """Exception raised when an internal identity fails beyond truncation."""
    pass


class ConfigurationError(SuperStarError):
    """Exception raised when configuration is invalid."""
    pass


class ScenarioParseError(SuperStarError):
    """Exception raised when a scenario file cannot be parsed."""
    pass


class ValidationError(SuperStarError):
    """Exception raised when a scenario fails validation."""
    pass


class ResourceCapError(SuperStarError):
    """Exception raised when a scenario exceeds the resource budget."""
    pass


class FileOperationError(SuperStarError):
    """Exception raised when file operations fail."""
    pass
