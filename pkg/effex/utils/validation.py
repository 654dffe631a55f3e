"""
Effex Validation Utilities
==========================

Validation helpers for the numeric parameters accepted by the tools
(fuel, search depth, law sizes, pigeonhole bound).
"""

from typing import Iterable, List


class ValidationError(ValueError):
    """Custom exception for validation errors."""

    pass


def validate_non_negative_int(value: int, name: str = "value") -> int:
    """
    Validate that a value is an integer >= 0.

    Args:
        value: Value to validate
        name: Name for error messages

    Returns:
        The validated value

    Raises:
        ValidationError: If value is negative or not an integer
    """
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError(f"{name} must be an integer, got {value!r}")
    if value < 0:
        raise ValidationError(f"{name} must be non-negative, got {value}")
    return value


def validate_positive_int(value: int, name: str = "value") -> int:
    """
    Validate that a value is an integer > 0.

    Raises:
        ValidationError: If value is not a positive integer
    """
    validate_non_negative_int(value, name)
    if value == 0:
        raise ValidationError(f"{name} must be positive, got 0")
    return value


def validate_sizes(sizes: Iterable[int], name: str = "sizes", max_size: int = 8) -> List[int]:
    """
    Validate a list of finite-set sizes used for type-variable assignments.

    Args:
        sizes: Candidate sizes
        name: Name for error messages
        max_size: Largest accepted size

    Returns:
        The sizes as a sorted list without duplicates

    Raises:
        ValidationError: If the list is empty or a size is out of range
    """
    result = sorted({validate_non_negative_int(s, name) for s in sizes})
    if not result:
        raise ValidationError(f"{name} must not be empty")
    if result[-1] > max_size:
        raise ValidationError(f"{name} must be <= {max_size}, got {result[-1]}")
    return result


def parse_assignment(text: str) -> dict:
    """
    Parse a ``a=2,b=1`` type-variable size assignment.

    Raises:
        ValidationError: On malformed entries or negative sizes
    """
    result = {}
    if not text.strip():
        return result
    for item in text.split(","):
        name, sep, size = item.partition("=")
        if not sep or not name.strip():
            raise ValidationError(f"malformed assignment entry {item!r}, expected NAME=SIZE")
        try:
            result[name.strip()] = validate_non_negative_int(int(size), name.strip())
        except ValueError as exc:
            if isinstance(exc, ValidationError):
                raise
            raise ValidationError(f"size of {name.strip()!r} must be an integer") from exc
    return result
