"""
Effex Utilities
===============

Logging, configuration, validation and the shared error hierarchy.
"""

from .config_loader import get_config_value, load_config
from .errors import (
    CoercionError,
    EffexError,
    KindError,
    MalformedTermError,
    SemanticsError,
    SurfaceError,
    TagError,
    TranslationError,
    TypeCheckError,
)
from .logging_config import get_logger, setup_logging
from .validation import ValidationError

__all__ = [
    "CoercionError",
    "EffexError",
    "KindError",
    "MalformedTermError",
    "SemanticsError",
    "SurfaceError",
    "TagError",
    "TranslationError",
    "TypeCheckError",
    "ValidationError",
    "get_config_value",
    "get_logger",
    "load_config",
    "setup_logging",
]
