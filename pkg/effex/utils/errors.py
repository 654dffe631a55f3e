"""
Effex Errors
============

Exception hierarchy shared by every effex module. Each error serializes to a
plain dict so the CLI can emit it under ``--json``.
"""

from typing import Any, Dict, Optional, Sequence, Tuple

Path = Tuple[int, ...]


class EffexError(Exception):
    """Base class for all effex errors."""

    kind = "error"

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": str(self)}


class MalformedTermError(EffexError):
    """A variable index escapes its binders."""

    kind = "malformed-term"

    def __init__(self, message: str, path: Sequence[int] = ()):
        super().__init__(message)
        self.path: Path = tuple(path)

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["path"] = list(self.path)
        return data


class TagError(EffexError):
    """A construct is used outside the calculus that provides it."""

    kind = "tag"

    def __init__(self, construct: str, calculus: str):
        super().__init__(f"{construct} not available in {calculus}")
        self.construct = construct
        self.calculus = calculus


class SurfaceError(EffexError):
    """Lexical or syntax error with a 1-based position."""

    kind = "syntax"

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.message = message
        self.line = line
        self.col = col

    def to_dict(self) -> Dict[str, Any]:
        return {"error": self.kind, "message": self.message, "line": self.line, "col": self.col}


class TypeCheckError(EffexError):
    """
    A kinding or typing judgement failed.

    ``reason`` is a short code (mismatch, effect-mismatch, op-set-mismatch,
    empty-stack, missing-annotation, unbound, wrong-calculus, monad-layer,
    ill-kinded) and ``path`` locates the offending node from the checked root.
    """

    kind = "type"

    def __init__(
        self,
        message: str,
        reason: str = "mismatch",
        path: Sequence[int] = (),
        expected: Optional[str] = None,
        actual: Optional[str] = None,
    ):
        super().__init__(message)
        self.message = message
        self.reason = reason
        self.path: Path = tuple(path)
        self.expected = expected
        self.actual = actual

    def at(self, prefix: Sequence[int]) -> "TypeCheckError":
        """Return a copy whose path is prefixed by ``prefix``."""
        return type(self)(
            self.message, self.reason, tuple(prefix) + self.path, self.expected, self.actual
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": self.kind,
            "reason": self.reason,
            "message": self.message,
            "path": list(self.path),
            "expected": self.expected,
            "actual": self.actual,
        }


class KindError(TypeCheckError):
    """A type, effect or handler type is ill-kinded."""

    kind = "kind"


class TranslationError(EffexError):
    """Unknown translation or a source program clashing with reserved names."""

    kind = "translation"


class SemanticsError(EffexError):
    """A denotation is undefined or too large to enumerate."""

    kind = "semantics"


class CoercionError(EffexError):
    """The source effect of a coercion is not included in the target effect."""

    kind = "coercion"
