"""
Generic cascadenet exceptions.

For module-specific exceptions, import from:
    - cascadenet.network.exceptions (network IR and lowering)
"""
from typing import Dict, Optional


class CascadeNetError(Exception):
    """Base cascadenet exception."""
    type = "error"

    def __init__(self, message: str, type: Optional[str] = None) -> None:
        self.message = message
        self.type = type or self.type
        super().__init__(self.message)

    def to_dict(self) -> Dict[str, Dict[str, str]]:
        return {
            "error": {
                "type": self.type,
                "message": self.message,
            }
        }


class ValidationError(CascadeNetError):
    """Raised when an argument violates an operation's precondition."""
    type = "validation_error"


class DimensionMismatch(ValidationError):
    """Raised when sequences, vectors or networks do not fit together."""
    type = "dimension_mismatch"


class ImproperlyConfigured(CascadeNetError):
    """cascadenet is somehow improperly configured."""
    type = "improperly_configured"


class InvariantError(CascadeNetError):
    """An internal guarantee of a construction did not hold."""
    type = "invariant_error"
