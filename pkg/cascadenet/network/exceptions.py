"""Network IR exceptions."""

from cascadenet.exceptions import CascadeNetError, ValidationError


class NetworkError(CascadeNetError):
    """Base exception for network construction errors."""
    type = "network_error"


class UnboundedChannel(NetworkError):
    """Raised when lowering cannot bound an identity channel on the declared domain."""
    type = "unbounded_channel"


class CorruptNetwork(ValidationError):
    """Raised when a serialized network is unreadable or structurally invalid."""
    type = "corrupt_network"
