"""Exception types shared across the package.

The CLI maps these onto distinct exit codes (see ``crlplus.cli``); library
callers can catch the base class or the specific type they care about.
"""


class CrlError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(CrlError):
    """Invalid configuration (bad flag, bad config file, bad field value)."""


class DataError(CrlError):
    """Invalid or missing input data (corpus files, labels, token ids)."""


class DegenerateStateError(CrlError):
    """The training loop reached a state it cannot proceed from."""


class CheckpointFormatError(CrlError):
    """A checkpoint file does not conform to the CRLP format."""


class ShapeError(CrlError, ValueError):
    """Tensor operands have incompatible shapes or empty dimensions."""


class ParameterError(CrlError, ValueError):
    """An argument is outside its documented domain."""


class ContractError(CrlError, TypeError):
    """A caller-supplied callable violated its contract (e.g. non-scalar loss)."""


class DegenerateBatchError(CrlError):
    """A contrastive batch has no contributing anchors; callers skip the step."""
