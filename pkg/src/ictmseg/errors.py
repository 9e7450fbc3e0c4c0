"""Exception types shared across the package.

The CLI maps these onto process exit codes, so raising the right type
matters more than the message text.
"""


class FormatError(Exception):
    """An input file is corrupt or in an unsupported format."""


class ContractError(ValueError):
    """A caller violated a documented precondition or invariant."""


class InitializationError(RuntimeError):
    """The edge-based initialization could not produce a usable partition."""
