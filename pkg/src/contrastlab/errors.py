"""Exception types shared across the package."""


class ContrastLabError(Exception):
    """Base class for all package-specific errors."""


class ValidationError(ContrastLabError, ValueError):
    """A model, distribution or representation violates an invariant."""


class UnknownPointError(ContrastLabError, KeyError):
    """A point-id was not found in the model."""


class UnknownClassError(ContrastLabError, KeyError):
    """A class-id was not found in the model."""


class DegenerateModelError(ContrastLabError, ArithmeticError):
    """An operation divides by (1 - tau) or (1 - tau_k) on a model where
    the collision probability is 1 (effectively a single latent class)."""


class EnumerationCapError(ContrastLabError, RuntimeError):
    """Exact enumeration would exceed the configured tuple cap.

    ``required`` carries the cap value that would have been needed.
    """

    def __init__(self, required: int, cap: int):
        self.required = int(required)
        self.cap = int(cap)
        super().__init__(
            f"exact enumeration needs {required} tuples, cap is {cap}; "
            f"raise the cap or use a sampled estimate explicitly"
        )


class DivergedError(ContrastLabError, ArithmeticError):
    """The optimizer produced a non-finite loss value."""

    def __init__(self, step: int, message: str = ""):
        self.step = int(step)
        super().__init__(message or f"non-finite loss at step {step}")


class ConfigError(ContrastLabError, ValueError):
    """An experiment config failed schema validation."""
