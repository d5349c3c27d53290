"""Small input validation helpers shared across the package."""

import numbers

import numpy as np


class ContractViolation(ValueError):
    """Raised when an argument breaks an operation's precondition."""


def check_vector(x, dim=None, name="x"):
    """Return ``x`` as a finite 1-d float array, optionally of length ``dim``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ContractViolation(f"{name} must be 1-d, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolation(
            f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolation(f"{name} contains non-finite values")
    return arr


def check_positive(value, name, integer=False):
    if integer:
        if not isinstance(value, numbers.Integral) or value < 1:
            raise ContractViolation(
                f"{name} must be a positive integer, got {value!r}")
        return int(value)
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ContractViolation(f"{name} must be positive, got {value!r}")
    return value


def as_seed_sequence(seed):
    """Coerce an int, ``None`` or ``SeedSequence`` to a ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(seed)
