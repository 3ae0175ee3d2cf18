"""Error types raised across the library.

Every error that aborts a run carries enough provenance (step index,
file line, violated pair) for the CLI to print something actionable.
"""
from __future__ import annotations


class BalancerError(Exception):
    """Base class for all library errors."""


class StreamFormatError(BalancerError):
    """Malformed stream file record."""

    def __init__(self, path: str, lineno: int, message: str):
        self.path = path
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {message}")


class PotentialOverflowError(BalancerError):
    """Potential exceeded the configured cap; lambda is misconfigured."""

    def __init__(self, step: int, phi: float, cap: float):
        self.step = step
        self.phi = phi
        self.cap = cap
        super().__init__(f"potential {phi:.3e} exceeded cap {cap:.3e} at step {step}")


class UnsupportedModeError(BalancerError):
    """Operation mode not available for this distribution kind."""


class InvalidInstanceError(BalancerError):
    """Instance failed the certification its operation requires."""


class InvariantViolationError(BalancerError):
    """An internal consistency check failed; carries module and step."""

    def __init__(self, module: str, step: int, message: str):
        self.module = module
        self.step = step
        super().__init__(f"[{module}] step {step}: {message}")


class ConvergenceError(BalancerError):
    """Iterative numeric routine exhausted its sweep budget."""


class PairingError(BalancerError):
    """Paired comparison refused: streams diverge across algorithms."""


class MemoryGuardError(BalancerError):
    """Lazy coordinate store exceeded its configured cap."""
