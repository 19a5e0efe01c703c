"""Exception types shared across the package."""

from __future__ import annotations


class DiracseaError(Exception):
    """Base class for package errors."""


class ConfigError(DiracseaError):
    """Invalid scenario configuration.

    Carries the dotted path of the offending entry so CLI users can find it.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class DenseBudgetError(DiracseaError):
    """A dense matrix would exceed the configured memory budget."""

    def __init__(self, dim: int, budget_bytes: int):
        self.dim = dim
        self.budget_bytes = budget_bytes
        need = 16 * dim * dim
        super().__init__(
            f"dense operator of dimension {dim} needs {need:,} bytes "
            f"(complex128), exceeding the budget of {budget_bytes:,} bytes; "
            "use a matrix-free representation or raise the budget"
        )


class AlgebraError(DiracseaError):
    """A matrix failed a structural check (Hermiticity, skewness, unitarity)."""


class RankDeficiencyError(DiracseaError):
    """Polar decomposition of a sea with (numerically) dependent columns."""


class GrayZoneError(DiracseaError):
    """Ill-conditioned truncation: singular values in the unresolvable band."""

    def __init__(self, values, band):
        self.values = list(values)
        self.band = tuple(band)
        super().__init__(
            "relative charge is not resolvable at this truncation: "
            f"{len(self.values)} singular value(s) fall inside the gray band "
            f"[{band[0]:.3e}, {band[1]:.3e}]: {self.values}"
        )


class ChargeObstructionError(DiracseaError):
    """Lift requested between seas of different dimension (nonzero relative charge)."""


class ConvergenceError(DiracseaError):
    """An adaptive quadrature or iteration failed to converge."""
