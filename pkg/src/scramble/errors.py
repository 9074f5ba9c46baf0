"""Exception types shared across the package."""


class ScrambleError(Exception):
    """Base class for every failure this package raises on purpose."""


class SpaceTooLargeError(ScrambleError):
    """Requested composite dimension exceeds the configured maximum."""


class LayoutError(ScrambleError):
    """Tensor-factor layout is inconsistent with the operator it describes."""


class NotHermitianError(ScrambleError):
    """Matrix expected to be Hermitian is not, beyond tolerance."""


class NotUnitaryError(ScrambleError):
    """Operator expected to be unitary is not, beyond tolerance."""


class NotNormalizedError(ScrambleError):
    """State vector or density matrix fails its normalization check."""


class BadSiteError(ScrambleError):
    """Site index points outside the requested scope of a layout."""


class InvalidTemperatureError(ScrambleError):
    """Thermal state requested at a non-positive temperature."""


class PerturbationMismatchError(ScrambleError):
    """Perturbation kind incompatible with the model it was attached to."""


class ConfigError(ScrambleError):
    """Run configuration failed validation."""


class ConvergenceError(ScrambleError):
    """Automatic cutoff escalation exhausted its budget without converging."""
