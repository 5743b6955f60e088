"""Exception types shared across the package."""


class PhotonGateError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(PhotonGateError):
    """Invalid configuration value or combination of values."""


class DataFormatError(PhotonGateError):
    """Malformed tag file.  Carries the byte offset where parsing failed."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class QuadratureError(PhotonGateError):
    """Numerical integration did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message}: achieved absolute error {achieved:.3e}")
        self.achieved = achieved


class InsufficientDataError(PhotonGateError):
    """Too few qualifying data points for an estimator to run."""


class MissingChannelError(PhotonGateError):
    """A correlator input stream has no tags on one of its channels."""


class UnreachableTargetError(PhotonGateError):
    """Requested purity target lies below the achievable floor."""

    def __init__(self, target: float, floor: float):
        super().__init__(
            f"target g2 {target:g} is below the achievable floor {floor:.4g} "
            "set by the detection-chain background"
        )
        self.target = target
        self.floor = floor
