"""Application-level exceptions."""


class ApplicationError(Exception):
    """Base application error class."""

    pass


class ConfigurationError(ApplicationError):
    """Raised when a scenario file or CLI option is invalid."""

    pass


class DecoderNonConvergenceError(ApplicationError):
    """Raised in strict mode when a decoder hits its iteration cap."""

    def __init__(self, decoder: str, iterations: int, residual_power: float):
        """Capture the decoder state at the cap."""
        super().__init__(
            f"{decoder} did not reach the target residual power after "
            f"{iterations} iterations (residual_power={residual_power:.6g})"
        )
        self.decoder = decoder
        self.iterations = iterations
        self.residual_power = residual_power
