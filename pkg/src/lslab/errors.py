"""Exception types shared across the package."""


class LatticeOverflowError(ArithmeticError):
    """A lattice size or count left the signed 64-bit range."""


class BudgetExceededError(RuntimeError):
    """A window needs more cells than the configured cell budget."""

    def __init__(self, volume, budget):
        super().__init__(f"window volume {volume} exceeds cell budget {budget}")
        self.volume = volume
        self.budget = budget


class PreconditionError(ValueError):
    """Arguments fall outside the domain an operation is defined on."""


class DerivativeOrderError(ValueError):
    """A transform's declared derivative order does not match its derivatives."""


class IntegrationAccuracyError(RuntimeError):
    """Numeric quadrature failed although the integral is analytically finite."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
