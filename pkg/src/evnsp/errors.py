"""Error types raised by the solver modules.

Every floor/limit violation is a hard error carrying location data; nothing
is silently clamped.
"""


class EvnspError(Exception):
    """Base class for all solver errors."""


class ConfigError(EvnspError):
    """Invalid run configuration."""


class SingularTensor(EvnspError):
    """A pointwise 3x3 determinant fell below the invertibility floor."""

    def __init__(self, node, det):
        self.node = tuple(int(i) for i in node)
        self.det = float(det)
        super().__init__(f"singular tensor at node {self.node}: det = {self.det:.3e}")


class DensityFloor(EvnspError):
    """Density fell below the admissible floor."""

    def __init__(self, node, rho):
        self.node = tuple(int(i) for i in node)
        self.rho = float(rho)
        super().__init__(f"density floor hit at node {self.node}: rho = {self.rho:.3e}")


class NegativeDensity(EvnspError):
    """Nonpositive density handed to the Boltzmann elliptic solve."""


class NeumannIncompatible(EvnspError):
    """Pure-Neumann Poisson right-hand side with nonzero discrete mean."""

    def __init__(self, mean):
        self.mean = float(mean)
        super().__init__(f"Neumann-Neumann rhs mean {self.mean:.3e} exceeds tolerance")


class NonConvergence(EvnspError):
    """An iterative solve failed to reach its tolerance."""

    def __init__(self, iterations, residual):
        self.iterations = int(iterations)
        self.residual = float(residual)
        super().__init__(
            f"no convergence after {self.iterations} iterations, residual {self.residual:.3e}"
        )


class NormalizationError(EvnspError):
    """Diagnostic requested outside its supported parameter normalization."""
