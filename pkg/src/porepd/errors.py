"""Exception hierarchy."""


class PorePDError(Exception):
    """Base class for all package errors."""


class ConfigurationError(PorePDError, ValueError):
    pass


class DiscretizationError(PorePDError):
    pass


class MeshError(PorePDError):
    pass


class ParameterError(PorePDError, ValueError):
    pass


class SingularBondError(PorePDError):
    def __init__(self, bond: int, i: int, j: int):
        super().__init__(f"bond {bond} between nodes {i} and {j} has zero deformed length")
        self.bond, self.i, self.j = bond, i, j


class StabilityError(ConfigurationError):
    def __init__(self, dt: float, dt_max: float):
        super().__init__(f"time step {dt:.6g} s is not below the stable limit {dt_max:.6g} s")
        self.dt, self.dt_max = dt, dt_max


class SolverError(PorePDError):
    pass


class DivergenceError(PorePDError):
    def __init__(self, step: int, node: int):
        super().__init__(f"non-finite state at step {step}, node {node}")
        self.step, self.node = step, node


class ValidationError(ConfigurationError):
    """Scenario validation failure; ``problems`` lists every violated field."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid scenario:\n  " + "\n  ".join(self.problems))
