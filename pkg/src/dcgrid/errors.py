"""Exception hierarchy shared by the analysis modules."""


class DcGridError(Exception):
    """Base class for every error raised by :mod:`dcgrid`."""


class SingularState(DcGridError):
    """A modulation index or the bus voltage is not strictly positive."""


class NoPhysicalRoot(DcGridError):
    """The droop-regulated bus cannot supply the requested net power."""


class BatteryOverload(DcGridError):
    """A battery branch cannot deliver the current its converter demands."""


class DegenerateDroop(DcGridError):
    """Zero droop gain leaves the current sharing between ESSs undetermined."""


class NotAtEquilibrium(DcGridError):
    pass


class ConvergenceFailure(DcGridError):
    pass


class NoFeasibleTau(DcGridError):
    """No delay candidate makes the eigenvalue test sufficient on the grid.

    ``result`` carries the per-candidate counterexample table.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ConfigError(DcGridError):
    """Raised for malformed or inconsistent run configuration files."""
