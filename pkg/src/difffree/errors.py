"""Solver aborts. The CLI maps every ``SolverError`` to exit status 3."""


class SolverError(RuntimeError):
    """A run could not be continued."""


class CFLViolation(SolverError):
    def __init__(self, cfl: float, limit: float, step: int):
        super().__init__(f"CFL number {cfl:.3f} exceeds {limit} at step {step}; reduce dt")
        self.cfl = cfl
        self.step = step


class NonFiniteState(SolverError):
    def __init__(self, step: int, what: str = "vorticity"):
        super().__init__(f"non-finite {what} detected at step {step}")
        self.step = step


class DecayViolation(SolverError):
    """Weighted boundary-layer norm blew up: the profile data are incompatible."""
