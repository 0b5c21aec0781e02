"""Exception types shared across the package."""


class PackChargeError(Exception):
    """Base class for all package errors."""


class ParameterError(PackChargeError):
    """Invalid or inconsistent parameter set."""


class DomainError(PackChargeError):
    """Physical quantity outside its admissible domain (e.g. T <= 0)."""


class ExtrapolationError(DomainError):
    """Query outside a tabulated curve's domain."""


class SimulationValidityError(PackChargeError):
    """State left the physically valid region during integration.

    Carries the simulation time and the (0-based) cell index when known.
    """

    def __init__(self, message, t=None, cell=None):
        self.t = t
        self.cell = cell
        where = []
        if t is not None:
            where.append(f"t={t:.6g} s")
        if cell is not None:
            where.append(f"cell={cell}")
        suffix = f" [{', '.join(where)}]" if where else ""
        super().__init__(message + suffix)


class CalibrationError(PackChargeError):
    """Surrogate calibration failed to bracket or converge."""


class FitError(PackChargeError):
    """Surrogate polynomial fit failed (e.g. rank deficiency)."""


class TranscriptionError(PackChargeError):
    """Problem cannot be transcribed (inconsistent or infeasible by construction)."""


class EvaluationError(PackChargeError):
    """NaN/Inf produced while evaluating the NLP model functions."""

    def __init__(self, message, constraint_index=None):
        self.constraint_index = constraint_index
        if constraint_index is not None:
            message = f"{message} (constraint index {constraint_index})"
        super().__init__(message)


class SolverError(PackChargeError):
    """Unrecoverable interior-point solver failure."""


class ProtocolError(PackChargeError):
    """Cycling protocol is infeasible at some cycle."""

    def __init__(self, message, cycle=None):
        self.cycle = cycle
        if cycle is not None:
            message = f"{message} (cycle {cycle})"
        super().__init__(message)
