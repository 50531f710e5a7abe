"""Dwell exceptions

Every error a command can end with carries the process exit code in
:attr:`DwellError.exit_code`.
"""


class DwellError(Exception):
    """Base class of every error raised by dwell"""
    exit_code = 1


class DimensionError(DwellError, ValueError):
    """Matrix or vector dimensions do not fit together"""


class RankError(DwellError, ValueError):
    """A matrix that has to be full rank is rank deficient"""


class NotHurwitzError(DwellError):
    """A state matrix has an eigenvalue with nonnegative real part

    There is no stabilizing solution of the Lyapunov equation.
    """

    def __init__(self, message="no stabilizing solution", index=None):
        super().__init__(message)
        self.index = index


class NotPositiveDefiniteError(DwellError, ValueError):
    """A matrix that has to be symmetric positive definite is not"""


class DegenerateSamplingError(DwellError):
    """The sampled predictor map (e^{-A Ts} - I) is singular

    Happens for state matrices with an eigenvalue at zero or a sampling time
    too small to be resolved numerically.
    """


class ScenarioError(DwellError):
    """The scenario file is missing, malformed or violates the schema"""


class EnvelopeViolation(DwellError):
    """The simulation left its valid envelope and was aborted

    :ivar trace: The trace up to the last good step
    :ivar diagnostic: A human readable reason
    """
    exit_code = 2

    def __init__(self, diagnostic, trace=None):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.trace = trace


class CertificateInfeasible(DwellError):
    """A stability certificate condition could not be verified

    :ivar condition: Name of the first violated condition
    """
    exit_code = 3

    def __init__(self, condition, message=None):
        super().__init__(message or condition)
        self.condition = condition


class ConfigUnitError(DwellError):
    """A config unit was registered twice or called without a function"""


class CycleException(Exception):
    """There is a circular dependency between config units

    Thus this setup cannot be run
    """


class StopInitException(Exception):
    """Stops the init process all together
    """
