"""Exception types. Each carries a stable ``code`` string used by reports and the CLI."""


class HirschError(Exception):
    code = "ERROR"

    def __init__(self, message="", code=None, **details):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.details = details


class InvalidGFunction(HirschError):
    code = "INVALID_G"


class InvalidMeasure(HirschError):
    code = "INVALID_MEASURE"


class NoConvergence(HirschError):
    code = "NO_CONVERGENCE"


class ArcTooCoarse(HirschError):
    code = "ARC_TOO_COARSE"


class InvalidShape(HirschError):
    code = "INVALID_SHAPE"


class SingularPoint(HirschError):
    code = "SINGULAR_POINT"


class AtConePoint(HirschError):
    code = "AT_CONE_POINT"


class StepUnderflow(HirschError):
    code = "STEP_UNDERFLOW"


class MaxEventsExceeded(HirschError):
    code = "MAX_EVENTS_EXCEEDED"


class FamilyMismatch(HirschError):
    code = "FAMILY_MISMATCH"


class InvalidConfig(HirschError):
    code = "INVALID_CONFIG"
