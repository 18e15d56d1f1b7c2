"""Exception hierarchy.

Every error carries the CLI exit code it maps to: input problems exit 2,
numeric failures exit 3.
"""


class WPLabError(Exception):
    exit_code = 3


class InputError(WPLabError, ValueError):
    exit_code = 2


class NumericFailure(WPLabError, ArithmeticError):
    exit_code = 3


class NotHyperbolic(InputError):
    pass


class NotHyperbolicWord(NotHyperbolic):
    pass


class SharedEndpoint(NumericFailure):
    pass


class NonPositiveLength(InputError):
    pass


class LengthOutOfRange(InputError):
    pass


class StepTooLarge(InputError):
    pass


class StepOutOfRange(InputError):
    pass


class WrongSurfaceKind(InputError):
    pass


class DepthTooLarge(InputError):
    pass


class DomainError(InputError):
    pass


class GridTooCoarse(InputError):
    pass


class DegenerateTriple(InputError):
    pass


class NonPositiveData(InputError):
    pass


class HitSingularStratum(NumericFailure):
    def __init__(self, msg, t=None, state=None):
        super().__init__(msg)
        self.t = t
        self.state = state


class NoConvergence(NumericFailure):
    def __init__(self, msg, bracket=None):
        super().__init__(msg)
        self.bracket = bracket
