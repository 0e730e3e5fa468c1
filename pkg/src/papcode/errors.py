"""Exception types shared across the package."""


class PapcodeError(Exception):
    pass


class InvalidParameterError(PapcodeError, ValueError):
    pass


class OutOfSupportError(PapcodeError, ValueError):
    pass


class ContractViolationError(PapcodeError, RuntimeError):
    """A black box returned something outside its declared contract."""


class BudgetExceededError(PapcodeError, ValueError):
    pass


class InfeasiblePaddingError(PapcodeError, ValueError):
    pass
