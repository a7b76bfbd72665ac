"""Exception hierarchy.  Every engine error derives from HerrlabError."""


class HerrlabError(Exception):
    pass


class InvalidPolynomial(HerrlabError):
    pass


class PrecisionOverflow(HerrlabError):
    pass


class CtxMismatch(HerrlabError):
    pass


class NotUnit(HerrlabError):
    pass


class NotDivisible(HerrlabError):
    pass


class InsufficientGuard(HerrlabError):
    pass


class EmptyWindow(HerrlabError):
    pass


class CompositionUndefined(HerrlabError):
    pass


class NonInvertibleTail(HerrlabError):
    pass


class WindowTooNarrow(HerrlabError):
    pass


class NotAFrobeniusSeries(HerrlabError):
    pass


class PrecisionLoss(HerrlabError):
    pass


class NotEtale(HerrlabError):
    pass


class CommutationFailure(HerrlabError):
    pass


class TorsionNotCoprime(HerrlabError):
    pass


class NotAComplex(HerrlabError):
    pass


class NonCommuting(HerrlabError):
    pass


class NotAChainMap(HerrlabError):
    pass


class NotStabilized(HerrlabError):
    """Raised when a tower fails to stabilize; carries the diagnostics."""

    def __init__(self, message, traces=None):
        super().__init__(message)
        self.traces = traces or {}


class DualityMismatch(HerrlabError):
    def __init__(self, message, reports=None):
        super().__init__(message)
        self.reports = reports or {}


class LemmaViolation(HerrlabError):
    pass


class ParseError(HerrlabError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
        self.line, self.column = line, column


class ValidationError(HerrlabError):
    pass


class WindowTooLarge(HerrlabError):
    pass
