"""Exception hierarchy shared across the package."""


class EnskError(Exception):
    """Base class for all library errors."""


class PoolValidationError(EnskError, ValueError):
    """Raised by ``validate_pool``; carries every violation found.

    Each entry of ``violations`` is a ``(kind, member_id)`` pair where kind is
    one of ``DuplicateId``, ``AccuracyOutOfRange``, ``NonPositiveCost`` or
    ``EmptyPool`` (``member_id`` is ``None`` for the latter).
    """

    def __init__(self, violations):
        self.violations = list(violations)
        msg = "; ".join(
            kind if mid is None else f"{kind}({mid!r})" for kind, mid in self.violations
        )
        super().__init__(f"invalid pool: {msg}")

    @property
    def kinds(self):
        return {kind for kind, _ in self.violations}


class EmptyInput(EnskError, ValueError):
    pass


class TooLarge(EnskError, ValueError):
    pass


class NoFeasibleSubset(EnskError):
    pass


class WeightsLengthMismatch(EnskError, ValueError):
    pass


class WeightsNotMonotone(EnskError, ValueError):
    pass


class DomainError(EnskError, ValueError):
    pass


class NoConvergence(EnskError, RuntimeError):
    pass


class TooFewSamples(EnskError, ValueError):
    pass


class InvalidMoments(EnskError, ValueError):
    pass


class DegenerateVariance(EnskError, ValueError):
    """The variance admits no beta distribution; callers switch to the normal branch."""


class TooFewInteriorPoints(EnskError, ValueError):
    pass


class AllZero(EnskError, ValueError):
    pass


class PoolFormatError(EnskError, ValueError):
    """Malformed pool file; the message names the offending row or column."""
