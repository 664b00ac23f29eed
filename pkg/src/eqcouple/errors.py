"""Exception hierarchy.

Every input problem derives from :class:`InputError` so the CLI can map it to
exit code 2; :class:`InternalInconsistencyError` signals a broken invariant
(exit code 3).
"""

from __future__ import annotations

from fractions import Fraction


class EqCoupleError(Exception):
    pass


class InputError(EqCoupleError, ValueError):
    pass


class DuplicatePointError(InputError):
    pass


class MissingLabelError(InputError):
    pass


class UnknownPointError(InputError):
    pass


class NegativeWeightError(InputError):
    pass


class MassNotOneError(InputError):
    def __init__(self, total: Fraction, label: str = "measure") -> None:
        self.total = total
        self.deficit = total - 1
        super().__init__(f"{label} has total mass {total}, off by {self.deficit}")


class SpaceMismatchError(InputError):
    pass


class ValueOutOfRangeError(InputError):
    pass


class MassOutsideBError(InputError):
    pass


class InvalidCouplingError(InputError):
    pass


class PlanMismatchError(InputError):
    pass


class InfeasibleMarginalsError(InputError):
    pass


class TooManyClassesError(InputError):
    pass


class InternalInconsistencyError(EqCoupleError, AssertionError):
    pass
