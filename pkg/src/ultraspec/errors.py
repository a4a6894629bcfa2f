"""Exception types raised across the package.

All of them derive from :class:`UltraspecError` (itself a ``ValueError``) so
callers can catch domain failures in one place; the CLI prints the class name.
"""


class UltraspecError(ValueError):
    pass


class DimensionLimitExceeded(UltraspecError):
    pass


class DegenerateConversion(UltraspecError):
    pass


class NonPrimeR(UltraspecError):
    pass


class ZeroEigenvalueClass(UltraspecError):
    pass


class DegenerateWord(UltraspecError):
    pass


class NotNormalized(UltraspecError):
    pass


class UnsupportedP(UltraspecError):
    pass


class NonConvergent(UltraspecError):
    pass


class DegenerateGap(UltraspecError):
    pass
