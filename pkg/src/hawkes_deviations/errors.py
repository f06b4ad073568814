"""Exception hierarchy. Everything raised on purpose derives from HawkesError."""


class HawkesError(Exception):
    """Base class for domain and numerical errors raised by this package."""


class NonSummableKernelError(HawkesError):
    """A custom kernel's majorant fails its own summability contract."""


class DivergentMomentError(HawkesError):
    """A requested power moment of the kernel is not finite."""


class SubcriticalityError(HawkesError):
    """The l1 mass required to be < 1 is not (kernel, or a renewal q-sequence)."""


class DomainError(HawkesError):
    """Evaluation requested outside the admissible domain (theta > theta_c, etc.)."""


class NoConvergenceError(HawkesError):
    """An iterative solver exhausted its iteration budget."""


class NearCriticalError(HawkesError):
    """Derivatives requested too close to theta_c, where x'(theta) blows up."""


class CertificateError(HawkesError):
    """No certified truncation bound exists at the requested point."""


class SaturationError(DomainError):
    """Deviation target x beyond the reach of the expansion (theta* at theta_c)."""
