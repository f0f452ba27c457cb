"""Exception types shared across the package.

Domain errors signal that a mathematically well-posed request has no
answer (empty survivor set, infeasible rate targets, ...).  Horizon
errors signal that the answer exists but the supplied finite horizon is
too short to reach it; callers typically retry with a longer horizon.
"""


class RecspecError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(RecspecError):
    """Malformed configuration, file format, or argument combination."""


class DomainError(RecspecError):
    """The requested object does not exist for these inputs."""


class HorizonError(RecspecError):
    """The finite horizon is too short to produce the requested output."""


class NoBranchingSymbol(DomainError):
    """Every symbol has exactly one successor; the shift is a single cycle."""


class NotMixing(DomainError):
    """Operation requires a topologically mixing (primitive) shift."""


class EmptyAlphabet(DomainError):
    """No return word exists below the requested bound."""


class EmptySurvivor(DomainError):
    """Hole removal left no admissible loop; pressure is -infinity."""


class InadmissibleWord(DomainError):
    """Word violates the transition structure of the shift."""


class InfeasibleTarget(DomainError):
    """Rate targets cannot coexist with the growth constraints at this horizon."""


class HorizonTooShort(HorizonError):
    """Source word cannot fill the requested output prefix."""


class NotExpanding(DomainError):
    """Map has a branch with |derivative| <= 1 somewhere."""


class BoundaryOrbit(DomainError):
    """An iterate hit a partition endpoint, so the itinerary is ambiguous."""


class SourceInfeasible(DomainError):
    """The equilibrium state assigns no mass to the base cylinder at this level."""


class BirkhoffMiss(HorizonError):
    """Sampled Birkhoff averages missed the tolerance within the retry budget."""


class ZeroMassCylinder(DomainError):
    """Cylinder mass is below tolerance; conditional quantities are undefined."""
