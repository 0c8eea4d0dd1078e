"""Exception types shared across the library.

Each error carries a stable ``code`` (its class name) used verbatim in CLI
reports, so scripts can dispatch on failures without parsing messages.
"""


class PlanarCoverError(Exception):
    """Base class for all library errors."""

    @property
    def code(self):
        return type(self).__name__


class OutOfDomain(PlanarCoverError):
    """A point or grid lies outside the map's declared domain."""


class SeedNotInSet(PlanarCoverError):
    """Flood-fill seed cell is not a member of the given cell set."""


class EmptyInput(PlanarCoverError):
    """An operation that needs nonempty input received an empty one."""


class PreconditionFailed(PlanarCoverError):
    """A documented precondition was violated; the message names the clause."""


class NoRadiusFound(PlanarCoverError):
    """No square neighbourhood of the point has a boundary clear of the fiber.

    Signals a lightness failure: the fiber component through the point
    appears to have positive diameter at the working resolution.
    """


class VerificationFailed(PlanarCoverError):
    """Computed evidence did not meet the verification threshold."""


class ModulusNotFound(PlanarCoverError):
    """Diameter-modulus search underflowed the grid resolution."""


class ChainBroken(PlanarCoverError):
    """No preimage component of the next parameter interval meets the
    current one; the domain is not normal at this resolution, or the
    resolution is insufficient."""


class ToleranceNotMet(PlanarCoverError):
    """Refinement exhausted the grid before reaching the requested
    tolerance."""


class InfiniteLiftSuspect(PlanarCoverError):
    """Deduplication kept finding new lifts beyond the configured cap."""


class DegenerateLoop(PlanarCoverError):
    """A probe-loop sample maps onto the center value, so no winding
    number can be read off."""


class Unresolved(PlanarCoverError):
    """Sample doubling hit its cap without a stable winding estimate."""


class NonIsolatedBranch(PlanarCoverError):
    """Two branch candidates could not be separated at grid resolution."""


class MonodromyMismatch(PlanarCoverError):
    """Root-branch propagation around a loop enclosing the center does not
    realize the expected deck transformation; the degree is wrong or a
    second branch point sits inside the region."""


class ResidualExceeded(PlanarCoverError):
    """Normal-form residual came out above the requested tolerance."""


class ParseError(PlanarCoverError):
    """Scenario or CLI input failed to parse; message names the field."""
