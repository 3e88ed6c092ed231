"""Exception types shared across the package."""


class MarketError(Exception):
    """Base class for all errors raised by this package."""


class MalformedInput(MarketError):
    """An input references unknown ids, breaks an invariant, or fails to parse."""


class InstanceTooLarge(MarketError):
    """An exact computation was refused because a configured size cap was exceeded."""


class InvalidProposal(MarketError):
    """A broker proposal carries an allocation outside the valid set."""


class InfeasibleTarget(MarketError):
    """A requested payment construction has no individually rational solution."""
