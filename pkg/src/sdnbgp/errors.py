"""Exception types raised across the package."""


class SdnBgpError(Exception):
    """Base class for all package errors."""


class DomainError(SdnBgpError, ValueError):
    """An argument lies outside the domain of a formula."""


class EmptyObservations(SdnBgpError, ValueError):
    pass


class DegenerateProfile(SdnBgpError, ValueError):
    pass


class DegenerateDegree(DomainError):
    """A bgp-degree evaluated to zero at a step that requires progress."""


class ParseError(SdnBgpError, ValueError):
    pass


class ConflictError(SdnBgpError, ValueError):
    pass


class UnlabeledGraph(SdnBgpError, ValueError):
    pass


class EmptySample(SdnBgpError, ValueError):
    pass


class MissingProfile(SdnBgpError, ValueError):
    pass


class DisconnectedSource(SdnBgpError, RuntimeError):
    pass


class ConfigError(SdnBgpError, ValueError):
    pass
