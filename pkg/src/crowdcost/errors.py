"""Exception hierarchy shared across the package."""


class CrowdCostError(Exception):
    """Base error for this package."""


class KLDomainError(CrowdCostError, ValueError):
    """KL divergence is infinite for the requested arguments."""


class ConfigError(CrowdCostError, ValueError):
    """Malformed configuration, instance file, or CLI arguments."""


class EstimationError(CrowdCostError):
    """Spectral estimation failed (degenerate or unidentifiable moments)."""


class IngestError(CrowdCostError, ValueError):
    """Response records cannot be turned into a platform instance."""


class PipelineError(CrowdCostError):
    """An end-to-end run cannot proceed (e.g. no usable worker class)."""


class QueryCapExceeded(CrowdCostError):
    """A sequential rule hit its optional query cap before stopping.

    Carries the partial state so callers can inspect how far the rule got.
    """

    def __init__(self, message: str, queries: int, ones: int):
        super().__init__(message)
        self.queries = queries
        self.ones = ones
