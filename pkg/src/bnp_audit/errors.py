"""Exception hierarchy shared by every module of the package."""


class BnpError(Exception):
    """Base class for all package errors."""


class ValidationError(BnpError, ValueError):
    """A value violates a domain invariant (negative amount, duplicate tx id, ...)."""


class AuditError(BnpError):
    """A payoff cannot be scored, usually because a bid lacks its true value."""


class NotADeviationError(BnpError, ValueError):
    """The proposed bid equals the honest bid, so there is nothing to evaluate."""


class DominatedBidError(BnpError, ValueError):
    """A miner fake bid below the 2N-th bid, which can never raise miner revenue."""


class CollusionError(BnpError, ValueError):
    """A collusion scenario that the coalition would never choose (colluder already wins)."""


class InfeasibleAuditError(BnpError):
    """An exhaustive search whose size exceeds the configured guardrails."""

    def __init__(self, message: str, *, evaluations: int | None = None, limit: int | None = None):
        super().__init__(message)
        self.evaluations = evaluations
        self.limit = limit


class DatasetError(BnpError):
    """A dataset file is malformed or truncated."""


class SchemaVersionError(DatasetError):
    """A dataset file was written with a schema version this loader does not read."""

    def __init__(self, found, expected: int):
        super().__init__(
            f"dataset schema_version {found!r} is not supported by this loader "
            f"(expects {expected}); re-export the dataset or migrate it explicitly"
        )
        self.found = found
        self.expected = expected


class FetchError(BnpError):
    """One or more blocks could not be fetched from the JSON-RPC endpoint."""

    def __init__(self, failures: dict[int, str], payloads: dict | None = None):
        blocks = ", ".join(str(b) for b in sorted(failures))
        super().__init__(f"failed to fetch {len(failures)} block(s): {blocks}")
        self.failures = dict(failures)
        self.payloads = dict(payloads or {})
