"""Shared exception hierarchy; the CLI maps these onto exit codes."""


class PgceError(Exception):
    """Base class for all pipeline errors (exit code 2 unless refined)."""


class UsageError(PgceError):
    """Bad arguments or contradictory configuration (exit code 1)."""


class EndpointError(PgceError):
    """A remote model service failed after retries (exit code 3)."""
