"""Exception hierarchy shared across the toolkit."""


class RankAuditError(Exception):
    """Base class for domain errors (mapped to exit code 1 by the CLI)."""


class ParseError(RankAuditError, ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateNameError(RankAuditError):
    pass


class LabelConflictError(RankAuditError):
    pass


class NotFoundError(RankAuditError, LookupError):
    pass


class TransportError(RankAuditError):
    pass


class ConfigurationError(RankAuditError):
    pass


class CredentialError(RankAuditError):
    pass


class UnsupportedHostError(RankAuditError):
    pass
