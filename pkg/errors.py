"""Exception hierarchy for the migration miner.

Every error that can end a run carries the process exit code the CLI reports.
"""


class MigrationMinerError(Exception):
    """Base exception for analysis errors."""

    exit_code = 1

    @property
    def error_name(self) -> str:
        return type(self).__name__

    def to_record(self) -> dict:
        """Machine-readable error record printed by the CLI."""
        return {
            'error': self.error_name,
            'message': str(self),
            'exit_code': self.exit_code,
        }


class NotARepository(MigrationMinerError):
    """Raised when the given path does not hold a git repository."""

    exit_code = 2


class UnreadableRepository(MigrationMinerError):
    """Raised when a repository exists but cannot be opened or its branch resolved."""

    exit_code = 3


class CorruptHistory(MigrationMinerError):
    """Raised when a git object in the walked history cannot be read."""

    exit_code = 4


class UnwritableOutput(MigrationMinerError):
    """Raised when the output directory cannot be created or written."""

    exit_code = 5


class InvalidConfiguration(MigrationMinerError):
    exit_code = 6


class UndecodableContent(MigrationMinerError):
    """Raised when file content is not text at all (binary)."""


class UnknownNode(MigrationMinerError):
    """Raised when a node id does not exist in a tree."""


class UndefinedForAnomalous(MigrationMinerError):
    """Raised when a proportion is requested for an interval of length <= 0."""


class DegenerateHistory(MigrationMinerError):
    """Raised when trends cannot be computed (no Kotlin, or Kotlin only at the latest commit)."""
