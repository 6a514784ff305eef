"""Exception hierarchy shared by the models, controllers and the CLI."""

from typing import Optional, Union


class EddeError(Exception):
    """Root of every error raised by this package."""


class ValidationError(EddeError, ValueError):
    """Invalid shapes, ranges or arguments."""


class ParseError(ValidationError):
    """A data file could not be parsed.

    Args:
        message: Human readable description
        path: File being read
        row: 1-based data row (header excluded), None when not row specific
        column: Column name or index, None when not column specific
    """

    def __init__(self, message: str, path=None, row: Optional[int] = None,
                 column: Optional[Union[str, int]] = None):
        self.path = path
        self.row = row
        self.column = column
        location = []
        if path is not None:
            location.append(str(path))
        if row is not None:
            location.append(f"row {row}")
        if column is not None:
            location.append(f"column {column!r}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")


class ConfigError(ValidationError):
    """Unknown keys, uncoercible values or inconsistent settings."""


class PersistenceError(ValidationError):
    """Missing or corrupt ensemble directory."""


class TrainingDivergenceError(EddeError):
    """Non-finite loss or gradient during training.

    `round` is filled in by the orchestrator (boosting round, baseline member
    or snapshot cycle) when it re-raises.
    """

    def __init__(self, message: str, epoch: Optional[int] = None, round: Optional[int] = None):
        self.epoch = epoch
        self.round = round
        self.detail = message
        super().__init__(self._format())

    def _format(self) -> str:
        where = []
        if self.round is not None:
            where.append(f"round {self.round}")
        if self.epoch is not None:
            where.append(f"epoch {self.epoch}")
        return f"{self.detail} ({', '.join(where)})" if where else self.detail

    def with_round(self, round: int) -> "TrainingDivergenceError":
        self.round = round
        self.args = (self._format(),)
        return self


class InternalError(EddeError):
    """A state that the algorithms guarantee cannot happen."""
