"""
Exception hierarchy for the harness.

Every error a command can surface derives from HarnessError and carries the
process exit code the CLI should use for it. Agent failures are not errors:
they are recorded as run statuses in the ledger.
"""


class HarnessError(Exception):
    """Base class for harness errors."""

    exit_code: int = 4


class ValidationError(HarnessError):
    """Invalid configuration, arguments or input files."""

    exit_code = 2


class InsufficientDataError(HarnessError):
    """Not enough successful runs to compute a requested analysis."""

    exit_code = 3


class HarnessFault(HarnessError):
    """Internal or I/O failure of the harness itself."""

    exit_code = 4


class TabularError(ValidationError):
    """Malformed or inconsistent tabular dataset / metadata."""


class EncodingError(ValidationError):
    """Dataset cannot be turned into a design matrix."""


class SignalModelError(ValidationError):
    """OLS signal model cannot be fitted or PVE is out of range."""


class PerturbationError(ValidationError):
    """Invalid perturbation request or run plan."""


class PromptTemplateError(ValidationError):
    """Prompt template references placeholders that cannot be resolved."""


class WorkspaceError(HarnessFault):
    """Run workspace cannot be created or collides with an existing one."""


class StatsError(InsufficientDataError):
    """Sample does not satisfy a statistic's preconditions."""
