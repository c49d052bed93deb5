"""
Exception hierarchy for netresilience.

Every domain error is also a ValueError so callers that only care about
"bad input" can catch the builtin, the way the command line does.
"""

from typing import Iterable, List, Optional


class ResilienceError(Exception):
    """Base class for all netresilience errors."""


class GraphError(ResilienceError, ValueError):
    """A graph operation was called outside its preconditions."""


class ParseError(ResilienceError, ValueError):
    """An input network file could not be parsed."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IngestError(ResilienceError, ValueError):
    """A parsed network could not be turned into a usable graph."""


class GeneratorError(ResilienceError, ValueError):
    """A generator specification is infeasible."""


class AttackError(ResilienceError, ValueError):
    """An attack plan or its execution request is invalid."""


class ConfigError(ResilienceError, ValueError):
    """An experiment configuration failed validation."""

    def __init__(self, problems: Iterable[str]):
        self.problems: List[str] = list(problems)
        lines = "\n".join(f"  - {problem}" for problem in self.problems)
        super().__init__(
            f"invalid configuration ({len(self.problems)} problem(s)):\n{lines}"
        )
