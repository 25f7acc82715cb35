"""Exception types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True)
class SourceSpan:
    """Location in source text for error reporting."""

    line: int  # 1-based
    column: int  # 1-based

    def __post_init__(self) -> None:
        if self.line < 1 or self.column < 1:
            raise ValueError("spans are 1-based")

    def __str__(self) -> str:
        return f"line {self.line}, column {self.column}"


class ChamError(Exception):
    """Base exception for all CHAM errors."""


class ParseError(ChamError):
    """Raised for anything wrong with program text."""

    def __init__(self, message: str, span: SourceSpan | None = None) -> None:
        self.span = span
        self.message = message
        if span is not None:
            message = f"{span}: {message}"
        super().__init__(message)


class ChamSyntaxError(ParseError):
    """Malformed input."""


class UnknownSymbol(ParseError):
    def __init__(self, name: str, span: SourceSpan | None = None, what: str = "symbol") -> None:
        self.name = name
        super().__init__(f"undeclared {what} {name!r}", span)


class SymbolKindError(ParseError):
    """A symbol used where a different category is required, e.g. ``g(Mi)``."""


class DuplicateRule(ParseError):
    def __init__(self, name: str, span: SourceSpan | None = None) -> None:
        self.name = name
        super().__init__(f"rule {name!r} is defined more than once", span)


class UnknownRule(ChamError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"no rule named {name!r}")


class RuleNotEnabled(ChamError):
    def __init__(self, name: str) -> None:
        self.name = name
        super().__init__(f"rule {name!r} is not enabled in this state")


class BoundExceeded(ChamError):
    """Exploration hit its state bound. ``graph`` holds what was explored."""

    def __init__(self, bound: int, graph) -> None:
        self.bound = bound
        self.graph = graph
        super().__init__(f"state space exceeds bound of {bound} states")


class CyclicDependency(ChamError):
    def __init__(self, witness: list[str]) -> None:
        self.witness = witness
        super().__init__("cyclic rule dependency: " + " -> ".join(witness))


class StageError(ChamError):
    """Base class for numeric stage failures."""


class DegenerateInput(StageError):
    pass


class DimensionMismatch(StageError):
    pass


class DegeneratePosterior(StageError):
    pass


class NoExperts(StageError):
    pass


class StageFailure(ChamError):
    """A stage error raised while a pipeline iteration was running."""

    def __init__(self, iteration: int, rule: str, cause: Exception) -> None:
        self.iteration = iteration
        self.rule = rule
        self.cause = cause
        super().__init__(f"iteration {iteration}, {rule}: {cause}")
