"""
Error Types for the HO Semantics Workbench

All failures raised by the package derive from ``WorkbenchError`` so the
command-line front end can map them onto its exit-code contract:

- syntax and input errors (terms, spec files, lambda terms)  -> exit 2
- invalid HO specifications (gaps, overlaps, bad variables)  -> exit 1
- configuration problems (bounds, pools, search parameters)   -> exit 2
"""

from dataclasses import dataclass


class WorkbenchError(Exception):
    """Base class of every error raised by the workbench."""


class TermSyntaxError(WorkbenchError):
    """A text did not match a grammar. Carries the offending position."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class LambdaSyntaxError(TermSyntaxError):
    """A lambda term did not match the named or de Bruijn grammar."""


class SpecSyntaxError(TermSyntaxError):
    """A specification file did not match the spec grammar."""


class UnknownSymbolError(WorkbenchError):
    def __init__(self, symbol, line=None, column=None):
        self.symbol = symbol
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"unknown symbol '{symbol}'{where}")


class ArityError(WorkbenchError):
    def __init__(self, symbol, expected, got, line=None, column=None):
        self.symbol = symbol
        self.expected = expected
        self.got = got
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(
            f"symbol '{symbol}' has arity {expected} but was given {got} argument(s){where}"
        )


class UnboundMetavariableError(WorkbenchError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"metavariable '{name}' is not bound by the substitution")


class BehaviorError(WorkbenchError):
    """A behavior was used in a way its kind does not allow."""


class ContextError(WorkbenchError):
    """A lambda term or renaming violates its declared context size."""


class ConfigurationError(WorkbenchError):
    """Bounds, pools or congruence parameters are unusable."""


@dataclass(frozen=True)
class Issue:
    """One problem found while desugaring or validating a specification."""

    op: str
    W: frozenset
    reason: str

    def describe(self):
        members = ",".join(str(i) for i in sorted(self.W))
        return f"({self.op}, {{{members}}}): {self.reason}"


class SpecError(WorkbenchError):
    """A specification violates the HO rule format. Lists every violation."""

    def __init__(self, issues, message=None):
        self.issues = list(issues)
        if message is None:
            lines = [issue.describe() for issue in self.issues]
            message = f"{len(lines)} specification issue(s):\n  " + "\n  ".join(lines)
        super().__init__(message)


class CongruenceRefusedError(WorkbenchError):
    """The congruence search was asked to run on a pair already distinguished."""

    def __init__(self, verdict):
        self.verdict = verdict
        super().__init__("inputs are already distinguished; congruence search refused")
