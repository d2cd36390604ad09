"""Exception hierarchy shared by every stage of the pipeline."""


class PapbError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PapbError):
    """A file could not be parsed. ``line`` is 1-based when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)


class ValidationError(PapbError):
    pass


class UnsupportedFramework(PapbError):
    pass


class MissingSourceNode(PapbError):
    pass


class UnknownParameter(PapbError):
    pass


class NonPositiveScale(PapbError):
    pass


class InvalidSelection(PapbError):
    pass


class ExecutorFailure(PapbError):
    """Raised by an executor when a single run fails; the plan continues."""


class ScenarioMiss(PapbError):
    """The simulated scenario has no baseline for a (workload, node count)."""


class NoSuccessfulRuns(PapbError):
    pass


class NonPositiveNodes(PapbError):
    pass


class NonPositiveRate(PapbError):
    pass


class UnpricedSku(PapbError):
    pass


class NodeCountMismatch(PapbError):
    pass


class SchemaVersionMismatch(ParseError):
    pass


class InconsistentWorkloadSets(UserWarning):
    """Reports cover different workloads; only the intersection is tabled."""
