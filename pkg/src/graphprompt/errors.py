"""Exception hierarchy shared across the pipeline.

Two broad families matter for CLI exit codes: ``DataError`` (bad or
inconsistent local inputs, exit 2) and ``RemoteServiceError`` (embedding or
chat endpoints misbehaving, exit 3).
"""


class GraphPromptError(Exception):
    """Base class for all library errors."""


class DataError(GraphPromptError):
    """Invalid or inconsistent local data."""


class RemoteServiceError(GraphPromptError):
    """A remote endpoint failed beyond recovery."""


# -- graph loading / querying -------------------------------------------------

class ParseError(DataError):
    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InvariantViolation(DataError):
    pass


class UnknownNode(DataError):
    def __init__(self, node_id):
        super().__init__(f"unknown node id: {node_id}")
        self.node_id = node_id


class InsufficientNodes(DataError):
    pass


# -- embeddings ---------------------------------------------------------------

class DimensionMismatch(DataError):
    pass


class ZeroVector(DataError):
    pass


class MissingEmbedding(DataError):
    def __init__(self, node_id):
        super().__init__(f"no embedding stored for node {node_id}")
        self.node_id = node_id


class FormatError(DataError):
    pass


class ServiceUnavailable(RemoteServiceError):
    def __init__(self, message, attempts=0):
        super().__init__(message)
        self.attempts = attempts


# -- prompts ------------------------------------------------------------------

class MissingField(DataError):
    pass


class EmptyExemplarPool(DataError):
    pass


# -- LLM client ---------------------------------------------------------------

class RetriesExhausted(RemoteServiceError):
    def __init__(self, message, attempts):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class AuthError(RemoteServiceError):
    pass


class PayloadTooLarge(RemoteServiceError):
    pass


# -- harness ------------------------------------------------------------------

class SampleTooLarge(DataError):
    pass


class MixedDatasets(DataError):
    pass
