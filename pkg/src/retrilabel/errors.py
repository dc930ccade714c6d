"""Exception types raised by the retrilabel pipeline.

Grouped by the CLI exit-code categories: configuration problems,
data/input problems, and failures inside a pipeline stage.
"""


class RetrilabelError(Exception):
    """Base class for all library errors."""


class ConfigError(RetrilabelError):
    """Invalid configuration value or config file."""


class DataError(RetrilabelError):
    """Invalid or unreadable input data."""


class StageError(RetrilabelError):
    """A pipeline stage could not complete on otherwise valid inputs."""


# -- corpus ---------------------------------------------------------------

class MalformedRecord(DataError):
    def __init__(self, line_no: int, reason: str = ""):
        self.line_no = line_no
        super().__init__(f"malformed record at line {line_no}" + (f": {reason}" if reason else ""))


class DuplicateId(DataError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"duplicate document id {doc_id!r}")


class EmptyText(DataError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"document {doc_id!r} has empty text")


class BadLabelSpec(DataError):
    """Label-spec file violates the class-id/name contract."""


# -- embedding store ------------------------------------------------------

class DimensionMismatch(DataError):
    def __init__(self, expected: int, got: int, context: str = ""):
        self.expected = expected
        self.got = got
        msg = f"dimension mismatch: expected {expected}, got {got}"
        super().__init__(msg + (f" ({context})" if context else ""))


class CorruptHeader(DataError):
    """Vector file is truncated or its header does not parse."""


class NonFiniteVector(DataError):
    def __init__(self, key: str):
        self.key = key
        super().__init__(f"vector {key!r} contains NaN or Inf components")


class MissingDocVector(DataError):
    def __init__(self, doc_id: str):
        self.doc_id = doc_id
        super().__init__(f"no document vector for corpus id {doc_id!r}")


class NoKnownTokens(StageError):
    def __init__(self, query: str, class_id: int | None = None):
        self.query = query
        self.class_id = class_id
        where = f" (class {class_id})" if class_id is not None else ""
        super().__init__(f"no in-vocabulary tokens in query {query!r}{where}")


class ZeroNorm(StageError):
    """Cosine similarity is undefined for a (near-)zero vector."""


class EmbedderFailure(StageError):
    """External embedder process failed or produced an invalid response."""


# -- expansion ------------------------------------------------------------

class InconsistentCounts(DataError):
    def __init__(self, token: str):
        self.token = token
        super().__init__(f"corpus-wide count for {token!r} is below its class count")


class EmptyCandidatePool(StageError):
    def __init__(self, class_id: int):
        self.class_id = class_id
        super().__init__(f"no expansion candidates left for class {class_id} after exclusion")


# -- classifier -----------------------------------------------------------

class DegenerateLabels(StageError):
    """Training labels cover fewer than two classes."""


class NoConfidentExamples(StageError):
    """No prediction cleared the confidence threshold in a self-training round."""


# -- evaluation -----------------------------------------------------------

class IdSetMismatch(DataError):
    """Prediction and gold maps do not cover the same document ids."""
