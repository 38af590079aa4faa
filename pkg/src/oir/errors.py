"""Exception hierarchy shared across the engine.

Every error the public API raises derives from :class:`OirError`, so callers
(CLI, HTTP service) can map failures to exit codes / status codes in one place.
"""


class OirError(Exception):
    """Base class for all engine errors."""


# --- text / embedding ----------------------------------------------------

class EmptyCorpus(OirError):
    """TF-IDF fitting got a corpus with zero non-empty documents."""


class ParseError(OirError):
    """A line of an input file failed to parse."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DuplicateId(OirError):
    def __init__(self, utterance_id: str, line_no: int | None = None):
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(f"duplicate id {utterance_id!r}{where}")
        self.utterance_id = utterance_id
        self.line_no = line_no


class DimMismatch(OirError):
    """Vector dimension disagrees with the established dimension."""

    def __init__(self, expected: int, got: int, context: str = ""):
        suffix = f" ({context})" if context else ""
        super().__init__(f"expected dim {expected}, got {got}{suffix}")
        self.expected = expected
        self.got = got


# --- detection ------------------------------------------------------------

class MissingEmbedding(OirError):
    def __init__(self, utterance_id: str):
        super().__init__(f"no embedding for id {utterance_id!r}")
        self.utterance_id = utterance_id


class EmptyClass(OirError):
    def __init__(self, label: str):
        super().__init__(f"class {label!r} has no examples")
        self.label = label


class DegenerateScatter(OirError):
    """Within-class scatter cannot be whitened even after ridge regularization."""


class UnknownMode(OirError):
    def __init__(self, mode: str):
        super().__init__(f"unknown boundary mode {mode!r}")
        self.mode = mode


class LabelMismatch(OirError):
    """A prediction references a label outside the known set."""


# --- clustering -----------------------------------------------------------

class TooFewPoints(OirError):
    def __init__(self, n: int, k: int):
        super().__init__(f"cannot form {k} clusters from {n} points")
        self.n = n
        self.k = k


class KMismatch(OirError):
    """Two assignments being aligned have different cluster counts."""


class IdSetMismatch(OirError):
    """Two assignments being aligned cover different utterance ids."""


class MissingGold(OirError):
    def __init__(self, utterance_id: str):
        super().__init__(f"no gold label for id {utterance_id!r}")
        self.utterance_id = utterance_id


# --- labeling -------------------------------------------------------------

class EmptyCluster(OirError):
    """A labeling operation received an empty cluster."""


class NoContent(OirError):
    """Every token in the cluster is a stopword; no keywords to rank."""


class EmptyLabel(OirError):
    """Canonicalization received an empty token list."""


class LexiconError(OirError):
    """A lexicon file violated its format or invariants."""

    def __init__(self, message: str, line_no: int | None = None):
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{message}")
        self.line_no = line_no


# --- service / store ------------------------------------------------------

class EmptyBatch(OirError):
    """An ingested batch contained no utterances."""


class JobNotFound(OirError):
    def __init__(self, job_id: str):
        super().__init__(f"no such job {job_id!r}")
        self.job_id = job_id


class JobNotCompleted(OirError):
    def __init__(self, job_id: str, status: str):
        super().__init__(f"job {job_id!r} is {status}, not completed")
        self.job_id = job_id
        self.status = status


# --- datasets / bench -----------------------------------------------------

class MissingColumn(OirError):
    def __init__(self, column: str):
        super().__init__(f"column {column!r} not in CSV header")
        self.column = column


class EmptyDataset(OirError):
    """A dataset file contained no rows."""


class TooFewClasses(OirError):
    def __init__(self, n_classes: int):
        super().__init__(f"open split needs >= 2 classes, dataset has {n_classes}")
        self.n_classes = n_classes
