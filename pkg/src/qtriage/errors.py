"""Exception types shared across the package.

Every error the library raises on purpose derives from QtriageError so
callers (and the CLI exit-code mapping) can catch one base class.
"""


class QtriageError(Exception):
    """Base class for all qtriage errors."""


# --- repository ---------------------------------------------------------


class DuplicateIdError(QtriageError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"duplicate record id: {record_id}")


class SchemaViolationError(QtriageError):
    def __init__(self, record_id, label_name, detail=""):
        self.record_id = record_id
        self.label_name = label_name
        msg = f"record {record_id}: label {label_name!r} violates schema"
        super().__init__(msg + (f" ({detail})" if detail else ""))


class EmptyQuestionError(QtriageError):
    def __init__(self, record_id):
        self.record_id = record_id
        super().__init__(f"record {record_id}: question has no tokens")


class EmptyRepositoryError(QtriageError):
    pass


class MalformedRecordError(QtriageError):
    def __init__(self, line_number, detail=""):
        self.line_number = line_number
        msg = f"malformed record at line {line_number}"
        super().__init__(msg + (f": {detail}" if detail else ""))


class SchemaMismatchError(QtriageError):
    pass


# --- retrieval ----------------------------------------------------------


class UnknownDocIdError(QtriageError):
    def __init__(self, doc_id):
        self.doc_id = doc_id
        super().__init__(f"unknown doc id: {doc_id}")


class EmptyQueryError(QtriageError):
    """Query tokenized to nothing; distinguishes 'no tokens' from 'no hits'."""


# --- predictor ----------------------------------------------------------


class NoMatchError(QtriageError):
    """No neighbor with a nonzero similarity score; caller decides fallback."""


class UnknownLabelError(QtriageError):
    def __init__(self, label_name):
        self.label_name = label_name
        super().__init__(f"label {label_name!r} is not in the repository schema")


# --- tagger -------------------------------------------------------------


class NoAgentSentenceError(QtriageError):
    pass


class NoCustomerSentenceError(QtriageError):
    pass


class AllMaskedError(QtriageError):
    pass


class EmptyTranscriptError(QtriageError):
    pass


class LabelOutOfRangeError(QtriageError):
    def __init__(self, label, n_classes):
        self.label = label
        self.n_classes = n_classes
        super().__init__(f"class label {label} outside [0, {n_classes})")


class DegenerateDatasetError(QtriageError):
    pass


class ModelMismatchError(QtriageError):
    """Model file is unreadable or inconsistent with its stored config."""


# --- harness / config ---------------------------------------------------


class ConfigError(QtriageError):
    pass
