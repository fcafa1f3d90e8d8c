import pytest

from qtriage.repository import LabelSchema, QuestionRecord, build_repository
from qtriage.retrieval import Bm25Params, build_index


@pytest.fixture
def tiny_schema():
    return LabelSchema(categorical=("topic",), continuous=("minutes",))


@pytest.fixture
def tiny_records():
    return [
        QuestionRecord(0, "shipping late", {"topic": "delivery"}, {"minutes": 3.0}),
        QuestionRecord(1, "shipping refund", {"topic": "refund"}, {"minutes": 5.0}),
        QuestionRecord(2, "cancel order", {"topic": "cancel"}, {"minutes": 7.0}),
    ]


@pytest.fixture
def tiny_repo(tiny_records, tiny_schema):
    return build_repository(tiny_records, tiny_schema)


@pytest.fixture
def tiny_index(tiny_repo):
    return build_index(tiny_repo, Bm25Params())
