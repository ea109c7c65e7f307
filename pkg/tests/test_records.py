import math

import pytest

from docreward.records import (
    EntropyRecord,
    GroupRollout,
    RewardBreakdown,
    Sample,
    SchemaError,
    Segment,
    SegmentKind,
    SegmentedDoc,
)


def test_sample_minimal():
    s = Sample(id="a", ground_truth="hello")
    assert s.prediction is None
    assert s.token_logprobs is None
    assert s.extra == {}


def test_sample_rejects_empty_id():
    with pytest.raises(SchemaError):
        Sample(id="", ground_truth="x")


def test_sample_rejects_bad_logprobs():
    with pytest.raises(SchemaError):
        Sample(id="a", ground_truth="x", token_logprobs=(0.5,))
    with pytest.raises(SchemaError):
        Sample(id="a", ground_truth="x", token_logprobs=(math.nan,))
    with pytest.raises(SchemaError):
        Sample(id="a", ground_truth="x", token_logprobs=(-math.inf,))


def test_sample_rejects_unknown_language():
    with pytest.raises(SchemaError):
        Sample(id="a", ground_truth="x", language="fr")
    Sample(id="a", ground_truth="x", language="other")


def test_sample_extra_ignored_in_equality():
    a = Sample(id="a", ground_truth="x", extra={"k": 1})
    b = Sample(id="a", ground_truth="x", extra={"k": 2})
    assert a == b


def test_segment_span_validation():
    Segment(SegmentKind.PLAIN_TEXT, "a", (0, 1))
    with pytest.raises(ValueError):
        Segment(SegmentKind.PLAIN_TEXT, "a", (1, 1))
    with pytest.raises(ValueError):
        Segment(SegmentKind.PLAIN_TEXT, "a", (-1, 2))


def test_segmented_doc_contents_filters_by_kind():
    doc = SegmentedDoc(
        source="x $y$",
        segments=(
            Segment(SegmentKind.PLAIN_TEXT, "x ", (0, 2)),
            Segment(SegmentKind.FORMULA, "y", (2, 5)),
        ),
    )
    assert doc.contents(SegmentKind.PLAIN_TEXT) == ["x "]
    assert doc.contents(SegmentKind.FORMULA) == ["y"]
    assert doc.contents(SegmentKind.TABLE) == []


def test_breakdown_present_types():
    b = RewardBreakdown(
        text_score=1.0, formula_score=None, table_score=0.5, composite=0.75
    )
    assert b.present_types == 2


def test_group_rollout_validation():
    GroupRollout(prompt_id="p", rewards=(1.0,))
    with pytest.raises(ValueError):
        GroupRollout(prompt_id="p", rewards=())
    with pytest.raises(ValueError):
        GroupRollout(prompt_id="p", rewards=(1.0, 2.0), advantages=(0.0,))


def test_entropy_record_validation():
    EntropyRecord(sample_id="a", token_count=3, mean_entropy=0.0)
    with pytest.raises(ValueError):
        EntropyRecord(sample_id="a", token_count=0, mean_entropy=0.1)
    with pytest.raises(ValueError):
        EntropyRecord(sample_id="a", token_count=1, mean_entropy=-0.1)
