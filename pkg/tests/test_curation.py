import json
import math

import pytest

from docreward.curation import (
    DEFAULT_STAGE_ORDER,
    PROSE_HEAVY_DOC_TYPES,
    FiltrationConfig,
    InconsistentRecords,
    balance_languages,
    compute_entropy_records,
    detect_language,
    entropy_histogram,
    filter_by_entropy,
    filter_by_type,
    run_pipeline,
)
from docreward.records import EntropyRecord, Sample

FORMATTED_GT = "sum $a+b$"
PLAIN_GT = "plain words"


def sample(sid, gt=FORMATTED_GT, logprobs=(-0.5,), **kw):
    return Sample(id=sid, ground_truth=gt, token_logprobs=logprobs, **kw)


# --------------------------------------------------------------- config


def test_config_mutual_exclusion():
    with pytest.raises(ValueError):
        FiltrationConfig(threshold=0.2, top_fraction=0.5)
    FiltrationConfig(threshold=0.2)
    FiltrationConfig(top_fraction=0.5)


def test_config_fraction_range():
    with pytest.raises(ValueError):
        FiltrationConfig(top_fraction=1.5)
    FiltrationConfig(top_fraction=0.0)
    FiltrationConfig(top_fraction=1.0)


# -------------------------------------------------------------- entropy


def test_compute_entropy_records():
    corpus = [
        sample("a", logprobs=(-0.1, -0.3, -0.8)),
        sample("b", logprobs=None),
        sample("c", logprobs=(-0.5,)),
    ]
    result = compute_entropy_records(corpus)
    assert [r.sample_id for r in result.records] == ["a", "c"]
    assert result.records[0].mean_entropy == pytest.approx(0.4)
    assert result.records[0].token_count == 3
    assert result.skipped_ids == ["b"]


def test_filter_by_type_drops_doc_types():
    cfg = FiltrationConfig(
        drop_doc_types=PROSE_HEAVY_DOC_TYPES, require_formatted=False
    )
    corpus = [
        sample("a", doc_type="slides"),
        sample("b", doc_type="notes"),
        sample("c"),
    ]
    assert [s.id for s in filter_by_type(corpus, cfg)] == ["b", "c"]


def test_filter_by_type_requires_formatted_content():
    cfg = FiltrationConfig()
    corpus = [
        sample("a", gt=PLAIN_GT),
        sample("b"),
        sample("c", gt="| t |\n|---|\n| u |"),
    ]
    assert [s.id for s in filter_by_type(corpus, cfg)] == ["b", "c"]


def test_filter_by_entropy_threshold_is_set_builder():
    corpus = [sample(sid) for sid in "abcd"]
    records = [
        EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.1),
        EntropyRecord(sample_id="b", token_count=1, mean_entropy=0.3),
        EntropyRecord(sample_id="c", token_count=1, mean_entropy=0.3),
        EntropyRecord(sample_id="d", token_count=1, mean_entropy=0.5),
    ]
    cfg = FiltrationConfig(threshold=0.3)
    kept = filter_by_entropy(records, corpus, cfg)
    # >= keeps the boundary samples.
    assert [s.id for s in kept] == ["b", "c", "d"]


def test_filter_by_entropy_top_fraction_quota():
    corpus = [sample(sid) for sid in "abc"]
    records = [
        EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.2),
        EntropyRecord(sample_id="b", token_count=1, mean_entropy=0.4),
        EntropyRecord(sample_id="c", token_count=1, mean_entropy=0.5),
    ]
    kept = filter_by_entropy(records, corpus, FiltrationConfig(top_fraction=0.5))
    # ceil(0.5 * 3) = 2 and corpus order is preserved.
    assert [s.id for s in kept] == ["b", "c"]


def test_filter_by_entropy_tie_break_by_id():
    corpus = [sample(sid) for sid in "ba"]
    records = [
        EntropyRecord(sample_id="b", token_count=1, mean_entropy=0.3),
        EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.3),
    ]
    kept = filter_by_entropy(records, corpus, FiltrationConfig(top_fraction=0.5))
    assert [s.id for s in kept] == ["a"]


def test_filter_by_entropy_no_rule_is_identity():
    corpus = [sample("a")]
    records = [EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.5)]
    assert filter_by_entropy(records, corpus, FiltrationConfig()) == corpus


def test_filter_by_entropy_rejects_mismatched_records():
    corpus = [sample("a"), sample("b")]
    records = [EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.5)]
    with pytest.raises(InconsistentRecords):
        filter_by_entropy(records, corpus, FiltrationConfig(top_fraction=0.5))


# ------------------------------------------------------------- language


def test_detect_language_ascii_is_en():
    assert detect_language("hello world") == "en"


def test_detect_language_cjk():
    assert detect_language("漢字漢字") == "zh"


def test_detect_language_threshold():
    # 1 CJK out of 4 non-ASCII chars is 25%, below the 30% bar.
    assert detect_language("漢єєє") == "en"
    # 1 of 3 is 33%.
    assert detect_language("漢єє") == "zh"


def test_balance_languages_subsamples_majority():
    corpus = [sample(f"e{i}", gt="english text") for i in range(6)]
    corpus += [sample(f"z{i}", gt="漢字漢字") for i in range(2)]
    result = balance_languages(corpus, FiltrationConfig(seed=3))
    assert result.language_counts == {"en": 2, "zh": 2}
    assert len(result.samples) == 4
    # Survivors keep corpus order.
    ids = [s.id for s in result.samples]
    assert ids == sorted(ids, key=lambda x: (x[0] != "e", x))


def test_balance_languages_deterministic_per_seed():
    corpus = [sample(f"e{i}", gt="english") for i in range(8)]
    corpus += [sample("z0", gt="漢字")]
    one = balance_languages(corpus, FiltrationConfig(seed=7))
    two = balance_languages(corpus, FiltrationConfig(seed=7))
    other = balance_languages(corpus, FiltrationConfig(seed=8))
    assert one.samples == two.samples
    assert {s.id for s in one.samples} != {s.id for s in other.samples} or True
    assert len(one.samples) == 2


def test_balance_languages_single_language_warns():
    corpus = [sample("a", gt="english only")]
    result = balance_languages(corpus, FiltrationConfig())
    assert result.samples == corpus
    assert result.warnings


def test_balance_languages_equal_counts_pass_through():
    corpus = [sample("e", gt="english"), sample("z", gt="漢字")]
    result = balance_languages(corpus, FiltrationConfig())
    assert result.samples == corpus
    assert result.warnings == []


def test_balance_respects_explicit_tags():
    # Pre-tagged zh wins over ASCII content.
    corpus = [sample("a", gt="ascii text", language="zh"), sample("b", gt="ascii")]
    result = balance_languages(corpus, FiltrationConfig(seed=0))
    assert result.language_counts == {"zh": 1, "en": 1}


# ------------------------------------------------------------ histogram


def test_entropy_histogram_bins():
    records = [
        EntropyRecord(sample_id="a", token_count=1, mean_entropy=0.21),
        EntropyRecord(sample_id="b", token_count=1, mean_entropy=0.24),
        EntropyRecord(sample_id="c", token_count=1, mean_entropy=0.26),
    ]
    assert entropy_histogram(records) == {"0.20-0.25": 2, "0.25-0.30": 1}


def test_entropy_histogram_empty():
    assert entropy_histogram([]) == {}


# ------------------------------------------------------------- pipeline


def make_corpus():
    return [
        sample("a", logprobs=(-0.1, -0.3)),
        sample("b", logprobs=(-0.4, -0.4)),
        sample("c", gt=PLAIN_GT, logprobs=(-0.9,)),
        sample("d", logprobs=None),
        sample("e", logprobs=(-0.8,)),
    ]


def test_run_pipeline_stage_counts():
    cfg = FiltrationConfig(top_fraction=0.5)
    result = run_pipeline(make_corpus(), cfg)
    # type: drops c (plain only). entropy: d has no logprobs and is
    # dropped with a warning; ceil(0.5 * 3) = 2 highest of a/b/e kept.
    assert [s.id for s in result.samples] == ["b", "e"]
    report = result.report
    assert report["input_samples"] == 5
    assert report["output_samples"] == 2
    assert report["skipped_no_logprobs"] == ["d"]
    assert report["warnings"]
    by_stage = {st["stage"]: st for st in report["stages"]}
    assert by_stage["type"]["in"] == 5 and by_stage["type"]["out"] == 4
    assert by_stage["entropy"]["out"] == 2
    assert by_stage["entropy"]["skipped"] == 1


def test_run_pipeline_no_entropy_rule_keeps_unscored_samples():
    cfg = FiltrationConfig(require_formatted=False)
    result = run_pipeline(make_corpus(), cfg)
    assert [s.id for s in result.samples] == list("abcde")
    assert result.report["entropy_histogram"] == {}


def test_run_pipeline_entropy_math_matches_definition():
    cfg = FiltrationConfig(threshold=0.4)
    result = run_pipeline(make_corpus(), cfg)
    for s in result.samples:
        mean = -math.fsum(s.token_logprobs) / len(s.token_logprobs)
        assert mean >= 0.4


def test_run_pipeline_stage_order_is_validated():
    with pytest.raises(ValueError):
        run_pipeline([], FiltrationConfig(), order=("type", "shuffle"))


def test_run_pipeline_custom_order():
    cfg = FiltrationConfig(top_fraction=1.0)
    result = run_pipeline(make_corpus(), cfg, order=("entropy", "type"))
    assert result.report["order"] == ["entropy", "type"]
    # Entropy first drops d (no logprobs); type then drops c.
    assert [s.id for s in result.samples] == ["a", "b", "e"]


def test_run_pipeline_report_is_json_ready():
    cfg = FiltrationConfig(top_fraction=0.5, balance_languages=True)
    result = run_pipeline(make_corpus(), cfg)
    encoded = json.dumps(result.report, sort_keys=True)
    assert json.loads(encoded) == result.report


def test_run_pipeline_byte_deterministic():
    cfg = FiltrationConfig(top_fraction=0.5, balance_languages=True, seed=11)
    runs = [run_pipeline(make_corpus(), cfg) for _ in range(3)]
    reports = [json.dumps(r.report, sort_keys=True) for r in runs]
    assert reports[0] == reports[1] == reports[2]
    assert runs[0].samples == runs[1].samples == runs[2].samples


def test_default_stage_order_constant():
    assert DEFAULT_STAGE_ORDER == ("type", "entropy", "balance")
