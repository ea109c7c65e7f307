"""RL corpus construction: type-based filtering, entropy-based
filtration, and language balancing.

Every stage is a pure function of (samples, config, seed); given the
same inputs the pipeline reproduces its output byte for byte. Stage
order defaults to type -> entropy -> balance and can be rearranged.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import NamedTuple, Sequence

from .records import EntropyRecord, Sample
from .rl_math import mean_entropy
from .segmenter import type_profile

# Document categories that are primarily plain prose; dropping them is
# the usual starting point for a format-focused RL corpus.
PROSE_HEAVY_DOC_TYPES = frozenset({"slides", "magazines", "books", "newspapers"})

_CJK_START = 0x4E00
_CJK_END = 0x9FFF
_CJK_SHARE = 0.30

DEFAULT_STAGE_ORDER = ("type", "entropy", "balance")


class InconsistentRecords(ValueError):
    """Entropy records do not line up with the corpus being filtered."""


@dataclass(frozen=True)
class FiltrationConfig:
    """Knobs for the corpus pipeline.

    Exactly one of threshold / top_fraction may be set; with neither the
    entropy stage is a no-op. top_fraction keeps the highest-entropy
    ceil(fraction * n) samples; threshold keeps samples whose mean
    entropy is >= the given value (both in nats).
    """

    threshold: float | None = None
    top_fraction: float | None = None
    require_formatted: bool = True
    drop_doc_types: frozenset[str] = frozenset()
    balance_languages: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.threshold is not None and self.top_fraction is not None:
            raise ValueError("threshold and top_fraction are mutually exclusive")
        if self.top_fraction is not None and not 0.0 <= self.top_fraction <= 1.0:
            raise ValueError("top_fraction must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "top_fraction": self.top_fraction,
            "require_formatted": self.require_formatted,
            "drop_doc_types": sorted(self.drop_doc_types),
            "balance_languages": self.balance_languages,
            "seed": self.seed,
        }


class EntropyResult(NamedTuple):
    records: list[EntropyRecord]
    skipped_ids: list[str]


def compute_entropy_records(corpus: Sequence[Sample]) -> EntropyResult:
    """One record per sample that carries token logprobs, in input order;
    samples without logprobs are reported in skipped_ids, never scored."""
    records: list[EntropyRecord] = []
    skipped: list[str] = []
    for sample in corpus:
        if not sample.token_logprobs:
            skipped.append(sample.id)
            continue
        records.append(
            EntropyRecord(
                sample_id=sample.id,
                token_count=len(sample.token_logprobs),
                mean_entropy=mean_entropy(sample.token_logprobs),
            )
        )
    return EntropyResult(records, skipped)


def filter_by_type(
    corpus: Sequence[Sample], cfg: FiltrationConfig
) -> list[Sample]:
    """Drop excluded doc types and, when required, samples whose ground
    truth contains neither a formula nor a table."""
    kept = []
    for sample in corpus:
        if sample.doc_type is not None and sample.doc_type in cfg.drop_doc_types:
            continue
        if cfg.require_formatted:
            profile = type_profile(sample.ground_truth)
            if not (profile["has_formula"] or profile["has_table"]):
                continue
        kept.append(sample)
    return kept


def filter_by_entropy(
    records: Sequence[EntropyRecord],
    corpus: Sequence[Sample],
    cfg: FiltrationConfig,
) -> list[Sample]:
    """Keep the samples selected by the configured entropy rule,
    preserving corpus order. Ties in top_fraction mode break by sample
    id ascending so reruns are reproducible."""
    by_id = {record.sample_id: record for record in records}
    corpus_ids = [sample.id for sample in corpus]
    if set(by_id) != set(corpus_ids) or len(by_id) != len(records):
        raise InconsistentRecords("record ids do not match corpus ids")

    if cfg.threshold is not None:
        keep_ids = {
            sid for sid, rec in by_id.items() if rec.mean_entropy >= cfg.threshold
        }
    elif cfg.top_fraction is not None:
        quota = math.ceil(cfg.top_fraction * len(corpus_ids))
        ranked = sorted(
            by_id.values(), key=lambda rec: (-rec.mean_entropy, rec.sample_id)
        )
        keep_ids = {rec.sample_id for rec in ranked[:quota]}
    else:
        return list(corpus)
    return [sample for sample in corpus if sample.id in keep_ids]


def detect_language(text: str) -> str:
    """zh when at least 30% of the non-ASCII characters are CJK Unified
    Ideographs, en otherwise. Cheap and deterministic, not a general
    language identifier."""
    non_ascii = 0
    cjk = 0
    for ch in text:
        cp = ord(ch)
        if cp < 0x80:
            continue
        non_ascii += 1
        if _CJK_START <= cp <= _CJK_END:
            cjk += 1
    if non_ascii and cjk / non_ascii >= _CJK_SHARE:
        return "zh"
    return "en"


class BalanceResult(NamedTuple):
    samples: list[Sample]
    language_counts: dict[str, int]
    warnings: list[str]


def balance_languages(
    corpus: Sequence[Sample], cfg: FiltrationConfig
) -> BalanceResult:
    """Subsample the majority of en/zh down to the minority count with a
    seeded PRNG, preserving order among survivors. Pre-tagged samples are
    never re-tagged; 'other' passes through untouched."""
    tagged: list[tuple[Sample, str]] = []
    counts: dict[str, int] = {}
    for sample in corpus:
        language = sample.language or detect_language(sample.ground_truth)
        tagged.append((sample, language))
        counts[language] = counts.get(language, 0) + 1

    n_en = counts.get("en", 0)
    n_zh = counts.get("zh", 0)
    if n_en == 0 or n_zh == 0 or n_en == n_zh:
        warnings = []
        if n_en == 0 or n_zh == 0:
            warnings.append(
                "language balancing skipped: only one of en/zh present"
            )
        return BalanceResult(list(corpus), counts, warnings)

    majority, major_count, minor_count = (
        ("en", n_en, n_zh) if n_en > n_zh else ("zh", n_zh, n_en)
    )
    rng = random.Random(cfg.seed)
    keep_positions = set(rng.sample(range(major_count), minor_count))
    kept: list[Sample] = []
    seen_major = 0
    out_counts: dict[str, int] = {}
    for sample, language in tagged:
        if language == majority:
            position = seen_major
            seen_major += 1
            if position not in keep_positions:
                continue
        kept.append(sample)
        out_counts[language] = out_counts.get(language, 0) + 1
    return BalanceResult(kept, out_counts, [])


_HISTOGRAM_BIN = 0.05


def entropy_histogram(records: Sequence[EntropyRecord]) -> dict[str, int]:
    """Counts per fixed 0.05-nat bin, keyed '<lo>-<hi>' with two-decimal
    bounds, ascending."""
    raw: dict[int, int] = {}
    for record in records:
        bin_index = int(record.mean_entropy / _HISTOGRAM_BIN)
        raw[bin_index] = raw.get(bin_index, 0) + 1
    out: dict[str, int] = {}
    for bin_index in sorted(raw):
        lo = bin_index * _HISTOGRAM_BIN
        out[f"{lo:.2f}-{lo + _HISTOGRAM_BIN:.2f}"] = raw[bin_index]
    return out


class PipelineResult(NamedTuple):
    samples: list[Sample]
    report: dict


def run_pipeline(
    corpus: Sequence[Sample],
    cfg: FiltrationConfig,
    order: Sequence[str] = DEFAULT_STAGE_ORDER,
) -> PipelineResult:
    """Apply the configured stages in the given order and collect a
    sidecar report (per-stage counts, language counts, entropy histogram,
    warnings)."""
    unknown = [stage for stage in order if stage not in DEFAULT_STAGE_ORDER]
    if unknown:
        raise ValueError(f"unknown pipeline stages: {unknown}")

    current = list(corpus)
    stages: list[dict] = []
    warnings: list[str] = []
    histogram: dict[str, int] = {}
    language_counts: dict[str, int] = {}
    skipped_ids: list[str] = []

    for stage in order:
        before = len(current)
        if stage == "type":
            current = filter_by_type(current, cfg)
        elif stage == "entropy":
            if cfg.threshold is None and cfg.top_fraction is None:
                stages.append(
                    {"stage": stage, "in": before, "out": before, "skipped": 0}
                )
                continue
            records, skipped_ids = compute_entropy_records(current)
            if skipped_ids:
                warnings.append(
                    f"{len(skipped_ids)} sample(s) without token_logprobs "
                    "dropped before entropy filtration"
                )
                skipped_set = set(skipped_ids)
                current = [s for s in current if s.id not in skipped_set]
            histogram = entropy_histogram(records)
            current = filter_by_entropy(records, current, cfg)
            stages.append(
                {
                    "stage": stage,
                    "in": before,
                    "out": len(current),
                    "skipped": len(skipped_ids),
                }
            )
            continue
        elif stage == "balance":
            if cfg.balance_languages:
                balanced = balance_languages(current, cfg)
                current = balanced.samples
                language_counts = balanced.language_counts
                warnings.extend(balanced.warnings)
        stages.append({"stage": stage, "in": before, "out": len(current)})

    report = {
        "config": cfg.to_dict(),
        "order": list(order),
        "input_samples": len(corpus),
        "output_samples": len(current),
        "stages": stages,
        "skipped_no_logprobs": skipped_ids,
        "language_counts": language_counts,
        "entropy_histogram": histogram,
        "warnings": warnings,
    }
    return PipelineResult(current, report)
