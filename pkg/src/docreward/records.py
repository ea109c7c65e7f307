"""Core record types shared by every stage of the engine.

All types are immutable after construction and safe to share across
threads. Logprobs are natural-log (nats) throughout; the corpus schema
documents this to avoid log2/log10 confusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

#: The nine canonical document categories. ``doc_type`` is a free-form tag
#: (benchmark corpora use slight variants such as "textbook"), but these are
#: the values the curation defaults are written against.
DOC_TYPES = (
    "notes",
    "financial_reports",
    "slides",
    "exam_papers",
    "synthetic_data",
    "magazines",
    "academic_papers",
    "books",
    "newspapers",
)

LANGUAGE_TAGS = ("en", "zh", "other")


class SchemaError(ValueError):
    """A record violates the corpus schema. Carries the 1-based line number
    when raised during ingestion."""

    def __init__(self, reason: str, line: int | None = None):
        self.reason = reason
        self.line = line
        msg = f"line {line}: {reason}" if line is not None else reason
        super().__init__(msg)


class DuplicateIdError(SchemaError):
    def __init__(self, sample_id: str, line: int | None = None):
        super().__init__(f"duplicate sample id {sample_id!r}", line)
        self.sample_id = sample_id


@dataclass(frozen=True)
class Sample:
    """One corpus record: ground-truth document plus optional prediction,
    token logprobs and language/doc-type tags.

    ``extra`` holds unknown JSON keys so round-trips preserve them
    (forward compatibility); the engine itself ignores them.
    """

    id: str
    ground_truth: str
    prediction: str | None = None
    token_logprobs: tuple[float, ...] | None = None
    language: str | None = None
    doc_type: str | None = None
    extra: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.id:
            raise SchemaError("sample id must be non-empty")
        if self.token_logprobs is not None:
            for lp in self.token_logprobs:
                if not math.isfinite(lp):
                    raise SchemaError("logprob not finite")
                if lp > 0:
                    raise SchemaError("logprob > 0")
        if self.language is not None and self.language not in LANGUAGE_TAGS:
            raise SchemaError(f"unknown language tag {self.language!r}")


class SegmentKind(str, Enum):
    PLAIN_TEXT = "plain_text"
    FORMULA = "formula"
    TABLE = "table"


@dataclass(frozen=True)
class Segment:
    """A typed span of a document.

    ``span`` is a half-open byte range [start, end) into the UTF-8 encoding
    of the source. For formulas the span covers the delimiters while
    ``content`` has them stripped; for tables ``content`` is the raw markup.
    """

    kind: SegmentKind
    content: str
    span: tuple[int, int]

    def __post_init__(self):
        start, end = self.span
        if not (0 <= start < end):
            raise ValueError(f"invalid span {self.span}")


@dataclass(frozen=True)
class SegmentedDoc:
    """A document split into plain-text / formula / table segments.

    The byte spans of ``segments`` partition the UTF-8 encoding of
    ``source``: disjoint, ascending, and jointly covering every byte.
    """

    source: str
    segments: tuple[Segment, ...]

    def contents(self, kind: SegmentKind) -> list[str]:
        return [s.content for s in self.segments if s.kind is kind]


@dataclass(frozen=True)
class RewardBreakdown:
    """Per-format scores plus their composite.

    A per-type score is present exactly when the ground truth contains
    scoreable content of that type; ``composite`` is the mean of the
    present scores (uniform unless weights are configured).
    """

    text_score: float | None
    formula_score: float | None
    table_score: float | None
    composite: float

    @property
    def present_types(self) -> int:
        return sum(
            s is not None
            for s in (self.text_score, self.formula_score, self.table_score)
        )


@dataclass(frozen=True)
class RewardError:
    """Marks a batch entry that could not be scored (e.g. empty ground
    truth). Batch scoring never aborts on one bad pair."""

    reason: str


@dataclass(frozen=True)
class GroupRollout:
    """G rewards for one prompt plus their group-normalized advantages."""

    prompt_id: str
    rewards: tuple[float, ...]
    advantages: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.rewards) < 1:
            raise ValueError("a rollout group needs at least one reward")
        if self.advantages and len(self.advantages) != len(self.rewards):
            raise ValueError("rewards and advantages must have equal length")


@dataclass(frozen=True)
class EntropyRecord:
    """Mean output entropy (nats) of one sample: -(1/N) * sum(logprobs)."""

    sample_id: str
    token_count: int
    mean_entropy: float

    def __post_init__(self):
        if self.token_count <= 0:
            raise ValueError("token_count must be positive")
        if self.mean_entropy < 0:
            raise ValueError("mean_entropy must be non-negative")
