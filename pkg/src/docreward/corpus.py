"""JSONL corpus persistence.

One JSON object per line, UTF-8, keys in a fixed documented order so that
identical inputs always produce byte-identical files. Ingestion never
mutates document strings; normalization is a metric concern, not an I/O
concern.

Corpus line schema::

    {"id": str, "ground_truth": str, "prediction": str?,
     "token_logprobs": [float]?, "language": str?, "doc_type": str?}

Unknown keys are preserved on round-trip but otherwise ignored.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, NamedTuple

from .records import (
    DuplicateIdError,
    EntropyRecord,
    GroupRollout,
    RewardBreakdown,
    RewardError,
    Sample,
    SchemaError,
)

_SAMPLE_KEYS = (
    "id",
    "ground_truth",
    "prediction",
    "token_logprobs",
    "language",
    "doc_type",
)


class IoError(OSError):
    pass


class ReadResult(NamedTuple):
    samples: list[Sample]
    skipped_lines: list[int]


def _sample_from_obj(obj: dict[str, Any], line: int) -> Sample:
    if not isinstance(obj, dict):
        raise SchemaError("line is not a JSON object", line)
    if "id" not in obj or "ground_truth" not in obj:
        raise SchemaError("missing required key 'id' or 'ground_truth'", line)
    if not isinstance(obj["id"], str):
        raise SchemaError("id must be a string", line)
    if not isinstance(obj["ground_truth"], str):
        raise SchemaError("ground_truth must be a string", line)
    prediction = obj.get("prediction")
    if prediction is not None and not isinstance(prediction, str):
        raise SchemaError("prediction must be a string", line)
    logprobs = obj.get("token_logprobs")
    if logprobs is not None:
        if not isinstance(logprobs, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in logprobs
        ):
            raise SchemaError("token_logprobs must be a list of numbers", line)
        logprobs = tuple(float(x) for x in logprobs)
    language = obj.get("language")
    if language is not None and not isinstance(language, str):
        raise SchemaError("language must be a string", line)
    doc_type = obj.get("doc_type")
    if doc_type is not None and not isinstance(doc_type, str):
        raise SchemaError("doc_type must be a string", line)
    extra = {k: v for k, v in obj.items() if k not in _SAMPLE_KEYS}
    try:
        return Sample(
            id=obj["id"],
            ground_truth=obj["ground_truth"],
            prediction=prediction,
            token_logprobs=logprobs,
            language=language,
            doc_type=doc_type,
            extra=extra,
        )
    except SchemaError as e:
        raise SchemaError(e.reason, line) from None


def read_corpus(path: str | os.PathLike, strict: bool = True) -> ReadResult:
    """Read a JSONL corpus in file order.

    In strict mode any malformed line aborts with its line number; in
    lenient mode malformed lines (including later duplicates of an id) are
    skipped and their line numbers returned.
    """
    try:
        with open(path, "rb") as f:
            raw_lines = f.read().splitlines()
    except OSError as e:
        raise IoError(f"cannot read corpus {path}: {e}") from e

    samples: list[Sample] = []
    skipped: list[int] = []
    seen: set[str] = set()
    for lineno, raw in enumerate(raw_lines, start=1):
        if not raw.strip():
            continue
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            if strict:
                raise SchemaError("line is not valid UTF-8", lineno) from None
            skipped.append(lineno)
            continue
        try:
            obj = json.loads(text)
            sample = _sample_from_obj(obj, lineno)
            if sample.id in seen:
                raise DuplicateIdError(sample.id, lineno)
        except SchemaError:
            if strict:
                raise
            skipped.append(lineno)
            continue
        except json.JSONDecodeError as e:
            if strict:
                raise SchemaError(f"invalid JSON: {e.msg}", lineno) from None
            skipped.append(lineno)
            continue
        seen.add(sample.id)
        samples.append(sample)
    return ReadResult(samples, skipped)


def sample_to_obj(sample: Sample) -> dict[str, Any]:
    obj: dict[str, Any] = {"id": sample.id, "ground_truth": sample.ground_truth}
    if sample.prediction is not None:
        obj["prediction"] = sample.prediction
    if sample.token_logprobs is not None:
        obj["token_logprobs"] = list(sample.token_logprobs)
    if sample.language is not None:
        obj["language"] = sample.language
    if sample.doc_type is not None:
        obj["doc_type"] = sample.doc_type
    obj.update(sample.extra)
    return obj


def breakdown_to_obj(
    rid: str, b: RewardBreakdown | RewardError
) -> dict[str, Any]:
    """Reward output schema: {"id", "text"?, "formula"?, "table"?, "composite"}."""
    obj: dict[str, Any] = {"id": rid}
    if isinstance(b, RewardError):
        obj["error"] = b.reason
        return obj
    if b.text_score is not None:
        obj["text"] = b.text_score
    if b.formula_score is not None:
        obj["formula"] = b.formula_score
    if b.table_score is not None:
        obj["table"] = b.table_score
    obj["composite"] = b.composite
    return obj


def record_to_obj(record: Any) -> dict[str, Any]:
    if isinstance(record, Sample):
        return sample_to_obj(record)
    if isinstance(record, EntropyRecord):
        return {
            "sample_id": record.sample_id,
            "token_count": record.token_count,
            "mean_entropy": record.mean_entropy,
        }
    if isinstance(record, GroupRollout):
        obj: dict[str, Any] = {
            "prompt_id": record.prompt_id,
            "rewards": list(record.rewards),
        }
        if record.advantages:
            obj["advantages"] = list(record.advantages)
        return obj
    if isinstance(record, dict):
        return record
    raise TypeError(f"cannot serialize record of type {type(record).__name__}")


def dumps_line(obj: dict[str, Any]) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def write_records(path: str | os.PathLike, records: Iterable[Any]) -> None:
    """Write records as JSONL; byte-identical across runs for identical input."""
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            for record in records:
                f.write(dumps_line(record_to_obj(record)))
                f.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e
