"""Composite format-decoupled reward.

A document pair is segmented into plain text, formulas and tables; each
content type present on the ground-truth side gets its own reward (text:
1 - NED, formulas: BLEU over canonical LaTeX tokens, tables: mean TEDS),
and the composite is their mean. Types the ground truth does not contain
are skipped entirely, so prose-only pages are pure text scoring and a
hallucinated table in the prediction is punished through the text stream
where its markup lands.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .formula_metrics import CanonRuleSet, FormulaConfig, formula_reward
from .records import RewardBreakdown, RewardError, SegmentKind
from .segmenter import segment
from .table_metrics import table_reward
from .text_metrics import TextNormConfig, text_reward


class EmptyGroundTruth(ValueError):
    """The ground truth carries nothing scorable."""


@dataclass(frozen=True)
class RewardConfig:
    """Reward definition for one training run.

    Toggles mirror the ablation axes: disabling format separation scores
    whole documents as text; disabling the formula or table reward folds
    that content back into the text stream. Weights apply per present
    type and default to uniform.
    """

    enable_format_separation: bool = True
    enable_formula_reward: bool = True
    enable_table_reward: bool = True
    text_norm: TextNormConfig = field(default_factory=TextNormConfig)
    canon_rules: CanonRuleSet = field(default_factory=CanonRuleSet)
    table_node_cap: int = 5000
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self) -> None:
        if len(self.weights) != 3 or any(w <= 0 for w in self.weights):
            raise ValueError("weights must be three positive reals")
        if self.table_node_cap < 1:
            raise ValueError("table_node_cap must be >= 1")

    def to_dict(self) -> dict:
        return {
            "enable_format_separation": self.enable_format_separation,
            "enable_formula_reward": self.enable_formula_reward,
            "enable_table_reward": self.enable_table_reward,
            "text_norm": self.text_norm.to_dict(),
            "canon_rules": self.canon_rules.to_dict(),
            "table_node_cap": self.table_node_cap,
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RewardConfig":
        return cls(
            enable_format_separation=obj.get("enable_format_separation", True),
            enable_formula_reward=obj.get("enable_formula_reward", True),
            enable_table_reward=obj.get("enable_table_reward", True),
            text_norm=TextNormConfig.from_dict(obj.get("text_norm", {})),
            canon_rules=CanonRuleSet.from_dict(obj.get("canon_rules", {})),
            table_node_cap=obj.get("table_node_cap", 5000),
            weights=tuple(obj.get("weights", (1.0, 1.0, 1.0))),
        )


@dataclass
class _Streams:
    text_parts: list[str]
    formulas: list[str]
    tables: list[str]

    @property
    def text(self) -> str:
        return "".join(self.text_parts)


def extract_streams(doc: str, cfg: RewardConfig) -> _Streams:
    """Split a document into the three scoring streams, folding disabled
    types back into the text stream at their original position."""
    streams = _Streams([], [], [])
    for seg in segment(doc).segments:
        if seg.kind is SegmentKind.FORMULA:
            if cfg.enable_formula_reward:
                if seg.content.strip():
                    streams.formulas.append(seg.content)
            else:
                streams.text_parts.append(seg.content)
        elif seg.kind is SegmentKind.TABLE:
            if cfg.enable_table_reward:
                streams.tables.append(seg.content)
            else:
                streams.text_parts.append(seg.content)
        else:
            streams.text_parts.append(seg.content)
    return streams


def format_decoupled_reward(
    pred: str, gt: str, cfg: RewardConfig | None = None
) -> RewardBreakdown:
    """Score one prediction against its ground truth.

    Raises EmptyGroundTruth when gt is empty or contains no scorable
    content under the active configuration.
    """
    if cfg is None:
        cfg = RewardConfig()
    if not gt:
        raise EmptyGroundTruth("ground truth is empty")

    if not cfg.enable_format_separation:
        score = text_reward(pred, gt, cfg.text_norm)
        return RewardBreakdown(
            text_score=score,
            formula_score=None,
            table_score=None,
            composite=score,
        )

    gt_streams = extract_streams(gt, cfg)
    pred_streams = extract_streams(pred, cfg)

    text_present = bool(cfg.text_norm.apply(gt_streams.text))
    formula_present = bool(gt_streams.formulas)
    table_present = bool(gt_streams.tables)
    if not (text_present or formula_present or table_present):
        raise EmptyGroundTruth("no scorable ground-truth content")

    w_text, w_formula, w_table = cfg.weights
    text_score = formula_score = table_score = None
    weighted = 0.0
    weight_sum = 0.0
    if text_present:
        text_score = text_reward(pred_streams.text, gt_streams.text, cfg.text_norm)
        weighted += w_text * text_score
        weight_sum += w_text
    if formula_present:
        formula_score = formula_reward(
            pred_streams.formulas,
            gt_streams.formulas,
            FormulaConfig(rules=cfg.canon_rules),
        )
        weighted += w_formula * formula_score
        weight_sum += w_formula
    if table_present:
        table_score = table_reward(
            pred_streams.tables, gt_streams.tables, cfg.table_node_cap
        )
        weighted += w_table * table_score
        weight_sum += w_table

    return RewardBreakdown(
        text_score=text_score,
        formula_score=formula_score,
        table_score=table_score,
        composite=weighted / weight_sum,
    )


def batch_reward(
    pairs: Sequence[tuple[str, str]], cfg: RewardConfig | None = None
) -> list[RewardBreakdown | RewardError]:
    """Element-wise scoring; a pair with unscorable ground truth yields a
    RewardError entry instead of aborting the batch."""
    if cfg is None:
        cfg = RewardConfig()
    out: list[RewardBreakdown | RewardError] = []
    for pred, gt in pairs:
        try:
            out.append(format_decoupled_reward(pred, gt, cfg))
        except EmptyGroundTruth as exc:
            out.append(RewardError(reason=str(exc)))
    return out
