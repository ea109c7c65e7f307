"""Deterministic reward and evaluation engine for document OCR training.

Documents are split into plain text, formulas and tables; each content
type present in the ground truth is scored with its own metric (edit
distance, BLEU over canonical LaTeX tokens, table TEDS) and the composite
reward is their mean. Around that core sit GRPO advantage numerics,
entropy-based corpus filtration, a benchmark harness, a batch CLI and a
stateless scoring service.
"""

__version__ = "0.1.0"
BUILD_ID = f"docreward {__version__}"

from .records import (
    EntropyRecord,
    GroupRollout,
    RewardBreakdown,
    RewardError,
    Sample,
    SchemaError,
    Segment,
    SegmentedDoc,
    SegmentKind,
)
from .reward import (
    EmptyGroundTruth,
    RewardConfig,
    batch_reward,
    format_decoupled_reward,
)
from .rl_math import GrpoConfig, group_advantages, grpo_objective, mean_entropy
from .segmenter import segment, type_profile
from .table_metrics import MalformedTable, parse_table, table_reward, ted, teds
from .text_metrics import TextNormConfig, levenshtein, ned, text_reward
from .formula_metrics import (
    CanonRuleSet,
    bleu,
    canonicalize,
    formula_reward,
    tokenize_latex,
)
from .bench import BenchRow, evaluate_corpus, overall_score, score_table_rows
from .curation import (
    FiltrationConfig,
    balance_languages,
    compute_entropy_records,
    filter_by_entropy,
    filter_by_type,
    run_pipeline,
)

__all__ = [
    "__version__",
    "BUILD_ID",
    "BenchRow",
    "CanonRuleSet",
    "EmptyGroundTruth",
    "EntropyRecord",
    "FiltrationConfig",
    "GroupRollout",
    "GrpoConfig",
    "MalformedTable",
    "RewardBreakdown",
    "RewardConfig",
    "RewardError",
    "Sample",
    "SchemaError",
    "Segment",
    "SegmentKind",
    "SegmentedDoc",
    "TextNormConfig",
    "balance_languages",
    "batch_reward",
    "bleu",
    "canonicalize",
    "compute_entropy_records",
    "evaluate_corpus",
    "filter_by_entropy",
    "filter_by_type",
    "format_decoupled_reward",
    "group_advantages",
    "grpo_objective",
    "levenshtein",
    "mean_entropy",
    "ned",
    "overall_score",
    "parse_table",
    "run_pipeline",
    "score_table_rows",
    "segment",
    "table_reward",
    "ted",
    "teds",
    "text_reward",
    "tokenize_latex",
    "type_profile",
]
