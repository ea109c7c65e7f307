"""Benchmark scoring: per-sample metrics, per-doc-type aggregation, and
the combined document parsing score.

The combined score averages three 0-100 terms: (1 - text edit distance)
scaled to 100, the formula score, and table TEDS. Formula scores are a
token-level BLEU proxy unless an externally computed per-sample map is
supplied; the output label always says which one was used.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .formula_metrics import FormulaConfig, formula_reward
from .records import Sample, SchemaError
from .reward import RewardConfig, extract_streams
from .table_metrics import table_reward
from .text_metrics import ned

TOKEN_PROXY_LABEL = "token-proxy"
EXTERNAL_LABEL = "external-CDM"

_OK_MARGIN = 0.02
_ARTIFACT_MARGIN = 0.05


class RangeError(ValueError):
    pass


class MissingPrediction(KeyError):
    pass


def overall_score(text_edit: float, formula: float, table_teds: float) -> float:
    """((1 - text_edit) * 100 + formula + table_teds) / 3."""
    if not 0.0 <= text_edit <= 1.0:
        raise RangeError(f"text_edit {text_edit!r} outside [0, 1]")
    if not 0.0 <= formula <= 100.0:
        raise RangeError(f"formula {formula!r} outside [0, 100]")
    if not 0.0 <= table_teds <= 100.0:
        raise RangeError(f"table_teds {table_teds!r} outside [0, 100]")
    return ((1.0 - text_edit) * 100.0 + formula + table_teds) / 3.0


@dataclass(frozen=True)
class BenchRow:
    """Aggregated metrics for one group of samples. A metric is None when
    no sample in the group has that content type in its ground truth;
    overall is None unless all three terms exist."""

    group: str
    n_samples: int
    text_edit: float | None
    formula_score: float | None
    table_teds: float | None
    table_teds_s: float | None
    overall: float | None
    formula_metric_label: str

    def to_dict(self) -> dict:
        return {
            "group": self.group,
            "n_samples": self.n_samples,
            "text_edit": self.text_edit,
            "formula": self.formula_score,
            "table_teds": self.table_teds,
            "table_teds_s": self.table_teds_s,
            "overall": self.overall,
            "formula_metric_label": self.formula_metric_label,
        }


@dataclass(frozen=True)
class _SampleMetrics:
    doc_type: str
    text_edit: float | None
    formula: float | None
    table_teds: float | None
    table_teds_s: float | None


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _aggregate(
    group: str, metrics: Sequence[_SampleMetrics], label: str
) -> BenchRow:
    text = _mean([m.text_edit for m in metrics if m.text_edit is not None])
    formula = _mean([m.formula for m in metrics if m.formula is not None])
    teds_vals = _mean([m.table_teds for m in metrics if m.table_teds is not None])
    teds_s = _mean([m.table_teds_s for m in metrics if m.table_teds_s is not None])
    overall = (
        overall_score(text, formula, teds_vals)
        if text is not None and formula is not None and teds_vals is not None
        else None
    )
    return BenchRow(
        group=group,
        n_samples=len(metrics),
        text_edit=text,
        formula_score=formula,
        table_teds=teds_vals,
        table_teds_s=teds_s,
        overall=overall,
        formula_metric_label=label,
    )


def evaluate_corpus(
    corpus: Sequence[Sample],
    cfg: RewardConfig | None = None,
    formula_scores: Mapping[str, float] | None = None,
) -> tuple[BenchRow, list[BenchRow]]:
    """Score every sample and aggregate by doc_type plus one overall row.

    formula_scores, when given, must cover every sample whose ground
    truth contains formulas (externally computed values on a 0-100
    scale); otherwise the formula term is 100 * BLEU over canonical
    token streams and is labeled as a proxy.
    """
    if cfg is None:
        cfg = RewardConfig()
    missing = [s.id for s in corpus if s.prediction is None]
    if missing:
        raise MissingPrediction(missing[0])

    label = EXTERNAL_LABEL if formula_scores is not None else TOKEN_PROXY_LABEL
    formula_cfg = FormulaConfig(rules=cfg.canon_rules)
    per_sample: list[_SampleMetrics] = []
    uncovered: list[str] = []
    for sample in corpus:
        gt_streams = extract_streams(sample.ground_truth, cfg)
        pred_streams = extract_streams(sample.prediction or "", cfg)

        text_edit = None
        if cfg.text_norm.apply(gt_streams.text):
            text_edit = ned(pred_streams.text, gt_streams.text, cfg.text_norm)

        formula = None
        if gt_streams.formulas:
            if formula_scores is not None:
                if sample.id not in formula_scores:
                    uncovered.append(sample.id)
                else:
                    formula = float(formula_scores[sample.id])
            else:
                formula = 100.0 * formula_reward(
                    pred_streams.formulas, gt_streams.formulas, formula_cfg
                )

        teds_val = teds_s_val = None
        if gt_streams.tables:
            teds_val = 100.0 * table_reward(
                pred_streams.tables, gt_streams.tables, cfg.table_node_cap
            )
            teds_s_val = 100.0 * table_reward(
                pred_streams.tables,
                gt_streams.tables,
                cfg.table_node_cap,
                structure_only=True,
            )

        per_sample.append(
            _SampleMetrics(
                doc_type=sample.doc_type or "untyped",
                text_edit=text_edit,
                formula=formula,
                table_teds=teds_val,
                table_teds_s=teds_s_val,
            )
        )

    if uncovered:
        raise SchemaError(
            "external formula scores missing for: " + ", ".join(uncovered)
        )

    overall_row = _aggregate("overall", per_sample, label)
    doc_types = sorted({m.doc_type for m in per_sample})
    type_rows = [
        _aggregate(
            doc_type,
            [m for m in per_sample if m.doc_type == doc_type],
            label,
        )
        for doc_type in doc_types
    ]
    return overall_row, type_rows


def score_table_rows(rows: Sequence[Mapping]) -> list[dict]:
    """Recompute the combined score for externally reported result rows
    and check it against the printed value when one is supplied.

    Status tiers: 'ok' within 0.02 (the reachable bound when inputs are
    printed at 3 decimals), 'rounding-artifact' up to 0.05 (flagged, not
    silenced), 'mismatch' beyond that, 'unchecked' without a printed
    value.
    """
    report = []
    for row in rows:
        for key in ("name", "text_edit", "formula", "table_teds"):
            if key not in row:
                raise SchemaError(f"result row missing key {key!r}")
        try:
            recomputed = overall_score(
                float(row["text_edit"]),
                float(row["formula"]),
                float(row["table_teds"]),
            )
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"result row {row.get('name')!r}: {exc}") from exc
        entry = {
            "name": row["name"],
            "recomputed": recomputed,
            "printed": None,
            "delta": None,
            "status": "unchecked",
            "flagged": False,
        }
        printed = row.get("overall_printed")
        if printed is not None:
            delta = abs(recomputed - float(printed))
            if delta <= _OK_MARGIN:
                status = "ok"
            elif delta <= _ARTIFACT_MARGIN:
                status = "rounding-artifact"
            else:
                status = "mismatch"
            entry.update(
                printed=float(printed),
                delta=delta,
                status=status,
                flagged=status != "ok",
            )
        report.append(entry)
    return report


def format_report_table(report: Sequence[Mapping]) -> str:
    """Fixed-format text rendering of a score_table_rows report."""
    lines = [
        f"{'name':<20} {'recomputed':>10} {'printed':>8} {'delta':>7} status",
        "-" * 60,
    ]
    for entry in report:
        printed = "-" if entry["printed"] is None else f"{entry['printed']:.2f}"
        delta = "-" if entry["delta"] is None else f"{entry['delta']:.4f}"
        lines.append(
            f"{entry['name']:<20} {entry['recomputed']:>10.4f} "
            f"{printed:>8} {delta:>7} {entry['status']}"
        )
    return "\n".join(lines)
