"""Span-overlap evaluation: word-level PRF, containment, coverage, IoU-F1.

All dataset-level numbers are micro-aggregated: counts are pooled over
rows first, then divided, so rows with empty gold or empty predictions
contribute their counts without producing undefined per-row ratios.

Threshold comparisons ("overlap >= t * length") are evaluated in exact
integer arithmetic after recovering t as a small rational, so a span
covered at exactly 80% passes t=0.8 regardless of how 0.8 rounds in
binary floating point.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from fractions import Fraction

from .corpus import ExtractionResult, GoldRow
from .spans import CharSpan, overlap_length, overlap_with_union, validate_disjoint_sorted

logger = logging.getLogger(__name__)

_WORD_RE = re.compile(r"\S+")
_FRACTION_DENOMINATOR_LIMIT = 10**6


class EvaluationError(ValueError):
    """Gold rows and predictions cannot be evaluated together."""


@dataclass(slots=True)
class RowEval:
    query_id: str
    chunk_id: str
    chunk_text: str
    gold_spans: list[CharSpan]
    pred_spans: list[CharSpan]

    def __post_init__(self) -> None:
        self.gold_spans = sorted(self.gold_spans)
        self.pred_spans = sorted(self.pred_spans)
        label = f"row {self.query_id}/{self.chunk_id}"
        for side, spans in (("gold", self.gold_spans), ("pred", self.pred_spans)):
            validate_disjoint_sorted(spans, label=f"{label} {side} spans")
            for span in spans:
                if span.end > len(self.chunk_text):
                    raise EvaluationError(
                        f"{label}: {side} span [{span.start}, {span.end}) exceeds "
                        f"chunk of length {len(self.chunk_text)}"
                    )


@dataclass(frozen=True, slots=True)
class ThresholdGrid:
    values: tuple[float, ...] = (0.5, 0.8, 1.0)

    def __post_init__(self) -> None:
        for t in self.values:
            if not 0.0 < t <= 1.0:
                raise ValueError(f"thresholds must be in (0, 1], got {t}")


@dataclass(frozen=True)
class MetricsReport:
    word_precision: float
    word_recall: float
    word_f1: float
    containment_at: dict[float, float]
    coverage_at: dict[float, float]
    iou_f1_at_05: float
    abstention_count: int
    row_count: int
    relevant_row_count: int
    gold_span_count: int
    pred_span_count: int

    def to_dict(self) -> dict:
        return {
            "word_precision": self.word_precision,
            "word_recall": self.word_recall,
            "word_f1": self.word_f1,
            "containment_at": {str(t): v for t, v in sorted(self.containment_at.items())},
            "coverage_at": {str(t): v for t, v in sorted(self.coverage_at.items())},
            "iou_f1_at_05": self.iou_f1_at_05,
            "abstention_count": self.abstention_count,
            "row_count": self.row_count,
            "relevant_row_count": self.relevant_row_count,
            "gold_span_count": self.gold_span_count,
            "pred_span_count": self.pred_span_count,
        }


def _as_fraction(t: float) -> Fraction:
    return Fraction(t).limit_denominator(_FRACTION_DENOMINATOR_LIMIT)


def _meets_threshold(overlap: int, length: int, t: Fraction) -> bool:
    # overlap / length >= t, in exact integer arithmetic
    return overlap * t.denominator >= t.numerator * length


# --------------------------------------------------------------------------
# word-level precision / recall


def word_cover(chunk_text: str, spans: list[CharSpan]) -> set[int]:
    """Indices of words covered by the span union.

    Words are maximal non-whitespace runs, indexed left to right; a word
    counts as covered when at least half of its characters lie inside
    the union of ``spans``.
    """
    covered = set()
    for index, match in enumerate(_WORD_RE.finditer(chunk_text)):
        word = CharSpan(match.start(), match.end())
        overlap = sum(overlap_length(word, span) for span in spans)
        if 2 * overlap >= len(word):
            covered.add(index)
    return covered


@dataclass(frozen=True, slots=True)
class WordCounts:
    tp: int
    pred_total: int
    gold_total: int


def word_prf(row: RowEval) -> WordCounts:
    """Word-overlap counts for one row, for micro-pooled aggregation."""
    gold_words = word_cover(row.chunk_text, row.gold_spans)
    pred_words = word_cover(row.chunk_text, row.pred_spans)
    return WordCounts(
        tp=len(gold_words & pred_words),
        pred_total=len(pred_words),
        gold_total=len(gold_words),
    )


# --------------------------------------------------------------------------
# span containment / coverage at threshold t


def containment_at(rows: list[RowEval], t: float) -> float:
    """Fraction of predicted spans at least t-covered by gold.

    Pooled over all predicted spans: a span counts when its overlap with
    the union of its row's gold spans is >= t of the span's length.
    Zero predicted spans yields 0.0 (flagged in the log).
    """
    frac = _as_fraction(_check_t(t))
    total = 0
    contained = 0
    for row in rows:
        for span in row.pred_spans:
            total += 1
            if _meets_threshold(overlap_with_union(span, row.gold_spans), len(span), frac):
                contained += 1
    if total == 0:
        logger.warning("containment@%s: no predicted spans; reporting 0.0", t)
        return 0.0
    return contained / total


def coverage_at(rows: list[RowEval], t: float) -> float:
    """Fraction of gold spans at least t-covered by predictions.

    Pooled over all gold spans; the denominator is the total number of
    gold spans.

    Raises:
        EvaluationError: If the rows contain no gold spans at all.
    """
    frac = _as_fraction(_check_t(t))
    total = 0
    covered = 0
    for row in rows:
        for span in row.gold_spans:
            total += 1
            if _meets_threshold(overlap_with_union(span, row.pred_spans), len(span), frac):
                covered += 1
    if total == 0:
        raise EvaluationError("coverage is undefined: no gold spans in the evaluated rows")
    return covered / total


def _check_t(t: float) -> float:
    if not 0.0 < t <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {t}")
    return t


# --------------------------------------------------------------------------
# IoU-F1


def _iou(a: CharSpan, b: CharSpan) -> Fraction:
    intersection = overlap_length(a, b)
    union = len(a) + len(b) - intersection
    return Fraction(intersection, union)


def iou_f1(rows: list[RowEval], iou_threshold: float = 0.5) -> float:
    """Detection-style span F1 under greedy one-to-one IoU matching.

    Per row, candidate (pred, gold) pairs are matched greedily in
    descending IoU (ties by span order), accepting pairs at or above the
    threshold; F1 comes from pooled matches over pooled span counts.
    """
    threshold = _as_fraction(_check_t(iou_threshold))
    tp = 0
    pred_total = 0
    gold_total = 0
    for row in rows:
        pred_total += len(row.pred_spans)
        gold_total += len(row.gold_spans)
        pairs = [
            (_iou(pred, gold), i, j)
            for i, pred in enumerate(row.pred_spans)
            for j, gold in enumerate(row.gold_spans)
        ]
        pairs.sort(key=lambda item: (-item[0], item[1], item[2]))
        matched_pred: set[int] = set()
        matched_gold: set[int] = set()
        for iou, i, j in pairs:
            if iou < threshold:
                break
            if i not in matched_pred and j not in matched_gold:
                matched_pred.add(i)
                matched_gold.add(j)
                tp += 1
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / gold_total if gold_total else 0.0
    return _harmonic(precision, recall)


def _harmonic(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


# --------------------------------------------------------------------------
# dataset-level evaluation


def build_row_evals(
    gold: list[GoldRow], preds: list[ExtractionResult]
) -> list[RowEval]:
    """Join predictions onto gold rows; missing predictions mean abstain.

    Unjudgeable rows are excluded entirely (and their predictions with
    them).

    Raises:
        EvaluationError: On a prediction without a gold row, or
            duplicate predictions for one (query_id, chunk_id).
    """
    by_key: dict[tuple[str, str], ExtractionResult] = {}
    for pred in preds:
        key = (pred.query_id, pred.chunk_id)
        if key in by_key:
            raise EvaluationError(f"duplicate prediction for {key[0]}/{key[1]}")
        by_key[key] = pred
    gold_keys = {(row.query_id, row.chunk_id) for row in gold}
    for key in by_key:
        if key not in gold_keys:
            raise EvaluationError(f"prediction {key[0]}/{key[1]} has no gold row")

    rows = []
    excluded = 0
    for gold_row in gold:
        if gold_row.relevance == "unjudgeable":
            excluded += 1
            continue
        pred = by_key.get((gold_row.query_id, gold_row.chunk_id))
        rows.append(
            RowEval(
                query_id=gold_row.query_id,
                chunk_id=gold_row.chunk_id,
                chunk_text=gold_row.chunk_text,
                gold_spans=list(gold_row.gold_spans),
                pred_spans=list(pred.spans) if pred else [],
            )
        )
    if excluded:
        logger.info("excluded %d unjudgeable row(s) from evaluation", excluded)
    return rows


def evaluate(
    gold: list[GoldRow],
    preds: list[ExtractionResult],
    grid: ThresholdGrid | None = None,
    *,
    relevant_row_count: int | None = None,
) -> MetricsReport:
    """Compute the full metric suite for predictions against gold rows."""
    grid = grid or ThresholdGrid()
    rows = build_row_evals(gold, preds)
    counts = [word_prf(row) for row in rows]
    tp = sum(c.tp for c in counts)
    pred_total = sum(c.pred_total for c in counts)
    gold_total = sum(c.gold_total for c in counts)
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / gold_total if gold_total else 0.0

    return MetricsReport(
        word_precision=precision,
        word_recall=recall,
        word_f1=_harmonic(precision, recall),
        containment_at={t: containment_at(rows, t) for t in grid.values},
        coverage_at={t: coverage_at(rows, t) for t in grid.values},
        iou_f1_at_05=iou_f1(rows, 0.5),
        abstention_count=sum(1 for row in rows if not row.pred_spans),
        row_count=len(rows),
        relevant_row_count=sum(
            1 for row in gold if row.relevance == "relevant"
        ) if relevant_row_count is None else relevant_row_count,
        gold_span_count=sum(len(row.gold_spans) for row in rows),
        pred_span_count=sum(len(row.pred_spans) for row in rows),
    )


def format_report(report: MetricsReport) -> str:
    """Human-readable rendering of a metrics report."""
    lines = [
        f"rows evaluated      {report.row_count:>8d}",
        f"relevant rows       {report.relevant_row_count:>8d}",
        f"gold spans          {report.gold_span_count:>8d}",
        f"predicted spans     {report.pred_span_count:>8d}",
        f"abstentions         {report.abstention_count:>8d}",
        f"word precision      {report.word_precision:>8.4f}",
        f"word recall         {report.word_recall:>8.4f}",
        f"word F1             {report.word_f1:>8.4f}",
        f"IoU-F1@0.5          {report.iou_f1_at_05:>8.4f}",
        "",
        "   t   containment  coverage",
    ]
    for t in sorted(report.containment_at):
        lines.append(f"  {t:<4g}    {report.containment_at[t]:>7.4f}   {report.coverage_at[t]:>7.4f}")
    return "\n".join(lines) + "\n"
