"""Span-overlap evaluation: word P/R/F1, containment, coverage, IoU-F1.

The worked instance below makes every number checkable by hand: ten
9-character words separated by single spaces (99 chars), gold marks
everything except the sixth word, the prediction claims the whole text.

Run: python3 demos/05_evaluation.py
"""

from spanqa.corpus import ExtractionResult, GoldRow
from spanqa.metrics import ThresholdGrid, evaluate, format_report
from spanqa.spans import CharSpan

WORDS = [f"word{i}wxyz" for i in range(10)]
TEXT = " ".join(WORDS)  # 99 chars; word i occupies [10*i, 10*i + 9)


def main() -> None:
    gold = [
        GoldRow(
            query_id="q1",
            query_text="which words are evidence?",
            chunk_id="demo#0000",
            chunk_text=TEXT,
            relevance="relevant",
            gold_spans=(CharSpan(0, 49), CharSpan(60, 99)),  # all but word 5
        ),
        GoldRow(
            query_id="q2",
            query_text="anything about aardvarks?",
            chunk_id="demo#0001",
            chunk_text=TEXT,
            relevance="irrelevant",
            gold_spans=(),
        ),
    ]
    preds = [
        ExtractionResult(
            query_id="q1", chunk_id="demo#0000",
            spans=(CharSpan(0, 99),), backend="demo", abstained=False,
        ),
        ExtractionResult(
            query_id="q2", chunk_id="demo#0001",
            spans=(), backend="demo", abstained=True,
        ),
    ]

    report = evaluate(gold, preds, ThresholdGrid((0.5, 0.8, 1.0)))
    print(format_report(report))

    print("by hand:")
    print("  pred covers all 10 words, gold covers 9 -> precision 9/10, recall 9/9")
    print("  the one predicted span overlaps gold on 88/99 chars (~0.889):")
    print("    contained at t=0.5 and t=0.8, not at t=1.0")
    print("  both gold spans are fully inside the prediction -> coverage 1 at every t")
    print("  thresholds compare exact rational overlaps, so t=1.0 means")
    print("  literally total containment, never 'within float epsilon of it'")


if __name__ == "__main__":
    main()
