"""Scoring generated conclusions
================================

ROUGE-1/2/L over lower-cased whitespace tokens, hint-word exclusion, and
the two human-evaluation tables: verdict counts with accuracy, and mean
Likert ratings.
"""

from prefixlm.rouge import (
    AnnotationRecord,
    RatingRecord,
    aggregate_annotations,
    aggregate_ratings,
    format_annotation_report,
    format_rating_report,
    format_score_report,
    rouge_l,
    rouge_n,
    score_run,
)

cand = "The drug improved symptoms in most patients"
ref = "the drug clearly improved symptoms"
for name, score in [
    ("ROUGE-1", rouge_n(cand, ref, 1)),
    ("ROUGE-2", rouge_n(cand, ref, 2)),
    ("ROUGE-L", rouge_l(cand, ref)),
]:
    print(f"{name}: P={score.precision:.3f} R={score.recall:.3f} F1={score.f1:.3f}")

# corpus scoring strips the first n hint words from both sides, so a forced
# hint cannot inflate the score
outputs = [("Smoking cessation improved outcomes", 1)]
references = ["Smoking was reduced in the intervention group"]
print("\nwith hint stripped:", score_run(outputs, references))
print("without stripping: ", score_run([(outputs[0][0], 0)], references))

print("\n" + format_score_report({
    "demo-run": score_run([(cand, 0)], [ref]),
}))

# annotation verdicts -> accuracy = share of true (TP or TN) judgements
records = []
for system, counts in {
    "baseline": (15, 3, 5, 3, 24),
    "finetuned": (26, 6, 5, 3, 10),
    "human": (32, 11, 0, 0, 7),
}.items():
    for verdict, k in zip(("TP", "TN", "FP", "FN", "NA"), counts):
        records += [AnnotationRecord(system, f"{system}{verdict}{i}", verdict)
                    for i in range(k)]
print("\n" + format_annotation_report(aggregate_annotations(records)))

ratings = [
    RatingRecord("baseline", "1", 3, 3, 3),
    RatingRecord("baseline", "2", 3, 2, 3),
    RatingRecord("finetuned", "1", 4, 4, 3),
    RatingRecord("finetuned", "2", 3, 4, 4),
]
print("\n" + format_rating_report(aggregate_ratings(ratings)))
