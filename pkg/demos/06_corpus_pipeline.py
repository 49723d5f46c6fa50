"""From labeled corpus file to training examples
================================================

The input format is one record per abstract: a ###<pmid> line, then
LABEL<TAB>sentence lines. Selected sections become the source, the
CONCLUSIONS sentences the target, and the result streams out as JSONL.
The same flow is available on the command line via `prefixlm preprocess`.
"""

import json
import tempfile
from pathlib import Path

from prefixlm.data import (
    build_examples,
    corpus_stats,
    parse_corpus,
    write_examples_jsonl,
)

CORPUS = """\
###9001
BACKGROUND\tStatins are widely prescribed after myocardial infarction .
OBJECTIVE\tTo compare early versus delayed statin initiation .
METHODS\tPatients were assigned within 48 hours or after 14 days .
RESULTS\tEarly initiation reduced recurrent events at 90 days .
CONCLUSIONS\tEarly statin initiation improved 90 day outcomes .

###9002
RESULTS\tNo significant difference in symptom scores was found .
CONCLUSIONS\tThe intervention showed no measurable benefit .

###9003
METHODS\tA crossover design was used without a conclusion section .
"""

workdir = Path(tempfile.mkdtemp(prefix="pipeline-demo-"))
corpus_path = workdir / "corpus.txt"
corpus_path.write_text(CORPUS, encoding="utf-8")

abstracts = parse_corpus(corpus_path)
print(f"parsed {len(abstracts)} abstracts")

examples, skipped = build_examples(abstracts, ("BACKGROUND", "OBJECTIVE", "RESULTS"))
print(f"usable examples: {len(examples)}  skipped: {skipped} (no conclusion)")

stats = corpus_stats(examples)
print(f"mean source: {stats['mean_source_words']} words "
      f"({stats['mean_source_sentences']} sentences)")
print(f"mean target: {stats['mean_target_words']} words")

out = workdir / "examples.jsonl"
write_examples_jsonl(examples, out)
print(f"\nwrote {out}:")
for line in out.read_text(encoding="utf-8").splitlines():
    row = json.loads(line)
    print(f"  {row['pmid']}: source {len(row['source'].split())}w"
          f" -> target {row['target']!r}")

# the ablation view keeps only the results section as input
ablation, _ = build_examples(abstracts, ("RESULTS",))
print("\nresults-only ablation source:", ablation[0].source_text)
