import json

import pytest

from prefixlm.cli import main

CORPUS = """\
###100
BACKGROUND\tDrug A is widely used .
OBJECTIVE\tTo compare drug A with placebo .
RESULTS\tDrug A reduced symptoms significantly .
CONCLUSIONS\tDrug A is effective .

###200
RESULTS\tNo difference was observed between groups .
CONCLUSIONS\tTreatment B showed no benefit .
"""


@pytest.fixture()
def corpus_file(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text(CORPUS, encoding="utf-8")
    return path


def _preprocess(tmp_path, corpus_file, sections="background,objective,results"):
    out = tmp_path / "examples.jsonl"
    code = main(["preprocess", "--corpus", str(corpus_file),
                 "--sections", sections, "--out", str(out)])
    return code, out


def _train_tokenizer(tmp_path, examples):
    vocab = tmp_path / "vocab.tsv"
    merges = tmp_path / "merges.tsv"
    code = main(["train-tokenizer", "--examples", str(examples),
                 "--num-merges", "30", "--out-vocab", str(vocab),
                 "--out-merges", str(merges)])
    return code, vocab, merges


def _write_config(tmp_path, examples, vocab, merges, steps=3, seed=5):
    cfg = tmp_path / "train.cfg"
    cfg.write_text(
        f"""\
seed={seed}
n_hints=0
batch_size=2
steps={steps}
lr=0.001
momentum=0.9
weight_decay=0.0005
max_len=500
checkpoint_path={tmp_path / 'ck.bin'}
checkpoint_every=0
data_path={examples}
vocab_file={vocab}
merges_file={merges}
n_layers=1
d_model=16
n_heads=2
d_ff=32
max_positions=256
loss_log={tmp_path / 'loss.csv'}
""",
        encoding="utf-8",
    )
    return cfg


def test_preprocess_writes_examples_and_manifest(tmp_path, corpus_file, capsys):
    code, out = _preprocess(tmp_path, corpus_file)
    assert code == 0
    lines = out.read_text(encoding="utf-8").strip().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["pmid"] == "100"
    manifest = json.loads((tmp_path / "examples.jsonl.manifest.json").read_text())
    assert manifest["command"] == "preprocess"
    assert manifest["version"].startswith("prefixlm-")
    assert "examples" in capsys.readouterr().out


def test_preprocess_results_only_ablation(tmp_path, corpus_file):
    code, out = _preprocess(tmp_path, corpus_file, sections="results")
    assert code == 0
    rows = [json.loads(line) for line in out.read_text().strip().splitlines()]
    assert rows[0]["source"] == "Drug A reduced symptoms significantly ."
    assert rows[0]["sections_used"] == ["RESULTS"]


def test_preprocess_conclusions_section_is_usage_error(tmp_path, corpus_file, capsys):
    code, _ = _preprocess(tmp_path, corpus_file, sections="conclusions")
    assert code == 2
    assert "CONCLUSIONS" in capsys.readouterr().err


def test_preprocess_parse_error_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("###1\nFOO\ttext\n", encoding="utf-8")
    code = main(["preprocess", "--corpus", str(bad), "--out",
                 str(tmp_path / "x.jsonl")])
    assert code == 2


def test_missing_corpus_exit_2(tmp_path):
    code = main(["preprocess", "--corpus", str(tmp_path / "nope.txt"),
                 "--out", str(tmp_path / "x.jsonl")])
    assert code == 2


def test_full_pipeline(tmp_path, corpus_file, capsys):
    code, examples = _preprocess(tmp_path, corpus_file)
    assert code == 0
    code, vocab, merges = _train_tokenizer(tmp_path, examples)
    assert code == 0

    cfg = _write_config(tmp_path, examples, vocab, merges)
    assert main(["finetune", "--config", str(cfg)]) == 0
    assert (tmp_path / "ck.bin").exists()
    loss_lines = (tmp_path / "loss.csv").read_text().strip().splitlines()
    assert loss_lines[0] == "step,loss"
    assert len(loss_lines) == 4  # header + 3 steps
    assert (tmp_path / "ck.bin.manifest.json").exists()

    gen_out = tmp_path / "gen.jsonl"
    assert main(["generate", "--config", str(cfg), "--examples", str(examples),
                 "--n-hints", "1", "--max-new-tokens", "8",
                 "--out", str(gen_out)]) == 0
    rows = [json.loads(line) for line in gen_out.read_text().strip().splitlines()]
    assert len(rows) == 2
    # with one hint, output starts with the reference's first word
    assert rows[0]["output"].startswith("Drug")
    assert rows[1]["output"].startswith("Treatment")

    report = tmp_path / "scores.txt"
    capsys.readouterr()
    assert main(["score", "--generated", str(gen_out), "--references",
                 str(examples), "--out", str(report)]) == 0
    out = capsys.readouterr().out
    assert "ROUGE-1" in out
    assert report.exists()


def test_generate_deterministic_across_runs(tmp_path, corpus_file):
    _, examples = _preprocess(tmp_path, corpus_file)
    _, vocab, merges = _train_tokenizer(tmp_path, examples)
    cfg = _write_config(tmp_path, examples, vocab, merges, steps=2)
    assert main(["finetune", "--config", str(cfg)]) == 0
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    for out in (a, b):
        assert main(["generate", "--config", str(cfg), "--examples", str(examples),
                     "--n-hints", "0", "--max-new-tokens", "6",
                     "--out", str(out)]) == 0
    assert a.read_text() == b.read_text()


def test_finetune_rerun_same_seed_bit_identical_checkpoint(tmp_path, corpus_file):
    _, examples = _preprocess(tmp_path, corpus_file)
    _, vocab, merges = _train_tokenizer(tmp_path, examples)

    checkpoints = []
    for run in ("x", "y"):
        run_dir = tmp_path / run
        run_dir.mkdir()
        cfg = _write_config(run_dir, examples, vocab, merges, steps=3, seed=9)
        assert main(["finetune", "--config", str(cfg)]) == 0
        checkpoints.append((run_dir / "ck.bin").read_bytes())
    assert checkpoints[0] == checkpoints[1]


def test_finetune_missing_config_key_exit_2(tmp_path, corpus_file, capsys):
    _, examples = _preprocess(tmp_path, corpus_file)
    _, vocab, merges = _train_tokenizer(tmp_path, examples)
    cfg = _write_config(tmp_path, examples, vocab, merges)
    cfg.write_text(cfg.read_text().replace("lr=0.001\n", ""), encoding="utf-8")
    assert main(["finetune", "--config", str(cfg)]) == 2
    assert "lr" in capsys.readouterr().err


def test_score_length_mismatch_exit_2(tmp_path, corpus_file):
    _, examples = _preprocess(tmp_path, corpus_file)
    gen = tmp_path / "gen.jsonl"
    gen.write_text('{"pmid": "100", "n_hints": 0, "output": "only one"}\n',
                   encoding="utf-8")
    assert main(["score", "--generated", str(gen), "--references", str(examples),
                 "--out", str(tmp_path / "r.txt")]) == 2


def test_eval_aggregate_tables(tmp_path, capsys):
    ann = tmp_path / "ann.csv"
    rows = ["system,example_id,verdict"]
    for verdict, count in (("TP", 15), ("TN", 3), ("FP", 5), ("FN", 3), ("NA", 24)):
        rows.extend(f"pgnet-n1,e{verdict}{i},{verdict}" for i in range(count))
    ann.write_text("\n".join(rows) + "\n", encoding="utf-8")
    ratings = tmp_path / "ratings.csv"
    ratings.write_text(
        "system,example_id,correctness,quality,overall\ns,1,3,4,3\ns,2,4,4,4\n",
        encoding="utf-8",
    )
    out = tmp_path / "report.txt"
    assert main(["eval-aggregate", "--annotations", str(ann),
                 "--ratings", str(ratings), "--out", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "36%" in text
    assert "3.50" in text


def test_eval_aggregate_requires_an_input(tmp_path):
    assert main(["eval-aggregate", "--out", str(tmp_path / "r.txt")]) == 2


def test_generate_respects_thread_env(tmp_path, corpus_file, monkeypatch):
    _, examples = _preprocess(tmp_path, corpus_file)
    _, vocab, merges = _train_tokenizer(tmp_path, examples)
    cfg = _write_config(tmp_path, examples, vocab, merges, steps=1)
    assert main(["finetune", "--config", str(cfg)]) == 0
    monkeypatch.setenv("PFXLM_THREADS", "2")
    seq = tmp_path / "seq.jsonl"
    monkeypatch.setenv("PFXLM_THREADS", "1")
    assert main(["generate", "--config", str(cfg), "--examples", str(examples),
                 "--n-hints", "0", "--max-new-tokens", "5", "--out", str(seq)]) == 0
    monkeypatch.setenv("PFXLM_THREADS", "2")
    par = tmp_path / "par.jsonl"
    assert main(["generate", "--config", str(cfg), "--examples", str(examples),
                 "--n-hints", "0", "--max-new-tokens", "5", "--out", str(par)]) == 0
    assert seq.read_text() == par.read_text()


def test_finetune_resumes_from_checkpoint(tmp_path, corpus_file, capsys):
    _, examples = _preprocess(tmp_path, corpus_file)
    _, vocab, merges = _train_tokenizer(tmp_path, examples)
    cfg = _write_config(tmp_path, examples, vocab, merges, steps=2)
    assert main(["finetune", "--config", str(cfg)]) == 0
    first = (tmp_path / "ck.bin").read_bytes()
    # steps already reached: resume loads the checkpoint and saves it back
    cfg4 = _write_config(tmp_path, examples, vocab, merges, steps=4)
    assert main(["finetune", "--config", str(cfg4)]) == 0
    out = capsys.readouterr().out
    assert "step 3/4" in out and "step 1/4" not in out
    assert (tmp_path / "ck.bin").read_bytes() != first
