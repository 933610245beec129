"""End-to-end walk of the whole command chain on one labeled corpus."""

import json

import yaml
from click.testing import CliRunner

from baseline_scope.cli import main
from baseline_scope.corpus import load_corpus, write_corpus
from conftest import DocBuilder, labeled_fixture_corpus


def test_full_pipeline(tmp_path):
    runner = CliRunner()
    raw = tmp_path / "raw"
    docs = labeled_fixture_corpus(12, seed=11)
    banned = DocBuilder(paper_id="ZZZ", venue="Tutorial Abstracts of ACL").build()
    write_corpus(docs + [banned], raw)

    # ingest: normalize + filter
    corpus = tmp_path / "corpus"
    result = runner.invoke(main, ["ingest", str(raw), str(corpus)])
    assert result.exit_code == 0, result.output
    assert len(load_corpus(corpus)) == 12
    assert json.loads((corpus / "discard_report.json").read_text())["discarded"][0]["keyword"] \
        == "tutorial"

    # stats: all four tables
    stats_dir = tmp_path / "stats"
    result = runner.invoke(main, ["stats", str(corpus), "--out", str(stats_dir)])
    assert result.exit_code == 0, result.output
    for name in ("summary", "year_buckets", "section_distribution", "naive_rules"):
        assert (stats_dir / f"{name}.csv").exists()
        assert (stats_dir / f"{name}.txt").exists()

    # features with citation-count provider and cache
    provider = tmp_path / "provider.json"
    titles = {f"cited paper R{i}": 10 * i for i in range(9)}
    provider.write_text(json.dumps(titles))
    features_dir = tmp_path / "features"
    result = runner.invoke(main, ["features", str(corpus), "--out", str(features_dir),
                                  "--provider", str(provider),
                                  "--cache-dir", str(tmp_path / "cache"),
                                  "--dump-windows"])
    assert result.exit_code == 0, result.output
    n_refs = sum(len(d.references) for d in docs)
    assert len((features_dir / "features.csv").read_text().splitlines()) == n_refs + 1

    # train on a 70/10/20 split of the same corpus
    config = tmp_path / "config.yaml"
    config.write_text(yaml.safe_dump({
        "model": {"context_dim": 8, "bilstm_hidden": 8, "dropout": 0.1, "encoder_layers": 1,
                  "encoder_heads": 2, "fused_dim": 16, "attention_dim": 8, "family_dim": 8,
                  "layer_count": 4, "batch_size": 16, "learning_rate": 0.01, "epochs": 3,
                  "seed": 1},
        "split": {"seed": 2},
    }))
    run_dir = tmp_path / "run"
    result = runner.invoke(main, ["train", str(corpus), "--config", str(config),
                                  "--out", str(run_dir), "--toy-embedder"])
    assert result.exit_code == 0, result.output

    # evaluate on the recorded test split and on everything
    for split in ("test", "all"):
        eval_dir = tmp_path / f"eval_{split}"
        result = runner.invoke(main, ["evaluate", str(corpus), "--checkpoint",
                                      str(run_dir / "checkpoint.npz"), "--out", str(eval_dir),
                                      "--split", split])
        assert result.exit_code == 0, result.output
        metrics = json.loads((eval_dir / "metrics.json").read_text())
        confusion = metrics["confusion"]
        expected = n_refs if split == "all" else None
        if expected:
            assert sum(confusion.values()) == expected

    # predict every reference, then bucket the errors
    predictions = tmp_path / "predictions.csv"
    result = runner.invoke(main, ["predict", str(corpus), "--checkpoint",
                                  str(run_dir / "checkpoint.npz"), "--out", str(predictions)])
    assert result.exit_code == 0, result.output
    assert len(predictions.read_text().splitlines()) == n_refs + 1

    report_dir = tmp_path / "report"
    result = runner.invoke(main, ["report", str(corpus), "--predictions", str(predictions),
                                  "--out", str(report_dir)])
    assert result.exit_code == 0, result.output
    assert (report_dir / "error_report.csv").exists()
    assert (report_dir / "error_report.txt").exists()
