"""Command-line surface: ingest, stats, features, train, evaluate, predict, report.

A run config is one YAML document with up to four sections: ``model``
(MmaConfig fields), ``embedder`` (kind plus its constructor fields),
``split`` (ratios, seed), and ``lexicon`` (path to a cue-lexicon file).
Flags override file values; training echoes the effective config into its
run directory for provenance. All commands are deterministic given
identical inputs, config, and seed; exit status is nonzero iff diagnostics
were emitted.
"""

from __future__ import annotations

import dataclasses
import json
import sys
from pathlib import Path

import click
import numpy as np
import yaml

from . import corpus as corpus_mod
from . import evaluation, heuristics
from .context import extract_window, window_to_tsv
from .corpus import (CorpusError, PaperDoc, SplitSpec, apply_annotations, assign_splits,
                     filter_papers, load_annotations, load_paper, split_docs, write_corpus)
from .features import CueLexicon, default_cue_lexicon, extract_feature_vector, load_cue_lexicon
from .mma import (CLASS_ORDER, CheckpointError, MmaConfig, build_examples, load_checkpoint,
                  make_embedder, predict_examples, save_checkpoint, train_model)
from .providers import CountCache, FileBackedProvider, fetch_citation_counts

CONFIG_SECTIONS = ("model", "embedder", "split", "lexicon")


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _dump_json(payload) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def load_run_config(path: str | Path | None) -> dict:
    if path is None:
        data = {}
    else:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(data, dict):
        raise ValueError("run config must be a mapping")
    unknown = set(data) - set(CONFIG_SECTIONS)
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")
    return data


def resolve_model_config(data: dict, seed: int | None) -> MmaConfig:
    fields = dict(data.get("model") or {})
    if seed is not None:
        fields["seed"] = seed
    return MmaConfig.from_dict(fields)


def resolve_embedder_spec(data: dict, config: MmaConfig, toy: bool) -> dict:
    spec = dict(data.get("embedder") or {})
    if toy or not spec:
        spec = {"kind": "hash"}
    if spec.get("kind") == "hash":
        spec.setdefault("dimension", config.context_dim)
        spec.setdefault("layer_count", config.layer_count)
        spec.setdefault("seed", config.seed)
    return spec


def resolve_lexicon(data: dict, lexicon_path: str | None) -> CueLexicon:
    path = lexicon_path or data.get("lexicon")
    return load_cue_lexicon(path) if path else default_cue_lexicon()


def _load_corpus_or_fail(path: str) -> list[PaperDoc]:
    try:
        return corpus_mod.load_corpus(path)
    except CorpusError as exc:
        _fail(str(exc))


@click.group()
def main() -> None:
    """Baseline-reference identification pipeline."""


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.argument("out_path", type=click.Path(file_okay=False))
@click.option("--filter/--no-filter", "apply_filter", default=True,
              help="Drop papers whose title/venue match the exclusion keywords.")
@click.option("--annotations", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Label overlay file of paper_id<TAB>ref_id<TAB>label lines.")
def ingest(corpus_path: str, out_path: str, apply_filter: bool, annotations: str | None) -> None:
    """Validate, optionally filter, and re-write a corpus in normalized form."""
    try:
        paper_paths = corpus_mod.corpus_paper_paths(corpus_path)
    except CorpusError as exc:
        _fail(str(exc))
    docs = []
    errors = []
    for paper_path in paper_paths:
        try:
            docs.append(load_paper(paper_path))
        except CorpusError as exc:
            errors.append(f"{paper_path.name}: {exc}")
    if errors:
        for line in errors:
            click.echo(f"error: {line}", err=True)
        sys.exit(1)

    if annotations:
        try:
            docs = apply_annotations(docs, load_annotations(annotations))
        except CorpusError as exc:
            _fail(str(exc))

    discarded: list[PaperDoc] = []
    if apply_filter:
        docs, discarded = filter_papers(docs)
    out = Path(out_path)
    write_corpus(docs, out)
    report = {
        "kept": len(docs),
        "discarded": [
            {"paper_id": doc.paper_id, "keyword": corpus_mod.banned_keyword(doc)}
            for doc in discarded
        ],
    }
    _write(out / "discard_report.json", _dump_json(report))
    click.echo(f"ingested {len(docs)} papers ({len(discarded)} discarded) -> {out}")


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def _parse_tables(value: str) -> list[str]:
    wanted = [part.strip() for part in value.split(",") if part.strip()]
    valid = {"1", "2", "4", "5"}
    for table_id in wanted:
        if table_id not in valid:
            raise click.BadParameter(f"unknown table id {table_id!r}; choose from 1,2,4,5")
    return wanted


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--tables", default="1,2,4,5", help="Comma-separated table ids to emit.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def stats(corpus_path: str, tables: str, out_dir: str) -> None:
    """Corpus statistics: summary, year buckets, section distribution, naive rules."""
    wanted = _parse_tables(tables)
    docs = _load_corpus_or_fail(corpus_path)
    out = Path(out_dir)

    def emit(name: str, csv_text: str) -> None:
        _write(out / f"{name}.csv", csv_text)
        _write(out / f"{name}.txt", heuristics.render_text_table(csv_text))

    if "1" in wanted:
        emit("summary", heuristics.render_summary_csv(heuristics.corpus_summary(docs)))
    if "2" in wanted:
        rows, excluded = heuristics.corpus_stats(docs)
        emit("year_buckets", heuristics.render_stats_csv(rows))
        _write(out / "year_buckets_excluded.json", _dump_json({"excluded_papers": excluded}))
    if "4" in wanted:
        emit("section_distribution",
             heuristics.render_distribution_csv(heuristics.section_distribution(docs)))
    if "5" in wanted:
        emit("naive_rules", heuristics.render_rule_table_csv(heuristics.naive_rule_table(docs)))
    click.echo(f"wrote tables {','.join(wanted)} -> {out}")


# ---------------------------------------------------------------------------
# features
# ---------------------------------------------------------------------------


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--provider", "provider_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="JSON file mapping cited titles to citation counts.")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
              help="Citation-count cache directory (default: $BASELINE_SCOPE_CACHE).")
@click.option("--count-transform", type=click.Choice(["log1p", "raw"]), default="log1p")
@click.option("--dump-windows", is_flag=True, help="Also dump context windows as TSV.")
def features(corpus_path: str, out_dir: str, lexicon_path: str | None, provider_path: str | None,
             cache_dir: str | None, count_transform: str, dump_windows: bool) -> None:
    """Per-reference feature vectors (and optional window dumps)."""
    docs = _load_corpus_or_fail(corpus_path)
    lexicon = load_cue_lexicon(lexicon_path) if lexicon_path else default_cue_lexicon()
    out = Path(out_dir)

    if provider_path:
        provider = FileBackedProvider(provider_path)
        cache = CountCache(cache_dir) if cache_dir else CountCache()
        updated = []
        reports = {}
        for doc in docs:
            refs, report = fetch_citation_counts(doc.references, provider, cache)
            updated.append(dataclasses.replace(doc, references=tuple(refs)))
            reports[doc.paper_id] = report.to_dict()
        docs = updated
        _write(out / "fetch_report.json", _dump_json(reports))

    header = ["paper_id", "ref_id", *(f"count_{c}" for c in corpus_mod.SECTION_CATEGORIES),
              "in_table", *(f"cue_{s}" for s in lexicon.stems), "citation_count_feature"]
    lines = [",".join(header)]
    for doc in docs:
        for ref in doc.references:
            fv = extract_feature_vector(doc, ref.ref_id, lexicon, count_transform)
            row = [doc.paper_id, ref.ref_id, *(str(c) for c in fv.section_counts),
                   str(int(fv.in_table)), *(f"{w:.6f}" for w in fv.cue_weights),
                   f"{fv.citation_count_feature:.6f}"]
            lines.append(",".join(row))
    _write(out / "features.csv", "\n".join(lines) + "\n")

    if dump_windows:
        blocks = []
        for doc in docs:
            for i, mention in enumerate(doc.mentions):
                window = extract_window(doc, mention)
                blocks.append(f"# {doc.paper_id}\t{mention.ref_id}\t{i}\n{window_to_tsv(window)}")
        _write(out / "windows.tsv", "".join(blocks))
    click.echo(f"wrote features for {sum(len(d.references) for d in docs)} references -> {out}")


# ---------------------------------------------------------------------------
# train
# ---------------------------------------------------------------------------


def _ensure_splits(docs: list[PaperDoc], data: dict) -> list[PaperDoc]:
    tags = {doc.split_tag for doc in docs}
    if tags == {"unassigned"}:
        section = data.get("split") or {}
        spec = SplitSpec(ratios=tuple(section.get("ratios", (0.70, 0.10, 0.20))),
                         seed=int(section.get("seed", 0)))
        return assign_splits(docs, spec)
    return docs


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--seed", type=int, default=None, help="Override the model seed from the config.")
@click.option("--toy-embedder", is_flag=True, help="Use the deterministic hash embedder.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def train(corpus_path: str, config_path: str, out_dir: str, seed: int | None,
          toy_embedder: bool, lexicon_path: str | None) -> None:
    """Train the classifier and write a checkpoint plus a training log."""
    try:
        data = load_run_config(config_path)
        config = resolve_model_config(data, seed)
        spec = resolve_embedder_spec(data, config, toy_embedder)
        embedder = make_embedder(**spec)
        lexicon = resolve_lexicon(data, lexicon_path)
    except (ValueError, ImportError) as exc:
        _fail(str(exc))

    docs = _load_corpus_or_fail(corpus_path)
    try:
        docs = _ensure_splits(docs, data)
        splits = split_docs(docs)
        result = train_model(splits["train"], splits["dev"], config, embedder, lexicon)
    except ValueError as exc:
        _fail(str(exc))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint = save_checkpoint(
        out / "checkpoint.npz", result.model, lexicon.sha256(), embedder.identifier,
        extra={"embedder_spec": spec, "best_epoch": result.best_epoch,
               "best_dev_f1": result.best_dev_f1})
    _write(out / "training_log.jsonl",
           "".join(json.dumps(entry, sort_keys=True) + "\n" for entry in result.log))
    effective = {"model": config.to_dict(), "embedder": spec,
                 "lexicon_sha256": lexicon.sha256(),
                 "split": {doc.paper_id: doc.split_tag for doc in docs}}
    _write(out / "effective_config.json", _dump_json(effective))
    click.echo(f"trained {config.epochs} epochs; best dev F1 {result.best_dev_f1:.4f} "
               f"at epoch {result.best_epoch}; checkpoint -> {checkpoint}")


# ---------------------------------------------------------------------------
# evaluate / predict
# ---------------------------------------------------------------------------


def _load_model_for(corpus_path: str, checkpoint_path: str, lexicon_path: str | None = None):
    docs = _load_corpus_or_fail(corpus_path)
    lexicon = load_cue_lexicon(lexicon_path) if lexicon_path else default_cue_lexicon()
    try:
        model, meta = load_checkpoint(checkpoint_path,
                                      expected_lexicon_sha256=lexicon.sha256())
    except CheckpointError as exc:
        _fail(str(exc))
    spec = meta["extra"].get("embedder_spec")
    if spec is None:
        _fail("checkpoint does not record its embedder construction")
    try:
        embedder = make_embedder(**spec)
    except (ValueError, ImportError) as exc:
        _fail(str(exc))
    if embedder.identifier != meta["embedder"]:
        _fail(f"embedder mismatch: checkpoint has {meta['embedder']!r}, "
              f"rebuilt {embedder.identifier!r}")
    return docs, model, embedder, lexicon


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
@click.option("--split", "split_tag", type=click.Choice(["train", "dev", "test", "all"]),
              default="test")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def evaluate(corpus_path: str, checkpoint_path: str, out_dir: str, split_tag: str,
             lexicon_path: str | None) -> None:
    """Metrics of a checkpoint over the labeled references of a split.

    When the corpus carries no split tags, the assignment recorded next to
    the checkpoint (effective_config.json) is applied, so a run can always
    be scored on its own train/dev/test partition.
    """
    docs, model, embedder, lexicon = _load_model_for(corpus_path, checkpoint_path, lexicon_path)
    if split_tag != "all":
        if all(doc.split_tag == "unassigned" for doc in docs):
            sidecar = Path(checkpoint_path).parent / "effective_config.json"
            if sidecar.exists():
                mapping = json.loads(sidecar.read_text(encoding="utf-8")).get("split", {})
                docs = [dataclasses.replace(doc, split_tag=mapping.get(doc.paper_id, "unassigned"))
                        for doc in docs]
        docs = [doc for doc in docs if doc.split_tag == split_tag]
    examples = build_examples(docs, embedder, lexicon,
                              count_transform=model.config.count_transform)
    if not examples:
        _fail(f"no labeled references in split {split_tag!r}")
    gold = [CLASS_ORDER[ex.label_index] for ex in examples]
    predictions = predict_examples(model, examples)
    try:
        report = evaluation.compute_metrics(gold, [p.label for p in predictions])
    except ValueError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    _write(out / "metrics.json", report.to_json())
    _write(out / "metrics.txt", report.to_text())
    _write(out / "metrics.csv", report.to_csv())
    accuracy = float(np.mean([g == p.label for g, p in zip(gold, predictions)]))
    _write(out / "accuracy.json", _dump_json({"split": split_tag, "n": len(examples),
                                              "accuracy": accuracy}))
    click.echo(report.to_text().rstrip())


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True, dir_okay=False), default=None)
def predict(corpus_path: str, checkpoint_path: str, out_path: str,
            lexicon_path: str | None) -> None:
    """Label every reference of the corpus with a probability and class."""
    docs, model, embedder, lexicon = _load_model_for(corpus_path, checkpoint_path, lexicon_path)
    examples = build_examples(docs, embedder, lexicon, labeled_only=False,
                              count_transform=model.config.count_transform)
    lines = ["paper_id,ref_id,prob_baseline,label,features_only"]
    for example, prediction in zip(examples, predict_examples(model, examples)):
        lines.append(f"{example.paper_id},{example.ref_id},{prediction.prob_baseline:.9f},"
                     f"{prediction.label},{int(prediction.features_only)}")
    _write(Path(out_path), "\n".join(lines) + "\n")
    click.echo(f"wrote {len(examples)} predictions -> {out_path}")


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@main.command()
@click.argument("corpus_path", type=click.Path(exists=True, file_okay=False))
@click.option("--predictions", "predictions_path", type=click.Path(exists=True, dir_okay=False),
              required=True)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), required=True)
def report(corpus_path: str, predictions_path: str, out_dir: str) -> None:
    """Bucketed false positives/negatives from a predictions file."""
    docs = _load_corpus_or_fail(corpus_path)
    predictions = {}
    lines = Path(predictions_path).read_text(encoding="utf-8").splitlines()
    for line in lines[1:]:
        if not line.strip():
            continue
        paper_id, ref_id, _prob, label, _flag = line.split(",")
        predictions[(paper_id, ref_id)] = label
    try:
        cases = evaluation.error_report(docs, predictions)
    except ValueError as exc:
        _fail(str(exc))
    out = Path(out_dir)
    _write(out / "error_report.csv", evaluation.render_error_report_csv(cases))
    _write(out / "error_report.txt", evaluation.render_error_report_text(cases))
    click.echo(f"{len(cases)} errors bucketed -> {out}")


if __name__ == "__main__":
    main()
