"""Identify which references of a scientific paper are used as baselines."""

__version__ = "0.1.0"

from .corpus import (CitationMention, CorpusError, CorpusFormatError, CorpusIntegrityError,
                     PaperDoc, Reference, Section, SplitSpec, assign_splits, cohens_kappa,
                     filter_papers, load_corpus, write_corpus)
from .context import ContextWindow, citation_sentence, extract_window, select_primary_mention
from .evaluation import MetricsReport, compute_metrics, error_report
from .features import (CueLexicon, FeatureVector, citation_count_feature, cue_weights,
                       extract_feature_vector, location_features, stem)
from .heuristics import corpus_stats, section_distribution, section_rule_classifier
from .sectionmap import categorize_heading

__all__ = [
    "CitationMention", "ContextWindow", "CorpusError", "CorpusFormatError",
    "CorpusIntegrityError", "CueLexicon", "FeatureVector", "MetricsReport", "PaperDoc",
    "Reference", "Section", "SplitSpec", "assign_splits", "categorize_heading",
    "citation_count_feature", "citation_sentence", "cohens_kappa", "compute_metrics",
    "corpus_stats", "cue_weights", "error_report", "extract_feature_vector", "extract_window",
    "filter_papers", "load_corpus", "location_features", "section_distribution",
    "section_rule_classifier", "select_primary_mention", "stem", "write_corpus",
]
