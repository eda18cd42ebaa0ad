"""Incremental extractive summarization of tweet streams.

Pipeline: ingest -> preprocess -> context/embed -> salience -> selection,
with oracle construction and an evaluation harness (ROUGE, SIF cosine,
random baselines, Wilcoxon significance).
"""

__version__ = "0.1.0"
