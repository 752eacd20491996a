"""Cascade SVM training over data partitions, with a TF-IDF message pipeline."""

__version__ = "0.1.0"
