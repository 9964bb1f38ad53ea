"""Few-label text classification: embeddings, augmentation, supervised baselines and UDA."""

__version__ = "0.1.0"
