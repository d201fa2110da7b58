"""skigears: ski-pole sensor ingestion, stroke segmentation, and gear classification."""

__version__ = "0.1.0"
