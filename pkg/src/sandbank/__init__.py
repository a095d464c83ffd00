"""Unsupervised detection of river-sandbank regions in multispectral imagery."""

__version__ = "0.1.0"

from .pipeline import DetectionResult, PipelineConfig, run_pipeline  # noqa: E402

__all__ = ["DetectionResult", "PipelineConfig", "run_pipeline", "__version__"]
