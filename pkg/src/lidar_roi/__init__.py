"""Real-time separation of regions of interest in sparse rotating-LiDAR scans."""
from ._accel import backend_name
from .ingest import read_scan
from .pipeline import PipelineResult, run_pipeline
from .types import ConfigError, FilterParams, LidarConfig, validate_config

__all__ = [
    "backend_name",
    "read_scan",
    "ConfigError",
    "FilterParams",
    "LidarConfig",
    "PipelineResult",
    "run_pipeline",
    "validate_config",
]

__version__ = "0.1.0"
