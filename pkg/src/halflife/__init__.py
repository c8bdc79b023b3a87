"""Half-life analysis toolkit for 24-hour view-count trajectories."""

from .core import (
    ChannelRecord,
    HalfLife,
    Resolution,
    Snapshot,
    VideoRecord,
    ViewTrajectory,
    country_report,
    half_life,
    halflife_quantiles,
    impute,
    validate_a,
    validate_b,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelRecord",
    "HalfLife",
    "Resolution",
    "Snapshot",
    "VideoRecord",
    "ViewTrajectory",
    "country_report",
    "half_life",
    "halflife_quantiles",
    "impute",
    "validate_a",
    "validate_b",
    "__version__",
]
