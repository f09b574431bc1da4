"""ENF presence detection in video frame sequences."""

from ._enfpd import (
    EnfpdError,
    alias_frequency,
    default_config,
    detect_file,
    detect_frames,
    flicker_alias_frequency,
    load_video,
    pearson,
    roc_auc,
    segment_slic,
    simulate,
    stft_enf_estimate,
)

__all__ = [
    "EnfpdError",
    "alias_frequency",
    "default_config",
    "detect_file",
    "detect_frames",
    "flicker_alias_frequency",
    "load_video",
    "pearson",
    "roc_auc",
    "segment_slic",
    "simulate",
    "stft_enf_estimate",
]
