"""OTFS radar: delay-Doppler matched-filter target estimation with an OFDM baseline."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DegenerateGridError,
    DelayExceedsCpError,
    DimensionMismatchError,
    GridTooLargeError,
    NonIntegerTapError,
    OtfsRadarError,
    OutOfAmbiguityRangeError,
)
from .grid import (  # noqa: E402
    GridResolutions,
    SystemConfig,
    Tap,
    TapChannel,
    Target,
    derive_resolutions,
    scene_to_taps,
    signed_doppler_index,
    taps_to_scene,
)
from .modem import (  # noqa: E402
    TimeSignal,
    apply_channel_dd,
    apply_channel_time,
    gen_qpsk_frame,
    heisenberg,
    isfft,
    sfft,
    wigner,
)
from .estimator import (  # noqa: E402
    DDEstimate,
    DetectionPolicy,
    Dictionary,
    build_dictionary,
    detect_targets,
    gain_matrix,
    lemma1_stats,
    matched_filter_fast,
    matched_filter_naive,
)
from .ofdm import (  # noqa: E402
    OfdmConfig,
    RangeDopplerMap,
    estimate_target_ofdm,
    ofdm_modulate,
    ofdm_radar_pipeline,
)
from .metrics import frame_duration_report, image_snr, profile_cuts, pslr  # noqa: E402
