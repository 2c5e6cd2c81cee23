"""Wireless offloading simulator for wearable multi-camera object detection.

Pipeline: channel (SINR traces along a walking route) -> airlink (per-packet
service with HARQ) -> transport (rate-adaptive uplink, CBR feedback) ->
analytics (delay-constrained throughput, availability, heatmaps, CDFs) ->
appmodel (delay budget, accuracy lookups, offloading policy), orchestrated
by the `edgesim` CLI.
"""

from .model import (
    BaseStation,
    BlockageParams,
    Duplex,
    FrameInterval,
    PathLossParams,
    RadioParams,
    Resolution,
    RouteSpec,
    ScenarioConfig,
    TechKind,
    Technology,
    frame_intervals,
    validate_config,
)
from .channel import (
    BlockageState,
    ChannelTrace,
    Ray,
    TraceFormatError,
    TraceSample,
    apply_blockage,
    best_server_trace,
    build_route,
    compute_sinr,
    export_trace,
    generate_rays,
    import_trace,
    path_loss_db,
    sample_blockage,
    synthesize_trace,
)
from .airlink import (
    BlerModel,
    Direction,
    LinkParams,
    LinkSimulator,
    PacketLogFormatError,
    PacketRecord,
    frame_alignment_delay_us,
    packet_error_prob,
    read_packet_log,
    simulate_link,
    sinr_to_rate,
    write_packet_log,
)
from .transport import (
    CongestionParams,
    TransportParams,
    add_core_delay,
    delivered_throughput_bps,
    run_downlink_feedback,
    run_uplink_source,
)
from .analytics import (
    HeatmapMatrix,
    RateSeries,
    availability,
    camera_support_matrix,
    delay_constrained_throughput,
    empirical_cdf,
    heatmap_from_series,
    max_fallback,
    quantile_from_cdf,
    rtt_per_frame,
)
from .appmodel import (
    BAND_ACCURACY,
    DelayBudget,
    PolicyDecision,
    ProcessingSite,
    RateAccuracyCurve,
    Strategy,
    accuracy_at,
    allocate_cameras,
    band_occupancy,
    best_resolution,
    decide,
    delay_components,
    detection_range,
    expected_performance,
    inference_time,
    rtt_budget,
    total_delay,
)

__version__ = "0.1.0"
