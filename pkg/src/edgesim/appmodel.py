"""Application-layer models: the end-to-end delay budget, detector
rate/accuracy and range lookups, and the adaptive offloading policy.

Accuracy numbers come from a versioned anchor file (data/rate_accuracy.csv)
so retrained detector curves can be substituted without code changes. The
shipped file carries only the per-resolution plateau anchors; accuracy is
interpolated linearly from (0, 0) up to the first anchor and clamped at the
plateau beyond the last.
"""

from __future__ import annotations

import csv
import enum
import importlib.resources
from dataclasses import dataclass
from functools import lru_cache

from .model import Resolution

FRAME_DELAY_MS = 33.0  # one frame interval at 30 Hz, as budgeted
ENCODE_DELAY_MS = 17.0  # hardware encode, at most 1/60 s per frame
DEFAULT_EDGE_RTT_MS = 15.0  # median round trip with mmWave connectivity

CAMERA_FULL_RATE_MBPS = 26.0  # per-camera rate at the 1080P plateau
PRIORITY_SIDE_RATE_MBPS = 10.0  # side/back cameras under priority allocation
MAX_CAMERAS = 4
MIN_OFFLOAD_MBPS = 1.0  # below this the uplink is not worth using
LOCAL_SWITCH_MBPS = 10.0  # below this, compliant local 720P beats low-rate edge

# band edges (Mbps) where the best spatial resolution changes
RESOLUTION_BAND_EDGES = (0.35, 6.0, 26.2)

# mean detector accuracy (wmap, ap_person) per throughput band, for the
# shipped curves: >=26 Mbps (1080P plateau), 6-26 Mbps, 1-6 Mbps
BAND_ACCURACY = {
    "full": (54.0, 66.11),
    "mid": (51.5, 63.2),
    "low": (41.1, 49.7),
}


class ProcessingSite(enum.Enum):
    LOCAL = "local"  # embedded GPU on the wearable
    EDGE = "edge"  # server GPU behind the base station


class Strategy(enum.Enum):
    UNIFORM = "uniform"  # every camera at the full per-camera rate
    PRIORITY = "priority"  # front camera full rate, others reduced


# measured per-frame detector inference time (ms)
_INFERENCE_MS = {
    (Resolution.R2p2K, ProcessingSite.LOCAL): 232.02,
    (Resolution.R1080P, ProcessingSite.LOCAL): 178.25,
    (Resolution.R720P, ProcessingSite.LOCAL): 95.69,
    (Resolution.WVGA, ProcessingSite.LOCAL): 75.02,
    (Resolution.R2p2K, ProcessingSite.EDGE): 23.4,
    (Resolution.R1080P, ProcessingSite.EDGE): 18.7,
    (Resolution.R720P, ProcessingSite.EDGE): 10.4,
    (Resolution.WVGA, ProcessingSite.EDGE): 5.1,
}

_DETECTION_RANGE_M = {
    Resolution.WVGA: 6.0,
    Resolution.R720P: 9.0,
    Resolution.R1080P: 12.0,
}


def inference_time(resolution: Resolution, site: ProcessingSite) -> float:
    """Per-frame inference time in ms."""
    return _INFERENCE_MS[(resolution, site)]


@dataclass(frozen=True)
class DelayBudget:
    frame_ms: float
    encode_ms: float
    inference_ms: float
    rtt_ms: float

    @property
    def total_ms(self) -> float:
        return self.frame_ms + self.encode_ms + self.inference_ms + self.rtt_ms


def delay_components(
    site: ProcessingSite, resolution: Resolution, rtt_ms: float
) -> DelayBudget:
    """The four budget components; local processing has no encode or RTT."""
    if site == ProcessingSite.LOCAL:
        if rtt_ms != 0:
            raise ValueError("local processing has no round trip; rtt_ms must be 0")
        return DelayBudget(FRAME_DELAY_MS, 0.0, inference_time(resolution, site), 0.0)
    if rtt_ms < 0:
        raise ValueError("rtt_ms must be nonnegative")
    return DelayBudget(
        FRAME_DELAY_MS, ENCODE_DELAY_MS, inference_time(resolution, site), rtt_ms
    )


def total_delay(site: ProcessingSite, resolution: Resolution, rtt_ms: float) -> float:
    """End-to-end delay in ms: frame + encode + inference + RTT."""
    return delay_components(site, resolution, rtt_ms).total_ms


def rtt_budget(total_target_ms: float, resolution: Resolution) -> float:
    """Round-trip budget left after the fixed components.

    The inference term is rounded to integer ms so the published budget
    arithmetic (e.g. 100 - 69 = 31 for 1080P) reproduces exactly.
    """
    fixed = FRAME_DELAY_MS + ENCODE_DELAY_MS + round(
        inference_time(resolution, ProcessingSite.EDGE)
    )
    budget = total_target_ms - fixed
    if budget < 0:
        raise ValueError(
            f"target {total_target_ms} ms is short by {-budget:g} ms of the "
            f"fixed {fixed:g} ms for {resolution.name}"
        )
    return budget


class RateAccuracyCurve:
    """Per-resolution anchors mapping bitrate to detection accuracy."""

    def __init__(self, anchors: dict[Resolution, list[tuple[float, float, float]]]):
        self.anchors = {
            res: sorted(points) for res, points in anchors.items() if points
        }
        for res, points in self.anchors.items():
            rates = [p[0] for p in points]
            if any(b <= a for a, b in zip(rates, rates[1:])):
                raise ValueError(f"duplicate anchor rates for {res.name}")

    @classmethod
    def from_rows(cls, rows) -> "RateAccuracyCurve":
        anchors: dict[Resolution, list[tuple[float, float, float]]] = {}
        for row in rows:
            res = Resolution.parse(row["resolution"])
            anchors.setdefault(res, []).append(
                (float(row["rate_mbps"]), float(row["wmap"]), float(row["ap_person"]))
            )
        return cls(anchors)

    @classmethod
    def from_csv(cls, path) -> "RateAccuracyCurve":
        with open(path, newline="") as f:
            return cls.from_rows(csv.DictReader(f))

    @classmethod
    @lru_cache(maxsize=1)
    def default(cls) -> "RateAccuracyCurve":
        ref = importlib.resources.files("edgesim.data").joinpath("rate_accuracy.csv")
        with ref.open(newline="") as f:
            return cls.from_rows(csv.DictReader(f))

    def plateau(self, resolution: Resolution) -> tuple[float, float, float]:
        return self.anchors[resolution][-1]

    def accuracy_at(self, resolution: Resolution, rate_mbps: float) -> tuple[float, float]:
        """(wmap, ap_person) at the given bitrate, linearly interpolated."""
        if resolution not in self.anchors:
            raise ValueError(f"no accuracy anchors for {resolution}")
        if rate_mbps <= 0:
            raise ValueError("rate_mbps must be positive")
        points = [(0.0, 0.0, 0.0)] + self.anchors[resolution]
        if rate_mbps >= points[-1][0]:
            return points[-1][1], points[-1][2]
        for (r0, w0, a0), (r1, w1, a1) in zip(points, points[1:]):
            if rate_mbps <= r1:
                f = (rate_mbps - r0) / (r1 - r0)
                return w0 + f * (w1 - w0), a0 + f * (a1 - a0)
        return points[-1][1], points[-1][2]


def accuracy_at(resolution: Resolution, rate_mbps: float) -> tuple[float, float]:
    """(wmap, ap_person) from the shipped detector curves."""
    return RateAccuracyCurve.default().accuracy_at(resolution, rate_mbps)


def detection_range(resolution: Resolution) -> float:
    """Reliable person-detection range in meters."""
    if resolution not in _DETECTION_RANGE_M:
        raise ValueError(f"no detection range available for {resolution.name}")
    return _DETECTION_RANGE_M[resolution]


def best_resolution(rate_mbps: float, allow_2p2k: bool = False) -> Resolution:
    """Best spatial resolution for a target bitrate.

    Offloading caps at 1080P by default: the top band brings only marginal
    accuracy for substantially more inference time.
    """
    if rate_mbps <= 0:
        raise ValueError("rate_mbps must be positive")
    low, mid, high = RESOLUTION_BAND_EDGES
    if rate_mbps < low:
        return Resolution.WVGA
    if rate_mbps < mid:
        return Resolution.R720P
    if allow_2p2k and rate_mbps >= high:
        return Resolution.R2p2K
    return Resolution.R1080P


def allocate_cameras(throughput_mbps: float, strategy: Strategy) -> list[float]:
    """Per-camera uplink rates (Mbps); empty when offloading is not viable."""
    if throughput_mbps < MIN_OFFLOAD_MBPS:
        return []
    full = CAMERA_FULL_RATE_MBPS
    if throughput_mbps < full:
        return [throughput_mbps]
    if strategy == Strategy.UNIFORM:
        k = min(MAX_CAMERAS, int(throughput_mbps // full))
        return [full] * k
    rates = [full]
    budget = throughput_mbps - full
    while len(rates) < MAX_CAMERAS and budget >= PRIORITY_SIDE_RATE_MBPS:
        rates.append(PRIORITY_SIDE_RATE_MBPS)
        budget -= PRIORITY_SIDE_RATE_MBPS
    return rates


@dataclass(frozen=True)
class PolicyDecision:
    site: ProcessingSite
    resolution: Resolution
    camera_rates_mbps: tuple[float, ...]  # empty for local processing
    n_cameras: int
    expected_wmap: float
    expected_ap_person: float
    expected_range_m: float
    expected_delay_ms: float
    compliant: bool
    target_ms: float
    throughput_mbps: float


def decide(
    throughput_mbps: float,
    total_target_ms: float,
    strategy: Strategy = Strategy.UNIFORM,
    edge_rtt_ms: float = DEFAULT_EDGE_RTT_MS,
    curve: RateAccuracyCurve | None = None,
) -> PolicyDecision:
    """Pick processing site, resolution and camera rates for one interval.

    Under the tight 100 ms target every usable uplink rate goes to the
    edge (local processing cannot meet the budget); under a relaxed target
    that local 720P satisfies, throughputs below 10 Mbps switch to local
    processing since uncompressed 720P then beats a starved edge stream.
    """
    if throughput_mbps < 0:
        raise ValueError("throughput_mbps must be nonnegative")
    curve = curve or RateAccuracyCurve.default()
    local_720_ok = (
        total_delay(ProcessingSite.LOCAL, Resolution.R720P, 0.0) <= total_target_ms
    )

    if throughput_mbps >= MIN_OFFLOAD_MBPS and not (
        local_720_ok and throughput_mbps < LOCAL_SWITCH_MBPS
    ):
        rates = allocate_cameras(throughput_mbps, strategy)
        resolution = best_resolution(min(rates[0], CAMERA_FULL_RATE_MBPS))
        return _edge_decision(
            resolution, rates, throughput_mbps, total_target_ms, edge_rtt_ms, curve
        )
    local_res = Resolution.R720P if local_720_ok else Resolution.WVGA
    return _local_decision(local_res, throughput_mbps, total_target_ms, curve)


def _edge_decision(resolution, rates, throughput, target, rtt_ms, curve) -> PolicyDecision:
    wmap, ap = curve.accuracy_at(resolution, rates[0])
    delay = total_delay(ProcessingSite.EDGE, resolution, rtt_ms)
    return PolicyDecision(
        ProcessingSite.EDGE,
        resolution,
        tuple(rates),
        len(rates),
        wmap,
        ap,
        detection_range(resolution),
        delay,
        delay <= target,
        target,
        throughput,
    )


def _local_decision(resolution, throughput, target, curve) -> PolicyDecision:
    # local video is uncompressed: accuracy sits at the resolution's plateau
    plateau_rate = curve.plateau(resolution)[0]
    wmap, ap = curve.accuracy_at(resolution, plateau_rate)
    delay = total_delay(ProcessingSite.LOCAL, resolution, 0.0)
    return PolicyDecision(
        ProcessingSite.LOCAL,
        resolution,
        (),
        1,
        wmap,
        ap,
        detection_range(resolution),
        delay,
        delay <= target,
        target,
        throughput,
    )


def expected_performance(
    band_probabilities: list[float], band_accuracies: list[float]
) -> float:
    """Probability-weighted accuracy, conditional on some band being active."""
    if len(band_probabilities) != len(band_accuracies):
        raise ValueError("probabilities and accuracies must align")
    if any(p < 0 for p in band_probabilities):
        raise ValueError("probabilities must be nonnegative")
    total_p = sum(band_probabilities)
    if total_p > 1.0 + 1e-9:
        raise ValueError("probabilities must sum to at most 1")
    if total_p <= 0:
        raise ValueError("at least one band probability must be positive")
    weighted = sum(p * a for p, a in zip(band_probabilities, band_accuracies))
    return weighted / total_p


def band_occupancy(values_mbps: list[float]) -> dict[str, float]:
    """Fraction of intervals in each offloading throughput band."""
    n = len(values_mbps)
    if n == 0:
        return {"full": 0.0, "mid": 0.0, "low": 0.0}
    full = sum(1 for v in values_mbps if v >= CAMERA_FULL_RATE_MBPS)
    mid = sum(1 for v in values_mbps if 6.0 <= v < CAMERA_FULL_RATE_MBPS)
    low = sum(1 for v in values_mbps if MIN_OFFLOAD_MBPS <= v < 6.0)
    return {"full": full / n, "mid": mid / n, "low": low / n}
