"""Shared domain vocabulary: resolutions, radio technologies, routes,
blockage/path-loss knobs and the scenario configuration consumed by every
other module.

Conventions used across the package:
  * time is integer microseconds internally; milliseconds/seconds appear
    only at I/O boundaries and in published numbers
  * rates are bits per second internally; "Mbps" only at I/O boundaries
  * all types are immutable values after construction
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

US_PER_S = 1_000_000
US_PER_MS = 1_000


def s_to_us(t_s: float) -> int:
    return round(t_s * US_PER_S)


def ms_to_us(t_ms: float) -> int:
    return round(t_ms * US_PER_MS)


def us_to_s(t_us: int) -> float:
    return t_us / US_PER_S


def us_to_ms(t_us: int) -> float:
    return t_us / US_PER_MS


class Resolution(enum.Enum):
    """Camera/video spatial resolutions, ordered by pixel count."""

    WVGA = (672, 378)
    R720P = (1280, 720)
    R1080P = (1920, 1080)
    R2p2K = (2208, 1242)

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height

    @property
    def pixels(self) -> int:
        return self.width * self.height

    def __lt__(self, other: "Resolution") -> bool:
        if not isinstance(other, Resolution):
            return NotImplemented
        return self.pixels < other.pixels

    def __le__(self, other: "Resolution") -> bool:
        if not isinstance(other, Resolution):
            return NotImplemented
        return self.pixels <= other.pixels

    def __gt__(self, other: "Resolution") -> bool:
        if not isinstance(other, Resolution):
            return NotImplemented
        return self.pixels > other.pixels

    def __ge__(self, other: "Resolution") -> bool:
        if not isinstance(other, Resolution):
            return NotImplemented
        return self.pixels >= other.pixels

    @classmethod
    def parse(cls, name: str) -> "Resolution":
        key = name.strip().upper().lstrip("R")
        aliases = {
            "WVGA": cls.WVGA,
            "720P": cls.R720P,
            "1080P": cls.R1080P,
            "2P2K": cls.R2p2K,
            "2.2K": cls.R2p2K,
            "2K2": cls.R2p2K,
        }
        if key not in aliases:
            raise ValueError(f"unknown resolution {name!r}")
        return aliases[key]


class TechKind(enum.Enum):
    LTE = "lte"
    MMWAVE = "mmwave"


class Duplex(enum.Enum):
    FDD = "fdd"
    TDD = "tdd"


@dataclass(frozen=True)
class Technology:
    """One carrier: sub-6-GHz LTE or 28 GHz mmWave.

    bandwidth_to_ue is the fraction of the total system bandwidth a single
    UE obtains under the assumed cell loading (0.25).
    """

    kind: TechKind
    carrier_ghz: float
    total_bandwidth_mhz: float  # per direction for FDD
    duplex: Duplex
    slot_ms: float
    n_harq: int
    loading_fraction: float = 0.25

    @property
    def bandwidth_to_ue_mhz(self) -> float:
        return self.total_bandwidth_mhz * self.loading_fraction

    @property
    def bandwidth_to_ue_hz(self) -> float:
        return self.bandwidth_to_ue_mhz * 1e6

    @property
    def slot_us(self) -> int:
        return ms_to_us(self.slot_ms)

    @classmethod
    def lte(cls) -> "Technology":
        # 40+40 MHz FDD system, 10+10 MHz to the UE at 0.25 loading
        return cls(TechKind.LTE, 1.9, 40.0, Duplex.FDD, 1.0, 8)

    @classmethod
    def mmwave(cls) -> "Technology":
        # 400 MHz TDD system, numerology 2 (0.25 ms slots), 100 MHz to the UE
        return cls(TechKind.MMWAVE, 28.0, 400.0, Duplex.TDD, 0.25, 20)


@dataclass(frozen=True)
class RadioParams:
    """Link-budget parameters for one technology."""

    ue_tx_power_dbm: float = 25.0
    dl_tx_power_dbm: float = 30.0
    noise_figure_db: float = 5.0
    bs_array: tuple[int, int] = (1, 1)  # antenna elements (rows, cols)
    ue_array: tuple[int, int] = (1, 1)
    interference_activity: float = 0.25  # duty factor of non-serving co-tech cells
    outage_floor_db: float = -30.0

    @property
    def array_gain_db(self) -> float:
        n = self.bs_array[0] * self.bs_array[1] * self.ue_array[0] * self.ue_array[1]
        return 10.0 * math.log10(n)

    @classmethod
    def lte(cls) -> "RadioParams":
        return cls()

    @classmethod
    def mmwave(cls) -> "RadioParams":
        # 8x8 BS / 4x4 UE arrays -> 30.1 dB scalar beamforming gain
        return cls(bs_array=(8, 8), ue_array=(4, 4))


@dataclass(frozen=True)
class PathLossParams:
    """Close-in path loss: PL = 32.4 + 20 log10(f_GHz) + 10 n log10(d/1m),
    plus a fixed NLOS offset when out of sight."""

    n_los: float = 2.0
    n_nlos: float = 2.0
    nlos_offset_db: float = 20.0
    nlos_extra_spread_db: float = 10.0  # extra loss spread of weaker NLOS rays
    n_nlos_rays: int = 3


@dataclass(frozen=True)
class RouteSpec:
    """Walking route as a 2D polyline, sampled every spacing_m meters.

    Default speed 1.4 m/s is a typical pedestrian pace (not a measured
    system parameter).
    """

    waypoints: tuple[tuple[float, float], ...]
    spacing_m: float = 1.0
    speed_mps: float = 1.4

    def __init__(self, waypoints, spacing_m: float = 1.0, speed_mps: float = 1.4):
        object.__setattr__(self, "waypoints", tuple((float(x), float(y)) for x, y in waypoints))
        object.__setattr__(self, "spacing_m", float(spacing_m))
        object.__setattr__(self, "speed_mps", float(speed_mps))

    @property
    def length_m(self) -> float:
        total = 0.0
        for (x0, y0), (x1, y1) in zip(self.waypoints, self.waypoints[1:]):
            total += math.hypot(x1 - x0, y1 - y0)
        return total

    @property
    def duration_s(self) -> float:
        n = math.floor(self.length_m / self.spacing_m + 1e-9)
        return n * self.spacing_m / self.speed_mps


@dataclass(frozen=True)
class BlockageParams:
    """Stochastic angular blockage: one self-blocking region behind the
    user plus k_nsb random regions, re-drawn every t_blk_ms."""

    k_nsb: int = 40
    t_blk_ms: float = 100.0
    self_attenuation_db: float = 30.0
    nsb_attenuation_db: float = 20.0
    enable_self: bool = True
    self_az_center_deg: float = 180.0  # behind the walking direction
    self_az_spread_deg: float = 120.0
    self_el_center_deg: float = 90.0
    self_el_spread_deg: float = 80.0
    az_spread_bounds_deg: tuple[float, float] = (5.0, 15.0)
    el_spread_bounds_deg: tuple[float, float] = (5.0, 15.0)
    applies_to: tuple[TechKind, ...] = (TechKind.MMWAVE,)

    @property
    def t_blk_us(self) -> int:
        return ms_to_us(self.t_blk_ms)


@dataclass(frozen=True)
class BaseStation:
    """One cell site; may host several technologies (co-located LTE+mmWave).

    nlos_ranges are arc-length intervals [start_m, end_m) along the route
    where this site is out of sight.
    """

    bs_id: int
    position: tuple[float, float]
    techs: tuple[TechKind, ...] = (TechKind.LTE, TechKind.MMWAVE)
    height_m: float = 10.0
    nlos_ranges: tuple[tuple[float, float], ...] = ()

    def is_los(self, arc_m: float) -> bool:
        return not any(lo <= arc_m < hi for lo, hi in self.nlos_ranges)


@dataclass(frozen=True)
class ScenarioConfig:
    """Full scenario: route, sites, radio/traffic parameters and seed.

    The seed determines every stochastic draw; two runs with identical
    config produce bit-identical outputs.
    """

    route: RouteSpec
    base_stations: tuple[BaseStation, ...]
    d_core_ms: float = 5.0
    ul_cap_mbps: float = 120.0
    dl_rate_mbps: float = 1.0
    dl_pkts_per_s: float = 30.0
    tcp_pkt_bytes: int = 1024
    frame_hz: float = 30.0
    seed: int = 1
    blockage: BlockageParams = field(default_factory=BlockageParams)
    pathloss: PathLossParams = field(default_factory=PathLossParams)
    technologies: tuple[Technology, ...] = ()
    radio: tuple[tuple[TechKind, RadioParams], ...] = ()
    ue_height_m: float = 1.5
    horizon_s: float | None = None  # default: route duration

    def __post_init__(self):
        if not self.technologies:
            object.__setattr__(
                self, "technologies", (Technology.lte(), Technology.mmwave())
            )
        if not self.radio:
            object.__setattr__(
                self,
                "radio",
                ((TechKind.LTE, RadioParams.lte()), (TechKind.MMWAVE, RadioParams.mmwave())),
            )

    def technology(self, kind: TechKind) -> Technology:
        for t in self.technologies:
            if t.kind == kind:
                return t
        raise KeyError(kind)

    def radio_params(self, kind: TechKind) -> RadioParams:
        for k, r in self.radio:
            if k == kind:
                return r
        raise KeyError(kind)

    @property
    def ul_pkt_bits(self) -> int:
        return self.tcp_pkt_bytes * 8

    @property
    def frame_interval_s(self) -> float:
        return 1.0 / self.frame_hz

    def effective_horizon_s(self) -> float:
        if self.horizon_s is not None:
            return self.horizon_s
        return self.route.duration_s


@dataclass(frozen=True)
class FrameInterval:
    """One video-frame interval [t_start, t_start + duration)."""

    index: int
    t_start_s: float
    duration_s: float


def frame_intervals(horizon_s: float, frame_hz: float) -> list[FrameInterval]:
    """Tile [0, horizon) with 1/frame_hz intervals (last one may overhang)."""
    t = 1.0 / frame_hz
    n = math.ceil(horizon_s / t - 1e-12)
    return [FrameInterval(i, i * t, t) for i in range(n)]


def validate_config(cfg: ScenarioConfig) -> list[str]:
    """Return a list of invariant violations (empty when the config is sound).

    Violations are data, not faults: each entry names the offending field.
    """
    bad: list[str] = []
    if len(cfg.route.waypoints) < 2:
        bad.append("route.waypoints needs at least 2 points")
    if cfg.route.spacing_m <= 0:
        bad.append("route.spacing_m must be positive")
    if cfg.route.speed_mps <= 0:
        bad.append("route.speed_mps must be positive")
    if not cfg.base_stations:
        bad.append("base_stations empty")
    seen_ids = set()
    for bs in cfg.base_stations:
        if bs.bs_id in seen_ids:
            bad.append(f"base_stations: duplicate bs_id {bs.bs_id}")
        seen_ids.add(bs.bs_id)
        if not bs.techs:
            bad.append(f"base_stations[{bs.bs_id}].techs empty")
    if cfg.d_core_ms < 0:
        bad.append("d_core_ms negative")
    if cfg.ul_cap_mbps <= 0:
        bad.append("ul_cap_mbps must be positive")
    if cfg.dl_rate_mbps <= 0:
        bad.append("dl_rate_mbps must be positive")
    if cfg.dl_pkts_per_s <= 0:
        bad.append("dl_pkts_per_s must be positive")
    if cfg.tcp_pkt_bytes <= 0:
        bad.append("tcp_pkt_bytes must be positive")
    if cfg.frame_hz <= 0:
        bad.append("frame_hz must be positive")
    if cfg.horizon_s is not None and cfg.horizon_s <= 0:
        bad.append("horizon_s must be positive when given")
    for tech in cfg.technologies:
        if tech.total_bandwidth_mhz <= 0:
            bad.append(f"{tech.kind.value}.total_bandwidth_mhz must be positive")
        if not 0 < tech.loading_fraction <= 1:
            bad.append(f"{tech.kind.value}.loading_fraction must be in (0, 1]")
        if tech.slot_ms <= 0:
            bad.append(f"{tech.kind.value}.slot_ms must be positive")
        if tech.n_harq <= 0:
            bad.append(f"{tech.kind.value}.n_harq must be positive")
    blk = cfg.blockage
    if blk.k_nsb < 0:
        bad.append("blockage.k_nsb negative")
    if blk.t_blk_ms <= 0:
        bad.append("blockage.t_blk_ms must be positive")
    for name, bounds in (
        ("az_spread_bounds_deg", blk.az_spread_bounds_deg),
        ("el_spread_bounds_deg", blk.el_spread_bounds_deg),
    ):
        lo, hi = bounds
        if lo <= 0 or hi < lo:
            bad.append(f"blockage.{name} must satisfy 0 < lo <= hi")
    pl = cfg.pathloss
    if pl.n_los <= 0 or pl.n_nlos <= 0:
        bad.append("pathloss exponents must be positive")
    if pl.n_nlos_rays < 1:
        bad.append("pathloss.n_nlos_rays must be >= 1")
    return bad


def with_seed(cfg: ScenarioConfig, seed: int) -> ScenarioConfig:
    return replace(cfg, seed=seed)
