"""Synthetic channel model: walking route -> per-base-station SINR traces.

Replaces site-specific ray tracing with a close-in path-loss model, a
config-driven LOS/NLOS schedule per base station, and stochastic angular
blockage. Traces can also be imported from CSV (e.g. exported by another
simulator), in which case they bypass synthesis entirely.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .model import (
    US_PER_S,
    BaseStation,
    BlockageParams,
    PathLossParams,
    RouteSpec,
    ScenarioConfig,
    TechKind,
    s_to_us,
    us_to_s,
)


class TraceFormatError(ValueError):
    """Raised for malformed or mis-ordered trace CSV files."""


@dataclass(frozen=True, slots=True)
class Ray:
    path_gain_db: float
    aod_az_deg: float
    aod_el_deg: float
    aoa_az_deg: float
    aoa_el_deg: float
    excess_delay_s: float
    los: bool


@dataclass(frozen=True, slots=True)
class BlockageRegion:
    az_center_deg: float
    az_spread_deg: float
    el_center_deg: float
    el_spread_deg: float
    is_self: bool

    def contains(self, az_deg: float, el_deg: float) -> bool:
        d_az = (az_deg - self.az_center_deg + 180.0) % 360.0 - 180.0
        if abs(d_az) > self.az_spread_deg / 2.0:
            return False
        return abs(el_deg - self.el_center_deg) <= self.el_spread_deg / 2.0


@dataclass(frozen=True)
class BlockageState:
    regions: tuple[BlockageRegion, ...]


@dataclass(frozen=True, slots=True)
class TraceSample:
    t_us: int
    sinr_db: float | None  # None marks outage
    rate_bps: float | None = None  # set on imported rate traces
    bs_id: int | None = None  # set on merged best-server traces

    @property
    def t_s(self) -> float:
        return us_to_s(self.t_us)


@dataclass(frozen=True)
class ChannelTrace:
    """Time series of link quality for one (base station, technology)."""

    bs_id: int
    tech: TechKind
    samples: tuple[TraceSample, ...]
    route_hash: str = ""
    seed: int | None = None

    def __post_init__(self):
        ts = [s.t_us for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError("trace samples must be strictly increasing in t")

    @property
    def horizon_us(self) -> int:
        return self.samples[-1].t_us if self.samples else 0


def build_route(spec: RouteSpec) -> list[tuple[tuple[float, float], float]]:
    """Sample the polyline at exact arc-length multiples of spacing_m.

    Returns [(position, timestamp_s)]; timestamp_i = i * spacing / speed.
    The final waypoint is included when the total length is a multiple of
    the spacing.
    """
    if len(spec.waypoints) < 2:
        raise ValueError("route needs at least 2 waypoints")
    # cumulative arc length per waypoint
    cum = [0.0]
    for (x0, y0), (x1, y1) in zip(spec.waypoints, spec.waypoints[1:]):
        cum.append(cum[-1] + math.hypot(x1 - x0, y1 - y0))
    total = cum[-1]
    n = math.floor(total / spec.spacing_m + 1e-9)
    out = []
    seg = 0
    for i in range(n + 1):
        arc = min(i * spec.spacing_m, total)
        while seg < len(cum) - 2 and cum[seg + 1] < arc:
            seg += 1
        seg_len = cum[seg + 1] - cum[seg]
        f = 0.0 if seg_len == 0 else (arc - cum[seg]) / seg_len
        (x0, y0), (x1, y1) = spec.waypoints[seg], spec.waypoints[seg + 1]
        pos = (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
        out.append((pos, i * spec.spacing_m / spec.speed_mps))
    return out


def path_loss_db(
    distance_m: float,
    carrier_ghz: float,
    los: bool,
    params: PathLossParams = PathLossParams(),
) -> float:
    """Close-in path loss; distances below the 1 m reference are clamped."""
    d = max(distance_m, 1.0)
    pl0 = 32.4 + 20.0 * math.log10(carrier_ghz)
    n = params.n_los if los else params.n_nlos
    pl = pl0 + 10.0 * n * math.log10(d)
    if not los:
        pl += params.nlos_offset_db
    return pl


def _free_space_gain_db(distance_m: float, carrier_ghz: float) -> float:
    return -(32.4 + 20.0 * math.log10(carrier_ghz) + 20.0 * math.log10(max(distance_m, 1.0)))


def generate_rays(
    position: tuple[float, float],
    bs: BaseStation,
    carrier_ghz: float,
    los: bool,
    rng: np.random.Generator,
    params: PathLossParams = PathLossParams(),
    ue_height_m: float = 1.5,
) -> list[Ray]:
    """Synthesize the ray set for one (position, base station, carrier).

    LOS positions get one geometric LOS ray plus weaker scattered rays;
    NLOS positions get scattered rays only, the strongest sitting exactly
    at the configured NLOS offset below the LOS-geometry gain.
    """
    dx = bs.position[0] - position[0]
    dy = bs.position[1] - position[1]
    d2d = math.hypot(dx, dy)
    dz = bs.height_m - ue_height_m
    d3d = math.hypot(d2d, dz)
    az = math.degrees(math.atan2(dy, dx)) % 360.0
    el = 90.0 - math.degrees(math.atan2(dz, max(d2d, 1e-9)))  # polar angle, 90 = horizon

    los_gain = -path_loss_db(d3d, carrier_ghz, True, params)
    los_gain = min(los_gain, _free_space_gain_db(d3d, carrier_ghz))
    rays: list[Ray] = []
    if los:
        rays.append(Ray(los_gain, (az + 180.0) % 360.0, 180.0 - el, az, el, 0.0, True))
    base_scatter = los_gain - params.nlos_offset_db
    for k in range(params.n_nlos_rays):
        extra = 0.0 if (not los and k == 0) else rng.uniform(0.0, params.nlos_extra_spread_db)
        s_az = rng.uniform(0.0, 360.0)
        s_el = rng.uniform(80.0, 100.0)
        delay = rng.uniform(50e-9, 300e-9)
        rays.append(
            Ray(base_scatter - extra, (s_az + 180.0) % 360.0, 180.0 - s_el, s_az, s_el, delay, False)
        )
    return rays


def sample_blockage(rng: np.random.Generator, params: BlockageParams) -> BlockageState:
    """Draw one blockage state: the self region plus k_nsb random regions."""
    regions: list[BlockageRegion] = []
    if params.enable_self:
        regions.append(
            BlockageRegion(
                params.self_az_center_deg,
                params.self_az_spread_deg,
                params.self_el_center_deg,
                params.self_el_spread_deg,
                True,
            )
        )
    az_lo, az_hi = params.az_spread_bounds_deg
    el_lo, el_hi = params.el_spread_bounds_deg
    for _ in range(params.k_nsb):
        regions.append(
            BlockageRegion(
                rng.uniform(0.0, 360.0),
                rng.uniform(az_lo, az_hi),
                rng.uniform(0.0, 180.0),
                rng.uniform(el_lo, el_hi),
                False,
            )
        )
    return BlockageState(tuple(regions))


def apply_blockage(
    rays: list[Ray], state: BlockageState, params: BlockageParams
) -> list[Ray]:
    """Attenuate each ray by the strongest region covering its AoA.

    Overlapping regions apply the max attenuation, not the sum.
    """
    if not state.regions:
        return list(rays)
    out = []
    for ray in rays:
        att = 0.0
        for region in state.regions:
            if region.contains(ray.aoa_az_deg, ray.aoa_el_deg):
                a = params.self_attenuation_db if region.is_self else params.nsb_attenuation_db
                att = max(att, a)
        if att > 0.0:
            ray = Ray(
                ray.path_gain_db - att,
                ray.aod_az_deg,
                ray.aod_el_deg,
                ray.aoa_az_deg,
                ray.aoa_el_deg,
                ray.excess_delay_s,
                ray.los,
            )
        out.append(ray)
    return out


def _combined_gain_db(rays: list[Ray]) -> float | None:
    if not rays:
        return None
    lin = sum(10.0 ** (r.path_gain_db / 10.0) for r in rays)
    return 10.0 * math.log10(lin)


def compute_sinr(
    rays_per_bs: dict[int, list[Ray]],
    serving_bs: int,
    bandwidth_hz: float,
    tx_power_dbm: float,
    noise_figure_db: float,
    array_gain_db: float,
    interference_activity: float = 0.25,
    outage_floor_db: float = -30.0,
) -> float | None:
    """Combine ray gains into an SINR; None marks outage.

    Signal sums the serving rays' linear gains; interference sums the
    non-serving sites' received powers scaled by the activity factor;
    noise is thermal (-174 dBm/Hz) over the UE bandwidth plus noise figure.
    """
    gain = _combined_gain_db(rays_per_bs.get(serving_bs) or [])
    if gain is None:
        return None
    s_dbm = tx_power_dbm + array_gain_db + gain
    noise_dbm = -174.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db
    denom_lin = 10.0 ** (noise_dbm / 10.0)
    for bs_id, rays in rays_per_bs.items():
        if bs_id == serving_bs:
            continue
        g = _combined_gain_db(rays)
        if g is None:
            continue
        denom_lin += interference_activity * 10.0 ** ((tx_power_dbm + array_gain_db + g) / 10.0)
    sinr = s_dbm - 10.0 * math.log10(denom_lin)
    if sinr < outage_floor_db:
        return None
    return sinr


def _route_hash(spec: RouteSpec) -> str:
    h = hashlib.sha256()
    h.update(repr((spec.waypoints, spec.spacing_m, spec.speed_mps)).encode())
    return h.hexdigest()[:16]


def synthesize_trace(cfg: ScenarioConfig) -> dict[tuple[int, TechKind], ChannelTrace]:
    """Walk the route and emit the uplink SINR series per (bs, tech).

    Samples fall on every blockage-update tick and every route-position
    dwell change. Blockage is redrawn every t_blk_ms and, by default,
    attenuates mmWave only; the serving site's rays are blocked while
    interferers keep their unblocked gains (so added blockage can never
    raise SINR).
    """
    route = build_route(cfg.route)
    horizon_us = s_to_us(cfg.effective_horizon_s())
    if horizon_us <= 0:
        raise ValueError("scenario horizon must be positive")

    ray_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))
    blk_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 2]))

    # ray sets are fixed per dwell position; blockage varies faster
    pos_times_us = [s_to_us(t) for _, t in route]
    rays_at: list[dict[tuple[int, TechKind], list[Ray]]] = []
    for idx, (pos, _t) in enumerate(route):
        arc = idx * cfg.route.spacing_m
        per_key: dict[tuple[int, TechKind], list[Ray]] = {}
        for bs in cfg.base_stations:
            los = bs.is_los(arc)
            for kind in bs.techs:
                tech = cfg.technology(kind)
                per_key[(bs.bs_id, kind)] = generate_rays(
                    pos, bs, tech.carrier_ghz, los, ray_rng, cfg.pathloss, cfg.ue_height_m
                )
        rays_at.append(per_key)

    t_blk_us = cfg.blockage.t_blk_us
    n_ticks = -(-horizon_us // t_blk_us)  # ceil
    states = [sample_blockage(blk_rng, cfg.blockage) for _ in range(n_ticks)]

    sample_times = sorted(
        {t for t in pos_times_us if t < horizon_us}
        | {k * t_blk_us for k in range(n_ticks)}
    )

    out: dict[tuple[int, TechKind], list[TraceSample]] = {}
    pos_idx = 0
    for t_us in sample_times:
        while pos_idx + 1 < len(pos_times_us) and pos_times_us[pos_idx + 1] <= t_us:
            pos_idx += 1
        state = states[min(t_us // t_blk_us, n_ticks - 1)]
        per_key = rays_at[pos_idx]
        for kind in (TechKind.LTE, TechKind.MMWAVE):
            tech = next((t for t in cfg.technologies if t.kind == kind), None)
            if tech is None:
                continue
            radio = cfg.radio_params(kind)
            blocked = kind in cfg.blockage.applies_to
            bs_ids = [bs.bs_id for bs in cfg.base_stations if kind in bs.techs]
            if not bs_ids:
                continue
            raw = {b: per_key[(b, kind)] for b in bs_ids}
            for serving in bs_ids:
                rays_view = dict(raw)
                if blocked:
                    rays_view[serving] = apply_blockage(raw[serving], state, cfg.blockage)
                sinr = compute_sinr(
                    rays_view,
                    serving,
                    tech.bandwidth_to_ue_hz,
                    radio.ue_tx_power_dbm,
                    radio.noise_figure_db,
                    radio.array_gain_db,
                    radio.interference_activity,
                    radio.outage_floor_db,
                )
                out.setdefault((serving, kind), []).append(TraceSample(t_us, sinr))

    rh = _route_hash(cfg.route)
    return {
        (bs_id, kind): ChannelTrace(bs_id, kind, tuple(samples), rh, cfg.seed)
        for (bs_id, kind), samples in sorted(out.items(), key=lambda kv: (kv[0][0], kv[0][1].value))
    }


def best_server_trace(
    traces: dict[tuple[int, TechKind], ChannelTrace], kind: TechKind
) -> ChannelTrace:
    """Merge per-site traces of one technology into the max-SINR series.

    The merged trace's bs_id is -1; each sample carries the winning site.
    """
    series = [tr for (b, k), tr in sorted(traces.items(), key=lambda kv: kv[0][0]) if k == kind]
    if not series:
        raise ValueError(f"no traces for {kind.value}")
    times = sorted({s.t_us for tr in series for s in tr.samples})
    lookup = [{s.t_us: s for s in tr.samples} for tr in series]
    merged = []
    for t in times:
        best: TraceSample | None = None
        best_bs = series[0].bs_id
        for tr, lk in zip(series, lookup):
            s = lk.get(t)
            if s is None:
                continue
            if best is None or _sample_better(s, best):
                best, best_bs = s, tr.bs_id
        merged.append(
            TraceSample(
                t,
                best.sinr_db if best else None,
                best.rate_bps if best else None,
                best_bs,
            )
        )
    return ChannelTrace(-1, kind, tuple(merged), series[0].route_hash, series[0].seed)


def _sample_better(a: TraceSample, b: TraceSample) -> bool:
    if a.rate_bps is not None or b.rate_bps is not None:
        return (a.rate_bps or 0.0) > (b.rate_bps or 0.0)
    if b.sinr_db is None:
        return a.sinr_db is not None
    if a.sinr_db is None:
        return False
    return a.sinr_db > b.sinr_db


def shift_trace(trace: ChannelTrace, delta_db: float) -> ChannelTrace:
    """Offset every SINR by delta_db (e.g. downlink/uplink power gap)."""
    samples = tuple(
        TraceSample(s.t_us, None if s.sinr_db is None else s.sinr_db + delta_db, s.rate_bps, s.bs_id)
        for s in trace.samples
    )
    return ChannelTrace(trace.bs_id, trace.tech, samples, trace.route_hash, trace.seed)


# --- CSV interchange ------------------------------------------------------
# header: t_s,bs_id,tech,sinr_db[,rate_mbps]; outage = empty sinr_db field

def export_trace(
    traces: dict[tuple[int, TechKind], ChannelTrace] | ChannelTrace, path
) -> None:
    if isinstance(traces, ChannelTrace):
        traces = {(traces.bs_id, traces.tech): traces}
    has_rate = any(
        s.rate_bps is not None for tr in traces.values() for s in tr.samples
    )
    header = "t_s,bs_id,tech,sinr_db" + (",rate_mbps" if has_rate else "")
    rows = []
    for (bs_id, kind), tr in sorted(traces.items(), key=lambda kv: (kv[0][0], kv[0][1].value)):
        for s in tr.samples:
            sinr = "" if s.sinr_db is None else repr(s.sinr_db)
            row = f"{repr(s.t_s)},{bs_id},{kind.value},{sinr}"
            if has_rate:
                row += "," + ("" if s.rate_bps is None else repr(s.rate_bps / 1e6))
            rows.append(row)
    with open(path, "w", newline="\n") as f:
        f.write(header + "\n")
        f.write("\n".join(rows))
        if rows:
            f.write("\n")


def import_trace(path) -> dict[tuple[int, TechKind], ChannelTrace]:
    """Parse a trace CSV; raises TraceFormatError naming the bad line."""
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    if not lines:
        raise TraceFormatError("line 1: empty trace file")
    header = [c.strip() for c in lines[0].split(",")]
    base = ["t_s", "bs_id", "tech", "sinr_db"]
    if header[: len(base)] != base or (len(header) == 5 and header[4] != "rate_mbps") or len(header) > 5:
        raise TraceFormatError(f"line 1: bad header {lines[0]!r}")
    has_rate = len(header) == 5
    per_key: dict[tuple[int, TechKind], list[TraceSample]] = {}
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise TraceFormatError(f"line {ln}: expected {len(header)} columns, got {len(cells)}")
        try:
            t_us = s_to_us(float(cells[0]))
            bs_id = int(cells[1])
            kind = TechKind(cells[2].strip().lower())
            sinr = None if cells[3].strip() == "" else float(cells[3])
            rate = None
            if has_rate and cells[4].strip() != "":
                rate = float(cells[4]) * 1e6
        except (ValueError, KeyError) as exc:
            raise TraceFormatError(f"line {ln}: {exc}") from None
        key = (bs_id, kind)
        bucket = per_key.setdefault(key, [])
        if bucket and t_us <= bucket[-1].t_us:
            raise TraceFormatError(f"line {ln}: timestamps not increasing for bs {bs_id}/{kind.value}")
        bucket.append(TraceSample(t_us, sinr, rate))
    return {
        key: ChannelTrace(key[0], key[1], tuple(samples))
        for key, samples in per_key.items()
    }
