"""Scenario config files: INI-style text, one key per line.

Sections: [route], [bs.N], [lte], [mmwave], [blockage], [traffic],
[policy]. Every key has a default; unknown keys or sections are reported
as violations rather than silently ignored. See the README for the full
key reference with units.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

from .airlink import BlerModel, LinkParams
from .model import (
    BaseStation,
    BlockageParams,
    Duplex,
    PathLossParams,
    RadioParams,
    RouteSpec,
    ScenarioConfig,
    TechKind,
    Technology,
)


class ConfigError(ValueError):
    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


@dataclass(frozen=True)
class PolicySettings:
    target_ms: float = 100.0
    strategy: str = "uniform"
    camera_rates_mbps: tuple[float, ...] = ()  # empty: derive from strategy


@dataclass(frozen=True)
class TrafficSettings:
    probe_step_mbps: float = 4.0
    backoff: float = 0.85
    min_rate_mbps: float = 0.1
    init_rate_mbps: float = 10.0


@dataclass(frozen=True)
class ScenarioBundle:
    """Everything a run needs: core config plus per-tech link parameters."""

    config: ScenarioConfig
    links_ul: dict[TechKind, LinkParams]
    links_dl: dict[TechKind, LinkParams]
    policy: PolicySettings = field(default_factory=PolicySettings)
    traffic: TrafficSettings = field(default_factory=TrafficSettings)


_ROUTE_KEYS = {
    "waypoints", "spacing_m", "speed_mps", "ue_height_m",
    "n_los", "n_nlos", "nlos_offset_db", "nlos_extra_spread_db", "n_nlos_rays",
}
_BS_KEYS = {"position", "tech", "height_m", "nlos_m"}
_TECH_KEYS = {
    "carrier_ghz", "total_bandwidth_mhz", "loading_fraction", "duplex",
    "slot_ms", "n_harq", "se_cap_bps_hz", "ul_share", "dl_share",
    "min_sinr_db", "harq_rtx_delay_ms", "max_rtx", "proc_delay_ms",
    "bler_sinr_ref_db", "bler_slope", "ue_tx_power_dbm", "dl_tx_power_dbm",
    "noise_figure_db", "bs_array", "ue_array", "interference_activity",
    "outage_floor_db",
}
_BLOCKAGE_KEYS = {
    "k_nsb", "t_blk_ms", "self_attenuation_db", "nsb_attenuation_db",
    "enable_self", "self_az_center_deg", "self_az_spread_deg",
    "self_el_center_deg", "self_el_spread_deg", "az_spread_deg",
    "el_spread_deg", "applies_to",
}
_TRAFFIC_KEYS = {
    "d_core_ms", "ul_cap_mbps", "dl_rate_mbps", "dl_pkts_per_s",
    "tcp_pkt_bytes", "frame_hz", "seed", "horizon_s",
    "probe_step_mbps", "backoff", "min_rate_mbps", "init_rate_mbps",
}
_POLICY_KEYS = {"target_ms", "strategy", "camera_rates"}


def _parse_pairs(text: str) -> list[tuple[float, float]]:
    pairs = []
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        x, y = chunk.split(",")
        pairs.append((float(x), float(y)))
    return pairs


def _parse_ranges(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        lo, hi = chunk.split(":")
        out.append((float(lo), float(hi)))
    return tuple(out)


def _parse_bounds(text: str) -> tuple[float, float]:
    lo, hi = text.split(":")
    return float(lo), float(hi)


def _parse_array(text: str) -> tuple[int, int]:
    a, b = text.lower().split("x")
    return int(a), int(b)


def parse_scenario(path) -> ScenarioBundle:
    """Parse and structurally validate a scenario file.

    Raises ConfigError listing every violation found.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    read = cp.read(path)
    violations: list[str] = []
    if not read:
        raise ConfigError([f"cannot read config file {path}"])

    def check_keys(section: str, allowed: set[str]) -> None:
        if not cp.has_section(section):
            return
        for key in cp[section]:
            if key not in allowed:
                violations.append(f"[{section}] unknown key {key!r}")

    known = {"route", "lte", "mmwave", "blockage", "traffic", "policy"}
    for section in cp.sections():
        if section not in known and not section.startswith("bs."):
            violations.append(f"unknown section [{section}]")

    check_keys("route", _ROUTE_KEYS)
    check_keys("blockage", _BLOCKAGE_KEYS)
    check_keys("traffic", _TRAFFIC_KEYS)
    check_keys("policy", _POLICY_KEYS)
    check_keys("lte", _TECH_KEYS)
    check_keys("mmwave", _TECH_KEYS)

    if not cp.has_section("route"):
        violations.append("missing [route] section")
        raise ConfigError(violations)

    route_sec = cp["route"]
    try:
        waypoints = _parse_pairs(route_sec.get("waypoints", ""))
    except ValueError:
        violations.append("[route] waypoints must be 'x,y; x,y; ...'")
        waypoints = []
    if len(waypoints) < 2:
        violations.append("[route] needs at least 2 waypoints")

    bs_sections = sorted(s for s in cp.sections() if s.startswith("bs."))
    if not bs_sections:
        violations.append("no [bs.N] sections")
    stations = []
    for name in bs_sections:
        check_keys(name, _BS_KEYS)
        sec = cp[name]
        try:
            bs_id = int(name.split(".", 1)[1])
        except ValueError:
            violations.append(f"[{name}] section name must be bs.<integer>")
            continue
        try:
            pos_pairs = _parse_pairs(sec.get("position", ""))
            if len(pos_pairs) != 1:
                raise ValueError
            position = pos_pairs[0]
        except ValueError:
            violations.append(f"[{name}] position must be 'x,y'")
            continue
        techs = []
        for t in sec.get("tech", "lte, mmwave").split(","):
            t = t.strip().lower()
            if not t:
                continue
            try:
                techs.append(TechKind(t))
            except ValueError:
                violations.append(f"[{name}] unknown tech {t!r}")
        try:
            nlos = _parse_ranges(sec.get("nlos_m", ""))
        except ValueError:
            violations.append(f"[{name}] nlos_m must be 'lo:hi, lo:hi, ...'")
            nlos = ()
        stations.append(
            BaseStation(bs_id, position, tuple(techs), sec.getfloat("height_m", 10.0), nlos)
        )

    if violations:
        raise ConfigError(violations)

    route = RouteSpec(
        waypoints,
        route_sec.getfloat("spacing_m", 1.0),
        route_sec.getfloat("speed_mps", 1.4),
    )
    pathloss = PathLossParams(
        route_sec.getfloat("n_los", 2.0),
        route_sec.getfloat("n_nlos", 2.0),
        route_sec.getfloat("nlos_offset_db", 20.0),
        route_sec.getfloat("nlos_extra_spread_db", 10.0),
        route_sec.getint("n_nlos_rays", 3),
    )

    technologies = []
    radios = []
    links_ul: dict[TechKind, LinkParams] = {}
    links_dl: dict[TechKind, LinkParams] = {}
    for kind, default_tech in ((TechKind.LTE, Technology.lte()), (TechKind.MMWAVE, Technology.mmwave())):
        sec = cp[kind.value] if cp.has_section(kind.value) else {}
        get = lambda key, fallback: float(sec.get(key, fallback)) if sec else fallback  # noqa: E731
        tech = Technology(
            kind,
            get("carrier_ghz", default_tech.carrier_ghz),
            get("total_bandwidth_mhz", default_tech.total_bandwidth_mhz),
            Duplex(str(sec.get("duplex", default_tech.duplex.value)).lower()) if sec else default_tech.duplex,
            get("slot_ms", default_tech.slot_ms),
            int(get("n_harq", default_tech.n_harq)),
            get("loading_fraction", default_tech.loading_fraction),
        )
        technologies.append(tech)
        default_radio = RadioParams.lte() if kind == TechKind.LTE else RadioParams.mmwave()
        radio = RadioParams(
            get("ue_tx_power_dbm", default_radio.ue_tx_power_dbm),
            get("dl_tx_power_dbm", default_radio.dl_tx_power_dbm),
            get("noise_figure_db", default_radio.noise_figure_db),
            _parse_array(sec["bs_array"]) if sec and "bs_array" in sec else default_radio.bs_array,
            _parse_array(sec["ue_array"]) if sec and "ue_array" in sec else default_radio.ue_array,
            get("interference_activity", default_radio.interference_activity),
            get("outage_floor_db", default_radio.outage_floor_db),
        )
        radios.append((kind, radio))
        default_ul = LinkParams.uplink_for(tech)
        default_dl = LinkParams.downlink_for(tech)
        bler = BlerModel(
            get("bler_sinr_ref_db", default_ul.bler.sinr_ref_db),
            get("bler_slope", default_ul.bler.slope),
        )
        common = dict(
            se_cap_bps_hz=get("se_cap_bps_hz", default_ul.se_cap_bps_hz),
            min_sinr_db=get("min_sinr_db", default_ul.min_sinr_db),
            harq_rtx_delay_ms=get("harq_rtx_delay_ms", default_ul.harq_rtx_delay_ms),
            max_rtx=int(get("max_rtx", default_ul.max_rtx)),
            bler=bler,
            proc_delay_ms=get("proc_delay_ms", default_ul.proc_delay_ms),
        )
        links_ul[kind] = LinkParams(tech, share=get("ul_share", default_ul.share), **common)
        links_dl[kind] = LinkParams(tech, share=get("dl_share", default_dl.share), **common)

    blk_sec = cp["blockage"] if cp.has_section("blockage") else None
    defaults_blk = BlockageParams()
    if blk_sec is not None:
        applies = tuple(
            TechKind(t.strip().lower())
            for t in blk_sec.get("applies_to", "mmwave").split(",")
            if t.strip()
        )
        blockage = BlockageParams(
            blk_sec.getint("k_nsb", defaults_blk.k_nsb),
            blk_sec.getfloat("t_blk_ms", defaults_blk.t_blk_ms),
            blk_sec.getfloat("self_attenuation_db", defaults_blk.self_attenuation_db),
            blk_sec.getfloat("nsb_attenuation_db", defaults_blk.nsb_attenuation_db),
            blk_sec.getboolean("enable_self", defaults_blk.enable_self),
            blk_sec.getfloat("self_az_center_deg", defaults_blk.self_az_center_deg),
            blk_sec.getfloat("self_az_spread_deg", defaults_blk.self_az_spread_deg),
            blk_sec.getfloat("self_el_center_deg", defaults_blk.self_el_center_deg),
            blk_sec.getfloat("self_el_spread_deg", defaults_blk.self_el_spread_deg),
            _parse_bounds(blk_sec.get("az_spread_deg", "5:15")),
            _parse_bounds(blk_sec.get("el_spread_deg", "5:15")),
            applies,
        )
    else:
        blockage = defaults_blk

    tr = cp["traffic"] if cp.has_section("traffic") else None
    horizon = None
    if tr is not None and tr.get("horizon_s", "").strip():
        horizon = tr.getfloat("horizon_s")

    config = ScenarioConfig(
        route=route,
        base_stations=tuple(stations),
        d_core_ms=tr.getfloat("d_core_ms", 5.0) if tr else 5.0,
        ul_cap_mbps=tr.getfloat("ul_cap_mbps", 120.0) if tr else 120.0,
        dl_rate_mbps=tr.getfloat("dl_rate_mbps", 1.0) if tr else 1.0,
        dl_pkts_per_s=tr.getfloat("dl_pkts_per_s", 30.0) if tr else 30.0,
        tcp_pkt_bytes=tr.getint("tcp_pkt_bytes", 1024) if tr else 1024,
        frame_hz=tr.getfloat("frame_hz", 30.0) if tr else 30.0,
        seed=tr.getint("seed", 1) if tr else 1,
        blockage=blockage,
        pathloss=pathloss,
        technologies=tuple(technologies),
        radio=tuple(radios),
        ue_height_m=route_sec.getfloat("ue_height_m", 1.5),
        horizon_s=horizon,
    )

    traffic = TrafficSettings(
        tr.getfloat("probe_step_mbps", 4.0) if tr else 4.0,
        tr.getfloat("backoff", 0.85) if tr else 0.85,
        tr.getfloat("min_rate_mbps", 0.1) if tr else 0.1,
        tr.getfloat("init_rate_mbps", 10.0) if tr else 10.0,
    )

    pol = cp["policy"] if cp.has_section("policy") else None
    rates = ()
    if pol is not None and pol.get("camera_rates", "").strip():
        rates = tuple(float(x) for x in pol.get("camera_rates").split(","))
    policy = PolicySettings(
        pol.getfloat("target_ms", 100.0) if pol else 100.0,
        (pol.get("strategy", "uniform") if pol else "uniform").strip().lower(),
        rates,
    )
    if policy.strategy not in ("uniform", "priority"):
        raise ConfigError([f"[policy] unknown strategy {policy.strategy!r}"])

    return ScenarioBundle(config, links_ul, links_dl, policy, traffic)
