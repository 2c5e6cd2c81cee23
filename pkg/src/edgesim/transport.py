"""Application traffic on top of the airlink: a rate-controlled full-buffer
uplink capped at the application maximum, a constant-bit-rate downlink for
detection feedback, and core-network delay accounting.

The uplink sender is a rate-based AIMD loop standing in for TCP: it tracks
the available link capacity, which is all the downstream metrics need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .airlink import Direction, LinkSimulator, PacketRecord
from .model import ms_to_us, s_to_us


@dataclass(frozen=True)
class CongestionParams:
    """Rate-based AIMD knobs (calibration, not protocol constants)."""

    probe_step_bps: float = 4e6  # additive increase per smoothed RTT
    backoff: float = 0.85  # multiplicative decrease on congestion
    min_rate_bps: float = 1e5
    init_rate_bps: float = 10e6
    srtt_weight: float = 0.0625  # EWMA weight of new delay samples
    latency_factor: float = 1.5  # congested when srtt exceeds this x base delay
    latency_slack_ms: float = 2.0  # absolute headroom on top of the factor
    cooldown_rtts: float = 3.0  # smoothed RTTs between backoffs


@dataclass(frozen=True)
class TransportParams:
    ul_cap_bps: float = 120e6
    ul_pkt_bits: int = 8192  # 1024 B
    dl_rate_bps: float = 1e6
    dl_pkts_per_s: float = 30.0
    d_core_ms: float = 5.0
    cc: CongestionParams = field(default_factory=CongestionParams)

    @property
    def dl_pkt_bits(self) -> int:
        # ~4167 B per feedback packet at the defaults
        return int(self.dl_rate_bps / self.dl_pkts_per_s)


def run_uplink_source(
    link: LinkSimulator, params: TransportParams, horizon_s: float
) -> list[PacketRecord]:
    """Closed-loop uplink sender over one link.

    The send rate is probed additively every smoothed RTT and backed off
    multiplicatively when the in-flight queue builds up (smoothed delay
    exceeding the observed base delay by the configured factor, the
    rate-sender equivalent of holding in-flight data near one
    bandwidth-delay product) or when a drop is observed; the rate is
    clamped to [min_rate, ul_cap].
    """
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    horizon_us = s_to_us(horizon_s)
    cc = params.cc
    rate = min(cc.init_rate_bps, params.ul_cap_bps)
    srtt_us: float | None = None
    base_us: float | None = None  # minimum observed delay (queue-free floor)
    records: list[PacketRecord] = []
    observed = 0  # records whose completion the sender has seen
    last_probe_us = 0
    backoff_ok_us = 0
    now = 0
    pkt_bits = params.ul_pkt_bits
    slack_us = ms_to_us(cc.latency_slack_ms)

    while now < horizon_us:
        # absorb feedback that has arrived by now
        dropped = False
        while observed < len(records):
            r = records[observed]
            done_us = r.t_delivered_us
            if done_us is None:
                # drop resolved when the last attempt failed; approximate
                # the sender noticing it one srtt after send
                done_us = r.t_sent_us + int(srtt_us or ms_to_us(20.0))
            if done_us > now:
                break
            observed += 1
            if r.t_delivered_us is None:
                dropped = True
            else:
                sample = float(r.delay_us)
                base_us = sample if base_us is None else min(base_us, sample)
                srtt_us = (
                    sample
                    if srtt_us is None
                    else (1 - cc.srtt_weight) * srtt_us + cc.srtt_weight * sample
                )

        srtt_eff = srtt_us if srtt_us is not None else ms_to_us(20.0)
        queued = (
            srtt_us is not None
            and base_us is not None
            and srtt_us > cc.latency_factor * base_us + slack_us
        )
        if (dropped or queued) and now >= backoff_ok_us:
            rate = max(cc.min_rate_bps, rate * cc.backoff)
            backoff_ok_us = now + int(cc.cooldown_rtts * srtt_eff)
            last_probe_us = now
        elif not queued and now - last_probe_us >= srtt_eff:
            rate = min(params.ul_cap_bps, rate + cc.probe_step_bps)
            last_probe_us = now

        records.append(link.submit(now, pkt_bits))
        now += max(1, math.ceil(pkt_bits * 1e6 / rate))

    return records


def run_downlink_feedback(
    link: LinkSimulator, params: TransportParams, horizon_s: float
) -> list[PacketRecord]:
    """Constant-bit-rate feedback: floor(horizon * pkts_per_s) packets at
    uniform spacing (rounded to the microsecond grid)."""
    if horizon_s <= 0:
        raise ValueError("horizon must be positive")
    n = math.floor(horizon_s * params.dl_pkts_per_s)
    size = params.dl_pkt_bits
    records = []
    for k in range(n):
        t_us = round(k * 1e6 / params.dl_pkts_per_s)
        records.append(link.submit(t_us, size))
    return records


def add_core_delay(records: list[PacketRecord], d_core_ms: float) -> list[PacketRecord]:
    """Add the one-way base-station-to-server delay to every delivered packet."""
    d_us = ms_to_us(d_core_ms)
    if d_us == 0:
        return list(records)
    out = []
    for r in records:
        t_del = None if r.t_delivered_us is None else r.t_delivered_us + d_us
        out.append(
            PacketRecord(
                r.pkt_id, r.direction, r.size_bits, r.t_sent_us, t_del, r.link, r.n_transmissions
            )
        )
    return out


def delivered_throughput_bps(
    records: list[PacketRecord], t_from_s: float, t_to_s: float
) -> float:
    """Delivered bits per second over [t_from, t_to), by delivery time."""
    a, b = s_to_us(t_from_s), s_to_us(t_to_s)
    if b <= a:
        raise ValueError("empty window")
    bits = sum(
        r.size_bits
        for r in records
        if r.t_delivered_us is not None and a <= r.t_delivered_us < b
    )
    return bits * 1e6 / (b - a)
