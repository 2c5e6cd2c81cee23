"""Per-packet airlink service: SINR -> rate mapping, slot alignment,
HARQ retransmissions and FIFO queueing over a channel trace.

The simulator is fluid at the bit level: a transmission drains the
piecewise-constant trace rate until the packet is through, so delivered
bits can never exceed the integrated link capacity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .model import Technology, TechKind, ms_to_us, us_to_ms, us_to_s
from .channel import ChannelTrace

_FAR_FUTURE_US = 1 << 62


class Direction(enum.Enum):
    UL = "ul"
    DL = "dl"


@dataclass(frozen=True)
class BlerModel:
    """Logistic block-error probability: 0.5 at sinr_ref_db, falling with
    slope per dB above it."""

    sinr_ref_db: float = -6.0
    slope: float = 1.0


@dataclass(frozen=True)
class LinkParams:
    tech: Technology
    se_cap_bps_hz: float
    share: float = 1.0  # fraction of airtime/bandwidth for this direction (FDD: 1)
    min_sinr_db: float = -5.0
    harq_rtx_delay_ms: float = 8.0
    max_rtx: int = 4  # total transmission attempts before dropping
    bler: BlerModel = field(default_factory=BlerModel)
    proc_delay_ms: float = 0.0  # residual stack latency per delivered packet

    def __post_init__(self):
        if not 0 < self.share <= 1:
            raise ValueError("share must be in (0, 1]")
        if self.se_cap_bps_hz <= 0:
            raise ValueError("se_cap_bps_hz must be positive")
        if not 1 <= self.max_rtx <= self.tech.n_harq:
            raise ValueError("max_rtx must be in [1, n_harq]")

    # Defaults below are calibrated, not measured: the LTE cap lands the
    # ~36 Mbps uplink peak; the mmWave link comfortably exceeds the 120 Mbps
    # application cap; proc delays land the ~15 ms best-case mmWave RTT.
    @classmethod
    def uplink_for(cls, tech: Technology) -> "LinkParams":
        if tech.kind == TechKind.LTE:
            return cls(tech, 3.6, 1.0, harq_rtx_delay_ms=8.0, proc_delay_ms=10.0)
        return cls(tech, 7.4, 0.6, harq_rtx_delay_ms=1.0, proc_delay_ms=2.2)

    @classmethod
    def downlink_for(cls, tech: Technology) -> "LinkParams":
        if tech.kind == TechKind.LTE:
            return cls(tech, 3.6, 1.0, harq_rtx_delay_ms=8.0, proc_delay_ms=10.0)
        return cls(tech, 7.4, 0.4, harq_rtx_delay_ms=1.0, proc_delay_ms=2.2)


@dataclass(slots=True)
class PacketRecord:
    pkt_id: int
    direction: Direction
    size_bits: int
    t_sent_us: int
    t_delivered_us: int | None  # None = dropped
    link: tuple[int, str]  # (bs_id, tech)
    n_transmissions: int

    @property
    def delivered(self) -> bool:
        return self.t_delivered_us is not None

    @property
    def delay_us(self) -> int | None:
        if self.t_delivered_us is None:
            return None
        return self.t_delivered_us - self.t_sent_us

    @property
    def delay_ms(self) -> float | None:
        d = self.delay_us
        return None if d is None else us_to_ms(d)

    @property
    def t_sent_s(self) -> float:
        return us_to_s(self.t_sent_us)

    @property
    def t_delivered_s(self) -> float | None:
        return None if self.t_delivered_us is None else us_to_s(self.t_delivered_us)


def sinr_to_rate(sinr_db: float | None, params: LinkParams) -> float:
    """Instantaneous link rate in bps; zero below the outage threshold."""
    if sinr_db is None or sinr_db < params.min_sinr_db:
        return 0.0
    se = min(params.se_cap_bps_hz, math.log2(1.0 + 10.0 ** (sinr_db / 10.0)))
    return params.tech.bandwidth_to_ue_hz * params.share * se


def packet_error_prob(sinr_db: float | None, bler: BlerModel) -> float:
    """First-transmission error probability, logistic around sinr_ref_db."""
    if sinr_db is None:
        return 1.0
    x = (bler.sinr_ref_db - sinr_db) * bler.slope
    if x > 60.0:
        return 1.0
    if x < -60.0:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


def frame_alignment_delay_us(t_arrival_us: int, tech: Technology) -> int:
    """Microseconds until the next slot boundary (0 when already aligned)."""
    slot = tech.slot_us
    rem = t_arrival_us % slot
    return 0 if rem == 0 else slot - rem


class LinkSimulator:
    """FIFO single-server airlink over one channel trace.

    Packets must be submitted in nondecreasing arrival order; each submit
    immediately resolves the packet's fate, which is sound because service
    is FIFO and the channel is an exogenous trace. The trace's last sample
    persists beyond its end.
    """

    def __init__(
        self,
        trace: ChannelTrace,
        params: LinkParams,
        rng: np.random.Generator,
        direction: Direction = Direction.UL,
    ):
        if not trace.samples:
            raise ValueError("empty channel trace")
        self.params = params
        self.direction = direction
        self._rng = rng
        self._times = np.array([s.t_us for s in trace.samples], dtype=np.int64)
        self._rates = np.array(
            [
                s.rate_bps if s.rate_bps is not None else sinr_to_rate(s.sinr_db, params)
                for s in trace.samples
            ]
        )
        self._sinrs = [s.sinr_db for s in trace.samples]
        self._bs = [s.bs_id if s.bs_id is not None else trace.bs_id for s in trace.samples]
        self._next_free_us = 0
        self._next_id = 0
        self._last_arrival_us = -(1 << 62)
        self._harq_us = ms_to_us(params.harq_rtx_delay_ms)
        self._proc_us = ms_to_us(params.proc_delay_ms)

    def _seg(self, t_us: int) -> int:
        i = int(np.searchsorted(self._times, t_us, side="right")) - 1
        return max(i, 0)

    def _transmit(self, start_us: int, size_bits: int) -> tuple[int, int] | None:
        """Fluid-serve size_bits from start_us.

        Returns (finish_us, active_start_us) or None when the remaining
        trace can never carry the bits (terminal outage).
        """
        i = self._seg(start_us)
        t = start_us
        remaining = float(size_bits)
        active: int | None = None
        n = len(self._times)
        while True:
            rate = float(self._rates[i])
            seg_end = int(self._times[i + 1]) if i + 1 < n else None
            if rate > 0.0:
                if active is None:
                    active = t
                if seg_end is None:
                    return t + math.ceil(remaining * 1e6 / rate), active
                cap = rate * (seg_end - t) / 1e6
                if cap >= remaining:
                    return t + math.ceil(remaining * 1e6 / rate), active
                remaining -= cap
            elif seg_end is None:
                return None  # zero rate persists forever
            t = seg_end
            i += 1

    def submit(self, t_arrival_us: int, size_bits: int) -> PacketRecord:
        if size_bits <= 0:
            raise ValueError("size_bits must be positive")
        if t_arrival_us < self._last_arrival_us:
            raise ValueError("arrivals must be nondecreasing")
        self._last_arrival_us = t_arrival_us
        pkt_id = self._next_id
        self._next_id += 1

        start = max(t_arrival_us, self._next_free_us)
        attempts = 0
        delivered: int | None = None
        link_bs = self._bs[0]
        while attempts < self.params.max_rtx:
            attempts += 1
            aligned = start + frame_alignment_delay_us(start, self.params.tech)
            tx = self._transmit(aligned, size_bits)
            if tx is None:
                self._next_free_us = _FAR_FUTURE_US
                break
            finish, active_start = tx
            seg = self._seg(active_start)
            link_bs = self._bs[seg]
            p_err = packet_error_prob(self._sinrs[seg], self.params.bler)
            self._next_free_us = finish
            if self._rng.random() >= p_err:
                delivered = finish + self._proc_us
                break
            start = finish + self._harq_us

        return PacketRecord(
            pkt_id,
            self.direction,
            size_bits,
            t_arrival_us,
            delivered,
            (link_bs, self.params.tech.kind.value),
            attempts,
        )


def simulate_link(
    trace: ChannelTrace,
    arrivals: list[tuple[int, int]],
    params: LinkParams,
    rng: np.random.Generator,
    direction: Direction = Direction.UL,
) -> list[PacketRecord]:
    """Run a whole arrival stream [(t_us, size_bits)] through the link."""
    sim = LinkSimulator(trace, params, rng, direction)
    return [sim.submit(t, size) for t, size in arrivals]


# --- packet-log CSV -------------------------------------------------------
# header: id,dir,size_bits,t_sent_s,t_delivered_s,link,ntx[,e2e_delay_ms]
# dropped packets leave t_delivered_s (and e2e_delay_ms) empty

class PacketLogFormatError(ValueError):
    """Raised for malformed packet-log CSV files."""


def write_packet_log(records: list[PacketRecord], path, include_e2e: bool = False) -> None:
    header = "id,dir,size_bits,t_sent_s,t_delivered_s,link,ntx"
    if include_e2e:
        header += ",e2e_delay_ms"
    with open(path, "w", newline="\n") as f:
        f.write(header + "\n")
        for r in records:
            tdel = "" if r.t_delivered_us is None else repr(r.t_delivered_s)
            row = (
                f"{r.pkt_id},{r.direction.value},{r.size_bits},{repr(r.t_sent_s)},"
                f"{tdel},{r.link[0]}:{r.link[1]},{r.n_transmissions}"
            )
            if include_e2e:
                row += "," + ("" if r.delay_ms is None else repr(r.delay_ms))
            f.write(row + "\n")


def read_packet_log(path) -> list[PacketRecord]:
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    if not lines:
        raise PacketLogFormatError("line 1: empty packet log")
    header = [c.strip() for c in lines[0].split(",")]
    base = ["id", "dir", "size_bits", "t_sent_s", "t_delivered_s", "link", "ntx"]
    if header[: len(base)] != base:
        raise PacketLogFormatError(f"line 1: bad header {lines[0]!r}")
    records = []
    for ln, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise PacketLogFormatError(
                f"line {ln}: expected {len(header)} columns, got {len(cells)}"
            )
        try:
            bs_s, tech_s = cells[5].split(":")
            t_del = None if cells[4].strip() == "" else round(float(cells[4]) * 1e6)
            records.append(
                PacketRecord(
                    int(cells[0]),
                    Direction(cells[1].strip().lower()),
                    int(cells[2]),
                    round(float(cells[3]) * 1e6),
                    t_del,
                    (int(bs_s), tech_s),
                    int(cells[6]),
                )
            )
        except (ValueError, KeyError) as exc:
            raise PacketLogFormatError(f"line {ln}: {exc}") from None
    return records
