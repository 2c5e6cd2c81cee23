"""Evaluation metrics over packet logs: per-frame delay-constrained
throughput, multi-connectivity fallback, availability, camera-support
heatmaps and empirical CDFs.

Frame intervals are half-open [kT, (k+1)T) keyed on the packet send time.
Each uplink packet pairs with the feedback (downlink) packet of its own
interval — the earliest one when several were sent there — or, failing
that, with the latest delivered feedback packet sent before the interval
started. Uplink packets with no feedback anywhere before them are
unpaired: they never satisfy the delay constraint and are tallied
separately by rtt_per_frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .airlink import PacketRecord

_HZ_TOL = 1e-9


@dataclass(frozen=True)
class RateSeries:
    """Per-frame-interval throughput under one round-trip delay constraint."""

    interval_s: float
    d_max_ms: float
    values_bps: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values_bps)


@dataclass(frozen=True)
class HeatmapMatrix:
    """Availability per (delay constraint, number of cameras).

    Rows are nonincreasing left to right (more cameras need more rate);
    columns are nondecreasing top to bottom in d_max.
    """

    d_max_ms: tuple[float, ...]
    camera_rates_mbps: tuple[float, ...]
    cells: tuple[tuple[float, ...], ...]  # [row=d_max][col=n_cameras-1]


def _interval_index(t_us: np.ndarray, interval_s: float) -> np.ndarray:
    """Half-open interval index of each send time.

    Uses exact integer arithmetic when 1/interval_s is an integer rate
    (the 30 Hz frame clock), so boundary packets never land in the wrong
    bucket; falls back to float floor otherwise.
    """
    hz = 1.0 / interval_s
    hz_int = round(hz)
    if abs(hz - hz_int) < _HZ_TOL and hz_int >= 1:
        return (t_us.astype(np.int64) * hz_int) // 1_000_000
    return np.floor(t_us / 1e6 / interval_s).astype(np.int64)


def _n_intervals(horizon_s: float, interval_s: float) -> int:
    return math.ceil(horizon_s / interval_s - 1e-12)


def _infer_horizon_s(*logs: list[PacketRecord]) -> float:
    latest = max((r.t_sent_us for log in logs for r in log), default=-1)
    if latest < 0:
        return 0.0
    return (latest + 1) / 1e6


def _paired_dl_delay_us(
    dl_log: list[PacketRecord], interval_s: float, n: int
) -> np.ndarray:
    """Per-interval feedback delay in us; -1 where no pairing exists."""
    own = np.full(n, -1, dtype=np.int64)  # earliest DL inside the interval
    last = np.full(n, -1, dtype=np.int64)  # latest DL inside the interval
    delivered = [r for r in dl_log if r.t_delivered_us is not None]
    delivered.sort(key=lambda r: (r.t_sent_us, r.pkt_id))
    if delivered:
        idx = _interval_index(
            np.array([r.t_sent_us for r in delivered], dtype=np.int64), interval_s
        )
        for r, k in zip(delivered, idx):
            if not 0 <= k < n:
                continue
            if own[k] < 0:
                own[k] = r.delay_us
            last[k] = r.delay_us
    pair = np.full(n, -1, dtype=np.int64)
    carry = np.int64(-1)
    for k in range(n):
        pair[k] = own[k] if own[k] >= 0 else carry
        if last[k] >= 0:
            carry = last[k]
    return pair


def delay_constrained_throughput(
    ul_log: list[PacketRecord],
    dl_log: list[PacketRecord],
    interval_s: float,
    d_max_ms: float,
    horizon_s: float | None = None,
) -> RateSeries:
    """Per-interval b/T, counting only uplink bits whose uplink delay plus
    paired feedback delay is within d_max_ms."""
    if interval_s <= 0:
        raise ValueError("interval_s must be positive")
    if d_max_ms < 0:
        raise ValueError("d_max_ms must be nonnegative")
    if horizon_s is None:
        horizon_s = _infer_horizon_s(ul_log, dl_log)
    n = _n_intervals(horizon_s, interval_s)
    if n == 0:
        return RateSeries(interval_s, d_max_ms, ())
    pair = _paired_dl_delay_us(dl_log, interval_s, n)
    bits = np.zeros(n, dtype=np.int64)
    delivered = [r for r in ul_log if r.t_delivered_us is not None]
    if delivered:
        t_sent = np.array([r.t_sent_us for r in delivered], dtype=np.int64)
        delay = np.array([r.delay_us for r in delivered], dtype=np.int64)
        size = np.array([r.size_bits for r in delivered], dtype=np.int64)
        idx = _interval_index(t_sent, interval_s)
        in_range = (idx >= 0) & (idx < n)
        idx_c = np.clip(idx, 0, n - 1)
        d_max_us = round(d_max_ms * 1000)
        ok = in_range & (pair[idx_c] >= 0) & (delay + pair[idx_c] <= d_max_us)
        np.add.at(bits, idx_c[ok], size[ok])
    values = tuple(float(b) / interval_s for b in bits)
    return RateSeries(interval_s, d_max_ms, values)


def max_fallback(a: RateSeries, b: RateSeries) -> RateSeries:
    """Pointwise max of two rate series (multi-connectivity fallback)."""
    if a.interval_s != b.interval_s:
        raise ValueError("interval mismatch")
    if a.d_max_ms != b.d_max_ms:
        raise ValueError("d_max mismatch")
    if len(a) != len(b):
        raise ValueError("horizon mismatch")
    return RateSeries(
        a.interval_s,
        a.d_max_ms,
        tuple(max(x, y) for x, y in zip(a.values_bps, b.values_bps)),
    )


def availability(series: RateSeries, required_bps: float) -> float:
    """Fraction of intervals meeting the required rate (0.0 when empty)."""
    if len(series) == 0:
        return 0.0
    hits = sum(1 for v in series.values_bps if v >= required_bps)
    return hits / len(series)


def camera_support_matrix(
    ul_log: list[PacketRecord],
    dl_log: list[PacketRecord],
    interval_s: float,
    d_max_list: list[float],
    camera_rates_mbps: list[float],
    horizon_s: float | None = None,
) -> HeatmapMatrix:
    """Availability of streaming the first N cameras, per delay constraint."""
    if not camera_rates_mbps or any(r <= 0 for r in camera_rates_mbps):
        raise ValueError("camera rates must be nonempty and positive")
    if horizon_s is None:
        horizon_s = _infer_horizon_s(ul_log, dl_log)
    series_by_dmax = {
        d_max: delay_constrained_throughput(ul_log, dl_log, interval_s, d_max, horizon_s)
        for d_max in d_max_list
    }
    return heatmap_from_series(series_by_dmax, camera_rates_mbps)


def heatmap_from_series(
    series_by_dmax: dict[float, RateSeries], camera_rates_mbps: list[float]
) -> HeatmapMatrix:
    """Build the camera-support heatmap from precomputed rate series."""
    if not camera_rates_mbps or any(r <= 0 for r in camera_rates_mbps):
        raise ValueError("camera rates must be nonempty and positive")
    cum_bps = np.cumsum(camera_rates_mbps) * 1e6
    rows = []
    d_max_list = list(series_by_dmax)
    for d_max in d_max_list:
        series = series_by_dmax[d_max]
        rows.append(tuple(availability(series, req) for req in cum_bps))
    return HeatmapMatrix(tuple(d_max_list), tuple(camera_rates_mbps), tuple(rows))


def empirical_cdf(samples: list[float]) -> list[tuple[float, float]]:
    """Right-continuous step CDF as (value, cumulative fraction) pairs."""
    if len(samples) == 0:
        raise ValueError("empirical_cdf needs at least one sample")
    values, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
    fracs = np.cumsum(counts) / len(samples)
    return [(float(v), float(f)) for v, f in zip(values, fracs)]


def quantile_from_cdf(cdf: list[tuple[float, float]], q: float) -> float:
    """Smallest value whose cumulative fraction reaches q."""
    if not 0 < q <= 1:
        raise ValueError("q must be in (0, 1]")
    for v, f in cdf:
        if f >= q - 1e-12:
            return v
    return cdf[-1][0]


def rtt_per_frame(
    ul_log: list[PacketRecord],
    dl_log: list[PacketRecord],
    interval_s: float,
    horizon_s: float | None = None,
) -> tuple[list[float], int]:
    """Round-trip samples (ms) per delivered uplink packet: its own delay
    plus its interval's paired feedback delay. Returns (samples, unpaired)."""
    if horizon_s is None:
        horizon_s = _infer_horizon_s(ul_log, dl_log)
    n = _n_intervals(horizon_s, interval_s)
    if n == 0:
        return [], 0
    pair = _paired_dl_delay_us(dl_log, interval_s, n)
    delivered = [r for r in ul_log if r.t_delivered_us is not None]
    if not delivered:
        return [], 0
    t_sent = np.array([r.t_sent_us for r in delivered], dtype=np.int64)
    delay = np.array([r.delay_us for r in delivered], dtype=np.int64)
    idx = _interval_index(t_sent, interval_s)
    in_range = (idx >= 0) & (idx < n)
    idx_c = np.clip(idx, 0, n - 1)
    paired = in_range & (pair[idx_c] >= 0)
    samples = ((delay[paired] + pair[idx_c[paired]]) / 1000.0).tolist()
    return samples, int((~paired).sum())


# --- CSV emission ---------------------------------------------------------

def write_rate_series(series: RateSeries, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("interval,t_start_s,rate_mbps\n")
        for i, v in enumerate(series.values_bps):
            f.write(f"{i},{repr(i * series.interval_s)},{repr(v / 1e6)}\n")


def read_rate_series(path, interval_s: float, d_max_ms: float) -> RateSeries:
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != "interval,t_start_s,rate_mbps":
        raise ValueError(f"bad rate-series header in {path}")
    values = []
    for line in lines[1:]:
        if not line.strip():
            continue
        cells = line.split(",")
        values.append(float(cells[2]) * 1e6)
    return RateSeries(interval_s, d_max_ms, tuple(values))


def write_heatmap(matrix: HeatmapMatrix, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("d_max_ms,n_cameras,availability\n")
        for d_max, row in zip(matrix.d_max_ms, matrix.cells):
            for n_cam, cell in enumerate(row, start=1):
                f.write(f"{repr(d_max)},{n_cam},{repr(cell)}\n")


def write_cdf(cdf: list[tuple[float, float]], path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write("value,cum_fraction\n")
        for v, frac in cdf:
            f.write(f"{repr(v)},{repr(frac)}\n")


def read_cdf(path) -> list[tuple[float, float]]:
    with open(path, newline="") as f:
        lines = f.read().splitlines()
    if not lines or lines[0] != "value,cum_fraction":
        raise ValueError(f"bad CDF header in {path}")
    out = []
    for line in lines[1:]:
        if line.strip():
            v, frac = line.split(",")
            out.append((float(v), float(frac)))
    return out
