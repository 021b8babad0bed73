"""Delivery bookkeeping and end-of-run summary statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .queueing import Packet


@dataclass(frozen=True)
class DelayRecord:
    packet_id: int
    commodity: int
    created_slot: int
    delivered_slot: int

    @property
    def delay(self) -> int:
        return self.delivered_slot - self.created_slot


@dataclass(frozen=True)
class RunMetrics:
    slots: int
    arrivals: int
    delivered: int
    avg_delay: float
    p95_delay: float
    mean_total_queue: float
    stability_slope: float
    stable: bool
    total_queue_series: np.ndarray


class MetricsCollector:
    """Accumulates per-delivery delays and the per-slot total-backlog series."""

    def __init__(self, keep_records: bool = False) -> None:
        self.delays: List[int] = []
        self.records: Optional[List[DelayRecord]] = [] if keep_records else None
        self.total_queue_series: List[int] = []

    def record_total_queue(self, total: int) -> None:
        self.total_queue_series.append(total)

    def finalize(self, slots: int, arrivals: int, delivered: int) -> RunMetrics:
        delays = np.asarray(self.delays, dtype=np.float64)
        series = np.asarray(self.total_queue_series, dtype=np.float64)
        if delays.size:
            avg = float(delays.mean())
            p95 = float(np.percentile(delays, 95))
        else:
            avg = math.nan
            p95 = math.nan
        if series.size >= 100:
            stable, slope = stability_verdict(series)
        else:
            stable, slope = False, math.nan
        return RunMetrics(
            slots=slots,
            arrivals=arrivals,
            delivered=delivered,
            avg_delay=avg,
            p95_delay=p95,
            mean_total_queue=float(series.mean()) if series.size else math.nan,
            stability_slope=slope,
            stable=stable,
            total_queue_series=series,
        )


def record_delivery(metrics: MetricsCollector, packet: Packet, slot: int) -> None:
    """Log one delivered packet; delay is counted from creation to delivery."""
    if slot < packet.created_slot:
        raise ValueError("delivery before creation")
    metrics.delays.append(slot - packet.created_slot)
    if metrics.records is not None:
        metrics.records.append(
            DelayRecord(packet.id, packet.commodity, packet.created_slot, slot)
        )


def stability_verdict(
    series: np.ndarray, window_fraction: float = 0.5, slope_eps: float = 0.01
) -> Tuple[bool, float]:
    """Least-squares slope of the total-backlog series over its trailing window.

    The run counts as stable when the slope is at most ``slope_eps`` packets
    per slot.  Needs at least 100 points so the fit means something.
    """
    series = np.asarray(series, dtype=np.float64)
    if series.size < 100:
        raise ValueError("need at least 100 slots to judge stability")
    if not (0.0 < window_fraction <= 1.0):
        raise ValueError("window_fraction must lie in (0, 1]")
    start = series.size - max(2, int(series.size * window_fraction))
    window = series[start:]
    x = np.arange(window.size, dtype=np.float64)
    slope = float(np.polyfit(x, window, 1)[0])
    return slope <= slope_eps, slope


def throughput_ratio(metrics: RunMetrics) -> float:
    """Delivered over arrived; vacuously 1.0 when nothing arrived."""
    if metrics.arrivals == 0:
        return 1.0
    return metrics.delivered / metrics.arrivals
