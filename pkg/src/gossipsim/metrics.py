"""Aggregation of execution batches into the simulator's standard metrics.

All estimators are pure functions of their trace inputs and accept any
iterable of traces (lists or generators), accumulating in one pass so that
large batches never need to be held in memory.  Proportions get Wilson 95%
confidence intervals; means get sample standard errors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .engine import ExecutionTrace
from .protocols import Gossip3, Gossip4
from .topology import UNREACHABLE, DistanceMap, Graph, gather_neighbors


def wilson_interval(successes: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = successes / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = (z / denom) * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials))
    return max(0.0, center - half), min(1.0, center + half)


@dataclass
class DistanceProfile:
    """Mean receive fraction per hop distance, over a batch of executions."""

    distances: np.ndarray
    node_count: np.ndarray
    fraction: np.ndarray
    stderr: np.ndarray
    runs: int

    def at(self, d: int) -> float:
        return float(self.fraction[d])

    def to_csv(self, path_or_file) -> None:
        _write_csv(
            path_or_file,
            "distance,count,fraction,stderr",
            (
                f"{int(d)},{int(c)},{_fmt(fr)},{_fmt(se)}"
                for d, c, fr, se in zip(self.distances, self.node_count, self.fraction, self.stderr)
            ),
        )


@dataclass
class BimodalSummary:
    """Per-run band coverage, its histogram, and tail statistics."""

    band: tuple[int, int]
    coverages: np.ndarray
    bin_edges: np.ndarray
    bin_fraction: np.ndarray
    frac_below_10pct: float
    frac_below_20pct: float
    frac_above_80pct: float
    frac_above_90pct: float

    @property
    def runs(self) -> int:
        return self.coverages.size

    def to_csv(self, path_or_file) -> None:
        rows = [
            f"{_fmt(lo)},{_fmt(hi)},{_fmt(fr)}"
            for lo, hi, fr in zip(self.bin_edges[:-1], self.bin_edges[1:], self.bin_fraction)
        ]
        rows += [
            f"below_10pct,,{_fmt(self.frac_below_10pct)}",
            f"below_20pct,,{_fmt(self.frac_below_20pct)}",
            f"above_80pct,,{_fmt(self.frac_above_80pct)}",
            f"above_90pct,,{_fmt(self.frac_above_90pct)}",
        ]
        _write_csv(path_or_file, "bin_lo,bin_hi,run_fraction", rows)


@dataclass
class ThetaEstimate:
    """Survival probability and conditional coverage for one batch."""

    theta_S: float
    ci: tuple[float, float]
    theta_R: Optional[float]
    theta_R_ci: Optional[tuple[float, float]]
    runs: int
    survivors: int
    extinction_threshold: float
    band: tuple[int, int]


@dataclass
class OverheadReport:
    mean_broadcasts: float
    ratio: float
    zone_unicasts: float = 0.0
    # Gossip3 timeout statistics (zero/None for other protocols):
    timeout_fraction: float = 0.0        # timeout forwards / broadcasts
    frac_L_ge1: float = 0.0              # broadcasts whose carried L >= 1
    L_le2_given_ge1: Optional[float] = None  # of those, fraction with L <= 2
    timeout_L_le2: Optional[float] = None  # timeout forwards with carried L <= 2


class _Consumer:
    """Base for one-pass trace accumulators."""

    def add(self, trace: ExecutionTrace) -> None:
        raise NotImplementedError

    def consume(self, traces: Iterable[ExecutionTrace]) -> "_Consumer":
        count = 0
        for tr in traces:
            self.add(tr)
            count += 1
        if count == 0:
            raise ValueError("empty trace list")
        return self


class ProfileAccumulator(_Consumer):
    def __init__(self, dmap: DistanceMap):
        self.dmap = dmap
        self.counts = dmap.counts()
        self.dmax = self.counts.size - 1
        self.runs = 0
        self.sum = np.zeros(self.dmax + 1)
        self.sumsq = np.zeros(self.dmax + 1)

    def per_run_fractions(self, trace: ExecutionTrace) -> np.ndarray:
        mask = trace.received & (self.dmap.dist != UNREACHABLE)
        got = np.bincount(self.dmap.dist[mask], minlength=self.dmax + 1)
        return got / self.counts

    def add(self, trace: ExecutionTrace) -> None:
        frac = self.per_run_fractions(trace)
        self.runs += 1
        self.sum += frac
        self.sumsq += frac * frac

    def result(self) -> DistanceProfile:
        mean = self.sum / self.runs
        if self.runs > 1:
            var = (self.sumsq - self.runs * mean * mean) / (self.runs - 1)
            stderr = np.sqrt(np.maximum(var, 0.0) / self.runs)
        else:
            stderr = np.zeros_like(mean)
        return DistanceProfile(
            distances=np.arange(self.dmax + 1),
            node_count=self.counts,
            fraction=mean,
            stderr=stderr,
            runs=self.runs,
        )


class CoverageAccumulator(_Consumer):
    """Collects per-run receive coverage over a distance band."""

    def __init__(self, dmap: DistanceMap, band: tuple[int, int]):
        lo, hi = band
        if lo > hi:
            raise ValueError("band must be [d_lo, d_hi] with d_lo <= d_hi")
        self.band = (int(lo), int(hi))
        self.members = (dmap.dist >= lo) & (dmap.dist <= hi)
        self.size = int(self.members.sum())
        if self.size == 0:
            raise ValueError(f"band {band} contains no nodes")
        self.coverages: list[float] = []

    def add(self, trace: ExecutionTrace) -> None:
        self.coverages.append(float(trace.received[self.members].sum() / self.size))

    def summary(self) -> BimodalSummary:
        cov = np.array(self.coverages)
        hist, edges = np.histogram(cov, bins=10, range=(0.0, 1.0))
        return BimodalSummary(
            band=self.band,
            coverages=cov,
            bin_edges=edges,
            bin_fraction=hist / cov.size,
            frac_below_10pct=float((cov < 0.10).mean()),
            frac_below_20pct=float((cov < 0.20).mean()),
            frac_above_80pct=float((cov > 0.80).mean()),
            frac_above_90pct=float((cov > 0.90).mean()),
        )

    def theta(self, extinction_threshold: float = 0.5) -> ThetaEstimate:
        if not 0.0 < extinction_threshold < 1.0:
            raise ValueError("extinction threshold must be in (0, 1)")
        cov = np.array(self.coverages)
        surv = cov >= extinction_threshold
        k = int(surv.sum())
        ci = wilson_interval(k, cov.size)
        if k > 0:
            mean_r = float(cov[surv].mean())
            if k > 1:
                half = 1.96 * float(cov[surv].std(ddof=1)) / math.sqrt(k)
            else:
                half = 0.0
            r_ci = (max(0.0, mean_r - half), min(1.0, mean_r + half))
        else:
            mean_r, r_ci = None, None
        return ThetaEstimate(
            theta_S=k / cov.size,
            ci=ci,
            theta_R=mean_r,
            theta_R_ci=r_ci,
            runs=cov.size,
            survivors=k,
            extinction_threshold=extinction_threshold,
            band=self.band,
        )


class OverheadAccumulator(_Consumer):
    def __init__(self, flooding_baseline: int, g: Optional[Graph] = None):
        if flooding_baseline <= 0:
            raise ValueError("flooding baseline must be positive")
        self.baseline = flooding_baseline
        self.g = g
        self.broadcasts: list[int] = []
        self.unicasts: list[int] = []
        self.timeouts = 0
        self.L_ge1 = 0
        self.L_in_1_2 = 0
        self.timeout_L_le2 = 0

    def add(self, trace: ExecutionTrace) -> None:
        self.broadcasts.append(trace.broadcast_count)
        if isinstance(trace.protocol, Gossip4) and trace.protocol.zone_radius > 0 and self.g is not None:
            self.unicasts.append(_zone_unicast_count(self.g, trace.received, trace.protocol.zone_radius))
        if isinstance(trace.protocol, Gossip3):
            self.timeouts += int(trace.timeout_forward.sum())
            sent = trace.sent_L()
            ge1 = sent >= 1
            self.L_ge1 += int(ge1.sum())
            self.L_in_1_2 += int((ge1 & (sent <= 2)).sum())
            timeout_sent = trace.L_at_receipt[trace.timeout_forward] + 1
            self.timeout_L_le2 += int((timeout_sent <= 2).sum())

    def result(self) -> OverheadReport:
        mean_b = float(np.mean(self.broadcasts))
        mean_u = float(np.mean(self.unicasts)) if self.unicasts else 0.0
        total_b = int(np.sum(self.broadcasts))
        return OverheadReport(
            mean_broadcasts=mean_b,
            ratio=mean_b / self.baseline,
            zone_unicasts=mean_u,
            timeout_fraction=self.timeouts / total_b if total_b else 0.0,
            frac_L_ge1=self.L_ge1 / total_b if total_b else 0.0,
            L_le2_given_ge1=self.L_in_1_2 / self.L_ge1 if self.L_ge1 else None,
            timeout_L_le2=self.timeout_L_le2 / self.timeouts if self.timeouts else None,
        )


class ZoneCoverageAccumulator(_Consumer):
    def __init__(self, g: Graph, dmap: DistanceMap, zone_radius: int):
        if zone_radius < 0:
            raise ValueError("zone_radius must be non-negative")
        self.g = g
        self.zone_radius = zone_radius
        self.inner = ProfileAccumulator(dmap)

    def add(self, trace: ExecutionTrace) -> None:
        covered = zone_covered(self.g, trace.received, self.zone_radius)
        mask = covered & (self.inner.dmap.dist != UNREACHABLE)
        got = np.bincount(self.inner.dmap.dist[mask], minlength=self.inner.dmax + 1)
        frac = got / self.inner.counts
        self.inner.runs += 1
        self.inner.sum += frac
        self.inner.sumsq += frac * frac

    def result(self) -> DistanceProfile:
        return self.inner.result()


class RouteLengthAccumulator(_Consumer):
    """Mean hop/shortest ratio over reached nodes at distance >= min_distance."""

    def __init__(self, dmap: DistanceMap, min_distance: int = 10):
        self.dmap = dmap
        self.min_distance = min_distance
        self.eligible = (dmap.dist >= max(min_distance, 1)) & (dmap.dist != UNREACHABLE)
        self.total = 0.0
        self.count = 0

    def add(self, trace: ExecutionTrace) -> None:
        mask = self.eligible & trace.received
        if mask.any():
            ratios = trace.hop[mask] / self.dmap.dist[mask]
            self.total += float(ratios.sum())
            self.count += int(mask.sum())

    def mean_ratio(self) -> float:
        if self.count == 0:
            raise ValueError("no reached destinations at or beyond the minimum distance")
        return self.total / self.count


def zone_covered(g: Graph, received: np.ndarray, zone_radius: int) -> np.ndarray:
    """Nodes within `zone_radius` hops of any receiver (receivers included)."""
    covered = received.copy()
    frontier = np.flatnonzero(received)
    for _ in range(zone_radius):
        if not frontier.size:
            break
        targets, _ = gather_neighbors(g, frontier)
        fresh = np.unique(targets[~covered[targets]])
        covered[fresh] = True
        frontier = fresh
    return covered


def _zone_unicast_count(g: Graph, received: np.ndarray, zone_radius: int) -> int:
    """Unicast transmissions to reach every covered non-receiver.

    Each covered node that did not receive directly is served by its nearest
    receiver; one transmission per hop on that path.
    """
    level = np.where(received, 0, -1).astype(np.int32)
    frontier = np.flatnonzero(received)
    total = 0
    for d in range(1, zone_radius + 1):
        if not frontier.size:
            break
        targets, _ = gather_neighbors(g, frontier)
        fresh = np.unique(targets[level[targets] == -1])
        level[fresh] = d
        total += int(fresh.size) * d
        frontier = fresh
    return total


def receive_fraction_by_distance(traces: Iterable[ExecutionTrace], dmap: DistanceMap) -> DistanceProfile:
    """Mean fraction of nodes at each hop distance that received the message."""
    acc = ProfileAccumulator(dmap)
    acc.consume(traces)
    return acc.result()


def classify_executions(
    traces: Iterable[ExecutionTrace], dmap: DistanceMap, band: tuple[int, int]
) -> BimodalSummary:
    """Per-run coverage of the distance band, binned into a 10-bin histogram."""
    acc = CoverageAccumulator(dmap, band)
    acc.consume(traces)
    return acc.summary()


def estimate_theta(
    traces: Iterable[ExecutionTrace],
    dmap: DistanceMap,
    band: tuple[int, int],
    extinction_threshold: float = 0.5,
) -> ThetaEstimate:
    """Survival fraction (coverage >= threshold) and coverage among survivors."""
    acc = CoverageAccumulator(dmap, band)
    acc.consume(traces)
    return acc.theta(extinction_threshold)


def message_overhead(
    traces: Iterable[ExecutionTrace], flooding_baseline: int, g: Optional[Graph] = None
) -> OverheadReport:
    """Broadcasts per run relative to flooding (= component size).

    Gossip4 zone unicasts never enter the ratio; they are counted separately
    when the graph is supplied.
    """
    acc = OverheadAccumulator(flooding_baseline, g)
    acc.consume(traces)
    return acc.result()


def zone_coverage_by_distance(
    traces: Iterable[ExecutionTrace], g: Graph, dmap: DistanceMap, zone_radius: int
) -> DistanceProfile:
    """Like receive_fraction_by_distance, counting zone-covered nodes as reached."""
    acc = ZoneCoverageAccumulator(g, dmap, zone_radius)
    acc.consume(traces)
    return acc.result()


def route_length_ratio(trace: ExecutionTrace, dmap: DistanceMap, dest: int) -> float:
    """Discovered hop count at `dest` over its true shortest distance."""
    if dest == dmap.source:
        raise ValueError("destination equals the source")
    if not trace.received[dest]:
        raise ValueError(f"destination {dest} did not receive the message")
    return float(trace.hop[dest]) / float(dmap.dist[dest])


def theta_rows_to_csv(path_or_file, rows: Sequence[tuple[float, ThetaEstimate]]) -> None:
    """CSV rows `p,theta_S,ci_lo,ci_hi,theta_R` for a probability sweep."""
    _write_csv(
        path_or_file,
        "p,theta_S,ci_lo,ci_hi,theta_R",
        (
            f"{_fmt(p)},{_fmt(est.theta_S)},{_fmt(est.ci[0])},{_fmt(est.ci[1])},"
            f"{_fmt(est.theta_R) if est.theta_R is not None else ''}"
            for p, est in rows
        ),
    )


def _fmt(x) -> str:
    return repr(float(x))


def _write_csv(path_or_file, header: str, rows: Iterable[str]) -> None:
    def _write(f):
        f.write(header + "\n")
        for row in rows:
            f.write(row + "\n")

    if isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__"):
        with open(path_or_file, "w", newline="\n") as f:
            _write(f)
    else:
        _write(path_or_file)
