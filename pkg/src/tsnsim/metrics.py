"""
Per-run observations (latencies, SINR samples, HARQ counters) and their
reduction to boxplot statistics, error rates and export files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .mobility import BIN_ORDER, DistanceBin
from .phy import HarqCounters

PS = 1e-12


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class LatencyRecord:
    flow: str
    seq: int
    created_at: float
    delivered_at: float

    @property
    def latency(self) -> float:
        return self.delivered_at - self.created_at


@dataclass(frozen=True)
class SinrSample:
    t: float
    sinr_db: float
    d_2d: float
    bin: DistanceBin


@dataclass(frozen=True)
class BoxStats:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    whisker_low: float
    whisker_high: float
    outliers: tuple
    count: int

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def as_dict(self, scale: float = 1.0) -> dict:
        d = {k: _num(getattr(self, k) * scale) for k in
             ("min", "q1", "median", "q3", "max", "whisker_low", "whisker_high")}
        d["iqr"] = _num(self.iqr * scale)
        d["count"] = self.count
        d["outliers"] = [_num(o * scale) for o in self.outliers]
        return d


def quantile(sorted_vals, p: float) -> float:
    """Linear interpolation between closest ranks, position ``(n - 1) * p``."""
    return float(np.quantile(np.asarray(sorted_vals, dtype=float), p, method="linear"))


def box_stats(samples) -> BoxStats:
    xs = np.sort(np.asarray(samples, dtype=float))
    if xs.size == 0:
        raise MetricsError("box_stats needs at least one sample")
    q1, med, q3 = (float(v) for v in np.quantile(xs, [0.25, 0.5, 0.75], method="linear"))
    iqr = q3 - q1
    lo_fence, hi_fence = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = xs[(xs >= lo_fence) & (xs <= hi_fence)]
    outliers = tuple(float(v) for v in xs[(xs < lo_fence) | (xs > hi_fence)])
    return BoxStats(
        min=float(xs[0]),
        q1=q1,
        median=med,
        q3=q3,
        max=float(xs[-1]),
        # an in-fence extreme can sit inside the box when quartiles interpolate
        whisker_low=min(float(inside[0]), q1),
        whisker_high=max(float(inside[-1]), q3),
        outliers=outliers,
        count=int(xs.size),
    )


def harq_error_rate(counters: dict, profile: str, bin: DistanceBin) -> tuple[float | None, float | None]:
    """(attempt-level rate, residual PDU rate); ``None`` marks an empty cell."""
    c = counters.get((profile, bin))
    if c is None or c.total_tx == 0:
        return None, None
    residual = c.pdu_failed / c.pdu_total if c.pdu_total else None
    return c.failed_tx / c.total_tx, residual


def sinr_summary(values) -> dict:
    xs = np.asarray(values, dtype=float)
    if xs.size == 0:
        raise MetricsError("sinr_summary needs a non-empty trace")
    p5, p50, p95 = np.quantile(xs, [0.05, 0.5, 0.95], method="linear")
    return {"mean": float(xs.mean()), "p5": float(p5), "p50": float(p50), "p95": float(p95),
            "count": int(xs.size)}


def _num(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return round(float(x), 6)


def _fmt(x) -> str:
    return "NA" if x is None else f"{x:.6f}"


LATENCY_COLUMNS = ("flow", "seq", "created_s", "delivered_s", "latency_ms")
HARQ_COLUMNS = ("profile", "bin", "total_tx", "failed_tx", "attempt_rate",
                "pdu_total", "pdu_failed", "residual_rate")
SINR_COLUMNS = ("t_s", "sinr_db", "d_2d", "bin")


@dataclass
class FlowCounters:
    generated: int = 0
    delivered: int = 0
    dropped_queue: int = 0
    dropped_harq: int = 0

    @property
    def dropped(self) -> int:
        return self.dropped_queue + self.dropped_harq


@dataclass
class MetricsStore:
    profile: str = "InF-SL"
    warmup: float = 0.0
    latencies: list = field(default_factory=list)
    sinr_trace: list = field(default_factory=list)
    harq: dict = field(default_factory=dict)
    flows: dict = field(default_factory=dict)
    flow_info: dict = field(default_factory=dict)
    scenario: dict = field(default_factory=dict)
    in_flight: dict = field(default_factory=dict)

    def record_delivery(self, frame) -> LatencyRecord:
        if frame.delivered_at is None:
            raise MetricsError(f"frame {frame.flow}#{frame.seq} was not delivered")
        if frame.delivered_at < frame.created_at:
            raise MetricsError(f"frame {frame.flow}#{frame.seq} delivered before creation")
        rec = LatencyRecord(frame.flow, frame.seq, frame.created_at * PS, frame.delivered_at * PS)
        self.latencies.append(rec)
        return rec

    def harq_cell(self, bin: DistanceBin) -> HarqCounters:
        key = (self.profile, bin)
        c = self.harq.get(key)
        if c is None:
            c = self.harq[key] = HarqCounters()
        return c

    def kept_latencies(self) -> list:
        """Latency records created at or after the warm-up horizon."""
        return [r for r in self.latencies if r.created_at >= self.warmup]

    def latencies_by_flow(self) -> dict:
        out = {name: [] for name in self.flow_info}
        for r in self.kept_latencies():
            out.setdefault(r.flow, []).append(r.latency)
        return out

    # exports

    def summary(self) -> dict:
        flows = {}
        for name, lat in self.latencies_by_flow().items():
            info = dict(self.flow_info.get(name, {}))
            c = self.flows.get(name, FlowCounters())
            info.update(
                generated=c.generated,
                delivered=c.delivered,
                dropped=c.dropped,
                in_flight=self.in_flight.get(name, 0),
                latency_ms=box_stats(lat).as_dict(scale=1e3) if lat else None,
            )
            flows[name] = info
        harq = []
        for (profile, b) in self._harq_keys():
            c = self.harq.get((profile, b), HarqCounters())
            att, res = harq_error_rate(self.harq, profile, b)
            harq.append({"profile": profile, "bin": b.value, "total_tx": c.total_tx,
                         "failed_tx": c.failed_tx, "attempt_rate": _num(att),
                         "pdu_total": c.pdu_total, "pdu_failed": c.pdu_failed,
                         "residual_rate": _num(res)})
        sinr = []
        if self.sinr_trace:
            s = sinr_summary([x.sinr_db for x in self.sinr_trace])
            sinr.append({"profile": self.profile, **{k: _num(v) if k != "count" else v
                                                     for k, v in s.items()}})
        return {"scenario": self.scenario, "flows": flows, "harq": harq, "sinr": sinr}

    def _harq_keys(self):
        # every bin of every profile that transmitted at all, so grids line up
        profiles = sorted({p for p, _ in self.harq})
        return [(p, b) for p in profiles for b in BIN_ORDER]

    def export_csv(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "latency.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(LATENCY_COLUMNS)
            for r in sorted(self.kept_latencies(), key=lambda r: (r.flow, r.seq)):
                w.writerow((r.flow, r.seq, f"{r.created_at:.6f}", f"{r.delivered_at:.6f}",
                            f"{r.latency * 1e3:.6f}"))
        with open(out / "harq.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(HARQ_COLUMNS)
            for profile, b in self._harq_keys():
                c = self.harq.get((profile, b), HarqCounters())
                att, res = harq_error_rate(self.harq, profile, b)
                w.writerow((profile, b.value, c.total_tx, c.failed_tx, _fmt(att),
                            c.pdu_total, c.pdu_failed, _fmt(res)))
        with open(out / "sinr.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SINR_COLUMNS)
            for s in self.sinr_trace:
                w.writerow((f"{s.t:.6f}", f"{s.sinr_db:.6f}", f"{s.d_2d:.6f}", s.bin.value))

    def export_json(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    def export(self, out_dir) -> None:
        self.export_csv(out_dir)
        self.export_json(Path(out_dir) / "summary.json")
