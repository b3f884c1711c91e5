import csv
import json
import statistics

import numpy as np
import pytest

from tsnsim import metrics as mx
from tsnsim.metrics import BoxStats, MetricsError, MetricsStore
from tsnsim.mobility import DistanceBin
from tsnsim.phy import HarqCounters
from tsnsim.tsn import Frame

PS = 10**12


def delivered(flow, seq, created_s, delivered_s):
    f = Frame(flow=flow, seq=seq, size=100, created_at=round(created_s * PS), pcp=7)
    f.delivered_at = round(delivered_s * PS)
    return f


def test_record_delivery():
    store = MetricsStore()
    r = store.record_delivery(delivered("a", 0, 1.000, 1.004))
    assert r.latency == pytest.approx(0.004)
    assert store.record_delivery(delivered("a", 1, 2.0, 2.0)).latency == 0.0
    store.record_delivery(delivered("a", 3, 3.0, 3.5))
    store.record_delivery(delivered("a", 2, 2.5, 3.6))
    assert [r.seq for r in store.latencies] == [0, 1, 3, 2]
    bad = Frame("a", 9, 1, 10, 0)
    with pytest.raises(MetricsError):
        store.record_delivery(bad)


def test_box_stats_examples():
    b = mx.box_stats([1, 2, 3, 4, 5])
    assert (b.q1, b.median, b.q3) == (2, 3, 4)
    c = mx.box_stats([7.0] * 9)
    assert c.iqr == 0 and c.outliers == ()
    d = mx.box_stats(list(range(1, 101)) + [1000])
    q1, _, q3 = statistics.quantiles(list(range(1, 101)) + [1000], n=4, method="inclusive")
    assert (d.q1, d.q3) == (q1, q3)
    assert d.outliers == (1000.0,)
    assert d.whisker_high == 100
    with pytest.raises(MetricsError):
        mx.box_stats([])


def test_harq_error_rate():
    cells = {("InF-SL", DistanceBin.D1): HarqCounters(1000, 0, 1000, 0),
             ("InF-SL", DistanceBin.D2): HarqCounters(1000, 100, 910, 10)}
    assert mx.harq_error_rate(cells, "InF-SL", DistanceBin.D1) == (0.0, 0.0)
    att, res = mx.harq_error_rate(cells, "InF-SL", DistanceBin.D2)
    assert att == 0.1 and res == pytest.approx(10 / 910)
    assert mx.harq_error_rate(cells, "InF-SL", DistanceBin.D3) == (None, None)


def test_sinr_summary():
    s = mx.sinr_summary([20.0] * 10)
    assert s["mean"] == 20 and s["p5"] == 20 and s["p95"] == 20
    assert mx.sinr_summary([10, 20])["mean"] == 15


def test_hh_fixed_position_variance_is_shadowing_only():
    from tsnsim import engine
    from tsnsim.chan38901 import InfProfile
    from tsnsim.scenario import Scenario

    store = engine.simulate(Scenario(profile=InfProfile.HH, duration=500.0).with_ring(60.0))
    vals = np.array([s.sinr_db for s in store.sinr_trace])
    # HH is always LOS, so only the 4 dB shadowing varies
    assert np.std(vals, ddof=1) == pytest.approx(4.0, rel=0.05)


def test_warmup_filter():
    store = MetricsStore(warmup=1.0)
    for i, t in enumerate([0.2, 0.999, 1.0, 1.5]):
        store.record_delivery(delivered("a", i, t, t + 0.01))
    kept = store.kept_latencies()
    assert [r.seq for r in kept] == [2, 3]
    assert len(store.latencies) == 4


def test_empty_export(tmp_path):
    MetricsStore().export(tmp_path)
    assert (tmp_path / "latency.csv").read_text() == ",".join(mx.LATENCY_COLUMNS) + "\n"
    assert (tmp_path / "harq.csv").read_text() == ",".join(mx.HARQ_COLUMNS) + "\n"
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["harq"] == [] and summary["sinr"] == [] and summary["flows"] == {}


def test_export_bytes_and_roundtrip(tmp_path):
    from tsnsim import engine
    from tsnsim.scenario import Scenario

    store = engine.simulate(Scenario(duration=10.0).with_test_case(3))
    store.export(tmp_path / "a")
    store.export(tmp_path / "b")
    for name in ("latency.csv", "harq.csv", "sinr.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text())
    with open(tmp_path / "a" / "latency.csv") as fh:
        rows = list(csv.DictReader(fh))
    for flow, info in summary["flows"].items():
        lat = [float(r["latency_ms"]) for r in rows if r["flow"] == flow]
        q1, med, q3 = statistics.quantiles(lat, n=4, method="inclusive")
        box = info["latency_ms"]
        assert box["q1"] == pytest.approx(q1, abs=2e-6)
        assert box["median"] == pytest.approx(med, abs=2e-6)
        assert box["q3"] == pytest.approx(q3, abs=2e-6)
        assert box["count"] == len(lat)


def test_boxstats_dict_rounding():
    b = BoxStats(1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3, 1 / 3, (), 1)
    assert b.as_dict()["median"] == 0.333333
