import math

import numpy as np
import pytest

from tsnsim import phy
from tsnsim.phy import BlerCurve, HarqCounters, HarqLogicError, HarqOutcome, HarqProcess, McsTable, PhyError


def test_slot_duration():
    assert phy.slot_duration(0) == 1e-3
    assert phy.slot_duration(4) == 0.0625e-3
    assert phy.slot_duration(2) == 0.25e-3
    assert phy.slot_duration_ps(4) == 62_500_000
    with pytest.raises(PhyError, match="numerology"):
        phy.slot_duration(7)


def test_noise_power():
    assert phy.noise_power(1, 0, 0) == pytest.approx(-174 + 10 * math.log10(180_000))
    assert round(phy.noise_power(1, 0, 0), 2) == -121.45
    assert phy.noise_power(50, 4, 5) - phy.noise_power(25, 4, 5) == pytest.approx(10 * math.log10(2), abs=1e-12)
    assert round(phy.noise_power(25, 4, 5), 2) == -90.43
    with pytest.raises(PhyError):
        phy.noise_power(0, 0, 0)


def test_sinr():
    assert phy.sinr(-80, -100) == 20
    reg = phy.InterferenceRegistry()
    assert phy.sinr(-80, -100, reg) == 20
    reg.register("gnb2", -100)
    assert phy.sinr(-80, -100, reg) == pytest.approx(20 - 10 * math.log10(2), abs=1e-12)
    assert round(phy.sinr(-80, -100, reg), 4) == 16.9897
    rx = 23 - 89.486
    assert phy.sinr(rx, -90.43) == pytest.approx(-66.486 + 90.43)


def test_bler_midpoint_and_tail():
    c = BlerCurve.default()
    for m in range(28):
        mid = -5 + 1.2 * m
        assert c.bler(m, mid) == pytest.approx(0.5)
        assert c.bler(m, mid + 20 * 0.5) < 1e-8
    with pytest.raises(PhyError, match="unknown MCS"):
        c.bler(28, 0)


def test_bler_monotone_grid():
    c = BlerCurve.default()
    grid = np.linspace(-30, 60, 2001)
    for m in range(28):
        vals = [c.bler(m, g) for g in grid]
        assert all(b <= a for a, b in zip(vals, vals[1:]))
        assert all(0 <= v <= 1 for v in vals)


def test_select_mcs_examples():
    c = BlerCurve.default()
    assert phy.select_mcs(c, -40, 0.01) == 0
    assert phy.select_mcs(c, -5 + 1.2 * 27 + 10, 0.01) == 27
    # brute force at 10 dB: highest m whose logistic BLER is within target
    brute = max((m for m in range(28)
                 if 1 / (1 + math.exp((10 - (-5 + 1.2 * m)) / 0.5)) <= 0.01), default=0)
    assert phy.select_mcs(c, 10.0, 0.01) == brute == 10


def test_select_mcs_non_decreasing():
    c = BlerCurve.default()
    prev = 0
    for g in np.linspace(-20, 50, 3000):
        m = phy.select_mcs(c, g, 0.01)
        assert m >= prev
        prev = m


def test_tb_size():
    t = McsTable([1.0, 0.2344])
    assert phy.transport_block_bits(0, 1, t) == 168
    assert phy.transport_block_bits(1, 25, t) == 984
    d = McsTable.default()
    for m in range(28):
        a, b = phy.transport_block_bits(m, 10, d), phy.transport_block_bits(m, 20, d)
        assert b - 2 * a in (0, 1)
    assert d.efficiencies[27] == pytest.approx(5.28)


def test_tables_from_csv(tmp_path):
    p = tmp_path / "bler.csv"
    p.write_text("mcs,sinr_db,bler\n0,0,1\n0,10,0\n1,5,1\n1,15,0\n")
    c = BlerCurve.from_csv(p)
    assert c.num_mcs == 2
    assert c.bler(0, 5) == pytest.approx(0.5)
    assert c.bler(0, -100) == 1.0
    assert c.bler(1, 100) == 0.0
    q = tmp_path / "mcs.csv"
    q.write_text("mcs,efficiency\n0,0.5\n1,1.5\n")
    assert McsTable.from_csv(q).efficiencies == [0.5, 1.5]
    bad = tmp_path / "bad.csv"
    bad.write_text("mcs,sinr_db,bler\n0,10,0\n0,0,0.5\n0,5,0.9\n")
    with pytest.raises(PhyError, match="non-increasing"):
        BlerCurve.from_csv(bad)


def test_radio_config_validation():
    assert phy.RadioConfig().validate().numerology_index == 4
    with pytest.raises(PhyError, match="numerology"):
        phy.RadioConfig(numerology_index=7).validate()
    with pytest.raises(PhyError):
        phy.RadioConfig(target_bler=1.0).validate()
    with pytest.raises(PhyError):
        phy.RadioConfig(num_rbs=0).validate()


def test_harq_trivial_cases():
    p = phy.harq_step(HarqProcess(), 0.3, 0.0, 4)
    assert p.outcome is HarqOutcome.DELIVERED and p.attempts_used == 1
    p = HarqProcess()
    c = HarqCounters()
    while p.outcome is HarqOutcome.PENDING:
        phy.harq_step(p, 0.99, 1.0, 4, c)
    assert p.outcome is HarqOutcome.FAILED and p.attempts_used == 4
    assert (c.total_tx, c.failed_tx, c.pdu_total, c.pdu_failed) == (4, 4, 1, 1)
    with pytest.raises(HarqLogicError):
        phy.harq_step(p, 0.5, 0.1, 4)


def test_harq_residual_closed_form():
    rng = np.random.default_rng(2024)
    b, n = 0.1, 200_000
    c = HarqCounters()
    draws = iter(rng.random(n * 4))
    for _ in range(n):
        p = HarqProcess()
        while p.outcome is HarqOutcome.PENDING:
            phy.harq_step(p, next(draws), b, 4, c)
    res = c.pdu_failed / c.pdu_total
    sigma = math.sqrt(b**4 * (1 - b**4) / n)
    assert abs(res - b**4) <= 3 * sigma
    att = c.failed_tx / c.total_tx
    assert abs(att - b) <= 3 * math.sqrt(b * (1 - b) / c.total_tx)
