"""
Radio abstraction: numerology timing, thermal noise, SINR, BLER curves,
target-BLER link adaptation, transport-block sizing and HARQ bookkeeping.
"""

from __future__ import annotations

import bisect
import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

THERMAL_NOISE_DBM_HZ = -174.0
SUBCARRIERS_PER_RB = 12
SYMBOLS_PER_SLOT = 14
NUM_MCS = 28


class PhyError(ValueError):
    pass


class HarqLogicError(RuntimeError):
    """Stepping a HARQ process that already finished."""


def _check_numerology(mu: int) -> None:
    if mu not in (0, 1, 2, 3, 4):
        raise PhyError(f"numerology index must be in 0..4, got {mu}")


def slot_duration(mu: int) -> float:
    """Slot length in seconds: 1 ms / 2**mu."""
    _check_numerology(mu)
    return 1e-3 / (2**mu)


def slot_duration_ps(mu: int) -> int:
    _check_numerology(mu)
    return 1_000_000_000 >> mu


def scs_hz(mu: int) -> float:
    _check_numerology(mu)
    return 15e3 * (2**mu)


def noise_power(num_rbs: int, mu: int, noise_figure: float) -> float:
    """Thermal noise plus receiver noise figure over the allocated band, in dBm."""
    if num_rbs < 1:
        raise PhyError(f"num_rbs must be >= 1, got {num_rbs}")
    bandwidth = num_rbs * SUBCARRIERS_PER_RB * scs_hz(mu)
    return THERMAL_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + noise_figure


@dataclass
class InterferenceRegistry:
    """Co-channel transmitters seen at the receiver, as received powers in dBm.

    Single-cell scenarios leave it empty.
    """

    powers_dbm: dict[str, float] = field(default_factory=dict)

    def register(self, name: str, rx_power_dbm: float) -> None:
        self.powers_dbm[name] = rx_power_dbm

    def __len__(self):
        return len(self.powers_dbm)


def sinr(rx_power: float, noise: float, registry: InterferenceRegistry | None = None) -> float:
    if not registry:
        return rx_power - noise
    total_mw = 10.0 ** (noise / 10.0) + sum(10.0 ** (p / 10.0) for p in registry.powers_dbm.values())
    return rx_power - 10.0 * math.log10(total_mw)


class BlerCurve:
    """Per-MCS BLER as a function of SINR.

    Either logistic, ``1 / (1 + exp((sinr - midpoint[m]) / slope))``, or
    tabulated per MCS with linear interpolation and flat extrapolation.
    """

    def __init__(self, midpoints=None, slope: float = 0.5, tables=None):
        if (midpoints is None) == (tables is None):
            raise PhyError("BlerCurve needs exactly one of midpoints or tables")
        self.slope = slope
        self.midpoints = list(midpoints) if midpoints is not None else None
        self.tables = None
        if tables is not None:
            self.tables = {}
            for mcs, (xs, ys) in sorted(tables.items()):
                xs, ys = list(map(float, xs)), list(map(float, ys))
                if len(xs) != len(ys) or not xs:
                    raise PhyError(f"MCS {mcs}: empty or ragged BLER table")
                if any(b <= a for a, b in zip(xs, xs[1:])):
                    raise PhyError(f"MCS {mcs}: SINR axis must be strictly increasing")
                if any(b > a for a, b in zip(ys, ys[1:])):
                    raise PhyError(f"MCS {mcs}: BLER must be non-increasing in SINR")
                if any(not 0.0 <= y <= 1.0 for y in ys):
                    raise PhyError(f"MCS {mcs}: BLER values must lie in [0, 1]")
                self.tables[int(mcs)] = (xs, ys)
            if sorted(self.tables) != list(range(len(self.tables))):
                raise PhyError("BLER table MCS indices must be contiguous from 0")
        elif slope <= 0:
            raise PhyError("BLER slope must be > 0")

    @classmethod
    def default(cls) -> "BlerCurve":
        return cls(midpoints=[-5.0 + 1.2 * m for m in range(NUM_MCS)], slope=0.5)

    @classmethod
    def from_csv(cls, path) -> "BlerCurve":
        """Load a table with columns ``mcs, sinr_db, bler``."""
        points: dict[int, list[tuple[float, float]]] = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                points.setdefault(int(row["mcs"]), []).append(
                    (float(row["sinr_db"]), float(row["bler"]))
                )
        tables = {}
        for mcs, pts in points.items():
            pts.sort()
            tables[mcs] = ([p[0] for p in pts], [p[1] for p in pts])
        return cls(tables=tables)

    @property
    def num_mcs(self) -> int:
        return len(self.midpoints) if self.midpoints is not None else len(self.tables)

    def bler(self, mcs: int, sinr_db: float) -> float:
        if not 0 <= mcs < self.num_mcs:
            raise PhyError(f"unknown MCS {mcs} (curve defines 0..{self.num_mcs - 1})")
        if self.midpoints is not None:
            x = (sinr_db - self.midpoints[mcs]) / self.slope
            if x > 700.0:
                return 0.0
            return 1.0 / (1.0 + math.exp(x))
        xs, ys = self.tables[mcs]
        if sinr_db <= xs[0]:
            return ys[0]
        if sinr_db >= xs[-1]:
            return ys[-1]
        i = bisect.bisect_right(xs, sinr_db)
        x0, x1, y0, y1 = xs[i - 1], xs[i], ys[i - 1], ys[i]
        y = y0 + (y1 - y0) * (sinr_db - x0) / (x1 - x0)
        return min(max(y, 0.0), 1.0)


def bler(curve: BlerCurve, mcs: int, sinr_db: float) -> float:
    return curve.bler(mcs, sinr_db)


def select_mcs(curve: BlerCurve, sinr_db: float, target_bler: float) -> int:
    """Highest MCS meeting the target BLER at this SINR; MCS 0 if none does."""
    for mcs in range(curve.num_mcs - 1, -1, -1):
        if curve.bler(mcs, sinr_db) <= target_bler:
            return mcs
    return 0


class McsTable:
    """Spectral efficiency (bits per resource element) per MCS."""

    def __init__(self, efficiencies):
        self.efficiencies = [float(e) for e in efficiencies]
        if not self.efficiencies or any(e <= 0 for e in self.efficiencies):
            raise PhyError("MCS efficiencies must be positive")

    @classmethod
    def default(cls) -> "McsTable":
        return cls([min(0.15 + 0.19 * m, 5.55) for m in range(NUM_MCS)])

    @classmethod
    def from_csv(cls, path) -> "McsTable":
        rows = {}
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                rows[int(row["mcs"])] = float(row["efficiency"])
        if sorted(rows) != list(range(len(rows))):
            raise PhyError(f"{Path(path).name}: MCS indices must be contiguous from 0")
        return cls([rows[m] for m in range(len(rows))])

    def __len__(self):
        return len(self.efficiencies)


def transport_block_bits(mcs: int, num_rbs: int, table: McsTable | None = None) -> int:
    table = table or McsTable.default()
    if not 0 <= mcs < len(table):
        raise PhyError(f"unknown MCS {mcs}")
    bits = math.floor(table.efficiencies[mcs] * SUBCARRIERS_PER_RB * SYMBOLS_PER_SLOT * num_rbs)
    return max(bits, 1)


@dataclass(frozen=True)
class RadioConfig:
    tx_power: float = 23.0
    ue_tx_power: float = 23.0
    carrier: float = 5.9
    numerology_index: int = 4
    num_rbs: int = 25
    noise_figure: float = 5.0
    target_bler: float = 0.01
    max_harq_tx: int = 4
    harq_rtt_slots: int = 4
    # scheduling request to uplink grant, paid by non-GBR uplink data only
    ul_grant_delay_slots: int = 4

    def validate(self) -> "RadioConfig":
        _check_numerology(self.numerology_index)
        if self.num_rbs < 1:
            raise PhyError(f"num_rbs must be >= 1, got {self.num_rbs}")
        if not 0 < self.target_bler < 1:
            raise PhyError(f"target_bler must be in (0, 1), got {self.target_bler}")
        if self.max_harq_tx < 1:
            raise PhyError(f"max_harq_tx must be >= 1, got {self.max_harq_tx}")
        if self.harq_rtt_slots < 1:
            raise PhyError(f"harq_rtt_slots must be >= 1, got {self.harq_rtt_slots}")
        if self.ul_grant_delay_slots < 0:
            raise PhyError(f"ul_grant_delay_slots must be >= 0, got {self.ul_grant_delay_slots}")
        if not self.carrier > 0:
            raise PhyError(f"carrier must be > 0 GHz, got {self.carrier}")
        return self


class HarqOutcome(enum.Enum):
    PENDING = "pending"
    DELIVERED = "delivered"
    FAILED = "failed"


@dataclass
class HarqCounters:
    total_tx: int = 0
    failed_tx: int = 0
    pdu_total: int = 0
    pdu_failed: int = 0


@dataclass
class HarqProcess:
    first_tx_time: float = 0.0
    attempts_used: int = 0
    outcome: HarqOutcome = HarqOutcome.PENDING


def harq_step(
    proc: HarqProcess,
    draw: float,
    bler_now: float,
    max_harq_tx: int,
    counters: HarqCounters | None = None,
) -> HarqProcess:
    """One transmission attempt; succeeds iff ``draw >= bler_now``.

    Updates ``proc`` in place (and returns it). ``counters`` gets one attempt
    and, when the process finishes, one PDU.
    """
    if proc.outcome is not HarqOutcome.PENDING:
        raise HarqLogicError(f"HARQ process already {proc.outcome.value}")
    proc.attempts_used += 1
    ok = draw >= bler_now
    if ok:
        proc.outcome = HarqOutcome.DELIVERED
    elif proc.attempts_used >= max_harq_tx:
        proc.outcome = HarqOutcome.FAILED
    if counters is not None:
        counters.total_tx += 1
        if not ok:
            counters.failed_tx += 1
        if proc.outcome is not HarqOutcome.PENDING:
            counters.pdu_total += 1
            if proc.outcome is HarqOutcome.FAILED:
                counters.pdu_failed += 1
    return proc
