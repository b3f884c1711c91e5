"""
TSN traffic classes, their generators, PCP/5QI mapping and strict-priority
egress queuing.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field

import numpy as np

NUM_PCP = 8
DEFAULT_QUEUE_CAPACITY = 512


class TsnError(ValueError):
    pass


class NotComputable(TsnError):
    """Offered rate requested for a flow with random size or interarrival."""


class TrafficClass(enum.Enum):
    NC = "NC"
    VIDEO = "Video"
    BE = "BE"

    @classmethod
    def parse(cls, text: str) -> "TrafficClass":
        for c in cls:
            if c.value.lower() == text.strip().lower():
                return c
        raise TsnError(f"unknown traffic class {text!r}; valid: NC, Video, BE")


class FiveQiClass(enum.Enum):
    DC_GBR = "DC-GBR"
    GBR = "GBR"
    NON_GBR = "Non-GBR"


class Direction(enum.Enum):
    UPLINK = "uplink"
    DOWNLINK = "downlink"


_PRIORITY = {
    TrafficClass.NC: (7, FiveQiClass.DC_GBR),
    TrafficClass.VIDEO: (5, FiveQiClass.GBR),
    TrafficClass.BE: (0, FiveQiClass.NON_GBR),
}

_DIRECTION = {
    TrafficClass.NC: Direction.DOWNLINK,
    TrafficClass.VIDEO: Direction.UPLINK,
    TrafficClass.BE: Direction.UPLINK,
}


def map_class_to_priority(cls: TrafficClass) -> tuple[int, FiveQiClass]:
    return _PRIORITY[cls]


@dataclass(frozen=True)
class Dist:
    """A fixed value (``low == high``) or a uniform range ``[low, high]``."""

    low: float
    high: float

    def __post_init__(self):
        if self.high < self.low:
            raise TsnError(f"empty range {self.low}..{self.high}")

    @classmethod
    def fixed(cls, v: float) -> "Dist":
        return cls(v, v)

    @classmethod
    def parse(cls, text) -> "Dist":
        """``"300"`` or ``"50..500"``."""
        if isinstance(text, (int, float)):
            return cls.fixed(float(text))
        s = str(text).strip()
        try:
            if ".." in s:
                lo, hi = s.split("..", 1)
                return cls(float(lo), float(hi))
            return cls.fixed(float(s))
        except ValueError:
            raise TsnError(f"expected a number or 'min..max', got {text!r}") from None

    @property
    def is_fixed(self) -> bool:
        return self.low == self.high

    def draw(self, rng: np.random.Generator) -> float:
        if self.is_fixed:
            return self.low
        return self.low + (self.high - self.low) * rng.random()

    def __str__(self):
        if self.is_fixed:
            return f"{self.low:g}"
        return f"{self.low:g}..{self.high:g}"


@dataclass(frozen=True)
class FlowSpec:
    """One traffic flow. Interarrival is in seconds, packet sizes in bytes.

    ``periodic`` flows repeat at ``interarrival.low``; an interarrival range
    on a periodic flow is resolved once per run by the generator.
    """

    name: str
    cls: TrafficClass
    pcp: int
    five_qi_class: FiveQiClass
    packet_bytes: Dist
    interarrival: Dist
    direction: Direction
    periodic: bool = True

    def __post_init__(self):
        if not 0 <= self.pcp < NUM_PCP:
            raise TsnError(f"flow {self.name}: pcp must be in 0..7, got {self.pcp}")
        if self.packet_bytes.low < 1:
            raise TsnError(f"flow {self.name}: packet size must be >= 1 byte")
        if self.interarrival.low <= 0:
            raise TsnError(f"flow {self.name}: interarrival must be > 0")


def class_defaults(cls: TrafficClass, name: str | None = None) -> FlowSpec:
    pcp, qi = map_class_to_priority(cls)
    if cls is TrafficClass.NC:
        size, gap, periodic = Dist(50, 500), Dist(0.050, 1.0), True
    elif cls is TrafficClass.VIDEO:
        # the video class fixes only the size band; 70 ms is the most common period in the test cases
        size, gap, periodic = Dist(1000, 1500), Dist.fixed(0.070), True
    else:
        size, gap, periodic = Dist(30, 1500), Dist(0.5, 2.0), False
    return FlowSpec(
        name=name or cls.value.lower(),
        cls=cls,
        pcp=pcp,
        five_qi_class=qi,
        packet_bytes=size,
        interarrival=gap,
        direction=_DIRECTION[cls],
        periodic=periodic,
    )


# (packet bytes, interarrival ms) for NC, Video, BE
TEST_CASES = {
    1: ((300, 50), (1000, 70), (1000, 700)),
    2: ((427, 50), (1213, 70), (1109, 700)),
    3: ((427, 60), (1213, 70), (1209, 500)),
    4: ((485, 60), (1303, 70), (1330, 500)),
    5: ((485, 70), (1303, 70), (1330, 550)),
    6: ((498, 50), (1413, 70), (1409, 550)),
    7: ((498, 55), (1453, 60), (1429, 600)),
}

# published kbps columns, NC / Video / BE
TEST_CASE_RATES_KBPS = {
    1: (48.0, 114.2, 11.4),
    2: (68.32, 138.62, 12.67),
    3: (56.93, 138.62, 19.34),
    4: (64.66, 148.91, 21.28),
    5: (55.42, 148.91, 19.34),
    6: (79.68, 161.48, 20.49),
    7: (72.43, 193.73, 19.05),
}


def parse_test_case_id(text) -> int:
    s = str(text).strip().lower()
    if s.startswith("tc"):
        s = s[2:]
    try:
        tc = int(s)
    except ValueError:
        raise TsnError(f"unknown test case {text!r}; valid: tc1..tc7") from None
    if tc not in TEST_CASES:
        raise TsnError(f"unknown test case {text!r}; valid: tc1..tc7")
    return tc


def test_case(tc_id) -> list[FlowSpec]:
    """The three fixed-size, fixed-period flows of a built-in test case.

    BE runs periodically here too: the test cases give one interarrival value.
    """
    tc = parse_test_case_id(tc_id)
    flows = []
    for cls, (size, gap_ms) in zip(TrafficClass, TEST_CASES[tc]):
        pcp, qi = map_class_to_priority(cls)
        flows.append(
            FlowSpec(
                name=cls.value.lower(),
                cls=cls,
                pcp=pcp,
                five_qi_class=qi,
                packet_bytes=Dist.fixed(size),
                interarrival=Dist.fixed(gap_ms / 1000.0),
                direction=_DIRECTION[cls],
                periodic=True,
            )
        )
    return flows


def offered_rate(spec: FlowSpec) -> float:
    """Offered load in kbps."""
    if not (spec.packet_bytes.is_fixed and spec.interarrival.is_fixed):
        raise NotComputable(f"flow {spec.name}: offered rate needs fixed size and interarrival")
    return spec.packet_bytes.low * 8.0 / spec.interarrival.low / 1000.0


def next_arrival(spec: FlowSpec, now: float, rng: np.random.Generator) -> float:
    if spec.periodic:
        return now + spec.interarrival.low
    return now + spec.interarrival.draw(rng)


@dataclass
class Frame:
    flow: str
    seq: int
    size: int
    created_at: int  # picoseconds
    pcp: int
    delivered_at: int | None = None


@dataclass
class PriorityQueueSet:
    """Eight FIFO queues indexed by PCP; dequeue serves the highest PCP first."""

    capacity: int = DEFAULT_QUEUE_CAPACITY
    queues: list = field(default_factory=lambda: [deque() for _ in range(NUM_PCP)])
    drops: int = 0

    def __post_init__(self):
        if self.capacity < 1:
            raise TsnError("queue capacity must be >= 1")

    def enqueue(self, frame: Frame) -> bool:
        q = self.queues[frame.pcp]
        if len(q) >= self.capacity:
            self.drops += 1
            return False
        q.append(frame)
        return True

    def peek(self) -> Frame | None:
        for pcp in range(NUM_PCP - 1, -1, -1):
            if self.queues[pcp]:
                return self.queues[pcp][0]
        return None

    def dequeue(self) -> Frame | None:
        for pcp in range(NUM_PCP - 1, -1, -1):
            if self.queues[pcp]:
                return self.queues[pcp].popleft()
        return None

    def remove(self, frame: Frame) -> bool:
        try:
            self.queues[frame.pcp].remove(frame)
        except ValueError:
            return False
        return True

    def __len__(self):
        return sum(len(q) for q in self.queues)

    def __bool__(self):
        return any(self.queues)


def enqueue(q: PriorityQueueSet, frame: Frame) -> bool:
    return q.enqueue(frame)


def dequeue(q: PriorityQueueSet) -> Frame | None:
    return q.dequeue()


@dataclass
class WiredSegment:
    link_rate: float = 1e9  # bit/s
    propagation_delay: float = 1e-6  # s
    egress: PriorityQueueSet = field(default_factory=PriorityQueueSet)

    def __post_init__(self):
        if not self.link_rate > 0:
            raise TsnError(f"link_rate must be > 0, got {self.link_rate}")
        if self.propagation_delay < 0:
            raise TsnError("propagation_delay must be >= 0")


def serialization_time(seg: WiredSegment, size_bytes: int) -> float:
    return size_bytes * 8.0 / seg.link_rate


def wire_transit(seg: WiredSegment, frame: Frame) -> float:
    """Serialization plus propagation, in seconds."""
    return serialization_time(seg, frame.size) + seg.propagation_delay
