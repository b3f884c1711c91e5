"""
Deterministic discrete-event core.

Topology: CC station --wired TSN segment-- gNB --radio-- UE. Downlink frames
enter at the CC, uplink frames at the UE. Time is kept in integer
picoseconds so slot boundaries and serialization delays accumulate exactly.
"""

from __future__ import annotations

import heapq
import itertools
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

from . import chan38901 as ch
from .metrics import FlowCounters, MetricsStore, SinrSample
from .mobility import (
    distance_bin,
    distances,
    initial_state,
    ring_position,
)
from . import mobility as mob
from .phy import (
    HarqOutcome,
    HarqProcess,
    InterferenceRegistry,
    harq_step,
    noise_power,
    select_mcs,
    sinr,
    slot_duration_ps,
    transport_block_bits,
)
from .rng import RngStreams
from .scenario import Scenario, ScenarioError, to_sections
from .tsn import Direction, FiveQiClass, Frame, PriorityQueueSet, offered_rate

PS_PER_S = 10**12

# tie-break order for simultaneous events
CHANNEL_UPDATE = 0
MOBILITY_UPDATE = 1
FRAME_ARRIVAL = 2
SLOT_TICK = 3
HARQ_FEEDBACK = 4
WIRE_DELIVERY = 5
METRICS_FLUSH = 6

EVENT_KINDS = {
    CHANNEL_UPDATE: "channel_update",
    MOBILITY_UPDATE: "mobility_update",
    FRAME_ARRIVAL: "frame_arrival",
    SLOT_TICK: "slot_tick",
    HARQ_FEEDBACK: "harq_feedback",
    WIRE_DELIVERY: "wire_delivery",
    METRICS_FLUSH: "metrics_flush",
}


class BuildError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class SimulationError(RuntimeError):
    """Internal invariant violated during a run."""


class BatchError(RuntimeError):
    def __init__(self, seed: int, cause: BaseException):
        super().__init__(f"seed {seed}: {cause}")
        self.seed = seed


def to_ps(seconds: float) -> int:
    return int(round(seconds * PS_PER_S))


@dataclass
class _RadioFrame:
    frame: Frame
    bits_left: int
    tbs_out: int = 0
    lost: bool = False


@dataclass
class _Tb:
    job: _RadioFrame
    bits: int
    mcs: int
    proc: HarqProcess
    slot: int = 0


@dataclass
class _TxContext:
    """MAC/HARQ state of one transmit direction (gNB downlink or UE uplink)."""

    name: str
    tx_power: float
    queue: PriorityQueueSet
    jobs: dict = field(default_factory=dict)  # id(frame) -> _RadioFrame
    retx: deque = field(default_factory=deque)  # (eligible slot, _Tb)
    ticks: set = field(default_factory=set)
    last_slot: int = -1
    sinr: float = 0.0
    mcs: int = 0
    grant_slot: int = -1
    dynamic_queued: int = 0


@dataclass
class _Egress:
    name: str
    queue: PriorityQueueSet
    busy: bool = False


@dataclass
class _FlowState:
    spec: object
    rng: object
    period_ps: int = 0
    first_ps: int = 0
    seq: int = 0
    direction: Direction = Direction.UPLINK


class SimInstance:
    """One built scenario: nodes, queues, HARQ contexts, streams and metrics."""

    def __init__(self, scenario: Scenario, on_event=None, progress=None):
        self.scenario = scn = scenario
        self.on_event = on_event
        self.progress = progress
        self.nodes = ("cc", "gnb", "ue")
        self.hops = (("cc", "gnb", "wired"), ("gnb", "ue", "radio"))
        self.rng = RngStreams(scn.seed)
        self.curve = scn.bler_curve()
        self.mcs_table = scn.mcs()
        r = scn.radio
        self.slot_ps = slot_duration_ps(r.numerology_index)
        self.tb_bits = [transport_block_bits(m, r.num_rbs, self.mcs_table)
                        for m in range(len(self.mcs_table))]
        self.noise = noise_power(r.num_rbs, r.numerology_index, r.noise_figure)
        self.registry = InterferenceRegistry()
        self.clutter = scn.resolved_clutter
        self.geometry = scn.resolved_geometry
        self.gnb = scn.gnb
        cap = scn.wired.queue_capacity
        self.dl = _TxContext("gnb", r.tx_power, PriorityQueueSet(cap))
        self.ul = _TxContext("ue", r.ue_tx_power, PriorityQueueSet(cap))
        self.cc_egress = _Egress("cc", PriorityQueueSet(cap))
        self.gnb_egress = _Egress("gnb", PriorityQueueSet(cap))
        self.grant_delay = r.ul_grant_delay_slots
        self.dynamic_flows = {
            f.name for f in scn.flows
            if f.direction is Direction.UPLINK and f.five_qi_class is FiveQiClass.NON_GBR
        }
        self.link_rate = scn.wired.link_rate_mbps * 1e6
        self.prop_ps = to_ps(scn.wired.propagation_us * 1e-6)
        self.core_ps = to_ps(scn.core_delay)
        self.metrics = MetricsStore(profile=scn.profile.label, warmup=scn.warmup)
        self.metrics.scenario = to_sections(scn)
        self.metrics.flow_info = {}
        self.live: dict[str, set] = {}
        self.now = 0
        self._events: list = []
        self._seq = itertools.count()
        self._finished = False

        m = scn.mobility
        if m.mode == "ring":
            self.mob_state = None
            self.ue_pos = ring_position(self.gnb, m.ring_distance, self.geometry.h_ut)
        else:
            self.hall = scn.hall()
            self.speeds = scn.speeds()
            self.mob_state = initial_state(self.hall, self.geometry.h_ut, self.speeds,
                                           self.rng.mobility)
            self.ue_pos = self.mob_state.current
        self._update_bin()

        self.flow_states = []
        for i, spec in enumerate(scn.flows):
            fs = _FlowState(spec=spec, rng=self.rng.flow(i), direction=spec.direction)
            if spec.periodic:
                period = spec.interarrival.draw(fs.rng)
                fs.period_ps = to_ps(period)
            else:
                period = spec.interarrival.draw(fs.rng)
            jitter = fs.rng.random() * period if scn.phase_jitter else 0.0
            fs.first_ps = to_ps(jitter)
            self.flow_states.append(fs)
            self.metrics.flows[spec.name] = FlowCounters()
            self.live[spec.name] = set()
            info = {"class": spec.cls.value, "pcp": spec.pcp,
                    "direction": spec.direction.value}
            if spec.packet_bytes.is_fixed and spec.interarrival.is_fixed:
                info["offered_rate_kbps"] = round(offered_rate(spec), 6)
            if scn.test_case is not None:
                info["test_case"] = f"tc{scn.test_case}"
            self.metrics.flow_info[spec.name] = info

        self.until_ps = to_ps(scn.duration)
        self._schedule(0, CHANNEL_UPDATE, None)
        if self.mob_state is not None:
            self._schedule(to_ps(m.update_period), MOBILITY_UPDATE, None)
        for fs in self.flow_states:
            self._schedule(fs.first_ps, FRAME_ARRIVAL, fs)
        self._schedule(self.until_ps, METRICS_FLUSH, None)

    # event plumbing

    def _schedule(self, t: int, kind: int, payload) -> None:
        if t < self.now:
            raise SimulationError(
                f"{EVENT_KINDS[kind]} scheduled at {t} ps, before the clock ({self.now} ps)"
            )
        heapq.heappush(self._events, (t, kind, next(self._seq), payload))

    def run(self, until: float | None = None) -> MetricsStore:
        until_ps = self.until_ps if until is None else to_ps(until)
        handlers = (
            self._on_channel_update,
            self._on_mobility_update,
            self._on_frame_arrival,
            self._on_slot_tick,
            self._on_harq_feedback,
            self._on_wire_delivery,
            self._on_metrics_flush,
        )
        events = self._events
        next_report = 0
        while events and events[0][0] <= until_ps:
            t, kind, seq, payload = heapq.heappop(events)
            if t < self.now:
                raise SimulationError("event time went backwards")
            self.now = t
            if self.on_event is not None:
                self.on_event(t, EVENT_KINDS[kind])
            handlers[kind](payload)
            if self.progress is not None and t >= next_report:
                self.progress(t / PS_PER_S)
                next_report = t + PS_PER_S
        if not self._finished and until_ps >= self.until_ps:
            self._finish()
        return self.metrics

    # channel and mobility

    def _update_bin(self):
        self.d_2d, self.d_3d = distances(self.ue_pos, self.gnb)
        self.bin = distance_bin(self.d_2d)

    def _on_channel_update(self, _):
        scn = self.scenario
        sample = ch.sample_link(scn.profile, self.d_2d, self.d_3d, scn.radio.carrier,
                                self.clutter, self.geometry, self.rng.channel,
                                lenient=scn.lenient_range)
        loss = sample.total_loss
        for ctx in (self.dl, self.ul):
            ctx.sinr = sinr(ctx.tx_power - loss, self.noise, self.registry)
            ctx.mcs = select_mcs(self.curve, ctx.sinr, scn.radio.target_bler)
        self.metrics.sinr_trace.append(
            SinrSample(self.now / PS_PER_S, self.dl.sinr, self.d_2d, self.bin))
        nxt = self.now + to_ps(scn.channel_update_period)
        if nxt <= self.until_ps:
            self._schedule(nxt, CHANNEL_UPDATE, None)

    def _on_mobility_update(self, _):
        m = self.scenario.mobility
        self.mob_state = mob.advance(self.mob_state, m.update_period, self.hall,
                                     self.rng.mobility, self.speeds, m.pause_s)
        self.ue_pos = self.mob_state.current
        self._update_bin()
        nxt = self.now + to_ps(m.update_period)
        if nxt <= self.until_ps:
            self._schedule(nxt, MOBILITY_UPDATE, None)

    # traffic

    def _on_frame_arrival(self, payload):
        if isinstance(payload, Frame):
            # uplink grant received for buffered non-GBR data
            self._radio_enqueue(self.ul, payload)
            return
        fs = payload
        spec = fs.spec
        size = int(round(spec.packet_bytes.draw(fs.rng)))
        frame = Frame(flow=spec.name, seq=fs.seq, size=size, created_at=self.now, pcp=spec.pcp)
        fs.seq += 1
        self.metrics.flows[spec.name].generated += 1
        self.live[spec.name].add(id(frame))
        if fs.direction is Direction.DOWNLINK:
            self._wire_enqueue(self.cc_egress, frame)
        elif spec.name in self.dynamic_flows:
            self._request_grant(frame)
        else:
            self._radio_enqueue(self.ul, frame)
        if spec.periodic:
            nxt = self.now + fs.period_ps
        else:
            nxt = self.now + to_ps(spec.interarrival.draw(fs.rng))
        if nxt <= self.until_ps:
            self._schedule(nxt, FRAME_ARRIVAL, fs)

    def _drop(self, frame: Frame, harq: bool):
        c = self.metrics.flows[frame.flow]
        if harq:
            c.dropped_harq += 1
        else:
            c.dropped_queue += 1
        self.live[frame.flow].discard(id(frame))

    def _deliver(self, frame: Frame):
        frame.delivered_at = self.now
        self.metrics.record_delivery(frame)
        self.metrics.flows[frame.flow].delivered += 1
        self.live[frame.flow].discard(id(frame))

    # wired segment

    def _wire_enqueue(self, eg: _Egress, frame: Frame):
        if not eg.queue.enqueue(frame):
            self._drop(frame, harq=False)
            return
        if not eg.busy:
            self._wire_start(eg)

    def _wire_start(self, eg: _Egress):
        frame = eg.queue.dequeue()
        if frame is None:
            eg.busy = False
            return
        eg.busy = True
        ser = to_ps(frame.size * 8 / self.link_rate)
        self._schedule(self.now + ser, WIRE_DELIVERY, ("done", eg, None))
        self._schedule(self.now + ser + self.prop_ps + self.core_ps, WIRE_DELIVERY,
                       ("arrive", eg, frame))

    def _on_wire_delivery(self, payload):
        what, eg, frame = payload
        if what == "done":
            eg.busy = False
            self._wire_start(eg)
        elif eg is self.cc_egress:
            self._radio_enqueue(self.dl, frame)
        else:
            self._deliver(frame)

    # radio

    def _request_grant(self, frame: Frame):
        """Non-GBR uplink data waits for a dynamic grant unless one is already in use."""
        ctx = self.ul
        if ctx.grant_slot * self.slot_ps >= self.now:
            grant = ctx.grant_slot
        elif ctx.dynamic_queued > 0 or self.grant_delay == 0:
            self._radio_enqueue(ctx, frame)
            return
        else:
            grant = -(-self.now // self.slot_ps) + self.grant_delay
            ctx.grant_slot = grant
        ctx.dynamic_queued += 1
        self._schedule(grant * self.slot_ps, FRAME_ARRIVAL, frame)

    def _radio_enqueue(self, ctx: _TxContext, frame: Frame):
        dynamic = ctx is self.ul and frame.flow in self.dynamic_flows
        if dynamic and self.now > ctx.grant_slot * self.slot_ps:
            ctx.dynamic_queued += 1
        if not ctx.queue.enqueue(frame):
            if dynamic:
                ctx.dynamic_queued -= 1
            self._drop(frame, harq=False)
            return
        ctx.jobs[id(frame)] = _RadioFrame(frame, bits_left=frame.size * 8)
        slot = max(-(-self.now // self.slot_ps), ctx.last_slot + 1)
        self._ensure_tick(ctx, slot)

    def _left_buffer(self, ctx: _TxContext, frame: Frame):
        if ctx is self.ul and frame.flow in self.dynamic_flows:
            ctx.dynamic_queued -= 1

    def _ensure_tick(self, ctx: _TxContext, slot: int):
        if slot in ctx.ticks:
            return
        if ctx.ticks and min(ctx.ticks) <= slot:
            return
        ctx.ticks.add(slot)
        self._schedule(slot * self.slot_ps, SLOT_TICK, (ctx, slot))

    def _on_slot_tick(self, payload):
        ctx, slot = payload
        ctx.ticks.discard(slot)
        if slot <= ctx.last_slot:
            return
        ctx.last_slot = slot
        tb = None
        while ctx.retx and ctx.retx[0][0] <= slot:
            _, cand = ctx.retx.popleft()
            if not cand.job.lost:
                tb = cand
                break
        if tb is None:
            frame = ctx.queue.peek()
            if frame is not None:
                job = ctx.jobs[id(frame)]
                bits = min(job.bits_left, self.tb_bits[ctx.mcs])
                job.bits_left -= bits
                job.tbs_out += 1
                if job.bits_left == 0:
                    ctx.queue.dequeue()
                    self._left_buffer(ctx, frame)
                tb = _Tb(job, bits, ctx.mcs, HarqProcess(first_tx_time=self.now / PS_PER_S))
        if tb is not None:
            tb.slot = slot
            p_err = self.curve.bler(tb.mcs, ctx.sinr)
            harq_step(tb.proc, self.rng.phy.random(), p_err, self.scenario.radio.max_harq_tx,
                      self.metrics.harq_cell(self.bin))
            self._schedule((slot + 1) * self.slot_ps, HARQ_FEEDBACK, (ctx, tb))
        self._next_tick(ctx, slot + 1)

    def _next_tick(self, ctx: _TxContext, earliest: int):
        if ctx.queue:
            self._ensure_tick(ctx, earliest)
        elif ctx.retx:
            self._ensure_tick(ctx, max(earliest, ctx.retx[0][0]))

    def _on_harq_feedback(self, payload):
        ctx, tb = payload
        job = tb.job
        outcome = tb.proc.outcome
        if outcome is HarqOutcome.PENDING:
            if job.lost:
                job.tbs_out -= 1
                return
            due = tb.slot + self.scenario.radio.harq_rtt_slots
            # keep retransmissions ordered by eligibility
            if ctx.retx and ctx.retx[-1][0] > due:
                items = sorted([*ctx.retx, (due, tb)], key=lambda it: it[0])
                ctx.retx = deque(items)
            else:
                ctx.retx.append((due, tb))
            self._ensure_tick(ctx, max(due, ctx.last_slot + 1))
            return
        job.tbs_out -= 1
        frame = job.frame
        if outcome is HarqOutcome.FAILED:
            if not job.lost:
                job.lost = True
                if job.bits_left > 0:
                    ctx.queue.remove(frame)
                    self._left_buffer(ctx, frame)
                self._drop(frame, harq=True)
            if job.tbs_out == 0:
                ctx.jobs.pop(id(frame), None)
            return
        if job.lost:
            if job.tbs_out == 0:
                ctx.jobs.pop(id(frame), None)
            return
        if job.bits_left == 0 and job.tbs_out == 0:
            ctx.jobs.pop(id(frame), None)
            if ctx is self.dl:
                self._deliver(frame)
            else:
                self._wire_enqueue(self.gnb_egress, frame)

    def _on_metrics_flush(self, _):
        self._finish()

    def _finish(self):
        if self._finished:
            return
        self._finished = True
        self.metrics.in_flight = {name: len(ids) for name, ids in self.live.items()}

    def conservation(self) -> dict:
        """Per flow: (generated, delivered, dropped, in flight)."""
        out = {}
        for name, c in self.metrics.flows.items():
            out[name] = (c.generated, c.delivered, c.dropped, len(self.live[name]))
        return out


def build(scenario: Scenario, on_event=None, progress=None) -> SimInstance:
    try:
        scenario.validate()
    except ScenarioError as e:
        raise BuildError(e.key, str(e).split(": ", 1)[-1]) from None
    return SimInstance(scenario, on_event=on_event, progress=progress)


def run(instance: SimInstance, until: float | None = None) -> MetricsStore:
    return instance.run(until)


def simulate(scenario: Scenario) -> MetricsStore:
    return build(scenario).run()


def _run_seed(args):
    scenario, seed = args
    try:
        return simulate(replace(scenario, seed=seed))
    except Exception as e:  # tagged and re-raised by run_batch
        raise BatchError(seed, e) from e


def run_batch(scenario: Scenario, seeds, jobs: int = 1) -> list:
    """One independent run per seed, results in seed order."""
    seeds = list(seeds)
    if not seeds:
        raise ValueError("run_batch needs at least one seed")
    work = [(scenario, s) for s in seeds]
    if jobs <= 1:
        return [_run_seed(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_seed, work))


def iter_batch(scenarios, jobs: int = 1):
    """Run many (scenario) items, yielding stores in input order."""
    items = list(scenarios)
    if jobs <= 1:
        for scn in items:
            yield _run_seed((scn, scn.seed))
        return
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        yield from pool.map(_run_seed, [(s, s.seed) for s in items])
