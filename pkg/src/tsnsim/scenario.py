"""
Scenario description and its sectioned key schema.

Every default lives here; the config loader, the summary echo and the CLI's
``validate`` dump all read them from :data:`SCHEMA`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import chan38901 as ch
from . import tsn
from .chan38901 import ClutterParams, InfProfile, NodeGeometry
from .mobility import HallBounds, MobilityError, Position, SpeedRange
from .phy import BlerCurve, McsTable, PhyError, RadioConfig


class ScenarioError(ValueError):
    """Invalid scenario; ``key`` is the dotted config key at fault."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass(frozen=True)
class MobilityConfig:
    mode: str = "rwp"  # "rwp" or "ring"
    speed_min: float = 0.2
    speed_max: float = 1.5
    pause_s: float = 0.0
    hall_x: float = 260.0
    hall_y: float = 260.0
    max_distance: float | None = 250.0
    ring_distance: float = 42.5
    update_period: float = 0.1


@dataclass(frozen=True)
class WiredConfig:
    link_rate_mbps: float = 1000.0
    propagation_us: float = 1.0
    queue_capacity: int = tsn.DEFAULT_QUEUE_CAPACITY


@dataclass(frozen=True)
class Scenario:
    profile: InfProfile = InfProfile.SL
    clutter: ClutterParams | None = None  # None: profile default
    geometry: NodeGeometry | None = None  # None: profile default
    radio: RadioConfig = field(default_factory=RadioConfig)
    bler_table: str | None = None
    mcs_table: str | None = None
    mobility: MobilityConfig = field(default_factory=MobilityConfig)
    wired: WiredConfig = field(default_factory=WiredConfig)
    flows: tuple = ()
    test_case: int | None = None
    duration: float = 60.0
    seed: int = 1
    channel_update_period: float = 0.1
    warmup: float = 1.0
    core_delay: float = 0.0
    lenient_range: bool = True
    phase_jitter: bool = True

    @property
    def resolved_clutter(self) -> ClutterParams:
        return self.clutter or ch.default_clutter(self.profile)

    @property
    def resolved_geometry(self) -> NodeGeometry:
        return self.geometry or ch.default_geometry(self.profile)

    @property
    def gnb(self) -> Position:
        return Position(0.0, 0.0, self.resolved_geometry.h_bs)

    def hall(self) -> HallBounds:
        m = self.mobility
        return HallBounds(-m.hall_x / 2, m.hall_x / 2, -m.hall_y / 2, m.hall_y / 2,
                          self.gnb, m.max_distance)

    def speeds(self) -> SpeedRange:
        return SpeedRange(self.mobility.speed_min, self.mobility.speed_max)

    def bler_curve(self) -> BlerCurve:
        return BlerCurve.from_csv(self.bler_table) if self.bler_table else BlerCurve.default()

    def mcs(self) -> McsTable:
        return McsTable.from_csv(self.mcs_table) if self.mcs_table else McsTable.default()

    def with_profile(self, profile: InfProfile) -> "Scenario":
        return replace(self, profile=profile)

    def with_test_case(self, tc: int) -> "Scenario":
        return replace(self, flows=tuple(tsn.test_case(tc)), test_case=tc)

    def with_ring(self, d_2d: float) -> "Scenario":
        return replace(self, mobility=replace(self.mobility, mode="ring", ring_distance=d_2d))

    def validate(self) -> "Scenario":
        def check(key, cond, msg):
            if not cond:
                raise ScenarioError(key, msg)

        check("sim.duration_s", self.duration >= 0, "must be >= 0")
        check("sim.seed", 0 <= self.seed < 2**64, "must be a 64-bit unsigned integer")
        check("sim.channel_update_ms", self.channel_update_period > 0, "must be > 0")
        check("sim.warmup_s", self.warmup >= 0, "must be >= 0")
        check("sim.core_delay_ms", self.core_delay >= 0, "must be >= 0")
        r = self.radio
        check("radio.numerology", r.numerology_index in range(5),
              f"numerology index must be in 0..4, got {r.numerology_index}")
        check("radio.num_rbs", r.num_rbs >= 1, f"must be >= 1, got {r.num_rbs}")
        check("radio.target_bler", 0 < r.target_bler < 1, f"must be in (0, 1), got {r.target_bler}")
        check("radio.max_harq_tx", r.max_harq_tx >= 1, f"must be >= 1, got {r.max_harq_tx}")
        check("radio.harq_rtt_slots", r.harq_rtt_slots >= 1, f"must be >= 1, got {r.harq_rtt_slots}")
        check("radio.ul_grant_delay_slots", r.ul_grant_delay_slots >= 0,
              f"must be >= 0, got {r.ul_grant_delay_slots}")
        check("radio.carrier_ghz", r.carrier > 0, f"must be > 0, got {r.carrier}")
        try:
            self.bler_curve()
        except (OSError, PhyError, KeyError, ValueError) as e:
            raise ScenarioError("radio.bler_table", str(e)) from None
        try:
            self.mcs()
        except (OSError, PhyError, KeyError, ValueError) as e:
            raise ScenarioError("radio.mcs_table", str(e)) from None
        geom, clutter = self.resolved_geometry, self.resolved_clutter
        if self.profile is not InfProfile.HH:
            try:
                ch.k_subsec(self.profile, clutter, geom)
            except ch.ChannelError as e:
                key = "channel.h_bs" if "h_bs > h_ut" in str(e) else "channel.h_c"
                raise ScenarioError(key, str(e)) from None
        m = self.mobility
        check("mobility.mode", m.mode in ("rwp", "ring"), f"must be 'rwp' or 'ring', got {m.mode!r}")
        check("mobility.update_ms", m.update_period > 0, "must be > 0")
        check("mobility.pause_s", m.pause_s >= 0, "must be >= 0")
        check("mobility.ring_distance", m.ring_distance >= 0, "must be >= 0")
        try:
            self.speeds()
        except MobilityError as e:
            raise ScenarioError("mobility.speed_min", str(e)) from None
        if m.mode == "rwp":
            try:
                self.hall()
            except MobilityError as e:
                key = "mobility.max_distance" if "max_distance" in str(e) else "mobility.hall_x"
                raise ScenarioError(key, str(e)) from None
        w = self.wired
        check("wired.link_rate_mbps", w.link_rate_mbps > 0, "must be > 0")
        check("wired.propagation_us", w.propagation_us >= 0, "must be >= 0")
        check("wired.queue_capacity", w.queue_capacity >= 1, "must be >= 1")
        names = [f.name for f in self.flows]
        check("flow", len(names) == len(set(names)), "flow names must be unique")
        return self


def _opt_float(text):
    s = str(text).strip().lower()
    return None if s in ("", "none", "off") else float(s)


def _bool(text):
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_str(text):
    s = str(text).strip()
    return None if s.lower() in ("", "none") else s


def _profile(text):
    return InfProfile.parse(text)


def _tc(text):
    s = str(text).strip().lower()
    return None if s in ("", "none") else tsn.parse_test_case_id(s)


# section -> key -> (parser, attribute path, unit scale applied when reading)
# attribute path is relative to Scenario; scale converts the config unit to SI
SCHEMA = {
    "sim": {
        "duration_s": (float, "duration", 1.0),
        "seed": (int, "seed", None),
        "warmup_s": (float, "warmup", 1.0),
        "channel_update_ms": (float, "channel_update_period", 1e-3),
        "core_delay_ms": (float, "core_delay", 1e-3),
        "phase_jitter": (_bool, "phase_jitter", None),
        "test_case": (_tc, "test_case", None),
    },
    "channel": {
        "profile": (_profile, "profile", None),
        "d_clutter": (float, "clutter.d_clutter", 1.0),
        "r": (float, "clutter.r", 1.0),
        "h_c": (float, "clutter.h_c", 1.0),
        "h_bs": (float, "geometry.h_bs", 1.0),
        "h_ut": (float, "geometry.h_ut", 1.0),
        "lenient_range": (_bool, "lenient_range", None),
    },
    "radio": {
        "tx_power_dbm": (float, "radio.tx_power", 1.0),
        "ue_tx_power_dbm": (float, "radio.ue_tx_power", 1.0),
        "carrier_ghz": (float, "radio.carrier", 1.0),
        "numerology": (int, "radio.numerology_index", None),
        "num_rbs": (int, "radio.num_rbs", None),
        "noise_figure_db": (float, "radio.noise_figure", 1.0),
        "target_bler": (float, "radio.target_bler", 1.0),
        "max_harq_tx": (int, "radio.max_harq_tx", None),
        "harq_rtt_slots": (int, "radio.harq_rtt_slots", None),
        "ul_grant_delay_slots": (int, "radio.ul_grant_delay_slots", None),
        "bler_table": (_opt_str, "bler_table", None),
        "mcs_table": (_opt_str, "mcs_table", None),
    },
    "mobility": {
        "mode": (str, "mobility.mode", None),
        "speed_min": (float, "mobility.speed_min", 1.0),
        "speed_max": (float, "mobility.speed_max", 1.0),
        "pause_s": (float, "mobility.pause_s", 1.0),
        "hall_x": (float, "mobility.hall_x", 1.0),
        "hall_y": (float, "mobility.hall_y", 1.0),
        "max_distance": (_opt_float, "mobility.max_distance", 1.0),
        "ring_distance": (float, "mobility.ring_distance", 1.0),
        "update_ms": (float, "mobility.update_period", 1e-3),
    },
    "wired": {
        "link_rate_mbps": (float, "wired.link_rate_mbps", 1.0),
        "propagation_us": (float, "wired.propagation_us", 1.0),
        "queue_capacity": (int, "wired.queue_capacity", None),
    },
}

FLOW_KEYS = ("class", "pcp", "packet_bytes", "interarrival_ms", "direction")


def _get(scn: Scenario, path: str):
    obj = scn
    head, _, attr = path.rpartition(".")
    if head == "clutter":
        obj = scn.resolved_clutter
    elif head == "geometry":
        obj = scn.resolved_geometry
    elif head:
        obj = getattr(scn, head)
    return getattr(obj, attr)


def _unscale(value, scale):
    if scale in (None, 1.0) or value is None:
        return value
    return round(value / scale, 9)


def _echo_value(key, v):
    if isinstance(v, InfProfile):
        return v.label
    if key == "test_case" and v is not None:
        return f"tc{v}"
    return v


def flow_to_dict(f: tsn.FlowSpec) -> dict:
    gap_ms = tsn.Dist(f.interarrival.low * 1e3, f.interarrival.high * 1e3)
    return {
        "class": f.cls.value,
        "pcp": f.pcp,
        "five_qi_class": f.five_qi_class.value,
        "packet_bytes": str(f.packet_bytes),
        "interarrival_ms": str(gap_ms),
        "direction": f.direction.value,
        "periodic": f.periodic,
    }


def to_sections(scn: Scenario) -> dict:
    """Resolved scenario as ``{section: {key: value}}``, config units."""
    out = {}
    for section, keys in SCHEMA.items():
        out[section] = {k: _echo_value(k, _unscale(_get(scn, attr), scale))
                        for k, (_, attr, scale) in keys.items()}
    for f in scn.flows:
        out[f"flow.{f.name}"] = flow_to_dict(f)
    return out


def defaults() -> dict:
    return to_sections(Scenario())
