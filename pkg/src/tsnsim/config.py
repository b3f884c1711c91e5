"""
Sectioned key/value scenario files.

::

    [channel]
    profile = InF-SL

    [flow.nc]
    class = NC
    packet_bytes = 300
    interarrival_ms = 50

Omitted keys take the defaults from :mod:`tsnsim.scenario`; unknown keys and
sections are errors.
"""

from __future__ import annotations

import configparser
from dataclasses import replace
from pathlib import Path

from . import tsn
from .chan38901 import ChannelError, ClutterParams, NodeGeometry
from .phy import RadioConfig
from .scenario import FLOW_KEYS, SCHEMA, MobilityConfig, Scenario, ScenarioError, WiredConfig


class ConfigError(ValueError):
    """Malformed file (``lineno`` set) or invalid value (``key`` set)."""

    def __init__(self, message: str, key: str | None = None, lineno: int | None = None):
        super().__init__(message)
        self.key = key
        self.lineno = lineno


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"),
                                   default_section="__defaults__")
    cp.optionxform = str
    return cp


def read_sections(text: str, source: str = "<config>") -> dict:
    cp = _parser()
    try:
        cp.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as e:
        raise ConfigError(f"{source}, line {e.lineno}: key outside any [section]",
                          lineno=e.lineno) from None
    except configparser.ParsingError as e:
        lineno = e.errors[0][0] if e.errors else None
        raise ConfigError(f"{source}, line {lineno}: expected 'key = value'",
                          lineno=lineno) from None
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as e:
        raise ConfigError(f"{source}, line {e.lineno}: {e.message}", lineno=e.lineno) from None
    return {sec: dict(cp.items(sec)) for sec in cp.sections()}


def _set_nested(values: dict, section: str, key: str, value: str):
    values.setdefault(section, {})[key] = value


def apply_overrides(sections: dict, overrides) -> dict:
    """Apply ``section.key=value`` strings (``flow.<name>.<key>`` for flows)."""
    out = {sec: dict(kv) for sec, kv in sections.items()}
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path, value = item.split("=", 1)
        path = path.strip()
        section, _, key = path.rpartition(".")
        if not section:
            raise ConfigError(f"override key {path!r} needs a section prefix", key=path)
        if section in SCHEMA:
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown override key {path!r}", key=path)
        elif section.startswith("flow."):
            if key not in FLOW_KEYS:
                raise ConfigError(f"unknown override key {path!r}", key=path)
            if section not in out:
                raise ConfigError(f"override {path!r} names a flow not in the config", key=path)
        else:
            raise ConfigError(f"unknown override section in {path!r}", key=path)
        _set_nested(out, section, key, value.strip())
    return out


def _flow_from_section(name: str, kv: dict) -> tsn.FlowSpec:
    for key in kv:
        if key not in FLOW_KEYS:
            raise ConfigError(f"flow.{name}.{key}: unknown key; valid: {', '.join(FLOW_KEYS)}",
                              key=f"flow.{name}.{key}")
    if "class" not in kv:
        raise ConfigError(f"flow.{name}.class: required", key=f"flow.{name}.class")
    try:
        cls = tsn.TrafficClass.parse(kv["class"])
        base = tsn.class_defaults(cls, name=name)
        changes = {}
        if "pcp" in kv:
            changes["pcp"] = int(kv["pcp"])
        if "packet_bytes" in kv:
            changes["packet_bytes"] = tsn.Dist.parse(kv["packet_bytes"])
        if "interarrival_ms" in kv:
            gap = tsn.Dist.parse(kv["interarrival_ms"])
            changes["interarrival"] = tsn.Dist(gap.low / 1e3, gap.high / 1e3)
        if "direction" in kv:
            changes["direction"] = tsn.Direction(kv["direction"].strip().lower())
        return replace(base, **changes)
    except (tsn.TsnError, ValueError) as e:
        raise ConfigError(f"flow.{name}: {e}", key=f"flow.{name}") from None


def scenario_from_sections(sections: dict) -> Scenario:
    for sec in sections:
        if sec not in SCHEMA and not sec.startswith("flow."):
            valid = ", ".join([*SCHEMA, "flow.<name>"])
            raise ConfigError(f"unknown section [{sec}]; valid: {valid}", key=sec)
    values: dict[str, object] = {}
    for sec, keys in SCHEMA.items():
        for key, raw in sections.get(sec, {}).items():
            if key not in keys:
                raise ConfigError(f"{sec}.{key}: unknown key; valid: {', '.join(keys)}",
                                  key=f"{sec}.{key}")
            parse, attr, scale = keys[key]
            try:
                v = parse(raw)
            except (ValueError, ChannelError, tsn.TsnError) as e:
                raise ConfigError(f"{sec}.{key}: {e}", key=f"{sec}.{key}") from None
            if scale not in (None, 1.0) and v is not None:
                v = v * scale
            values[attr] = v

    scn = Scenario()
    top = {a: v for a, v in values.items() if "." not in a}
    scn = replace(scn, **top)

    def group(prefix):
        return {a.split(".", 1)[1]: v for a, v in values.items() if a.startswith(prefix + ".")}

    scn = replace(scn, radio=replace(scn.radio, **group("radio")),
                  mobility=replace(scn.mobility, **group("mobility")),
                  wired=replace(scn.wired, **group("wired")))
    try:
        if group("clutter"):
            scn = replace(scn, clutter=replace(scn.resolved_clutter, **group("clutter")))
        if group("geometry"):
            scn = replace(scn, geometry=replace(scn.resolved_geometry, **group("geometry")))
    except ChannelError as e:
        raise ConfigError(f"channel: {e}", key="channel") from None

    flows = [_flow_from_section(sec[len("flow."):], kv)
             for sec, kv in sections.items() if sec.startswith("flow.")]
    if scn.test_case is not None:
        scn = scn.with_test_case(scn.test_case)
        # a resolved echo lists the test case's own flows, which is fine
        def shape(fs):
            return [(f.name, f.cls, f.pcp, f.packet_bytes, f.interarrival, f.direction)
                    for f in fs]

        if flows and shape(flows) != shape(scn.flows):
            raise ConfigError("sim.test_case cannot be combined with other [flow.*] sections",
                              key="sim.test_case")
    else:
        scn = replace(scn, flows=tuple(flows))
    try:
        scn.validate()
    except ScenarioError as e:
        raise ConfigError(str(e), key=e.key) from None
    return scn


def load_config(path, overrides=None) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    sections = apply_overrides(read_sections(text, source=str(path)), overrides)
    # relative table paths resolve against the config file's directory
    radio = sections.get("radio", {})
    for key in ("bler_table", "mcs_table"):
        p = radio.get(key, "").strip()
        if p and p.lower() != "none" and not Path(p).is_absolute():
            radio[key] = str((path.parent / p).resolve())
    return scenario_from_sections(sections)


def loads(text: str, overrides=None) -> Scenario:
    return scenario_from_sections(apply_overrides(read_sections(text), overrides))


def dumps(sections: dict) -> str:
    """Render ``{section: {key: value}}`` back to config text."""
    lines = []
    for sec, kv in sections.items():
        lines.append(f"[{sec}]")
        for k, v in kv.items():
            if k in ("five_qi_class", "periodic"):
                lines.append(f"# {k} = {_text(v)}")
                continue
            lines.append(f"{k} = {_text(v)}")
        lines.append("")
    return "\n".join(lines)


def _text(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:g}" if abs(v) < 1e15 else repr(v)
    return str(v)


__all__ = [
    "ConfigError",
    "apply_overrides",
    "dumps",
    "load_config",
    "loads",
    "read_sections",
    "scenario_from_sections",
    "ClutterParams",
    "NodeGeometry",
    "RadioConfig",
    "MobilityConfig",
    "WiredConfig",
]
