"""Flat key = value configuration files.

One scalar per line, ``#`` comments, and a fixed key set; unknown keys are
rejected with their line number so typos cannot silently fall back to
defaults.  The same format carries both fluid-model and packet-level
parameters, and every emitted report embeds its resolved configuration in
this format so reports can be re-run directly.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError
from .packetsim import PacketSimConfig
from .protocol import ProtocolParams
from .topology import CaseIConfig, CaseIIConfig, CaseIIIConfig

_TOPOLOGIES = ("case1", "case2", "case3")

# key -> (python type, applicable topologies)
KEYS = {
    "topology": (str, _TOPOLOGIES),
    "alpha": (float, _TOPOLOGIES),
    "k": (float, _TOPOLOGIES),
    "beta": (float, _TOPOLOGIES),
    "b1": (float, ("case2", "case3")),
    "b2": (float, ("case2", "case3")),
    "b": (float, ("case1", "case3")),
    "c1": (float, ("case2", "case3")),
    "c2": (float, ("case2", "case3")),
    "c": (float, ("case1", "case3")),
    "tau1": (float, _TOPOLOGIES),
    "tau2": (float, _TOPOLOGIES),
    "kappa": (float, _TOPOLOGIES),
    "flows": (int, _TOPOLOGIES),
    "duration": (float, _TOPOLOGIES),
    "seed": (int, _TOPOLOGIES),
}

_KEY_ORDER = list(KEYS)

_DEFAULTS = {
    "alpha": 0.125,
    "k": 0.75,
    "beta": 0.5,
    "kappa": 1.0,
    "flows": 20,
    "duration": 60.0,
    "seed": 1,
}


def parse_config_text(text: str) -> Dict[str, object]:
    """Parse ``key = value`` lines; raise ConfigError with line numbers."""
    values: Dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        typ = KEYS[key][0]
        try:
            values[key] = value if typ is str else typ(value)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: cannot parse {value!r} as {typ.__name__} for {key!r}"
            ) from None
    return values


def load_config(path: str) -> Dict[str, object]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _require(values, key):
    if key not in values:
        raise ConfigError(f"missing required key {key!r} for topology "
                          f"{values.get('topology')!r}")
    return values[key]


def _check_buffer_integer(values, key):
    if key in values:
        v = values[key]
        if v < 1 or v != int(v):
            raise ConfigError(f"{key} must be a positive integer packet count, got {v}")


def build_topology(values: Dict[str, object]):
    """Validated topology record from parsed key-values."""
    topo = values.get("topology")
    if topo not in _TOPOLOGIES:
        raise ConfigError(f"topology must be one of {_TOPOLOGIES}, got {topo!r}")
    for key, (_, scope) in KEYS.items():
        if key in values and topo not in scope:
            raise ConfigError(f"key {key!r} does not apply to topology {topo!r}")
    for key in ("b", "b1", "b2"):
        _check_buffer_integer(values, key)
    merged = dict(_DEFAULTS)
    merged.update(values)
    protocol = ProtocolParams(alpha=merged["alpha"], k=merged["k"], beta=merged["beta"])
    common = dict(
        protocol=protocol,
        tau1=_require(merged, "tau1"),
        tau2=_require(merged, "tau2"),
        kappa=merged["kappa"],
    )
    if topo == "case1":
        return CaseIConfig(b=_require(merged, "b"), c=_require(merged, "c"), **common)
    if topo == "case2":
        return CaseIIConfig(
            b1=_require(merged, "b1"), b2=_require(merged, "b2"),
            c1=_require(merged, "c1"), c2=_require(merged, "c2"), **common,
        )
    return CaseIIIConfig(
        b1=_require(merged, "b1"), b2=_require(merged, "b2"), b=_require(merged, "b"),
        c1=_require(merged, "c1"), c2=_require(merged, "c2"), c=_require(merged, "c"),
        **common,
    )


def build_packet_config(values: Dict[str, object]) -> PacketSimConfig:
    """Packet-level run description from the same key set (dual-edge layout).

    ``c1``/``b1`` set the edge routers (both edges identical at desk scale),
    ``c``/``b`` the core, ``tau1``/``tau2`` the per-set round trip times.
    """
    if values.get("topology") != "case3":
        raise ConfigError("packet-level runs use the dual-edge topology (case3)")
    merged = dict(_DEFAULTS)
    merged.update(values)
    for key in ("b", "b1"):
        _check_buffer_integer(merged, key)
    protocol = ProtocolParams(alpha=merged["alpha"], k=merged["k"], beta=merged["beta"])
    return PacketSimConfig(
        flows_per_set=merged["flows"],
        edge_capacity=_require(merged, "c1"),
        edge_buffer=int(_require(merged, "b1")),
        core_capacity=_require(merged, "c"),
        core_buffer=int(_require(merged, "b")),
        rtt1=_require(merged, "tau1"),
        rtt2=_require(merged, "tau2"),
        duration=merged["duration"],
        seed=merged["seed"],
        protocol=protocol,
    )


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def resolved_lines(values: Dict[str, object],
                   overrides: Optional[Dict[str, object]] = None) -> List[str]:
    """Canonical config lines (fixed key order) with overrides applied."""
    merged = dict(values)
    if overrides:
        merged.update(overrides)
    return [f"{key} = {_format_value(merged[key])}"
            for key in _KEY_ORDER if key in merged]
