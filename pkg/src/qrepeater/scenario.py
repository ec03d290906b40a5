"""Scenario files: TOML documents describing one repeater chain.

Grammar
-------
A scenario is a TOML document with the sections ``[hardware]``,
``[network]``, ``[protocol]``, ``[memory]``, ``[purification]`` and
``[sim]``. Only ``network.segments_km`` is required. Unknown sections or
keys are errors. Floats accept ``inf``. Every error message carries the
file name and the line of the offending key.

The resolved form (:meth:`Scenario.resolved`) lists every key with its
effective value, defaults included, and parses back to the same
configuration.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass, is_dataclass
from pathlib import Path
from typing import Any

import tomli
import tomli_w

from .engine import RepeaterChainConfig
from .generation import EmissionPulse, LinkHardware
from .memory import AfcParams
from .photonics import DetectorParams, EmitterParams, FiberParams, emitter_indistinguishability
from .repeater import PurificationPlan, SwapStation


class ScenarioError(ValueError):
    """A scenario file could not be turned into a valid configuration."""

    def __init__(self, message: str, source: str = "<scenario>", line: int | None = None):
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")
        self.line = line


# (kind, default); kinds: pos, nonneg, prob, ge1 (float >= 1), int_pos, int_nonneg, int, bool, str, list
_SCHEMA: dict[str, dict[str, tuple[str, Any]]] = {
    "hardware": {
        "t1_s": ("pos", None),
        "t2star_s": ("pos", math.inf),
        "gamma_r_per_s": ("nonneg", None),
        "gamma_nr_per_s": ("nonneg", 0.0),
        "purcell": ("nonneg", 1.0),
        "eta_det": ("prob", 1.0),
        "dark_count": ("prob", 0.0),
        "indistinguishability": ("prob", None),
        "number_resolving": ("bool", True),
    },
    "network": {
        "segments_km": ("list", None),
        "alpha_db_per_km": ("nonneg", 0.2),
        "c_fiber_m_per_s": ("pos", 2.0e8),
    },
    "protocol": {
        "scheme": ("str", "dlcz"),
        "gt": ("nonneg", 0.1),
        "pulse_overhead_s": ("nonneg", 0.0),
        "cutoff_s": ("pos", math.inf),
    },
    "memory": {
        "n_modes": ("int_pos", 1),
        "comb_spacing_rad_per_s": ("pos", 2 * math.pi * 1e6),
        "eta_write": ("prob", 1.0),
        "eta_recall": ("prob", 1.0),
        "eta_spinwave": ("prob", 1.0),
        "spin_t2_s": ("pos", math.inf),
    },
    "purification": {
        "l": ("int_pos", None),
        "m": ("int_pos", None),
        "levels": ("int_nonneg", None),
    },
    "sim": {
        "seed": ("int_nonneg", 0),
        "trials": ("int_pos", 1),
        "max_time_s": ("pos", math.inf),
        "max_pairs": ("count", 1000),
    },
}

DEFAULT_T1_S = 0.01


@dataclass(frozen=True)
class SimSettings:
    seed: int = 0
    trials: int = 1
    max_time_s: float = math.inf
    max_pairs: int | None = 1000

    def __post_init__(self) -> None:
        if self.max_pairs is None and math.isinf(self.max_time_s):
            raise ValueError("give a finite sim.max_time_s or sim.max_pairs")


@dataclass(frozen=True)
class Scenario:
    config: RepeaterChainConfig
    sim: SimSettings
    values: dict

    def resolved(self) -> dict:
        """Every key with its effective value, ready to dump as TOML."""
        return json.loads(json.dumps(self.values))

    def dumps(self) -> str:
        return tomli_w.dumps(self.values)

    @property
    def fingerprint(self) -> str:
        return config_fingerprint(self.config)


def _line_of(text: str, section: str, key: str | None) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]`` (or of the section header)."""
    current = None
    header = re.compile(r"^\s*\[\s*([A-Za-z0-9_.\-]+)\s*\]")
    for number, line in enumerate(text.splitlines(), start=1):
        m = header.match(line)
        if m:
            current = m.group(1)
            if key is None and current == section:
                return number
            continue
        if key is not None and current == section and re.match(rf"^\s*{re.escape(key)}\s*=", line):
            return number
    return None


def _check_value(kind: str, value: Any) -> tuple[Any, str | None]:
    """Validate and normalise one value; returns (value, error message or None)."""
    if kind == "bool":
        return (value, None) if isinstance(value, bool) else (value, "must be true or false")
    if kind == "str":
        return (value, None) if isinstance(value, str) else (value, "must be a string")
    if kind == "list":
        if not isinstance(value, list) or not value:
            return value, "must be a non-empty list of lengths in km"
        out = []
        for item in value:
            if isinstance(item, bool) or not isinstance(item, (int, float)) or not item >= 0 or math.isinf(item):
                return value, "entries must be finite non-negative numbers (km)"
            out.append(float(item))
        return out, None
    if kind in ("int_pos", "int_nonneg"):
        if isinstance(value, bool) or not isinstance(value, int):
            return value, "must be an integer"
        if kind == "int_pos" and value < 1:
            return value, "must be at least 1"
        if kind == "int_nonneg" and value < 0:
            return value, "must be non-negative"
        return value, None
    if kind == "count":
        if isinstance(value, float) and math.isinf(value) and value > 0:
            return math.inf, None
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            return value, "must be a positive integer or inf"
        return value, None
    if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value):
        return value, "must be a number"
    value = float(value)
    if kind == "pos" and not value > 0:
        return value, "must be positive"
    if kind == "nonneg" and not value >= 0:
        return value, "must be non-negative"
    if kind == "prob" and not 0.0 <= value <= 1.0:
        return value, "must lie in [0, 1]"
    return value, None


def loads_scenario(text: str, source: str = "<scenario>") -> Scenario:
    """Parse scenario text. See the module docstring for the grammar."""
    try:
        raw = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        raise ScenarioError(f"invalid TOML: {exc}", source, line) from None

    def fail(message: str, section: str, key: str | None = None):
        raise ScenarioError(
            f"{section}.{key}: {message}" if key else f"[{section}]: {message}",
            source,
            _line_of(text, section, key),
        )

    values: dict[str, dict[str, Any]] = {}
    for section, body in raw.items():
        if section not in _SCHEMA:
            raise ScenarioError(
                f"unknown section [{section}]; expected one of {', '.join(_SCHEMA)}",
                source, _line_of(text, section, None),
            )
        if not isinstance(body, dict):
            raise ScenarioError(f"{section} must be a table", source, _line_of(text, section, None))
        for key, value in body.items():
            if key not in _SCHEMA[section]:
                fail(f"unknown key; expected one of {', '.join(_SCHEMA[section])}", section, key)
            kind, _ = _SCHEMA[section][key]
            value, error = _check_value(kind, value)
            if error:
                fail(error, section, key)
            values.setdefault(section, {})[key] = value

    if "segments_km" not in values.get("network", {}):
        raise ScenarioError("network.segments_km is required", source, _line_of(text, "network", None))

    given = {s: dict(v) for s, v in values.items()}
    resolved: dict[str, dict[str, Any]] = {}
    for section, keys in _SCHEMA.items():
        if section == "purification":
            continue
        resolved[section] = {k: given.get(section, {}).get(k, default) for k, (_, default) in keys.items()}

    # hardware ----------------------------------------------------------
    hw = resolved["hardware"]
    try:
        if hw["gamma_r_per_s"] is not None and given.get("hardware", {}).get("t1_s") is None:
            emitter = EmitterParams.from_rates(hw["gamma_r_per_s"], hw["gamma_nr_per_s"], hw["t2star_s"])
        else:
            t1 = hw["t1_s"] if hw["t1_s"] is not None else DEFAULT_T1_S
            emitter = EmitterParams(t1, hw["t2star_s"], hw["gamma_r_per_s"], hw["gamma_nr_per_s"])
    except ValueError as exc:
        key = "gamma_r_per_s" if hw["gamma_r_per_s"] is not None else "gamma_nr_per_s"
        fail(str(exc), "hardware", key)
    hw["t1_s"] = emitter.t1_excited
    hw["gamma_r_per_s"] = emitter.gamma_r
    hw["gamma_nr_per_s"] = emitter.gamma_nr
    if hw["indistinguishability"] is None:
        try:
            hw["indistinguishability"] = emitter_indistinguishability(emitter, hw["purcell"])
        except ValueError as exc:
            fail(str(exc), "hardware", "purcell")

    proto = resolved["protocol"]
    if proto["scheme"] not in ("dlcz", "single_emitter"):
        fail("must be 'dlcz' or 'single_emitter'", "protocol", "scheme")
    try:
        pulse = EmissionPulse.from_gt(proto["gt"])
    except ValueError as exc:
        fail(str(exc), "protocol", "gt")

    mem = resolved["memory"]
    afc = AfcParams(
        mem["comb_spacing_rad_per_s"],
        mode_capacity=mem["n_modes"],
        write_efficiency=mem["eta_write"],
        recall_efficiency=mem["eta_recall"],
        spinwave_transfer_efficiency=mem["eta_spinwave"],
        spin_t2=mem["spin_t2_s"],
    )

    plan = None
    if "purification" in given:
        pur = given["purification"]
        for key in ("l", "m", "levels"):
            if key not in pur:
                fail("is required when [purification] is present", "purification", key)
        if pur["l"] < 2:
            fail("must be at least 2", "purification", "l")
        segments = len(resolved["network"]["segments_km"])
        if pur["l"] ** pur["levels"] != segments:
            fail(
                f"l**levels = {pur['l'] ** pur['levels']} links but network.segments_km has {segments}",
                "purification", "levels",
            )
        plan = PurificationPlan(pur["l"], pur["m"], pur["levels"])
        resolved["purification"] = {"l": pur["l"], "m": pur["m"], "levels": pur["levels"]}

    detector = DetectorParams(hw["eta_det"], hw["dark_count"], hw["number_resolving"])
    fiber = FiberParams(resolved["network"]["alpha_db_per_km"], resolved["network"]["c_fiber_m_per_s"])
    if fiber.speed_in_fiber > 2.99792458e8:
        fail("exceeds the vacuum speed of light", "network", "c_fiber_m_per_s")
    hardware = LinkHardware(
        emitter=emitter, detector=detector, fiber=fiber,
        indistinguishability=hw["indistinguishability"],
    )
    station = SwapStation(readout_efficiency=afc.recall_factor, detector=detector)
    try:
        config = RepeaterChainConfig(
            tuple(resolved["network"]["segments_km"]),
            hardware=hardware,
            memory=afc,
            scheme=proto["scheme"],
            pulse=pulse,
            station=station,
            purification=plan,
            cutoff=proto["cutoff_s"],
            pulse_overhead=proto["pulse_overhead_s"],
        )
    except ValueError as exc:
        fail(str(exc), "network", "segments_km")

    sim_values = resolved["sim"]
    max_pairs = None if math.isinf(sim_values["max_pairs"]) else int(sim_values["max_pairs"])
    if max_pairs is None and math.isinf(sim_values["max_time_s"]):
        fail("max_time_s and max_pairs cannot both be infinite", "sim", "max_pairs")
    sim = SimSettings(sim_values["seed"], sim_values["trials"], sim_values["max_time_s"], max_pairs)
    return Scenario(config, sim, resolved)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror or exc}", str(path)) from None
    return loads_scenario(text, str(path))


def parse_scenario(path: str | Path) -> RepeaterChainConfig:
    """Read a scenario file and return the validated chain configuration."""
    return load_scenario(path).config


def _plain(obj: Any) -> Any:
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: _plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float):
        if math.isinf(obj) or math.isnan(obj):
            return repr(obj)
        return float.hex(obj)
    return obj


def config_fingerprint(config: RepeaterChainConfig, extra: dict | None = None) -> str:
    """Short SHA-256 of a canonical, platform-independent rendering of ``config``.

    Floats are rendered with ``float.hex`` so the hash depends on exact
    values, not on how they print.
    """
    payload = {"config": _plain(config), "extra": _plain(extra or {})}
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
