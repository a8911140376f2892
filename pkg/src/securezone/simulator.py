"""Deterministic simulation of zone beacons and mobile firearms.

Zones broadcast a fresh message every ``period`` seconds over a disc of
radius ``radius``.  Firearms follow piecewise-linear waypoint paths; any
firearm inside a disc at a beacon instant assesses that beacon with its own
(possibly skewed) clock and produces one log record.

Clocks: simulation time ``t`` starts at 0.  A party with clock offset ``o``
reads ``floor(epoch + t + o)`` seconds.  Keys are issued at ``epoch``.
"""

from __future__ import annotations

import io
import json
import math
import random
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from . import protocol
from .policy import PolicyError, attributes, parse_policy
from .protocol import Outcome

SCHEMA_VERSION = 1
DEFAULT_PERIOD = 5.0


class ScenarioInvalid(ValueError):
    pass


@dataclass(frozen=True)
class ZoneSpec:
    sza_id: int
    x: float
    y: float
    radius: float
    policy: str
    period: float = DEFAULT_PERIOD
    clock_offset: float = 0.0


@dataclass(frozen=True)
class FirearmSpec:
    firearm_id: int
    attributes: tuple[str, ...]
    et: int
    waypoints: tuple[tuple[float, float, float], ...]
    clock_offset: float = 0.0
    user_id: int | None = None


@dataclass(frozen=True)
class Scenario:
    duration: float
    seed: int
    zones: tuple[ZoneSpec, ...]
    firearms: tuple[FirearmSpec, ...]
    universe: frozenset[str]
    window: int = 30
    epoch: int = 0
    skew: int = protocol.DEFAULT_SKEW_WINDOWS

    def clock(self, t: float, offset: float) -> int:
        return math.floor(self.epoch + t + offset)


@dataclass(frozen=True)
class Record:
    t: float
    sza_id: int
    firearm_id: int
    distance: float
    outcome: Outcome
    detail: str = ""

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "sza_id": self.sza_id,
            "firearm_id": self.firearm_id,
            "distance": self.distance,
            "outcome": self.outcome.value,
            "detail": self.detail,
        }


@dataclass
class EventLog:
    scenario: Scenario
    records: list[Record] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


# -- mobility -----------------------------------------------------------------

def position_at(spec: FirearmSpec, t: float) -> tuple[float, float]:
    pts = spec.waypoints
    if t <= pts[0][0]:
        return (pts[0][1], pts[0][2])
    if t >= pts[-1][0]:
        return (pts[-1][1], pts[-1][2])
    for (t0, x0, y0), (t1, x1, y1) in zip(pts, pts[1:]):
        if t0 <= t <= t1:
            f = (t - t0) / (t1 - t0)
            return (x0 + f * (x1 - x0), y0 + f * (y1 - y0))
    raise AssertionError("unreachable: waypoint times are increasing")


def distance_to(spec: FirearmSpec, zone: ZoneSpec, t: float) -> float:
    x, y = position_at(spec, t)
    return math.hypot(x - zone.x, y - zone.y)


def beacon_times(zone: ZoneSpec, duration: float) -> list[float]:
    count = math.floor(duration / zone.period + 1e-9)
    return [k * zone.period for k in range(count + 1)]


# -- scenario files -----------------------------------------------------------

def _require(cond: bool, message: str):
    if not cond:
        raise ScenarioInvalid(message)


def scenario_from_dict(data: dict) -> Scenario:
    try:
        universe = frozenset(data["universe"])
        zones = tuple(
            ZoneSpec(
                sza_id=int(z["sza_id"]),
                x=float(z["position"][0]),
                y=float(z["position"][1]),
                radius=float(z["radius"]),
                policy=str(z["policy"]),
                period=float(z.get("period", DEFAULT_PERIOD)),
                clock_offset=float(z.get("clock_offset", 0)),
            )
            for z in data["zones"]
        )
        firearms = tuple(
            FirearmSpec(
                firearm_id=int(f["firearm_id"]),
                attributes=tuple(f["attributes"]),
                et=int(f["et"]),
                waypoints=tuple((float(t), float(x), float(y)) for t, x, y in f["waypoints"]),
                clock_offset=float(f.get("clock_offset", 0)),
                user_id=int(f["user_id"]) if "user_id" in f else None,
            )
            for f in data["firearms"]
        )
        scenario = Scenario(
            duration=float(data["duration"]),
            seed=int(data["seed"]),
            zones=zones,
            firearms=firearms,
            universe=universe,
            window=int(data.get("window", 30)),
            epoch=int(data.get("epoch", 0)),
            skew=int(data.get("skew", protocol.DEFAULT_SKEW_WINDOWS)),
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ScenarioInvalid(f"bad scenario structure: {exc!r}") from None
    validate(scenario)
    return scenario


def scenario_to_dict(s: Scenario) -> dict:
    return {
        "szsim": SCHEMA_VERSION,
        "duration": s.duration,
        "seed": s.seed,
        "window": s.window,
        "epoch": s.epoch,
        "skew": s.skew,
        "universe": sorted(s.universe),
        "zones": [
            {"sza_id": z.sza_id, "position": [z.x, z.y], "radius": z.radius, "policy": z.policy,
             "period": z.period, "clock_offset": z.clock_offset}
            for z in s.zones
        ],
        "firearms": [
            {"firearm_id": f.firearm_id, "attributes": list(f.attributes), "et": f.et,
             "waypoints": [list(w) for w in f.waypoints], "clock_offset": f.clock_offset,
             **({"user_id": f.user_id} if f.user_id is not None else {})}
            for f in s.firearms
        ],
    }


def load_scenario(path: str | Path) -> Scenario:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioInvalid(f"scenario is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioInvalid("scenario must be a JSON object")
    if data.get("szsim", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ScenarioInvalid(f"unsupported scenario schema {data.get('szsim')!r}")
    return scenario_from_dict(data)


def validate(s: Scenario):
    _require(s.duration >= 0, "duration must be non-negative")
    _require(s.window >= 1, "token window must be at least 1 second")
    _require(s.skew >= 0, "skew tolerance must be non-negative")
    _require(len({z.sza_id for z in s.zones}) == len(s.zones), "duplicate sza_id")
    _require(len({f.firearm_id for f in s.firearms}) == len(s.firearms), "duplicate firearm_id")
    for z in s.zones:
        _require(0 <= z.sza_id <= 0xFFFFFFFF, f"zone {z.sza_id}: sza_id outside 32 bits")
        _require(z.radius > 0, f"zone {z.sza_id}: radius must be positive")
        _require(z.period > 0, f"zone {z.sza_id}: period must be positive")
        _require(s.epoch + z.clock_offset >= 0, f"zone {z.sza_id}: clock would read negative time")
        try:
            tree = parse_policy(z.policy)
        except PolicyError as exc:
            raise ScenarioInvalid(f"zone {z.sza_id}: {exc}") from None
        unknown = attributes(tree) - s.universe
        _require(not unknown, f"zone {z.sza_id}: policy uses unknown attributes {sorted(unknown)}")
    for f in s.firearms:
        _require(len(f.waypoints) >= 1, f"firearm {f.firearm_id}: needs at least one waypoint")
        times = [w[0] for w in f.waypoints]
        _require(all(a < b for a, b in zip(times, times[1:])),
                 f"firearm {f.firearm_id}: waypoint times must be strictly increasing")
        _require(f.attributes and set(f.attributes) <= s.universe,
                 f"firearm {f.firearm_id}: attributes must be a non-empty subset of the universe")
        _require(f.et > s.epoch, f"firearm {f.firearm_id}: et must be after issuance at epoch {s.epoch}")
        _require(s.epoch + f.clock_offset >= 0, f"firearm {f.firearm_id}: clock would read negative time")


# -- engine -------------------------------------------------------------------

def run(scenario: Scenario) -> EventLog:
    validate(scenario)
    rng = random.Random(scenario.seed)
    ca = protocol.ca_setup(rng, universe=scenario.universe, window=scenario.window)
    zones = sorted(scenario.zones, key=lambda z: z.sza_id)
    firearms = sorted(scenario.firearms, key=lambda f: f.firearm_id)
    szas = {z.sza_id: protocol.create_sza(ca, z.sza_id, z.policy, rng) for z in zones}
    bundles = {
        f.firearm_id: protocol.firearm_register(
            ca, f.attributes, f.firearm_id, f.user_id if f.user_id is not None else f.firearm_id,
            f.et, rng, issued_at=scenario.epoch)
        for f in firearms
    }

    beacons = sorted((t, z.sza_id, z) for z in zones for t in beacon_times(z, scenario.duration))
    log = EventLog(scenario)
    for t, sza_id, zone in beacons:
        msg = protocol.compose_zone_message(szas[sza_id], scenario.clock(t, zone.clock_offset), rng)
        for f in firearms:
            d = distance_to(f, zone, t)
            if d > zone.radius:
                continue
            now = scenario.clock(t, f.clock_offset)
            result = protocol.assess(bundles[f.firearm_id], msg, now, skew=scenario.skew)
            log.records.append(Record(t, sza_id, f.firearm_id, round(d, 6), result.outcome, result.detail))
    return log


# -- reporting ----------------------------------------------------------------

def _counts(outcomes: Iterable[Outcome]) -> dict[str, int]:
    c = Counter(o.value for o in outcomes)
    return {o.value: c.get(o.value, 0) for o in Outcome}


def report(log: EventLog | Iterable[Record]) -> dict:
    records = list(log)
    zones = sorted({r.sza_id for r in records})
    firearms = sorted({r.firearm_id for r in records})
    return {
        "total": len(records),
        "by_outcome": _counts(r.outcome for r in records),
        "by_zone": {str(z): _counts(r.outcome for r in records if r.sza_id == z) for z in zones},
        "by_firearm": {str(f): _counts(r.outcome for r in records if r.firearm_id == f) for f in firearms},
    }


def format_report(summary: dict) -> str:
    names = [o.value for o in Outcome]
    width = max(len(n) for n in names)
    out = io.StringIO()
    out.write(f"records: {summary['total']}\n")
    for name in names:
        out.write(f"  {name:<{width}}  {summary['by_outcome'][name]}\n")
    for title, key in (("zone", "by_zone"), ("firearm", "by_firearm")):
        for ident, counts in summary[key].items():
            nonzero = ", ".join(f"{k}={v}" for k, v in counts.items() if v)
            out.write(f"{title} {ident}: {nonzero or 'none'}\n")
    return out.getvalue()


def dump_log(log: EventLog) -> str:
    """JSON-lines text: header, one line per record, summary last."""
    s = log.scenario
    lines = [json.dumps({"szsim": SCHEMA_VERSION, "kind": "header", "seed": s.seed,
                         "duration": s.duration, "window": s.window, "epoch": s.epoch,
                         "records": len(log)}, sort_keys=True)]
    lines += [json.dumps({"kind": "record", **r.to_json()}, sort_keys=True) for r in log]
    lines.append(json.dumps({"szsim": SCHEMA_VERSION, "kind": "summary", "summary": report(log)},
                            sort_keys=True))
    return "\n".join(lines) + "\n"


def load_log(text: str) -> tuple[list[Record], dict]:
    records, summary = [], None
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        if obj.get("kind") == "record":
            records.append(Record(obj["t"], obj["sza_id"], obj["firearm_id"], obj["distance"],
                                  Outcome(obj["outcome"]), obj.get("detail", "")))
        elif obj.get("kind") == "summary":
            summary = obj["summary"]
    return records, summary
