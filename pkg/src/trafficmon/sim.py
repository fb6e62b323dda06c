"""Deterministic discrete-time traffic world.

Entities follow scripted waypoint polylines at constant speed; poses are a
closed-form function of the tick, so replaying from any saved state is
bit-identical to a straight run. Collisions are geometric overlap tests and
the per-entity collided flag is sticky for the rest of the run.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .geometry import circle_rect_overlap, convex_overlap_sat, rect_corners

STATIC_KINDS = (
    "stop-sign", "yield-sign", "roundabout-sign", "traffic-light",
    "crosswalk", "tree", "pole", "bench",
)
LIGHT_COLORS = ("red", "yellow", "green")

DIRECTION_LABELS = (
    "rightward", "upper-right", "upward", "upper-left",
    "leftward", "lower-left", "downward", "lower-right",
)
STATIONARY = "stationary"

TWO_PI = 2.0 * math.pi


class ScenarioError(ValueError):
    """Raised when a scenario file is malformed or violates an invariant."""


# ---------- configuration types ----------

@dataclass(frozen=True)
class EntitySpec:
    id: str
    kind: str                      # "vehicle" | "pedestrian"
    path: tuple[tuple[float, float], ...]
    speed: float                   # m/s along the path
    half_extents: tuple[float, float] | None = None   # vehicles
    radius: float | None = None                       # pedestrians
    spawn_tick: int = 0


@dataclass(frozen=True)
class StaticObjectSpec:
    kind: str
    x: float
    y: float
    heading: float = 0.0
    id: str = ""


@dataclass(frozen=True)
class LightSchedule:
    light_id: str
    phases: tuple[tuple[str, int], ...]   # (color, duration_ticks)
    offset_ticks: int = 0

    def color_at(self, tick: int) -> str:
        cycle = sum(d for _, d in self.phases)
        t = (tick + self.offset_ticks) % cycle
        for color, duration in self.phases:
            if t < duration:
                return color
            t -= duration
        return self.phases[-1][0]


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    seed: int
    duration_ticks: int
    entities: tuple[EntitySpec, ...]
    statics: tuple[StaticObjectSpec, ...] = ()
    lights: tuple[LightSchedule, ...] = ()
    tick_dt: float = 0.005
    collision_expected: bool = False
    tags: tuple[str, ...] = ()         # scenario-level corpus tags


# ---------- runtime state ----------

@dataclass
class Entity:
    id: str
    kind: str
    x: float
    y: float
    heading: float                 # radians in [0, 2*pi), +y is image-up
    speed: float                   # 0 once past the final waypoint
    half_extents: tuple[float, float] | None = None
    radius: float | None = None
    collided: bool = False

    def footprint_polygon(self) -> list[tuple[float, float]]:
        if self.kind == "vehicle":
            hx, hy = self.half_extents
            return rect_corners(self.x, self.y, hx, hy, self.heading)
        # pedestrian: 16-gon outline of the footprint circle
        from .geometry import regular_polygon
        return regular_polygon(self.x, self.y, self.radius, 16)


@dataclass
class WorldState:
    tick: int
    entities: list[Entity] = field(default_factory=list)
    statics: tuple[StaticObjectSpec, ...] = ()
    light_colors: dict[str, str] = field(default_factory=dict)

    def copy(self) -> "WorldState":
        return WorldState(
            tick=self.tick,
            entities=[replace(e) for e in self.entities],
            statics=self.statics,
            light_colors=dict(self.light_colors),
        )


# ---------- scenario loading ----------

def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a scenario JSON file.

    Raises ScenarioError with the offending field path on parse or
    validation failure.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{path}: cannot parse scenario: {exc}") from exc
    return parse_scenario(raw, source=str(path))


def parse_scenario(raw: dict, source: str = "<memory>") -> ScenarioConfig:
    def fail(field_path: str, message: str):
        raise ScenarioError(f"{source}: {field_path}: {message}")

    for key in ("id", "duration_ticks", "entities"):
        if key not in raw:
            fail(key, "missing required field")

    duration = int(raw["duration_ticks"])
    if duration <= 0:
        fail("duration_ticks", "must be > 0")
    tick_dt = float(raw.get("tick_dt", 0.005))
    if tick_dt <= 0:
        fail("tick_dt", "must be > 0")

    entities = []
    seen_ids: set[str] = set()
    for i, ent in enumerate(raw["entities"]):
        where = f"entities[{i}]"
        eid = ent.get("id")
        if not eid:
            fail(f"{where}.id", "missing id")
        if eid in seen_ids:
            fail(f"{where}.id", f"duplicate entity id {eid!r}")
        seen_ids.add(eid)
        kind = ent.get("kind")
        if kind not in ("vehicle", "pedestrian"):
            fail(f"{where}.kind", f"unknown kind {kind!r}")
        path_pts = ent.get("path") or []
        if len(path_pts) < 1:
            fail(f"{where}.path", "path needs at least one waypoint")
        footprint = ent.get("footprint") or {}
        half_extents = None
        radius = None
        if kind == "vehicle":
            try:
                half_extents = (float(footprint["hx"]), float(footprint["hy"]))
            except (KeyError, TypeError, ValueError):
                fail(f"{where}.footprint", "vehicle needs footprint {hx, hy}")
            if half_extents[0] <= 0 or half_extents[1] <= 0:
                fail(f"{where}.footprint", "half extents must be > 0")
        else:
            try:
                radius = float(footprint["radius"])
            except (KeyError, TypeError, ValueError):
                fail(f"{where}.footprint", "pedestrian needs footprint {radius}")
            if radius <= 0:
                fail(f"{where}.footprint", "radius must be > 0")
        speed = float(ent.get("speed", 0.0))
        if speed < 0:
            fail(f"{where}.speed", "speed must be >= 0")
        entities.append(EntitySpec(
            id=eid, kind=kind,
            path=tuple((float(p[0]), float(p[1])) for p in path_pts),
            speed=speed,
            half_extents=half_extents, radius=radius,
            spawn_tick=int(ent.get("spawn_tick", 0)),
        ))

    statics = []
    for i, st in enumerate(raw.get("statics", [])):
        kind = st.get("kind")
        if kind not in STATIC_KINDS:
            fail(f"statics[{i}].kind", f"unknown static kind {kind!r}")
        statics.append(StaticObjectSpec(
            kind=kind, x=float(st["x"]), y=float(st["y"]),
            heading=float(st.get("heading", 0.0)), id=st.get("id", ""),
        ))

    lights = []
    for i, sched in enumerate(raw.get("lights", [])):
        phases = tuple((p["color"], int(p["ticks"])) for p in sched.get("phases", []))
        if not phases:
            fail(f"lights[{i}].phases", "schedule needs at least one phase")
        for j, (color, ticks) in enumerate(phases):
            if color not in LIGHT_COLORS:
                fail(f"lights[{i}].phases[{j}].color", f"unknown color {color!r}")
            if ticks <= 0:
                fail(f"lights[{i}].phases[{j}].ticks", "must be > 0")
        lights.append(LightSchedule(
            light_id=sched["id"], phases=phases,
            offset_ticks=int(sched.get("offset_ticks", 0)),
        ))

    tags = tuple(raw.get("tags", []))
    for tag in tags:
        if tag not in ("congestion", "platooning"):
            fail("tags", f"unknown scenario tag {tag!r}")

    return ScenarioConfig(
        id=str(raw["id"]),
        seed=int(raw.get("seed", 0)),
        duration_ticks=duration,
        entities=tuple(entities),
        statics=tuple(statics),
        lights=tuple(lights),
        tick_dt=tick_dt,
        collision_expected=bool(raw.get("collision_expected", False)),
        tags=tags,
    )


def load_scenario_dir(directory: str | Path) -> list[ScenarioConfig]:
    """All *.json scenarios in a directory, sorted by filename."""
    configs = []
    for path in sorted(Path(directory).glob("*.json")):
        configs.append(load_scenario(path))
    return configs


# ---------- kinematics ----------

def _cumulative_lengths(path: tuple[tuple[float, float], ...]) -> list[float]:
    acc = [0.0]
    for i in range(len(path) - 1):
        acc.append(acc[-1] + math.hypot(path[i + 1][0] - path[i][0],
                                        path[i + 1][1] - path[i][1]))
    return acc


def _pose_along_path(spec: EntitySpec, tick: int, tick_dt: float):
    """(x, y, heading, effective_speed) at the given tick, closed form."""
    path = spec.path
    if len(path) == 1 or spec.speed == 0.0:
        x, y = path[0]
        heading = _segment_heading(path, 0) if len(path) > 1 else 0.0
        return x, y, heading, 0.0
    cum = _cumulative_lengths(path)
    total = cum[-1]
    dist = spec.speed * max(0, tick - spec.spawn_tick) * tick_dt
    if dist >= total:
        x, y = path[-1]
        return x, y, _segment_heading(path, len(path) - 2), 0.0
    seg = bisect.bisect_right(cum, dist) - 1
    seg = min(seg, len(path) - 2)
    seg_len = cum[seg + 1] - cum[seg]
    t = 0.0 if seg_len == 0.0 else (dist - cum[seg]) / seg_len
    x = path[seg][0] + t * (path[seg + 1][0] - path[seg][0])
    y = path[seg][1] + t * (path[seg + 1][1] - path[seg][1])
    return x, y, _segment_heading(path, seg), spec.speed


def _segment_heading(path, seg: int) -> float:
    dx = path[seg + 1][0] - path[seg][0]
    dy = path[seg + 1][1] - path[seg][1]
    h = math.atan2(dy, dx)
    return h + TWO_PI if h < 0 else h


def initial_state(config: ScenarioConfig) -> WorldState:
    return _state_at(config, 0, {})


def _state_at(config: ScenarioConfig, tick: int, collided: dict[str, bool]) -> WorldState:
    entities = []
    for spec in config.entities:
        if tick < spec.spawn_tick:
            continue
        x, y, heading, speed = _pose_along_path(spec, tick, config.tick_dt)
        entities.append(Entity(
            id=spec.id, kind=spec.kind, x=x, y=y, heading=heading, speed=speed,
            half_extents=spec.half_extents, radius=spec.radius,
            collided=collided.get(spec.id, False),
        ))
    light_colors = {s.light_id: s.color_at(tick) for s in config.lights}
    return WorldState(tick=tick, entities=entities, statics=config.statics,
                      light_colors=light_colors)


def step(state: WorldState, config: ScenarioConfig) -> WorldState:
    """Advance one tick. Collided flags carry over (sticky)."""
    assert state.tick < config.duration_ticks, "stepping past duration is a contract bug"
    carried = {e.id: e.collided for e in state.entities}
    return _state_at(config, state.tick + 1, carried)


def detect_collisions(state: WorldState) -> list[tuple[str, str]]:
    """All unordered overlapping entity pairs; marks members collided."""
    pairs: list[tuple[str, str]] = []
    ents = state.entities
    for i in range(len(ents)):
        for j in range(i + 1, len(ents)):
            if _entities_overlap(ents[i], ents[j]):
                pairs.append((ents[i].id, ents[j].id))
                ents[i].collided = True
                ents[j].collided = True
    return pairs


def _entities_overlap(a: Entity, b: Entity) -> bool:
    if a.kind == "vehicle" and b.kind == "vehicle":
        return convex_overlap_sat(
            rect_corners(a.x, a.y, *a.half_extents, a.heading),
            rect_corners(b.x, b.y, *b.half_extents, b.heading),
        )
    if a.kind == "pedestrian" and b.kind == "pedestrian":
        return math.hypot(a.x - b.x, a.y - b.y) <= a.radius + b.radius
    veh, ped = (a, b) if a.kind == "vehicle" else (b, a)
    return circle_rect_overlap((ped.x, ped.y), ped.radius,
                               veh.x, veh.y, *veh.half_extents, veh.heading)


def run_scenario(config: ScenarioConfig):
    """Yield the WorldState at every tick 0..duration, collisions applied."""
    state = initial_state(config)
    detect_collisions(state)
    yield state
    while state.tick < config.duration_ticks:
        state = step(state, config)
        detect_collisions(state)
        yield state


# ---------- direction labels ----------

def heading_label(heading: float, speed: float) -> str:
    """Quantize a heading to one of 8 screen-direction labels.

    Bins are half-open [center-22.5deg, center+22.5deg), lower boundary
    inclusive; zero speed maps to "stationary".
    """
    if speed == 0.0:
        return STATIONARY
    deg = math.degrees(heading % TWO_PI)
    idx = int(((deg + 22.5) % 360.0) // 45.0)
    return DIRECTION_LABELS[idx]
