#!/usr/bin/env python3
"""Regenerate the shipped 30-scenario corpus under scenarios/.

The world is 64x64 m, tiled by four 32x32 m camera quadrants. Each quadrant
repeats the same road layout (a horizontal "long road", a vertical
"crossing avenue", a central roundabout): lane constants below are
quadrant-local offsets. Scenario durations are chosen so the four cameras
at capture period 10 collect exactly 800 frames; exactly 7 scenarios stage
a collision.

The script simulates every generated scenario and asserts the intended
collision behaviour before writing anything. Run from the repo root:

    python3 tools/make_scenarios.py
"""
from __future__ import annotations

import json
import math
from pathlib import Path

from trafficmon.sim import parse_scenario, run_scenario

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "scenarios"

QUADRANTS = {"sw": (0.0, 0.0), "se": (32.0, 0.0), "nw": (0.0, 32.0), "ne": (32.0, 32.0)}
ROAD_Y = 15.875          # quadrant-local y of the long road centerline
ROAD_X = 16.0            # quadrant-local x of the crossing avenue centerline
LANE = 1.2               # lane offset from the road centerline
CAR = {"hx": 1.0, "hy": 0.55}
PED_R = 0.3


def q(quadrant: str, x: float, y: float) -> list[float]:
    ox, oy = QUADRANTS[quadrant]
    return [round(ox + x, 3), round(oy + y, 3)]


def car(cid: str, quadrant: str, pts: list[tuple[float, float]], speed: float,
        spawn: int = 0) -> dict:
    return {
        "id": cid, "kind": "vehicle", "footprint": dict(CAR),
        "path": [q(quadrant, x, y) for x, y in pts],
        "speed": speed, "spawn_tick": spawn,
    }


def ped(pid: str, quadrant: str, pts: list[tuple[float, float]], speed: float,
        spawn: int = 0) -> dict:
    return {
        "id": pid, "kind": "pedestrian", "footprint": {"radius": PED_R},
        "path": [q(quadrant, x, y) for x, y in pts],
        "speed": speed, "spawn_tick": spawn,
    }


def quadrant_statics(quadrant: str, with_light: bool = False) -> tuple[list, list]:
    """Scenery for one quadrant; returns (statics, light_schedules)."""
    ox, oy = QUADRANTS[quadrant]
    statics = [
        {"kind": "tree", "x": ox + 4.0, "y": oy + 4.0},
        {"kind": "tree", "x": ox + 27.5, "y": oy + 27.5},
        {"kind": "bench", "x": ox + 5.0, "y": oy + 26.5, "heading": 0.0},
        {"kind": "pole", "x": ox + 26.5, "y": oy + 5.0},
        {"kind": "crosswalk", "x": ox + ROAD_X - 7.0, "y": oy + ROAD_Y,
         "heading": 1.5707963, "id": f"cw-{quadrant}"},
        {"kind": "stop-sign", "x": ox + 20.0, "y": oy + 12.4},
        {"kind": "yield-sign", "x": ox + 12.0, "y": oy + 19.6},
        {"kind": "roundabout-sign", "x": ox + 19.8, "y": oy + 19.4},
    ]
    lights = []
    if with_light:
        light_id = f"light-{quadrant}"
        statics.append({"kind": "traffic-light", "x": ox + 20.6, "y": oy + 12.0,
                        "id": light_id})
        lights.append({"id": light_id, "phases": [
            {"color": "green", "ticks": 20},
            {"color": "yellow", "ticks": 10},
            {"color": "red", "ticks": 30},
        ]})
    return statics, lights


def scenario(sid: str, duration: int, entities: list[dict],
             collision_expected: bool = False, tags: list[str] | None = None,
             light_quadrants: tuple[str, ...] = ("sw",)) -> dict:
    statics, lights = [], []
    for quadrant in QUADRANTS:
        st, li = quadrant_statics(quadrant, with_light=quadrant in light_quadrants)
        statics.extend(st)
        lights.extend(li)
    body = {
        "id": sid,
        "seed": int(sid[1:]),
        "duration_ticks": duration,
        "tick_dt": 0.005,
        "collision_expected": collision_expected,
        "entities": entities,
        "statics": statics,
        "lights": lights,
    }
    if tags:
        body["tags"] = tags
    return body


# ---------- entity pattern helpers (quadrant-local coordinates) ----------

def head_on_road(prefix: str, quadrant: str, speed: float = 10.0) -> list[dict]:
    # 6 m gap closing at 2*speed: contact near tick 40 of 60
    return [
        car(f"{prefix}-a", quadrant, [(13.0, ROAD_Y), (22.0, ROAD_Y)], speed),
        car(f"{prefix}-b", quadrant, [(19.0, ROAD_Y), (10.0, ROAD_Y)], speed),
    ]


def rear_end_road(prefix: str, quadrant: str) -> list[dict]:
    # follower closes a 4 m gap at 10 m/s: contact near tick 40
    return [
        car(f"{prefix}-slow", quadrant, [(18.0, ROAD_Y), (28.0, ROAD_Y)], 4.0),
        car(f"{prefix}-fast", quadrant, [(14.0, ROAD_Y), (28.0, ROAD_Y)], 14.0),
    ]


def right_angle_cross(prefix: str, quadrant: str) -> list[dict]:
    # eastbound car meets southbound car just east of the roundabout
    return [
        car(f"{prefix}-east", quadrant, [(16.8, ROAD_Y), (24.0, ROAD_Y)], 12.0),
        car(f"{prefix}-south", quadrant, [(ROAD_X + 4.0, 18.4), (ROAD_X + 4.0, 10.0)], 12.0),
    ]


def head_on_avenue(prefix: str, quadrant: str, speed: float = 10.0) -> list[dict]:
    return [
        car(f"{prefix}-up", quadrant, [(ROAD_X, 10.0), (ROAD_X, 19.0)], speed),
        car(f"{prefix}-down", quadrant, [(ROAD_X, 16.0), (ROAD_X, 7.0)], speed),
    ]


def ped_strike(prefix: str, quadrant: str) -> list[dict]:
    # pedestrian edges into the avenue lane as the car arrives
    return [
        car(f"{prefix}-car", quadrant, [(ROAD_X, 9.0), (ROAD_X, 20.0)], 12.0),
        ped(f"{prefix}-ped", quadrant, [(ROAD_X - 0.8, 13.0), (ROAD_X + 2.0, 13.0)], 0.8),
    ]


def platoon(prefix: str, quadrant: str, n: int = 3, speed: float = 9.0,
            lane: float = LANE) -> list[dict]:
    out = []
    for k in range(n):
        out.append(car(f"{prefix}-{k + 1}", quadrant,
                       [(6.0 + 4.5 * k, ROAD_Y - lane), (27.0, ROAD_Y - lane)], speed))
    return out


def congestion_block(prefix: str, quadrant: str) -> list[dict]:
    out = []
    for k in range(3):
        out.append(car(f"{prefix}-n{k + 1}", quadrant,
                       [(7.0 + 4.0 * k, ROAD_Y + LANE), (26.0, ROAD_Y + LANE)], 2.5))
    for k in range(3):
        out.append(car(f"{prefix}-s{k + 1}", quadrant,
                       [(25.0 - 4.0 * k, ROAD_Y - LANE), (6.0, ROAD_Y - LANE)], 2.0))
    return out


def crossing_peds(prefix: str, quadrant: str) -> list[dict]:
    return [
        ped(f"{prefix}-p1", quadrant, [(ROAD_X - 7.0, 12.4), (ROAD_X - 7.0, 19.4)], 1.4),
        ped(f"{prefix}-p2", quadrant, [(ROAD_X - 6.4, 19.0), (ROAD_X - 6.4, 12.6)], 1.2),
    ]


def l_turn(cid: str, quadrant: str, speed: float = 10.0) -> dict:
    # eastbound, then north up the avenue: direction flips mid-run
    return car(cid, quadrant, [(10.5, ROAD_Y - LANE), (ROAD_X + LANE, ROAD_Y - LANE),
                               (ROAD_X + LANE, 24.0)], speed)


def diagonal(cid: str, quadrant: str, start: tuple[float, float],
             end: tuple[float, float], speed: float = 8.0, spawn: int = 0) -> dict:
    return car(cid, quadrant, [start, end], speed, spawn=spawn)


def parked(cid: str, quadrant: str, x: float, y: float) -> dict:
    return car(cid, quadrant, [(x, y)], 0.0)


def bg_car(cid: str, quadrant: str, upward: bool = True) -> dict:
    if upward:
        return car(cid, quadrant, [(ROAD_X + LANE, 6.0), (ROAD_X + LANE, 26.0)], 8.0)
    return car(cid, quadrant, [(24.0, ROAD_Y + LANE), (6.0, ROAD_Y + LANE)], 8.0)


def bg_ped(pid: str, quadrant: str) -> dict:
    return ped(pid, quadrant, [(22.0, 22.0), (25.0, 25.0)], 1.3)


# ---------- the 30 scenarios ----------

def build_all() -> list[dict]:
    scenarios = []

    # 7 collision experiments (s01-s07), 60 ticks each
    scenarios.append(scenario("s01", 60,
        head_on_road("crash", "sw")
        + [bg_car("flow-1", "se"), bg_car("flow-2", "nw", upward=False),
           parked("parked-1", "ne", 22.0, 8.0), bg_ped("walker-1", "ne")],
        collision_expected=True, light_quadrants=("sw",)))

    scenarios.append(scenario("s02", 60,
        rear_end_road("crash", "se")
        + [parked("parked-1", "sw", 8.0, 22.5),
           diagonal("diag-1", "nw", (6.0, 6.0), (12.0, 12.0), 9.0),
           bg_car("flow-1", "ne", upward=False), bg_ped("walker-1", "sw")],
        collision_expected=True, light_quadrants=("se",)))

    scenarios.append(scenario("s03", 60,
        right_angle_cross("crash", "nw")
        + [bg_car("flow-1", "se"), bg_car("flow-2", "sw", upward=False),
           bg_ped("walker-1", "ne")],
        collision_expected=True, light_quadrants=("nw",)))

    scenarios.append(scenario("s04", 60,
        head_on_avenue("crash", "ne")
        + [bg_car("flow-1", "sw"), bg_car("flow-2", "se", upward=False),
           parked("parked-1", "nw", 23.0, 23.0)],
        collision_expected=True, light_quadrants=("ne",)))

    scenarios.append(scenario("s05", 60,
        head_on_avenue("crash", "sw", speed=11.0)
        + [bg_car("flow-1", "nw"), diagonal("diag-1", "ne", (24.0, 6.0), (18.0, 12.0), 7.0),
           bg_ped("walker-1", "se")],
        collision_expected=True, light_quadrants=("sw",)))

    scenarios.append(scenario("s06", 60,
        right_angle_cross("crash", "se")
        + [bg_car("flow-1", "nw", upward=False), parked("parked-1", "ne", 9.0, 9.0),
           bg_car("flow-2", "sw")],
        collision_expected=True, light_quadrants=("se",)))

    scenarios.append(scenario("s07", 60,
        ped_strike("crash", "nw")
        + [bg_car("flow-1", "se"), bg_car("flow-2", "ne", upward=False),
           parked("parked-1", "sw", 24.0, 24.5)],
        collision_expected=True, light_quadrants=("nw",)))

    # 5 platooning runs (s08-s12), 60 ticks
    for i, focus in enumerate(("sw", "se", "nw", "ne", "sw"), start=8):
        others = [qd for qd in QUADRANTS if qd != focus]
        scenarios.append(scenario(f"s{i:02d}", 60,
            platoon("platoon", focus, n=3 + (i % 2))
            + [bg_car("flow-1", others[0]), bg_car("flow-2", others[1], upward=False),
               bg_ped("walker-1", others[2])],
            tags=["platooning"], light_quadrants=(focus,)))

    # 5 congestion scenes (s13-s17), 60 ticks
    for i, focus in enumerate(("se", "nw", "ne", "sw", "se"), start=13):
        others = [qd for qd in QUADRANTS if qd != focus]
        scenarios.append(scenario(f"s{i:02d}", 60,
            congestion_block("jam", focus)
            + [bg_car("flow-1", others[0]), bg_ped("walker-1", others[1])],
            tags=["congestion"], light_quadrants=(focus,)))

    # 3 pedestrian-crossing scenes (s18-s20), 60 ticks
    for i, focus in enumerate(("sw", "se", "nw"), start=18):
        others = [qd for qd in QUADRANTS if qd != focus]
        scenarios.append(scenario(f"s{i:02d}", 60,
            crossing_peds("cross", focus)
            + [car("yield-1", focus, [(24.0, ROAD_Y + LANE), (12.0, ROAD_Y + LANE)], 6.0),
               bg_car("flow-1", others[0]), bg_car("flow-2", others[1], upward=False),
               parked("parked-1", others[2], 21.5, 23.0)],
            light_quadrants=(focus,)))

    # 5 intersection / roundabout runs (s21-s25), 50 ticks
    for i, focus in enumerate(("ne", "sw", "se", "nw", "ne"), start=21):
        others = [qd for qd in QUADRANTS if qd != focus]
        scenarios.append(scenario(f"s{i:02d}", 50,
            [l_turn("turner-1", focus),
             car("orbit-1", focus, [(ROAD_X - LANE, 21.0), (ROAD_X - LANE, 9.5)], 9.0),
             bg_car("flow-1", others[0]),
             diagonal("diag-1", others[1], (8.0, 24.0), (13.0, 19.0), 8.0),
             bg_ped("walker-1", others[2])],
            light_quadrants=(focus,)))

    # 5 mixed / one-way road scenes (s26-s30), 50 ticks
    for i, focus in enumerate(("sw", "se", "nw", "ne", "sw"), start=26):
        others = [qd for qd in QUADRANTS if qd != focus]
        scenarios.append(scenario(f"s{i:02d}", 50,
            [car("oneway-1", focus, [(7.0, ROAD_Y - LANE), (26.0, ROAD_Y - LANE)], 11.0),
             car("oneway-2", focus, [(11.5, ROAD_Y - LANE), (26.0, ROAD_Y - LANE)], 11.0),
             parked("parked-1", focus, 21.0, 22.8),
             diagonal("diag-1", others[0], (22.0, 22.0), (16.5, 16.5 + ROAD_Y - 15.875), 8.5),
             diagonal("diag-2", others[1], (8.0, 20.0), (12.0, 24.0), 7.5, spawn=10),
             bg_ped("walker-1", others[2])],
            light_quadrants=(focus, others[0])))

    return scenarios


# ---------- verification ----------

def verify(raw: dict) -> None:
    cfg = parse_scenario(raw, source=raw["id"])
    first_collision_tick = None
    collided_ids: set[str] = set()
    for state in run_scenario(cfg):
        newly = {e.id for e in state.entities if e.collided}
        if newly and first_collision_tick is None:
            first_collision_tick = state.tick
        collided_ids |= newly
        for e in state.entities:
            ox, oy = _quadrant_of(e.x, e.y)
            margin = 1.3 if e.kind == "vehicle" else 0.4
            assert ox + margin <= e.x <= ox + 32 - margin, \
                f"{cfg.id}: {e.id} too close to quadrant x-border at tick {state.tick}"
            assert oy + margin <= e.y <= oy + 32 - margin, \
                f"{cfg.id}: {e.id} too close to quadrant y-border at tick {state.tick}"
    if cfg.collision_expected:
        assert first_collision_tick is not None, f"{cfg.id}: no collision happened"
        assert 10 <= first_collision_tick <= cfg.duration_ticks - 10, \
            f"{cfg.id}: collision at tick {first_collision_tick} too close to the ends"
        assert len(collided_ids) == 2, \
            f"{cfg.id}: expected exactly one colliding pair, got {sorted(collided_ids)}"
    else:
        assert not collided_ids, \
            f"{cfg.id}: unexpected collision between {sorted(collided_ids)}"


def _quadrant_of(x: float, y: float) -> tuple[float, float]:
    return (0.0 if x < 32 else 32.0, 0.0 if y < 32 else 32.0)


def main() -> None:
    scenarios = build_all()
    assert len(scenarios) == 30
    collisions = [s for s in scenarios if s["collision_expected"]]
    assert len(collisions) == 7, f"{len(collisions)} collision scenarios"
    # four cameras at capture period 10: duration d contributes 4*(d//10+1)
    frames = sum(4 * (s["duration_ticks"] // 10 + 1) for s in scenarios)
    assert frames == 800, f"corpus would produce {frames} frames, want 800"

    for raw in scenarios:
        verify(raw)
        print(f"{raw['id']}: ok ({len(raw['entities'])} entities, "
              f"{raw['duration_ticks']} ticks)")

    OUT.mkdir(exist_ok=True)
    for raw in scenarios:
        path = OUT / f"{raw['id']}.json"
        path.write_text(json.dumps(raw, indent=2) + "\n", encoding="utf-8")
    print(f"wrote {len(scenarios)} scenarios under {OUT}")


if __name__ == "__main__":
    main()
