"""End-to-end workflows stitching the modules together: simulate scenarios
into frames, build the instruction corpus, and run responder evaluations.
"""
from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Callable, Iterator

from .camera import (
    CameraConfig, Frame, capture_stream, write_frame,
)
from .config import ServiceConfig
from .dataset import (
    DEFAULT_QUERY, InstructionRecord, build_record, export_dataset,
)
from .evaluation import EvalReport, FrameScore, aggregate, parse_response, score_frame
from .perception import oracle_detect, overlay_highlight, static_highlight_regions
from .sim import ScenarioConfig, WorldState, load_scenario, load_scenario_dir, run_scenario
from .vlm import ErrorRates, QueryRequest, QueryResponse, VlmClient, oracle_respond


def simulate_states(scenario: ScenarioConfig) -> list[WorldState]:
    return list(run_scenario(scenario))


def scenario_frames(camera: CameraConfig, scenario: ScenarioConfig,
                    states: list[WorldState] | None = None) -> Iterator[Frame]:
    if states is None:
        states = simulate_states(scenario)
    return capture_stream(camera, states)


def frame_at(camera: CameraConfig, scenario: ScenarioConfig, tick: int) -> Frame:
    """Render a single capture without materializing the whole run."""
    from .camera import rasterize_frame
    from .sim import detect_collisions, initial_state, step

    if tick < 0 or tick > scenario.duration_ticks:
        raise ValueError(f"tick {tick} outside scenario {scenario.id} "
                         f"(0..{scenario.duration_ticks})")
    state = initial_state(scenario)
    detect_collisions(state)
    while state.tick < tick:
        state = step(state, scenario)
        detect_collisions(state)
    return rasterize_frame(camera, state)


def highlight(camera: CameraConfig, scenario: ScenarioConfig, frame: Frame) -> Frame:
    detections = oracle_detect(frame)
    regions = static_highlight_regions(camera, scenario.statics)
    return overlay_highlight(frame, detections, regions)


def derive_seed(base_seed: int, *parts) -> int:
    """Stable per-frame seed so corruption draws decorrelate across frames."""
    text = ":".join([str(base_seed)] + [str(p) for p in parts])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big")


# ---------- simulate to disk ----------

def write_scenario_frames(cfg: ServiceConfig, scenario: ScenarioConfig,
                          out_root: str | Path, overlay: bool = False) -> int:
    """Persist every capture of a scenario for all cameras; returns the count."""
    out_root = Path(out_root)
    states = simulate_states(scenario)
    count = 0
    for camera in cfg.cameras:
        for frame in capture_stream(camera, states):
            to_write = highlight(camera, scenario, frame) if overlay else frame
            write_frame(out_root, to_write)
            count += 1
    return count


# ---------- corpus build ----------

def build_corpus(cfg: ServiceConfig, out_root: str | Path,
                 query: str = DEFAULT_QUERY, created_at: str | None = None,
                 write_images: bool = True,
                 progress: Callable[[str], None] | None = None) -> dict:
    """Build the full instruction corpus from the shipped scenario set.

    Renders every capture, overlays oracle detections, writes images under
    images/{scenario}/{camera}/{tick}.ppm and exports dataset.jsonl plus the
    manifest. Deterministic given the scenario corpus and created_at.
    """
    out_root = Path(out_root)
    records: list[InstructionRecord] = []
    scenarios = load_scenario_dir(cfg.scenario_dir)
    for scenario in scenarios:
        if progress:
            progress(f"scenario {scenario.id}")
        states = simulate_states(scenario)
        regions_cache = {
            camera.id: static_highlight_regions(camera, scenario.statics)
            for camera in cfg.cameras
        }
        for camera in cfg.cameras:
            for frame in capture_stream(camera, states):
                detections = oracle_detect(frame)
                highlighted = overlay_highlight(frame, detections,
                                                regions_cache[camera.id])
                rel = (f"images/{scenario.id}/{camera.id}/"
                       f"{frame.tick:08d}.ppm")
                if write_images:
                    from .camera import write_ppm
                    write_ppm(out_root / rel, highlighted.pixels)
                records.append(build_record(
                    frame, highlighted, rel, query=query,
                    scenario_tags=frozenset(scenario.tags),
                    record_id=f"{scenario.id}-{camera.id}-{frame.tick:08d}",
                ))
    if write_images:
        return export_dataset(records, out_root, created_at=created_at)
    return {
        "count": len(records),
        "collision_count": sum(1 for r in records if "collision" in r.tags),
        "cameras": sorted({r.camera_id for r in records}),
    }


# ---------- evaluation runs ----------

def evaluate_oracle(cfg: ServiceConfig, errors: ErrorRates, seed: int,
                    scenarios: list[ScenarioConfig] | None = None,
                    prompt: str = DEFAULT_QUERY) -> EvalReport:
    """Score the scripted oracle responder over rendered ground truth."""
    scores = list(iter_oracle_scores(cfg, errors, seed, scenarios, prompt))
    return aggregate(scores)


def iter_oracle_scores(cfg: ServiceConfig, errors: ErrorRates, seed: int,
                       scenarios: list[ScenarioConfig] | None = None,
                       prompt: str = DEFAULT_QUERY) -> Iterator[FrameScore]:
    if scenarios is None:
        scenarios = load_scenario_dir(cfg.scenario_dir)
    for scenario in scenarios:
        states = simulate_states(scenario)
        for camera in cfg.cameras:
            for frame in capture_stream(camera, states):
                yield score_oracle_frame(camera, scenario.id, frame, errors,
                                         seed, prompt)


def score_oracle_frame(camera: CameraConfig, scenario_id: str, frame: Frame,
                       errors: ErrorRates, seed: int,
                       prompt: str = DEFAULT_QUERY) -> FrameScore:
    req = QueryRequest(camera_id=camera.id, tick=frame.tick, prompt=prompt)
    resp = oracle_respond(
        req, frame, errors,
        seed=derive_seed(seed, scenario_id, camera.id, frame.tick),
        section_map=camera.section_map, table=camera.alias_table,
    )
    parsed = parse_response(resp.raw_text, camera.section_map)
    return score_frame(parsed, frame)


def evaluate_remote(cfg: ServiceConfig, endpoint: str,
                    scenarios: list[ScenarioConfig] | None = None,
                    prompt: str = DEFAULT_QUERY) -> EvalReport:
    """Score a remote VLM endpoint over rendered, highlighted frames."""
    client = VlmClient(endpoint, timeout_ms=cfg.limits.timeout_ms,
                       retries=cfg.limits.retries,
                       max_in_flight=cfg.limits.max_concurrent_queries)
    if scenarios is None:
        scenarios = load_scenario_dir(cfg.scenario_dir)
    scores = []
    for scenario in scenarios:
        states = simulate_states(scenario)
        for camera in cfg.cameras:
            for frame in capture_stream(camera, states):
                highlighted = highlight(camera, scenario, frame)
                req = QueryRequest(camera_id=camera.id, tick=frame.tick,
                                   prompt=prompt, image=highlighted)
                resp = client.query(req, camera.alias_table)
                parsed = parse_response(resp.raw_text, camera.section_map)
                scores.append(score_frame(parsed, frame))
    return aggregate(scores)


def query_once(cfg: ServiceConfig, camera: CameraConfig, scenario: ScenarioConfig,
               tick: int, prompt: str, responder: str,
               errors: ErrorRates = ErrorRates(), seed: int = 0) -> QueryResponse:
    """One query against either responder, rendering the frame on demand."""
    frame = frame_at(camera, scenario, tick)
    if responder == "oracle":
        req = QueryRequest(camera_id=camera.id, tick=tick, prompt=prompt)
        return oracle_respond(
            req, frame, errors,
            seed=derive_seed(seed, scenario.id, camera.id, tick),
            section_map=camera.section_map, table=camera.alias_table,
        )
    if responder == "remote":
        endpoint = cfg.endpoints.get("vlm")
        if not endpoint:
            raise ValueError("no vlm endpoint configured")
        highlighted = highlight(camera, scenario, frame)
        req = QueryRequest(camera_id=camera.id, tick=tick, prompt=prompt,
                           image=highlighted)
        client = VlmClient(endpoint, timeout_ms=cfg.limits.timeout_ms,
                           retries=cfg.limits.retries,
                           max_in_flight=cfg.limits.max_concurrent_queries)
        return client.query(req, camera.alias_table)
    raise ValueError(f"unknown responder {responder!r}")


def find_scenario(cfg: ServiceConfig, scenario_id: str) -> ScenarioConfig:
    path = cfg.scenario_dir / f"{scenario_id}.json"
    if not path.is_file():
        raise FileNotFoundError(f"no scenario {scenario_id!r} under {cfg.scenario_dir}")
    return load_scenario(path)
