"""HTTP API over the pipeline.

GET endpoints are pure reads (frames render on demand); simulations run as
background jobs tracked in the RunStore registry; alias tables are replaced
whole and re-validated on PUT.
"""
from __future__ import annotations

import json
import threading
from pathlib import Path
from typing import Any

from fastapi import FastAPI, HTTPException, Query, Response

from . import pipeline
from .camera import write_frame, frame_from_sidecar, load_annotations
from .config import ServiceConfig
from .dataset import DEFAULT_QUERY
from .evaluation import aggregate, parse_response, score_frame
from .grounding import (
    SectionMap, AliasTable, Section, validate_alias_table, dump_alias_db,
)
from .sim import load_scenario_dir
from .store import RunStore
from .vlm import ErrorRates, QueryRequest, oracle_respond, VlmClient

PPM_MEDIA_TYPE = "image/x-portable-pixmap"


def _ppm_bytes(pixels) -> bytes:
    h, w = pixels.shape[:2]
    return b"P6\n%d %d\n255\n" % (w, h) + pixels.tobytes()


def create_app(cfg: ServiceConfig) -> FastAPI:
    app = FastAPI(title="trafficmon", version="0.1.0")
    store = RunStore(cfg.store_root)
    alias_lock = threading.Lock()

    def get_camera(camera_id: str):
        try:
            return cfg.camera(camera_id)
        except KeyError:
            raise HTTPException(404, f"unknown camera {camera_id!r}")

    def get_scenario(scenario_id: str):
        try:
            return pipeline.find_scenario(cfg, scenario_id)
        except FileNotFoundError as exc:
            raise HTTPException(404, str(exc))

    def default_scenario_id(requested: str | None) -> str:
        if requested:
            return requested
        if cfg.default_scenario:
            return cfg.default_scenario
        raise HTTPException(400, "no scenario given and no default configured")

    @app.get("/cameras")
    def cameras() -> list[dict]:
        return [
            {
                "id": cam.id,
                "origin": list(cam.origin),
                "scale": cam.scale,
                "resolution": list(cam.resolution),
                "capture_period_ticks": cam.capture_period_ticks,
                "sections": len(cam.section_map.sections) if cam.section_map else 0,
            }
            for cam in cfg.cameras
        ]

    @app.get("/cameras/{camera_id}/frame")
    def camera_frame(camera_id: str, tick: int = 0, overlay: bool = False,
                     scenario: str | None = None) -> Response:
        cam = get_camera(camera_id)
        scn = get_scenario(default_scenario_id(scenario))
        try:
            frame = pipeline.frame_at(cam, scn, tick)
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        if overlay:
            frame = pipeline.highlight(cam, scn, frame)
        return Response(content=_ppm_bytes(frame.pixels), media_type=PPM_MEDIA_TYPE)

    @app.get("/cameras/{camera_id}/aliases")
    def camera_aliases(camera_id: str) -> dict:
        cam = get_camera(camera_id)
        if cam.section_map is None or cam.alias_table is None:
            raise HTTPException(404, f"camera {camera_id!r} has no alias DB")
        return dump_alias_db(cam.section_map, cam.alias_table)

    @app.put("/cameras/{camera_id}/aliases")
    def put_camera_aliases(camera_id: str, body: dict) -> dict:
        cam = get_camera(camera_id)
        for key in ("camera_id", "sections", "names"):
            if key not in body:
                raise HTTPException(
                    422, f"partial alias DB rejected: missing {key!r} "
                         "(full-table replace required)")
        if body["camera_id"] != camera_id:
            raise HTTPException(422, "camera_id in body does not match URL")
        try:
            section_map = SectionMap(
                camera_id=camera_id,
                sections=tuple(
                    Section(alias=s["alias"],
                            polygon=tuple((float(x), float(y)) for x, y in s["polygon"]))
                    for s in body["sections"]
                ),
            )
            table = AliasTable(camera_id=camera_id, entries=dict(body["names"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(422, f"malformed alias DB: {exc}")
        violations = validate_alias_table(section_map, table)
        if violations:
            raise HTTPException(422, "; ".join(violations))
        with alias_lock:
            # CameraConfig is frozen; swap the whole camera object atomically
            idx = next(i for i, c in enumerate(cfg.cameras) if c.id == camera_id)
            from dataclasses import replace
            cfg.cameras[idx] = replace(cam, section_map=section_map, alias_table=table)
        return {"ok": True, "aliases": len(table.entries)}

    @app.get("/scenarios")
    def scenarios() -> list[dict]:
        return [
            {
                "id": s.id,
                "duration_ticks": s.duration_ticks,
                "entities": len(s.entities),
                "collision_expected": s.collision_expected,
                "tags": list(s.tags),
            }
            for s in load_scenario_dir(cfg.scenario_dir)
        ]

    @app.post("/scenarios/{scenario_id}/run")
    def start_run(scenario_id: str) -> dict:
        scn = get_scenario(scenario_id)
        run_id = store.new_run_id(scenario_id)
        store.set_status(run_id, scenario_id, "pending")

        def job():
            store.set_status(run_id, scenario_id, "running")
            staging = store.staging_dir(run_id)
            try:
                states = pipeline.simulate_states(scn)
                count = 0
                for cam in cfg.cameras:
                    from .camera import capture_stream
                    for frame in capture_stream(cam, states):
                        write_frame(staging / "frames", frame)
                        count += 1
                meta = {"run_id": run_id, "scenario_id": scenario_id,
                        "frames": count, "cameras": [c.id for c in cfg.cameras]}
                (staging / "run.json").write_text(json.dumps(meta, indent=2),
                                                  encoding="utf-8")
                store.commit_run(run_id)
                store.set_status(run_id, scenario_id, "done", detail=f"{count} frames")
            except Exception as exc:  # any failure leaves no committed artifacts
                store.discard_staging(run_id)
                store.set_status(run_id, scenario_id, "failed", detail=str(exc))

        threading.Thread(target=job, daemon=True).start()
        return {"run_id": run_id, "status": "pending"}

    @app.get("/runs/{run_id}")
    def run_status(run_id: str) -> dict:
        info = store.run_info(run_id)
        if info is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        out: dict[str, Any] = {"run_id": info.run_id, "scenario_id": info.scenario_id,
                               "status": info.status, "detail": info.detail}
        meta_path = store.run_dir(run_id) / "run.json"
        if info.status == "done" and meta_path.is_file():
            out["meta"] = json.loads(meta_path.read_text(encoding="utf-8"))
        return out

    @app.post("/query")
    def query(body: dict) -> dict:
        for key in ("camera_id", "tick"):
            if key not in body:
                raise HTTPException(422, f"missing {key!r}")
        cam = get_camera(body["camera_id"])
        scn = get_scenario(default_scenario_id(body.get("scenario")))
        rates = _error_rates(body.get("error_rates"))
        try:
            resp = pipeline.query_once(
                cfg, cam, scn, tick=int(body["tick"]),
                prompt=body.get("prompt") or DEFAULT_QUERY,
                responder=body.get("responder", "oracle"),
                errors=rates, seed=int(body.get("seed", 0)),
            )
        except ValueError as exc:
            raise HTTPException(400, str(exc))
        return {
            "raw_text": resp.raw_text,
            "grounded_text": resp.grounded_text,
            "responder": resp.responder,
            "latency_ms": resp.latency_ms,
            "retries": resp.retries,
        }

    @app.post("/eval")
    def run_eval(body: dict) -> dict:
        run_id = body.get("run_id")
        if not run_id:
            raise HTTPException(422, "missing 'run_id'")
        info = store.run_info(run_id)
        if info is None:
            raise HTTPException(404, f"unknown run {run_id!r}")
        if info.status != "done":
            raise HTTPException(409, f"run {run_id!r} is {info.status}, not done")
        responder = body.get("responder", "oracle")
        if responder != "oracle":
            raise HTTPException(400, "only the oracle responder is supported "
                                     "for stored-run evaluation")
        rates = _error_rates(body.get("error_rates"))
        seed = int(body.get("seed", 0))
        scores = []
        frames_dir = store.run_dir(run_id) / "frames"
        for sidecar_path in sorted(frames_dir.glob("*/*.json")):
            frame = frame_from_sidecar(load_annotations(sidecar_path))
            cam = get_camera(frame.camera_id)
            req = QueryRequest(camera_id=cam.id, tick=frame.tick,
                               prompt=body.get("prompt") or DEFAULT_QUERY)
            resp = oracle_respond(
                req, frame, rates,
                seed=pipeline.derive_seed(seed, info.scenario_id, cam.id, frame.tick),
                section_map=cam.section_map, table=cam.alias_table,
            )
            parsed = parse_response(resp.raw_text, cam.section_map)
            scores.append(score_frame(parsed, frame))
        report = aggregate(scores)
        report_id = store.new_report_id(run_id)
        report.write(store.report_path(report_id))
        return {
            "report_id": report_id,
            "frames_scored": report.frames_scored,
            "location_accuracy": report.location_accuracy,
            "steering_accuracy": report.steering_accuracy,
            "collision_accuracy": report.collision_accuracy,
        }

    @app.get("/reports/{report_id}")
    def report(report_id: str) -> dict:
        path = store.report_path(report_id)
        if not path.is_file():
            raise HTTPException(404, f"unknown report {report_id!r}")
        return json.loads(path.read_text(encoding="utf-8"))

    _mount_console(app)
    return app


def _error_rates(raw: dict | None) -> ErrorRates:
    raw = raw or {}
    return ErrorRates(
        p_loc=float(raw.get("p_loc", 0.0)),
        p_dir=float(raw.get("p_dir", 0.0)),
        p_col=float(raw.get("p_col", 0.0)),
    )


def _mount_console(app: FastAPI) -> None:
    """Serve the operator console if its build output exists."""
    dist = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        from fastapi.staticfiles import StaticFiles
        app.mount("/console", StaticFiles(directory=dist, html=True), name="console")


def serve(cfg: ServiceConfig, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn
    uvicorn.run(create_app(cfg), host=host, port=port, log_level="warning")
