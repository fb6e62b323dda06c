"""Service/CLI configuration: cameras with their alias DBs, scenario corpus
location, artifact store root and remote endpoint settings.

Relative paths in a config file resolve against the file's directory.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .camera import CameraConfig
from .grounding import AliasTable, SectionMap, load_alias_db, validate_alias_table


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class Limits:
    max_concurrent_queries: int = 4
    timeout_ms: int = 10000
    retries: int = 2


@dataclass
class ServiceConfig:
    cameras: list[CameraConfig]
    scenario_dir: Path
    store_root: Path
    default_scenario: str
    endpoints: dict[str, str | None] = field(default_factory=dict)
    limits: Limits = Limits()

    def camera(self, camera_id: str) -> CameraConfig:
        for cam in self.cameras:
            if cam.id == camera_id:
                return cam
        raise KeyError(f"unknown camera {camera_id!r}")


def load_config(path: str | Path) -> ServiceConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    base = path.parent

    def fail(field_path: str, message: str):
        raise ConfigError(f"{path}: {field_path}: {message}")

    cameras = []
    seen: set[str] = set()
    for i, cam in enumerate(raw.get("cameras", [])):
        where = f"cameras[{i}]"
        cam_id = cam.get("id")
        if not cam_id:
            fail(f"{where}.id", "missing camera id")
        if cam_id in seen:
            fail(f"{where}.id", f"duplicate camera id {cam_id!r}")
        seen.add(cam_id)
        section_map: SectionMap | None = None
        alias_table: AliasTable | None = None
        if cam.get("alias_db"):
            db_path = base / cam["alias_db"]
            if not db_path.is_file():
                fail(f"{where}.alias_db", f"file not found: {db_path}")
            section_map, alias_table = load_alias_db(db_path)
            if section_map.camera_id != cam_id:
                fail(f"{where}.alias_db",
                     f"alias DB is for camera {section_map.camera_id!r}")
            violations = validate_alias_table(section_map, alias_table)
            if violations:
                fail(f"{where}.alias_db", "; ".join(violations))
        try:
            cameras.append(CameraConfig(
                id=cam_id,
                origin=tuple(cam["origin"]),
                scale=float(cam["scale"]),
                resolution=tuple(cam.get("resolution", (1024, 1024))),
                capture_period_ticks=int(cam.get("capture_period_ticks", 1)),
                section_map=section_map,
                alias_table=alias_table,
            ))
        except (KeyError, TypeError, ValueError) as exc:
            fail(where, str(exc))
    if not cameras:
        fail("cameras", "at least one camera is required")

    scenario_dir = base / raw.get("scenario_dir", "scenarios")
    if not scenario_dir.is_dir():
        fail("scenario_dir", f"directory not found: {scenario_dir}")

    limits_raw = raw.get("limits", {})
    limits = Limits(
        max_concurrent_queries=int(limits_raw.get("max_concurrent_queries", 4)),
        timeout_ms=int(limits_raw.get("timeout_ms", 10000)),
        retries=int(limits_raw.get("retries", 2)),
    )
    return ServiceConfig(
        cameras=cameras,
        scenario_dir=scenario_dir,
        store_root=base / raw.get("store_root", "runs"),
        default_scenario=raw.get("default_scenario", ""),
        endpoints=dict(raw.get("endpoints", {})),
        limits=limits,
    )
