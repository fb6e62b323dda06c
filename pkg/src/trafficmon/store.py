"""File-based artifact store: runs are directories, the registry is a single
append-only JSONL index. A run becomes visible as done only after its whole
artifact tree is in place (staged under a temp name, renamed on success).
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path

RUN_STATUSES = ("pending", "running", "done", "failed")


@dataclass
class RunInfo:
    run_id: str
    scenario_id: str
    status: str
    detail: str = ""


class RunStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "runs").mkdir(exist_ok=True)
        (self.root / "reports").mkdir(exist_ok=True)
        self._registry = self.root / "registry.jsonl"
        self._lock = threading.Lock()
        self._counter = self._load_counter()

    def _load_counter(self) -> int:
        last = 0
        if self._registry.is_file():
            for line in self._registry.read_text(encoding="utf-8").splitlines():
                entry = json.loads(line)
                num = int(entry["run_id"].split("-", 1)[0].lstrip("r") or 0)
                last = max(last, num)
        return last

    def new_run_id(self, scenario_id: str) -> str:
        with self._lock:
            self._counter += 1
            return f"r{self._counter:04d}-{scenario_id}"

    def _append(self, entry: dict) -> None:
        with self._lock:
            with self._registry.open("a", encoding="utf-8") as f:
                f.write(json.dumps(entry, separators=(",", ":")) + "\n")

    def set_status(self, run_id: str, scenario_id: str, status: str,
                   detail: str = "") -> None:
        assert status in RUN_STATUSES
        self._append({"run_id": run_id, "scenario_id": scenario_id,
                      "status": status, "detail": detail, "ts": time.time()})

    def run_info(self, run_id: str) -> RunInfo | None:
        info: RunInfo | None = None
        if not self._registry.is_file():
            return None
        for line in self._registry.read_text(encoding="utf-8").splitlines():
            entry = json.loads(line)
            if entry["run_id"] == run_id:
                info = RunInfo(run_id=run_id, scenario_id=entry["scenario_id"],
                               status=entry["status"], detail=entry.get("detail", ""))
        return info

    def list_runs(self) -> list[RunInfo]:
        latest: dict[str, RunInfo] = {}
        if self._registry.is_file():
            for line in self._registry.read_text(encoding="utf-8").splitlines():
                entry = json.loads(line)
                latest[entry["run_id"]] = RunInfo(
                    run_id=entry["run_id"], scenario_id=entry["scenario_id"],
                    status=entry["status"], detail=entry.get("detail", ""))
        return list(latest.values())

    def run_dir(self, run_id: str) -> Path:
        return self.root / "runs" / run_id

    def staging_dir(self, run_id: str) -> Path:
        return self.root / "runs" / f".{run_id}.tmp"

    def commit_run(self, run_id: str) -> None:
        self.staging_dir(run_id).rename(self.run_dir(run_id))

    def discard_staging(self, run_id: str) -> None:
        staging = self.staging_dir(run_id)
        if staging.exists():
            import shutil
            shutil.rmtree(staging)

    def report_path(self, report_id: str) -> Path:
        return self.root / "reports" / f"{report_id}.json"

    def new_report_id(self, run_id: str) -> str:
        with self._lock:
            self._counter += 1
            return f"rep{self._counter:04d}-{run_id}"
