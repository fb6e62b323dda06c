"""Instruction-tuning corpus: one record per captured frame.

Records pair the highlighted image with a query and the ground-truth
alias-vocabulary answer. Serialization is JSON-lines with a stable field
order plus a manifest, so exports diff cleanly and round-trip exactly.

Adapter note: to feed conversation-style tuning stacks, map each record to
{"image": image_path, "conversations": [{"from": "human", "value": query},
{"from": "gpt", "value": answer}]}.
"""
from __future__ import annotations

import json
import os
import random
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .camera import Frame
from .grounding import caption_frame

DEFAULT_QUERY = "explain the vehicular activity"
QUERY_POOL = (
    DEFAULT_QUERY,
    "describe the traffic situation in this scene",
    "report the vehicles, their locations and directions",
    "is there a collision in this scene? describe the activity",
)

_FIELD_ORDER = ("id", "image_path", "camera_id", "tick", "query", "answer", "tags")
TAG_NAMES = ("collision", "congestion", "platooning", "pedestrian")


class DatasetError(ValueError):
    pass


@dataclass
class InstructionRecord:
    id: str
    image_path: str            # relative to the dataset root
    camera_id: str
    tick: int
    query: str
    answer: str                # alias vocabulary
    tags: frozenset[str] = field(default_factory=frozenset)

    def to_json_line(self) -> str:
        payload = {
            "id": self.id,
            "image_path": self.image_path,
            "camera_id": self.camera_id,
            "tick": self.tick,
            "query": self.query,
            "answer": self.answer,
            "tags": sorted(self.tags),
        }
        return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json_line(cls, line: str, lineno: int) -> "InstructionRecord":
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"line {lineno}: malformed JSON: {exc}") from exc
        missing = [k for k in _FIELD_ORDER if k not in raw]
        if missing:
            raise DatasetError(f"line {lineno}: missing fields {missing}")
        return cls(
            id=raw["id"], image_path=raw["image_path"], camera_id=raw["camera_id"],
            tick=int(raw["tick"]), query=raw["query"], answer=raw["answer"],
            tags=frozenset(raw["tags"]),
        )


def frame_tags(frame: Frame, scenario_tags: frozenset[str] = frozenset()) -> frozenset[str]:
    tags = set(scenario_tags)
    if frame.collision_present:
        tags.add("collision")
    if any(a.kind == "pedestrian" for a in frame.annotations):
        tags.add("pedestrian")
    return frozenset(tags)


def build_record(frame: Frame, highlighted: Frame, image_path: str,
                 query: str = DEFAULT_QUERY,
                 scenario_tags: frozenset[str] = frozenset(),
                 record_id: str | None = None) -> InstructionRecord:
    """One corpus row: highlighted image, query, ground-truth caption answer.

    The answer comes from the un-highlighted frame's annotations; the image
    reference points at the highlighted render of the same capture.
    """
    if (frame.camera_id, frame.tick) != (highlighted.camera_id, highlighted.tick):
        raise DatasetError(
            f"frame/highlight mismatch: {frame.camera_id}@{frame.tick} vs "
            f"{highlighted.camera_id}@{highlighted.tick}")
    return InstructionRecord(
        id=record_id or f"{frame.camera_id}-{frame.tick:08d}",
        image_path=image_path,
        camera_id=frame.camera_id,
        tick=frame.tick,
        query=query,
        answer=caption_frame(frame),
        tags=frame_tags(frame, scenario_tags),
    )


def export_dataset(records: list[InstructionRecord], root: str | Path,
                   created_at: str | None = None) -> dict:
    """Write dataset.jsonl plus manifest.json under root; returns the manifest.

    Every referenced image must already exist under root. created_at falls
    back to SOURCE_DATE_EPOCH when set (reproducible builds), else now.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for rec in records:
        if not (root / rec.image_path).is_file():
            raise DatasetError(f"record {rec.id}: missing image {rec.image_path}")
    lines = [rec.to_json_line() for rec in records]
    (root / "dataset.jsonl").write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8")
    if created_at is None:
        epoch = os.environ.get("SOURCE_DATE_EPOCH")
        moment = (datetime.fromtimestamp(int(epoch), tz=timezone.utc)
                  if epoch else datetime.now(tz=timezone.utc))
        created_at = moment.isoformat()
    manifest = {
        "count": len(records),
        "collision_count": sum(1 for r in records if "collision" in r.tags),
        "cameras": sorted({r.camera_id for r in records}),
        "created_at": created_at,
    }
    (root / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n",
                                        encoding="utf-8")
    return manifest


def import_dataset(root: str | Path) -> list[InstructionRecord]:
    root = Path(root)
    path = root / "dataset.jsonl"
    if not path.is_file():
        raise DatasetError(f"no dataset.jsonl under {root}")
    records = []
    with path.open(encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                records.append(InstructionRecord.from_json_line(line, lineno))
    return records


def split_records(records: list[InstructionRecord], val_fraction: float,
                  seed: int) -> tuple[list[InstructionRecord], list[InstructionRecord]]:
    """Seeded train/val split; record order inside each split is preserved."""
    rng = random.Random(seed)
    indices = list(range(len(records)))
    rng.shuffle(indices)
    n_val = int(round(len(records) * val_fraction))
    val_set = set(indices[:n_val])
    train = [r for i, r in enumerate(records) if i not in val_set]
    val = [r for i, r in enumerate(records) if i in val_set]
    return train, val
