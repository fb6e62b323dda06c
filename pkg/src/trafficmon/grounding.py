"""Location aliases: named image sections, caption templates and the
alias -> real-road-name substitution applied to model output.

Sections are per-camera polygons in pixel space, ordered so that the first
containing polygon wins on overlaps. Aliases are generic phrases ("Section
A", "the roundabout") that the alias table maps to camera-specific road
names.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING

from .geometry import Point, Polygon, point_in_polygon
from .sim import STATIONARY

if TYPE_CHECKING:
    from .camera import Frame

log = logging.getLogger(__name__)

OFF_MAP_PHRASE = "off the mapped area"
NO_COLLISION_SENTENCE = "No collision is observed."
EMPTY_SCENE_SENTENCE = "No vehicles or pedestrians are present."

# tokens that look like an alias but failed to substitute get a warning
_SECTION_TOKEN = re.compile(r"\bSection\s+[A-Za-z0-9]+\b", re.IGNORECASE)


@dataclass(frozen=True)
class Section:
    alias: str
    polygon: tuple[Point, ...]


@dataclass(frozen=True)
class SectionMap:
    camera_id: str
    sections: tuple[Section, ...]

    @property
    def aliases(self) -> tuple[str, ...]:
        return tuple(s.alias for s in self.sections)


@dataclass(frozen=True)
class AliasTable:
    camera_id: str
    entries: dict[str, str]   # alias -> real name


def section_of(section_map: SectionMap, point: Point) -> str | None:
    """Alias of the first section containing the point, else None.

    Containment is even-odd with boundary points inside; list order is the
    overlap precedence.
    """
    for section in section_map.sections:
        if point_in_polygon(point, list(section.polygon)):
            return section.alias
    return None


# ---------- alias DB files ----------

def load_alias_db(path: str | Path) -> tuple[SectionMap, AliasTable]:
    """Read a per-camera alias DB file: sections plus the name table."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    camera_id = raw["camera_id"]
    sections = tuple(
        Section(alias=s["alias"],
                polygon=tuple((float(x), float(y)) for x, y in s["polygon"]))
        for s in raw["sections"]
    )
    table = AliasTable(camera_id=camera_id, entries=dict(raw["names"]))
    return SectionMap(camera_id=camera_id, sections=sections), table


def dump_alias_db(section_map: SectionMap, table: AliasTable) -> dict:
    return {
        "camera_id": section_map.camera_id,
        "sections": [
            {"alias": s.alias, "polygon": [[x, y] for x, y in s.polygon]}
            for s in section_map.sections
        ],
        "names": dict(table.entries),
    }


def validate_alias_table(section_map: SectionMap, table: AliasTable) -> list[str]:
    """Consistency check between a section map and its alias table.

    Returns a list of human-readable violations; empty means ok.
    """
    violations = []
    seen: set[str] = set()
    for section in section_map.sections:
        if section.alias in seen:
            violations.append(f"duplicate alias {section.alias!r}")
        seen.add(section.alias)
        if len(section.polygon) < 3:
            violations.append(f"degenerate polygon for alias {section.alias!r}")
        if section.alias not in table.entries:
            violations.append(f"alias {section.alias!r} missing from name table")
    aliases_lower = [a.lower() for a in table.entries]
    for alias, real in table.entries.items():
        if not alias or not real:
            violations.append(f"empty alias or name in entry {alias!r} -> {real!r}")
            continue
        low = real.lower()
        for other in aliases_lower:
            if other in low:
                violations.append(
                    f"real name {real!r} contains registered alias {other!r}")
    return violations


# ---------- caption templates ----------

def location_phrase(alias: str | None, preposition: str = "on") -> str:
    if alias is None:
        return OFF_MAP_PHRASE
    return f"{preposition} {alias}"


def vehicle_sentence(number: int, alias: str | None, direction: str) -> str:
    place = location_phrase(alias)
    if direction == STATIONARY:
        return f"Vehicle {number} is stationary {place}."
    return f"Vehicle {number} is {place} moving {direction}."


def pedestrian_sentence(alias: str | None) -> str:
    return f"A pedestrian is {location_phrase(alias)}."


def caption_frame(frame: "Frame") -> str:
    """Deterministic ground-truth caption in alias vocabulary.

    One sentence per vehicle and pedestrian in annotation order, then a
    collision sentence or an explicit no-collision sentence.
    """
    sentences = []
    vehicle_numbers: dict[str, int] = {}
    n = 0
    for ann in frame.annotations:
        if ann.kind != "vehicle":
            continue
        n += 1
        vehicle_numbers[ann.entity_id] = n
        sentences.append(vehicle_sentence(n, ann.section_alias, ann.direction))
    for ann in frame.annotations:
        if ann.kind == "pedestrian":
            sentences.append(pedestrian_sentence(ann.section_alias))
    if not frame.annotations:
        sentences.append(EMPTY_SCENE_SENTENCE)
    sentences.append(collision_sentence(frame, vehicle_numbers)
                     or NO_COLLISION_SENTENCE)
    return " ".join(sentences)


def collision_sentence(frame: "Frame", vehicle_numbers: dict[str, int]) -> str | None:
    if not frame.collision_present:
        return None
    collided = [a for a in frame.annotations if a.collided]
    parties = []
    for ann in collided[:2]:
        if ann.kind == "vehicle":
            parties.append(f"vehicle {vehicle_numbers[ann.entity_id]}")
        else:
            parties.append("a pedestrian")
    alias = collided[0].section_alias if collided else None
    place = location_phrase(alias, preposition="at")
    if len(parties) >= 2:
        return f"A collision has occurred between {parties[0]} and {parties[1]} {place}."
    if parties:
        return f"A collision involving {parties[0]} has occurred {place}."
    return f"A collision has occurred {place}."


# ---------- alias substitution ----------

def substitute_aliases(text: str, table: AliasTable) -> str:
    """Replace registered aliases with real road names.

    Single left-to-right pass; at each position the longest case-insensitive
    alias matching at a word boundary wins, and replaced spans are never
    rescanned. Unknown alias-shaped tokens pass through with a warning.
    """
    if not table.entries:
        return text
    ordered = sorted(table.entries, key=len, reverse=True)
    pattern = re.compile(
        r"\b(" + "|".join(re.escape(a) for a in ordered) + r")\b",
        re.IGNORECASE,
    )
    lower_map = {alias.lower(): real for alias, real in table.entries.items()}
    out = pattern.sub(lambda m: lower_map[m.group(1).lower()], text)
    for token in _SECTION_TOKEN.findall(out):
        log.warning("unmatched section-like token %r after substitution", token)
    return out
