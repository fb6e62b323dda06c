#!/usr/bin/env python3
"""Regenerate the per-camera alias DB files (section maps + road-name tables)
at both shipped resolutions. Run from the repo root:

    python3 tools/make_alias_dbs.py
"""
from __future__ import annotations

import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]

# Section layout in a 256x256 pixel frame (y down); list order is the
# overlap precedence used by section_of. Sections A-D tile the whole view
# so every on-screen point grounds to some alias.
def section_layout(scale: float) -> list[dict]:
    def rect(x0, y0, x1, y1):
        return [[x0 * scale, y0 * scale], [x1 * scale, y0 * scale],
                [x1 * scale, y1 * scale], [x0 * scale, y1 * scale]]

    def octagon(cx, cy, r):
        pts = []
        for k in range(8):
            angle = math.radians(22.5 + 45.0 * k)
            pts.append([round((cx + r * math.cos(angle)) * scale, 3),
                        round((cy + r * math.sin(angle)) * scale, 3)])
        return pts

    return [
        {"alias": "the roundabout", "polygon": octagon(128, 128, 34)},
        {"alias": "the three-way junction", "polygon": rect(106, 190, 150, 234)},
        {"alias": "the middle section", "polygon": rect(88, 88, 168, 168)},
        {"alias": "the long road", "polygon": rect(0, 106, 256, 150)},
        {"alias": "the crossing avenue", "polygon": rect(106, 0, 150, 256)},
        {"alias": "Section A", "polygon": rect(0, 0, 128, 128)},
        {"alias": "Section B", "polygon": rect(128, 0, 256, 128)},
        {"alias": "Section C", "polygon": rect(0, 128, 128, 256)},
        {"alias": "Section D", "polygon": rect(128, 128, 256, 256)},
    ]


NAMES = {
    "cam-sw": {
        "the roundabout": "Wellington Circle",
        "the three-way junction": "Bay-Slater Junction",
        "the middle section": "Confederation Plaza",
        "the long road": "Wellington Street",
        "the crossing avenue": "Bay Street",
        "Section A": "Glebe Annex block",
        "Section B": "Centretown block",
        "Section C": "LeBreton Flats block",
        "Section D": "Sandy Hill block",
    },
    "cam-se": {
        "the roundabout": "Laurier Circle",
        "the three-way junction": "Elgin-Gladstone Junction",
        "the middle section": "Minto Plaza",
        "the long road": "Laurier Avenue",
        "the crossing avenue": "Elgin Street",
        "Section A": "Golden Triangle block",
        "Section B": "Byward Market block",
        "Section C": "Old Ottawa East block",
        "Section D": "Vanier block",
    },
    "cam-nw": {
        "the roundabout": "Carling Circle",
        "the three-way junction": "Preston-Carling Junction",
        "the middle section": "Dow Plaza",
        "the long road": "Carling Avenue",
        "the crossing avenue": "Preston Street",
        "Section A": "Civic Hospital block",
        "Section B": "Little Italy block",
        "Section C": "Hintonburg block",
        "Section D": "Westboro block",
    },
    "cam-ne": {
        "the roundabout": "Rideau Circle",
        "the three-way junction": "Rideau-Sussex Junction",
        "the middle section": "Majors Hill Plaza",
        "the long road": "Rideau Street",
        "the crossing avenue": "Sussex Drive",
        "Section A": "Lowertown block",
        "Section B": "New Edinburgh block",
        "Section C": "Overbrook block",
        "Section D": "Manor Park block",
    },
}


def main() -> None:
    from trafficmon.grounding import load_alias_db, validate_alias_table

    for resolution, scale in ((256, 1.0), (1024, 4.0)):
        out_dir = ROOT / "configs" / f"aliases-{resolution}"
        out_dir.mkdir(parents=True, exist_ok=True)
        for camera_id, names in NAMES.items():
            db = {
                "camera_id": camera_id,
                "sections": section_layout(scale),
                "names": names,
            }
            path = out_dir / f"{camera_id}.json"
            path.write_text(json.dumps(db, indent=2) + "\n", encoding="utf-8")
            section_map, table = load_alias_db(path)
            violations = validate_alias_table(section_map, table)
            assert not violations, f"{path}: {violations}"
            print(f"wrote {path}")


if __name__ == "__main__":
    main()
