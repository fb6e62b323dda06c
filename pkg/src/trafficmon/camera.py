"""Fixed top-down virtual cameras.

Rasterizes the world into RGB8 frames (no anti-aliasing, fixed palette, so
renders are bit-exact) and attaches ground-truth annotations per on-screen
entity. Frames persist as binary PPM (P6) plus a JSON annotation sidecar.
"""
from __future__ import annotations

import json
import math
import hashlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from . import geometry
from .grounding import SectionMap, AliasTable, section_of
from .sim import WorldState, StaticObjectSpec, heading_label

BACKGROUND = (58, 110, 58)
PEDESTRIAN_COLOR = (235, 176, 64)
LIGHT_LAMP = {"red": (220, 40, 40), "yellow": (235, 200, 50), "green": (60, 200, 80)}
STATIC_COLORS = {
    "stop-sign": (190, 36, 36),
    "yield-sign": (235, 200, 60),
    "roundabout-sign": (60, 110, 200),
    "traffic-light": (40, 40, 40),
    "crosswalk": (70, 70, 70),
    "tree": (30, 96, 38),
    "pole": (150, 150, 150),
    "bench": (140, 92, 50),
}


@dataclass(frozen=True)
class CameraConfig:
    id: str
    origin: tuple[float, float]          # world meters of the bottom-left pixel
    scale: float                         # pixels per meter
    resolution: tuple[int, int] = (1024, 1024)
    capture_period_ticks: int = 1
    section_map: SectionMap | None = None
    alias_table: AliasTable | None = None

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"camera {self.id}: scale must be > 0")
        if self.resolution[0] <= 0 or self.resolution[1] <= 0:
            raise ValueError(f"camera {self.id}: resolution must be positive")
        if self.capture_period_ticks < 1:
            raise ValueError(f"camera {self.id}: capture_period_ticks must be >= 1")


@dataclass
class EntityAnnotation:
    entity_id: str
    kind: str                            # "vehicle" | "pedestrian"
    bbox: tuple[float, float, float, float]   # x, y, w, h in px
    mask: tuple[tuple[float, float], ...]     # clipped footprint outline, px
    section_alias: str | None
    direction: str
    collided: bool


@dataclass
class Frame:
    camera_id: str
    tick: int
    pixels: np.ndarray                   # (h, w, 3) uint8, row-major
    annotations: list[EntityAnnotation]
    collision_present: bool

    def pixel_hash(self) -> str:
        return hashlib.sha256(self.pixels.tobytes()).hexdigest()


# ---------- world <-> image transform ----------

def project(camera: CameraConfig, world_point: tuple[float, float]) -> tuple[float, float]:
    """World meters to pixel coordinates; +y in the world is image-up."""
    px = (world_point[0] - camera.origin[0]) * camera.scale
    py = (camera.resolution[1] - 1) - (world_point[1] - camera.origin[1]) * camera.scale
    return px, py


def unproject(camera: CameraConfig, pixel: tuple[float, float]) -> tuple[float, float]:
    x = pixel[0] / camera.scale + camera.origin[0]
    y = ((camera.resolution[1] - 1) - pixel[1]) / camera.scale + camera.origin[1]
    return x, y


# ---------- low-level raster ops ----------

def fill_polygon(buf: np.ndarray, poly: list[tuple[float, float]], color) -> None:
    """Even-odd scanline fill sampling pixel centers. In-place."""
    if len(poly) < 3:
        return
    h, w = buf.shape[:2]
    xs = np.array([p[0] for p in poly])
    ys = np.array([p[1] for p in poly])
    row0 = max(0, int(math.floor(ys.min() - 0.5)))
    row1 = min(h - 1, int(math.ceil(ys.max() + 0.5)))
    if row1 < row0:
        return
    cy = np.arange(row0, row1 + 1, dtype=np.float64) + 0.5
    x0, y0 = xs, ys
    x1, y1 = np.roll(xs, -1), np.roll(ys, -1)
    # edge crosses the row center iff exactly one endpoint is above it
    crosses = (y0[None, :] > cy[:, None]) != (y1[None, :] > cy[:, None])
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (cy[:, None] - y0[None, :]) / (y1 - y0)[None, :]
        xint = x0[None, :] + t * (x1 - x0)[None, :]
    xint = np.where(crosses, xint, np.inf)
    xint.sort(axis=1)
    nrows = xint.shape[0]
    acc = np.zeros((nrows, w + 1), dtype=np.int32)
    rows = np.arange(nrows)
    for k in range(0, xint.shape[1] - 1, 2):
        left = xint[:, k]
        right = xint[:, k + 1]
        valid = np.isfinite(right)
        if not valid.any():
            break
        j0 = np.clip(np.ceil(left - 0.5), 0, w).astype(np.int64)
        j1 = np.clip(np.ceil(right - 0.5), 0, w).astype(np.int64)
        use = valid & (j0 < j1)
        np.add.at(acc, (rows[use], j0[use]), 1)
        np.add.at(acc, (rows[use], j1[use]), -1)
    mask = np.cumsum(acc, axis=1)[:, :w] > 0
    buf[row0:row1 + 1][mask] = color


def fill_circle(buf: np.ndarray, cx: float, cy: float, radius: float, color) -> None:
    h, w = buf.shape[:2]
    row0 = max(0, int(math.floor(cy - radius - 0.5)))
    row1 = min(h - 1, int(math.ceil(cy + radius + 0.5)))
    col0 = max(0, int(math.floor(cx - radius - 0.5)))
    col1 = min(w - 1, int(math.ceil(cx + radius + 0.5)))
    if row1 < row0 or col1 < col0:
        return
    yy, xx = np.mgrid[row0:row1 + 1, col0:col1 + 1]
    mask = (xx + 0.5 - cx) ** 2 + (yy + 0.5 - cy) ** 2 <= radius * radius
    buf[row0:row1 + 1, col0:col1 + 1][mask] = color


def draw_polyline(buf: np.ndarray, points: list[tuple[float, float]], color,
                  width: float = 2.0, closed: bool = True) -> None:
    """Stroke a polyline with the given width in pixels. In-place."""
    n = len(points)
    if n < 2:
        return
    segs = range(n if closed else n - 1)
    for i in segs:
        _draw_segment(buf, points[i], points[(i + 1) % n], color, width)


def _draw_segment(buf, p0, p1, color, width):
    h, w = buf.shape[:2]
    half = width / 2.0
    row0 = max(0, int(math.floor(min(p0[1], p1[1]) - half - 1)))
    row1 = min(h - 1, int(math.ceil(max(p0[1], p1[1]) + half + 1)))
    col0 = max(0, int(math.floor(min(p0[0], p1[0]) - half - 1)))
    col1 = min(w - 1, int(math.ceil(max(p0[0], p1[0]) + half + 1)))
    if row1 < row0 or col1 < col0:
        return
    yy, xx = np.mgrid[row0:row1 + 1, col0:col1 + 1]
    px = xx + 0.5 - p0[0]
    py = yy + 0.5 - p0[1]
    ax, ay = p1[0] - p0[0], p1[1] - p0[1]
    length2 = ax * ax + ay * ay
    if length2 == 0.0:
        dist2 = px ** 2 + py ** 2
    else:
        t = np.clip((px * ax + py * ay) / length2, 0.0, 1.0)
        dist2 = (px - t * ax) ** 2 + (py - t * ay) ** 2
    mask = dist2 <= half * half
    buf[row0:row1 + 1, col0:col1 + 1][mask] = color


def entity_color(entity_id: str) -> tuple[int, int, int]:
    """Deterministic per-entity fill color from a stable id hash."""
    digest = hashlib.sha1(entity_id.encode("utf-8")).digest()
    return tuple(64 + b % 160 for b in digest[:3])


# ---------- scene painting ----------

def _section_tile_color(index: int) -> tuple[int, int, int]:
    shade = 116 + (index * 5) % 26
    return (shade, shade, shade + 4)


def _draw_static(buf, camera: CameraConfig, obj: StaticObjectSpec,
                 light_colors: dict[str, str]) -> None:
    color = STATIC_COLORS[obj.kind]
    px, py = project(camera, (obj.x, obj.y))
    s = camera.scale
    if obj.kind == "crosswalk":
        corners = geometry.rect_corners(obj.x, obj.y, 2.0, 0.9, obj.heading)
        fill_polygon(buf, [project(camera, c) for c in corners], color)
        for k in range(-3, 4, 2):  # stripes across the walking direction
            offset = k * 0.5
            stripe = geometry.rect_corners(
                obj.x + offset * math.cos(obj.heading),
                obj.y + offset * math.sin(obj.heading),
                0.18, 0.8, obj.heading)
            fill_polygon(buf, [project(camera, c) for c in stripe], (240, 240, 240))
    elif obj.kind == "tree":
        fill_circle(buf, px, py, 1.2 * s, color)
    elif obj.kind == "pole":
        fill_circle(buf, px, py, 0.15 * s, color)
    elif obj.kind == "bench":
        corners = geometry.rect_corners(obj.x, obj.y, 0.5, 0.2, obj.heading)
        fill_polygon(buf, [project(camera, c) for c in corners], color)
    elif obj.kind == "stop-sign":
        fill_polygon(buf, [project(camera, c) for c in
                           geometry.regular_polygon(obj.x, obj.y, 0.5, 8, math.pi / 8)],
                     color)
    elif obj.kind == "yield-sign":
        fill_polygon(buf, [project(camera, c) for c in
                           geometry.regular_polygon(obj.x, obj.y, 0.55, 3, math.pi / 2)],
                     color)
    elif obj.kind == "roundabout-sign":
        fill_circle(buf, px, py, 0.45 * s, color)
    elif obj.kind == "traffic-light":
        corners = geometry.rect_corners(obj.x, obj.y, 0.35, 0.35, obj.heading)
        fill_polygon(buf, [project(camera, c) for c in corners], color)
        lamp = LIGHT_LAMP[light_colors.get(obj.id, "green")]
        fill_circle(buf, px, py, 0.2 * s, lamp)


def rasterize_frame(camera: CameraConfig, state: WorldState) -> Frame:
    """Render the world as seen by a camera and annotate on-screen entities.

    Painter's order: background, section tiles (reverse precedence so the
    first section paints on top), statics, then entities in state order.
    """
    w, h = camera.resolution
    buf = np.empty((h, w, 3), dtype=np.uint8)
    buf[:] = BACKGROUND

    if camera.section_map is not None:
        sections = camera.section_map.sections
        for idx in range(len(sections) - 1, -1, -1):
            fill_polygon(buf, list(sections[idx].polygon), _section_tile_color(idx))

    for obj in state.statics:
        _draw_static(buf, camera, obj, state.light_colors)

    annotations: list[EntityAnnotation] = []
    for entity in state.entities:
        outline_px = [project(camera, p) for p in entity.footprint_polygon()]
        if entity.kind == "vehicle":
            fill_polygon(buf, outline_px, entity_color(entity.id))
        else:
            cpx, cpy = project(camera, (entity.x, entity.y))
            fill_circle(buf, cpx, cpy, entity.radius * camera.scale, PEDESTRIAN_COLOR)
        clipped = geometry.clip_polygon_to_rect(outline_px, 0.0, 0.0, float(w), float(h))
        if geometry.polygon_area(clipped) <= 0.0:
            continue  # fully outside the view
        x0, y0, x1, y1 = geometry.polygon_bounds(clipped)
        centroid_px = project(camera, (entity.x, entity.y))
        alias = (section_of(camera.section_map, centroid_px)
                 if camera.section_map is not None else None)
        annotations.append(EntityAnnotation(
            entity_id=entity.id,
            kind=entity.kind,
            bbox=(x0, y0, x1 - x0, y1 - y0),
            mask=tuple(clipped),
            section_alias=alias,
            direction=heading_label(entity.heading, entity.speed),
            collided=entity.collided,
        ))

    return Frame(
        camera_id=camera.id,
        tick=state.tick,
        pixels=buf,
        annotations=annotations,
        collision_present=any(a.collided for a in annotations),
    )


def capture_stream(camera: CameraConfig, run: Iterable[WorldState]) -> Iterator[Frame]:
    """One frame per capture period, starting at tick 0."""
    for state in run:
        if state.tick % camera.capture_period_ticks == 0:
            yield rasterize_frame(camera, state)


def frame_count(duration_ticks: int, capture_period_ticks: int) -> int:
    return duration_ticks // capture_period_ticks + 1


# ---------- persistence ----------

def write_ppm(path: str | Path, pixels: np.ndarray) -> None:
    h, w = pixels.shape[:2]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        f.write(b"P6\n%d %d\n255\n" % (w, h))
        f.write(pixels.tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    if not data.startswith(b"P6"):
        raise ValueError(f"{path}: not a binary PPM (P6) file")
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    w, h, maxval = (int(v) for v in fields)
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return raster.reshape(h, w, 3).copy()


def frame_relpath(camera_id: str, tick: int) -> str:
    return f"{camera_id}/{tick:08d}.ppm"


def annotations_to_dict(frame: Frame) -> dict:
    return {
        "camera_id": frame.camera_id,
        "tick": frame.tick,
        "width": int(frame.pixels.shape[1]),
        "height": int(frame.pixels.shape[0]),
        "collision_present": frame.collision_present,
        "annotations": [
            {
                "entity_id": a.entity_id,
                "class": a.kind,
                "bbox": [round(v, 4) for v in a.bbox],
                "mask": [[round(x, 4), round(y, 4)] for x, y in a.mask],
                "section_alias": a.section_alias,
                "direction": a.direction,
                "collided": a.collided,
            }
            for a in frame.annotations
        ],
    }


def write_frame(root: str | Path, frame: Frame) -> Path:
    """Persist pixels as PPM plus the JSON annotation sidecar."""
    root = Path(root)
    ppm_path = root / frame_relpath(frame.camera_id, frame.tick)
    write_ppm(ppm_path, frame.pixels)
    sidecar = ppm_path.with_suffix(".json")
    sidecar.write_text(
        json.dumps(annotations_to_dict(frame), indent=None, separators=(",", ":"))
        + "\n",
        encoding="utf-8",
    )
    return ppm_path


def load_annotations(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def frame_from_sidecar(sidecar: dict) -> Frame:
    """Rebuild an annotation-only Frame (1x1 pixel stub) from a sidecar dict."""
    annotations = [
        EntityAnnotation(
            entity_id=a["entity_id"],
            kind=a["class"],
            bbox=tuple(a["bbox"]),
            mask=tuple((x, y) for x, y in a["mask"]),
            section_alias=a["section_alias"],
            direction=a["direction"],
            collided=a["collided"],
        )
        for a in sidecar["annotations"]
    ]
    return Frame(
        camera_id=sidecar["camera_id"],
        tick=sidecar["tick"],
        pixels=np.zeros((1, 1, 3), dtype=np.uint8),
        annotations=annotations,
        collision_present=sidecar["collision_present"],
    )
