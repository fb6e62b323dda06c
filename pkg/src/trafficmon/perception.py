"""Instance masks for dynamic objects plus highlight overlays.

Two detector implementations sit behind the same Detection shape: a
ground-truth oracle with optional seeded corruption, and a client for a
remote segmentation server speaking the documented /v1/detect protocol.
"""
from __future__ import annotations

import base64
import math
import random
import threading
from dataclasses import dataclass, field

import httpx

from . import geometry
from .camera import CameraConfig, Frame, draw_polyline, project
from .sim import StaticObjectSpec

CLASS_FOR_KIND = {"vehicle": "vehicle", "pedestrian": "person"}
DETECTION_CLASSES = ("vehicle", "person")
CLASS_COLORS = {"vehicle": (255, 0, 0), "person": (255, 255, 0)}
STATIC_REGION_COLORS = {
    "road": (80, 130, 255),
    "crosswalk": (255, 255, 255),
    "traffic-sign": (230, 60, 230),
    "traffic-light": (50, 220, 220),
}


@dataclass
class Detection:
    cls: str                          # "vehicle" | "person"
    confidence: float
    bbox: tuple[float, float, float, float]
    mask: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class StaticHighlightRegion:
    camera_id: str
    kind: str                         # road | crosswalk | traffic-sign | traffic-light
    polygon: tuple[tuple[float, float], ...]
    color: tuple[int, int, int]

    def __post_init__(self):
        if len(self.polygon) < 3:
            raise ValueError(f"degenerate static region for camera {self.camera_id}")


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0


@dataclass
class ConfusionMatrix:
    counts: dict[str, ClassCounts] = field(default_factory=dict)

    def cls(self, name: str) -> ClassCounts:
        return self.counts.setdefault(name, ClassCounts())


def detector_metrics(cm: ConfusionMatrix) -> dict[str, dict[str, float]]:
    """Per-class precision/recall/f1 with the 0/0 -> 0 convention."""
    out = {}
    for name, c in cm.counts.items():
        precision = c.tp / (c.tp + c.fp) if (c.tp + c.fp) else 0.0
        recall = c.tp / (c.tp + c.fn) if (c.tp + c.fn) else 0.0
        f1 = (2 * precision * recall / (precision + recall)
              if (precision + recall) else 0.0)
        out[name] = {"precision": precision, "recall": recall, "f1": f1}
    return out


# ---------- oracle detector ----------

@dataclass(frozen=True)
class Corruption:
    drop_rate: float = 0.0
    mislabel_rate: float = 0.0
    seed: int = 0


def oracle_detect(frame: Frame, corruption: Corruption | None = None) -> list[Detection]:
    """Ground-truth detections straight from the frame annotations.

    With corruption, each annotation is independently dropped with
    drop_rate, and surviving ones mislabeled with mislabel_rate (both draws
    happen in annotation order from one seeded stream).
    """
    rng = random.Random(corruption.seed) if corruption else None
    detections = []
    for ann in frame.annotations:
        cls = CLASS_FOR_KIND[ann.kind]
        if rng is not None:
            if rng.random() < corruption.drop_rate:
                continue
            if rng.random() < corruption.mislabel_rate:
                cls = "person" if cls == "vehicle" else "vehicle"
        detections.append(Detection(
            cls=cls, confidence=1.0, bbox=ann.bbox, mask=ann.mask,
        ))
    return detections


# ---------- remote detector ----------

class DetectorError(Exception):
    def __init__(self, endpoint: str, message: str):
        super().__init__(f"{endpoint}: {message}")
        self.endpoint = endpoint


class DetectorTimeout(DetectorError):
    pass


class DetectorTransportError(DetectorError):
    pass


class DetectorProtocolError(DetectorError):
    """The server answered, but not with a valid detection payload."""


def frame_payload(frame: Frame) -> dict:
    h, w = frame.pixels.shape[:2]
    return {
        "camera_id": frame.camera_id,
        "tick": frame.tick,
        "width": int(w),
        "height": int(h),
        "pixels_b64": base64.b64encode(frame.pixels.tobytes()).decode("ascii"),
    }


def parse_detections(payload: dict, width: int, height: int, endpoint: str) -> list[Detection]:
    if not isinstance(payload, dict) or "detections" not in payload:
        raise DetectorProtocolError(endpoint, "reply missing 'detections'")
    out = []
    for i, det in enumerate(payload["detections"]):
        where = f"detections[{i}]"
        try:
            cls = det["class"]
            confidence = float(det["confidence"])
            bbox = tuple(float(v) for v in det["bbox"])
            mask = [(float(x), float(y)) for x, y in det["mask"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise DetectorProtocolError(endpoint, f"{where}: malformed ({exc})") from exc
        if cls not in DETECTION_CLASSES:
            raise DetectorProtocolError(endpoint, f"{where}: unknown class {cls!r}")
        if not (0.0 <= confidence <= 1.0):
            raise DetectorProtocolError(
                endpoint, f"{where}: confidence {confidence} outside [0, 1]")
        if len(bbox) != 4:
            raise DetectorProtocolError(endpoint, f"{where}: bbox must be [x, y, w, h]")
        clipped = geometry.clip_polygon_to_rect(mask, 0.0, 0.0, float(width), float(height))
        out.append(Detection(cls=cls, confidence=confidence, bbox=bbox,
                             mask=tuple(clipped)))
    return out


class DetectorClient:
    """HTTP client for a segmentation server; POST {endpoint}/v1/detect."""

    def __init__(self, endpoint: str, timeout_ms: int = 5000, max_in_flight: int = 4):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_ms = timeout_ms
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def detect(self, frame: Frame) -> list[Detection]:
        url = f"{self.endpoint}/v1/detect"
        h, w = frame.pixels.shape[:2]
        with self._slots:
            try:
                resp = httpx.post(url, json=frame_payload(frame),
                                  timeout=self.timeout_ms / 1000.0)
            except httpx.TimeoutException as exc:
                raise DetectorTimeout(self.endpoint, f"timed out: {exc}") from exc
            except httpx.TransportError as exc:
                raise DetectorTransportError(self.endpoint, f"transport failure: {exc}") from exc
        if resp.status_code != 200:
            raise DetectorProtocolError(self.endpoint, f"HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise DetectorProtocolError(self.endpoint, f"invalid JSON: {exc}") from exc
        return parse_detections(payload, w, h, self.endpoint)


def remote_detect(frame: Frame, endpoint: str, timeout_ms: int = 5000) -> list[Detection]:
    return DetectorClient(endpoint, timeout_ms=timeout_ms).detect(frame)


# ---------- highlight overlay ----------

def overlay_highlight(frame: Frame, detections: list[Detection],
                      statics: list[StaticHighlightRegion] | None = None) -> Frame:
    """New frame with 2 px mask outlines and static region outlines drawn.

    The input frame is left untouched; dimensions never change.
    """
    buf = frame.pixels.copy()
    for region in statics or []:
        draw_polyline(buf, list(region.polygon), region.color, width=2.0)
    for det in detections:
        if len(det.mask) >= 2:
            draw_polyline(buf, list(det.mask), CLASS_COLORS[det.cls], width=2.0)
    return Frame(
        camera_id=frame.camera_id,
        tick=frame.tick,
        pixels=buf,
        annotations=list(frame.annotations),
        collision_present=frame.collision_present,
    )


def static_highlight_regions(camera: CameraConfig,
                             statics: tuple[StaticObjectSpec, ...] = ()) -> list[StaticHighlightRegion]:
    """Pre-registered pixel regions for a camera: section polygons as roads
    plus projected crosswalks, signs and lights."""
    regions: list[StaticHighlightRegion] = []
    if camera.section_map is not None:
        for section in camera.section_map.sections:
            regions.append(StaticHighlightRegion(
                camera_id=camera.id, kind="road",
                polygon=tuple(section.polygon),
                color=STATIC_REGION_COLORS["road"],
            ))
    w, h = camera.resolution
    for obj in statics:
        kind = {
            "crosswalk": "crosswalk",
            "traffic-light": "traffic-light",
            "stop-sign": "traffic-sign",
            "yield-sign": "traffic-sign",
            "roundabout-sign": "traffic-sign",
        }.get(obj.kind)
        if kind is None:
            continue
        if obj.kind == "crosswalk":
            outline = geometry.rect_corners(obj.x, obj.y, 2.0, 0.9, obj.heading)
        else:
            outline = geometry.regular_polygon(obj.x, obj.y, 0.6, 8, math.pi / 8)
        px_outline = [project(camera, p) for p in outline]
        clipped = geometry.clip_polygon_to_rect(px_outline, 0.0, 0.0, float(w), float(h))
        if len(clipped) >= 3:
            regions.append(StaticHighlightRegion(
                camera_id=camera.id, kind=kind, polygon=tuple(clipped),
                color=STATIC_REGION_COLORS[kind],
            ))
    return regions
