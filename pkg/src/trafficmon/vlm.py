"""Gateway to a multimodal-LLM responder.

Two interchangeable responders: a remote inference endpoint speaking the
documented /v1/chat protocol, and a scripted oracle that emits ground-truth
captions with calibrated Bernoulli error injection. Either way the reply is
grounded by substituting location aliases with real road names.
"""
from __future__ import annotations

import base64
import logging
import random
import threading
import time
from dataclasses import dataclass

import httpx

from .camera import Frame
from .grounding import (
    AliasTable, SectionMap, collision_sentence, location_phrase,
    pedestrian_sentence, substitute_aliases, vehicle_sentence,
    NO_COLLISION_SENTENCE, EMPTY_SCENE_SENTENCE,
)
from .sim import DIRECTION_LABELS

log = logging.getLogger(__name__)

DEFAULT_PROMPT = "explain the vehicular activity"


@dataclass(frozen=True)
class QueryRequest:
    camera_id: str
    tick: int
    prompt: str
    image: Frame | None = None     # highlighted frame sent to the remote model

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


@dataclass
class QueryResponse:
    raw_text: str                  # alias vocabulary
    grounded_text: str             # after alias substitution
    responder: str                 # "remote" | "oracle"
    latency_ms: float
    retries: int = 0


@dataclass(frozen=True)
class ErrorRates:
    p_loc: float = 0.0
    p_dir: float = 0.0
    p_col: float = 0.0


class VlmError(Exception):
    def __init__(self, endpoint: str, message: str):
        super().__init__(f"{endpoint}: {message}")
        self.endpoint = endpoint


class VlmTimeout(VlmError):
    pass


class VlmMalformedReply(VlmError):
    pass


# ---------- remote responder ----------

class VlmClient:
    """POST {endpoint}/v1/chat with prompt plus base64 image.

    Transport failures are retried with jitterless exponential backoff; a
    well-formed reply is never retried.
    """

    def __init__(self, endpoint: str, timeout_ms: int = 10000, retries: int = 2,
                 backoff_base_ms: float = 100.0, max_in_flight: int = 4):
        self.endpoint = endpoint.rstrip("/")
        self.timeout_ms = timeout_ms
        self.retries = retries
        self.backoff_base_ms = backoff_base_ms
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def query(self, req: QueryRequest, table: AliasTable) -> QueryResponse:
        body = {
            "prompt": req.prompt,
            "camera_id": req.camera_id,
            "tick": req.tick,
            "image_b64": (base64.b64encode(req.image.pixels.tobytes()).decode("ascii")
                          if req.image is not None else ""),
        }
        url = f"{self.endpoint}/v1/chat"
        start = time.perf_counter()
        attempt = 0
        while True:
            try:
                with self._slots:
                    resp = httpx.post(url, json=body, timeout=self.timeout_ms / 1000.0)
                break
            except httpx.TimeoutException as exc:
                if attempt >= self.retries:
                    raise VlmTimeout(self.endpoint,
                                     f"timed out after {attempt} retries: {exc}") from exc
            except httpx.TransportError as exc:
                if attempt >= self.retries:
                    raise VlmError(self.endpoint,
                                   f"transport failure after {attempt} retries: {exc}") from exc
            time.sleep(self.backoff_base_ms * (2 ** attempt) / 1000.0)
            attempt += 1
        if resp.status_code != 200:
            raise VlmMalformedReply(self.endpoint, f"HTTP {resp.status_code}")
        try:
            payload = resp.json()
            raw_text = payload["text"]
        except (ValueError, KeyError, TypeError) as exc:
            raise VlmMalformedReply(self.endpoint,
                                    f"reply missing text field: {exc}") from exc
        if not isinstance(raw_text, str):
            raise VlmMalformedReply(self.endpoint, "text field is not a string")
        latency_ms = (time.perf_counter() - start) * 1000.0
        return QueryResponse(
            raw_text=raw_text,
            grounded_text=substitute_aliases(raw_text, table),
            responder="remote",
            latency_ms=latency_ms,
            retries=attempt,
        )


def query_remote(req: QueryRequest, endpoint: str, table: AliasTable,
                 timeout_ms: int = 10000, retries: int = 2,
                 backoff_base_ms: float = 100.0) -> QueryResponse:
    client = VlmClient(endpoint, timeout_ms=timeout_ms, retries=retries,
                       backoff_base_ms=backoff_base_ms)
    return client.query(req, table)


# ---------- scripted oracle responder ----------

def oracle_respond(req: QueryRequest, truth: Frame, errors: ErrorRates, seed: int,
                   section_map: SectionMap, table: AliasTable) -> QueryResponse:
    """Ground-truth caption with independent per-vehicle error injection.

    Per vehicle mention: with p_loc swap its alias for a random different one
    from the camera map, with p_dir swap its direction for a random different
    non-stationary label; with p_col flip the collision sentence. Output is a
    pure function of (truth, errors, seed).
    """
    start = time.perf_counter()
    rng = random.Random(seed)
    aliases = list(section_map.aliases)

    sentences = []
    vehicle_numbers: dict[str, int] = {}
    n = 0
    for ann in truth.annotations:
        if ann.kind != "vehicle":
            continue
        n += 1
        vehicle_numbers[ann.entity_id] = n
        alias = ann.section_alias
        direction = ann.direction
        if rng.random() < errors.p_loc:
            choices = [a for a in aliases if a != alias]
            if choices:
                alias = choices[rng.randrange(len(choices))]
            else:
                log.info("no substitute alias available for %s on camera %s",
                         ann.entity_id, req.camera_id)
        if rng.random() < errors.p_dir:
            choices = [d for d in DIRECTION_LABELS if d != direction]
            direction = choices[rng.randrange(len(choices))]
        sentences.append(vehicle_sentence(n, alias, direction))
    for ann in truth.annotations:
        if ann.kind == "pedestrian":
            sentences.append(pedestrian_sentence(ann.section_alias))
    if not truth.annotations:
        sentences.append(EMPTY_SCENE_SENTENCE)

    claim_collision = truth.collision_present
    if rng.random() < errors.p_col:
        claim_collision = not claim_collision
    if claim_collision:
        sentence = collision_sentence(truth, vehicle_numbers)
        if sentence is None:
            sentence = _fabricated_collision_sentence(truth, vehicle_numbers)
        sentences.append(sentence)
    else:
        sentences.append(NO_COLLISION_SENTENCE)

    raw_text = " ".join(sentences)
    latency_ms = (time.perf_counter() - start) * 1000.0
    return QueryResponse(
        raw_text=raw_text,
        grounded_text=substitute_aliases(raw_text, table),
        responder="oracle",
        latency_ms=latency_ms,
    )


def _fabricated_collision_sentence(truth: Frame, vehicle_numbers: dict[str, int]) -> str:
    vehicles = [a for a in truth.annotations if a.kind == "vehicle"]
    if len(vehicles) >= 2:
        i = vehicle_numbers[vehicles[0].entity_id]
        j = vehicle_numbers[vehicles[1].entity_id]
        place = location_phrase(vehicles[0].section_alias, preposition="at")
        return f"A collision has occurred between vehicle {i} and vehicle {j} {place}."
    if vehicles:
        i = vehicle_numbers[vehicles[0].entity_id]
        place = location_phrase(vehicles[0].section_alias, preposition="at")
        return f"A collision involving vehicle {i} has occurred {place}."
    return "A collision has occurred."
