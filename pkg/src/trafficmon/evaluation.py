"""Parse responder text and score it against ground truth.

Parsing runs in alias vocabulary (before road-name substitution): a strict
pass inverts the caption grammar exactly, and a lenient pass falls back to
scanning for registered aliases and direction synonyms. Scoring assigns
mentions to ground-truth vehicles optimally so phrasing order never costs a
correct answer.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .camera import Frame
from .grounding import (
    SectionMap, EMPTY_SCENE_SENTENCE, NO_COLLISION_SENTENCE, OFF_MAP_PHRASE,
)
from .sim import DIRECTION_LABELS, STATIONARY

_DIR_ALT = "|".join(re.escape(d) for d in DIRECTION_LABELS)
_PARTY = r"(?:vehicle \d+|a pedestrian)"
_PLACE = r"(?: at (?P<alias>.+)| off the mapped area)"

_RE_VEHICLE_MOVING = re.compile(
    rf"Vehicle \d+ is on (?P<alias>.+) moving (?P<direction>{_DIR_ALT})\.")
_RE_VEHICLE_MOVING_OFFMAP = re.compile(
    rf"Vehicle \d+ is {OFF_MAP_PHRASE} moving (?P<direction>{_DIR_ALT})\.")
_RE_VEHICLE_STATIONARY = re.compile(r"Vehicle \d+ is stationary on (?P<alias>.+)\.")
_RE_VEHICLE_STATIONARY_OFFMAP = re.compile(
    rf"Vehicle \d+ is stationary {OFF_MAP_PHRASE}\.")
_RE_PEDESTRIAN = re.compile(r"A pedestrian is on (?P<alias>.+)\.")
_RE_PEDESTRIAN_OFFMAP = re.compile(rf"A pedestrian is {OFF_MAP_PHRASE}\.")
_RE_COLLISION = re.compile(
    rf"A collision has occurred between {_PARTY} and {_PARTY}{_PLACE}\.")
_RE_COLLISION_SINGLE = re.compile(
    rf"A collision involving {_PARTY} has occurred{_PLACE}\.")
_RE_COLLISION_BARE = re.compile(r"A collision has occurred\.")

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")
_NEGATION = re.compile(r"\b(?:no|not|never|without|none)\b|n't")

# lenient direction synonyms, longest-first so "upper right" beats "right"
_DIRECTION_SYNONYMS: list[tuple[str, str]] = sorted([
    ("upper-right", "upper-right"), ("upper right", "upper-right"),
    ("up-right", "upper-right"), ("northeast", "upper-right"),
    ("upper-left", "upper-left"), ("upper left", "upper-left"),
    ("up-left", "upper-left"), ("northwest", "upper-left"),
    ("lower-right", "lower-right"), ("lower right", "lower-right"),
    ("down-right", "lower-right"), ("southeast", "lower-right"),
    ("lower-left", "lower-left"), ("lower left", "lower-left"),
    ("down-left", "lower-left"), ("southwest", "lower-left"),
    ("upwards", "upward"), ("upward", "upward"), ("up", "upward"),
    ("north", "upward"),
    ("downwards", "downward"), ("downward", "downward"), ("down", "downward"),
    ("south", "downward"),
    ("leftwards", "leftward"), ("leftward", "leftward"), ("left", "leftward"),
    ("west", "leftward"),
    ("rightwards", "rightward"), ("rightward", "rightward"), ("right", "rightward"),
    ("east", "rightward"),
    ("stationary", STATIONARY), ("parked", STATIONARY), ("stopped", STATIONARY),
    ("not moving", STATIONARY), ("standing still", STATIONARY),
], key=lambda kv: len(kv[0]), reverse=True)

_VEHICLE_INTRODUCER = re.compile(r"\b(?:vehicle|car|qcar|automobile)s?\b", re.IGNORECASE)
_PEDESTRIAN_INTRODUCER = re.compile(r"\b(?:pedestrian|person|people|walker)s?\b",
                                    re.IGNORECASE)


@dataclass
class Mention:
    section_alias: str | None
    direction: str | None


@dataclass
class ParsedResponse:
    mentions: list[Mention] = field(default_factory=list)
    pedestrians: list[str | None] = field(default_factory=list)
    collision_claim: bool | None = None
    strict: bool = False


def parse_response(text: str, section_map: SectionMap) -> ParsedResponse:
    """Parse alias-vocabulary responder text.

    Strict pass first: every sentence must match the caption grammar. On any
    failure the lenient pass scans for registered aliases, direction
    synonyms and collision stems instead. Unparseable text parses to zero
    mentions with no collision claim (scored as wrong downstream).
    """
    sentences = [s for s in _SENTENCE_SPLIT.split(text.strip()) if s]
    strict = _try_strict(sentences)
    if strict is not None:
        return strict
    return _parse_lenient(sentences, section_map)


def _try_strict(sentences: list[str]) -> ParsedResponse | None:
    out = ParsedResponse(strict=True)
    for sentence in sentences:
        if sentence == EMPTY_SCENE_SENTENCE:
            continue
        if sentence == NO_COLLISION_SENTENCE:
            out.collision_claim = False
            continue
        m = _RE_VEHICLE_MOVING.fullmatch(sentence)
        if m:
            out.mentions.append(Mention(m.group("alias"), m.group("direction")))
            continue
        m = _RE_VEHICLE_MOVING_OFFMAP.fullmatch(sentence)
        if m:
            out.mentions.append(Mention(None, m.group("direction")))
            continue
        m = _RE_VEHICLE_STATIONARY.fullmatch(sentence)
        if m:
            out.mentions.append(Mention(m.group("alias"), STATIONARY))
            continue
        if _RE_VEHICLE_STATIONARY_OFFMAP.fullmatch(sentence):
            out.mentions.append(Mention(None, STATIONARY))
            continue
        m = _RE_PEDESTRIAN.fullmatch(sentence)
        if m:
            out.pedestrians.append(m.group("alias"))
            continue
        if _RE_PEDESTRIAN_OFFMAP.fullmatch(sentence):
            out.pedestrians.append(None)
            continue
        if (_RE_COLLISION.fullmatch(sentence)
                or _RE_COLLISION_SINGLE.fullmatch(sentence)
                or _RE_COLLISION_BARE.fullmatch(sentence)):
            out.collision_claim = True
            continue
        return None
    return out


def _find_alias(segment: str, aliases_by_length: list[str]) -> str | None:
    low = segment.lower()
    best_pos, best_alias = None, None
    for alias in aliases_by_length:
        pos = _word_boundary_find(low, alias.lower())
        if pos >= 0 and (best_pos is None or pos < best_pos):
            best_pos, best_alias = pos, alias
    return best_alias


def _word_boundary_find(text: str, needle: str) -> int:
    m = re.search(rf"\b{re.escape(needle)}\b", text)
    return m.start() if m else -1


def _find_direction(segment: str) -> str | None:
    low = segment.lower()
    best_pos, best_label = None, None
    for phrase, label in _DIRECTION_SYNONYMS:
        pos = _word_boundary_find(low, phrase)
        if pos >= 0 and (best_pos is None or pos < best_pos):
            best_pos, best_label = pos, label
    return best_label


def _parse_lenient(sentences: list[str], section_map: SectionMap) -> ParsedResponse:
    out = ParsedResponse(strict=False)
    aliases_by_length = sorted(section_map.aliases, key=len, reverse=True)
    for sentence in sentences:
        low = sentence.lower()
        if "collision" in low or "collided" in low or "crash" in low:
            out.collision_claim = not _NEGATION.search(low)
            continue
        introducers = list(_VEHICLE_INTRODUCER.finditer(sentence))
        if introducers:
            spans = [m.start() for m in introducers] + [len(sentence)]
            for k in range(len(introducers)):
                segment = sentence[spans[k]:spans[k + 1]]
                out.mentions.append(Mention(
                    _find_alias(segment, aliases_by_length),
                    _find_direction(segment),
                ))
        elif _PEDESTRIAN_INTRODUCER.search(sentence):
            out.pedestrians.append(_find_alias(sentence, aliases_by_length))
    return out


# ---------- scoring ----------

@dataclass
class FrameScore:
    camera_id: str
    tick: int
    vehicle_total: int
    location_correct: int
    steering_correct: int
    collision_truth: bool
    collision_claim: bool | None
    collision_correct: bool
    matches: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "camera_id": self.camera_id,
            "tick": self.tick,
            "vehicle_total": self.vehicle_total,
            "location_correct": self.location_correct,
            "steering_correct": self.steering_correct,
            "collision_truth": self.collision_truth,
            "collision_claim": self.collision_claim,
            "collision_correct": self.collision_correct,
            "matches": self.matches,
        }


def score_frame(parsed: ParsedResponse, truth: Frame) -> FrameScore:
    """Score one response against one ground-truth frame.

    Mentions are assigned one-to-one to ground-truth vehicles maximizing
    total field matches (section and direction worth one each; among ties,
    the assignment with more section matches). Unmatched ground-truth
    vehicles count as wrong on both fields; extra mentions earn nothing. The
    collision claim must be stated and equal to the frame truth to count.
    """
    gt = [a for a in truth.annotations if a.kind == "vehicle"]
    mentions = parsed.mentions
    location_correct = 0
    steering_correct = 0
    matches: list[dict] = []
    if gt and mentions:
        score = np.zeros((len(mentions), len(gt)))
        for i, m in enumerate(mentions):
            for j, ann in enumerate(gt):
                loc = m.section_alias == ann.section_alias
                steer = m.direction == ann.direction
                # tiny bias makes equal-total ties deterministic in favor of
                # location matches, keeping scores permutation invariant
                score[i, j] = loc * (1.0 + 1e-6) + steer * 1.0
        rows, cols = linear_sum_assignment(score, maximize=True)
        for i, j in zip(rows, cols):
            loc = mentions[i].section_alias == gt[j].section_alias
            steer = mentions[i].direction == gt[j].direction
            location_correct += loc
            steering_correct += steer
            matches.append({
                "mention_index": int(i),
                "entity_id": gt[j].entity_id,
                "mention_alias": mentions[i].section_alias,
                "truth_alias": gt[j].section_alias,
                "location_match": bool(loc),
                "mention_direction": mentions[i].direction,
                "truth_direction": gt[j].direction,
                "direction_match": bool(steer),
            })
    collision_correct = (parsed.collision_claim is not None
                         and parsed.collision_claim == truth.collision_present)
    return FrameScore(
        camera_id=truth.camera_id,
        tick=truth.tick,
        vehicle_total=len(gt),
        location_correct=int(location_correct),
        steering_correct=int(steering_correct),
        collision_truth=truth.collision_present,
        collision_claim=parsed.collision_claim,
        collision_correct=collision_correct,
        matches=matches,
    )


@dataclass
class EvalReport:
    frames_scored: int
    location_accuracy: float
    steering_accuracy: float
    collision_accuracy: float
    location_total: int
    steering_total: int
    ledger: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "frames_scored": self.frames_scored,
            "location_accuracy": self.location_accuracy,
            "steering_accuracy": self.steering_accuracy,
            "collision_accuracy": self.collision_accuracy,
            "location_total": self.location_total,
            "steering_total": self.steering_total,
            "ledger": self.ledger,
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n",
                              encoding="utf-8")


def aggregate(scores: list[FrameScore]) -> EvalReport:
    """Micro-averaged accuracies over all scored frames.

    Location and steering totals are ground-truth vehicle counts; a run with
    no vehicles at all reports 0.0 for those accuracies.
    """
    if not scores:
        raise ValueError("cannot aggregate an empty score list")
    vehicle_total = sum(s.vehicle_total for s in scores)
    loc = sum(s.location_correct for s in scores)
    steer = sum(s.steering_correct for s in scores)
    col = sum(1 for s in scores if s.collision_correct)
    return EvalReport(
        frames_scored=len(scores),
        location_accuracy=loc / vehicle_total if vehicle_total else 0.0,
        steering_accuracy=steer / vehicle_total if vehicle_total else 0.0,
        collision_accuracy=col / len(scores),
        location_total=vehicle_total,
        steering_total=vehicle_total,
        ledger=[s.to_dict() for s in scores],
    )
