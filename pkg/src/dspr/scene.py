"""Traffic scene domain types, validation, ingestion, and slot assignment.

A scene log is a time-ordered sequence of frames, each holding the ego
vehicle's kinematic state, the surrounding traffic objects, and a road-class
code. Rating panels carry one row of momentary 1..5 risk ratings per
participant, one column per frame.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi

# Footprint defaults applied when a log omits object dimensions (m).
VEHICLE_LENGTH = 4.8
VEHICLE_WIDTH = 2.0
PEDESTRIAN_LENGTH = 0.6
PEDESTRIAN_WIDTH = 0.6

VEHICLE_SLOTS = 30
PEDESTRIAN_SLOTS = 10
N_SLOTS = VEHICLE_SLOTS + PEDESTRIAN_SLOTS

N_ROAD_CLASSES = 6
RATING_MIN = 1
RATING_MAX_RAW = 5   # on-disk panels may use the full 1..5 scale
RATING_MAX = 4       # top two levels are merged during validation

# Timestamp spacing must match 1/frequency to this absolute tolerance (s).
SPACING_TOL = 1e-6


class SceneError(ValueError):
    """Malformed or inconsistent scene / panel data."""


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(angle, TWO_PI)
    if a <= -math.pi:
        a = math.pi
    return a


class ObjectKind(str, Enum):
    VEHICLE = "vehicle"
    PEDESTRIAN = "pedestrian"


@dataclass(frozen=True)
class KinematicState:
    """Planar snapshot: position (m), velocity (m/s), acceleration (m/s^2),
    heading (rad, counterclockwise from +x, in (-pi, pi])."""

    position: tuple[float, float]
    velocity: tuple[float, float] = (0.0, 0.0)
    acceleration: tuple[float, float] = (0.0, 0.0)
    heading: float = 0.0

    def __post_init__(self):
        values = (*self.position, *self.velocity, *self.acceleration, self.heading)
        if not all(math.isfinite(v) for v in values):
            raise SceneError(f"non-finite kinematic state: {self}")
        if not -math.pi < self.heading <= math.pi:
            raise SceneError(f"heading {self.heading!r} outside (-pi, pi]")

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass(frozen=True)
class TrafficObject:
    """A vehicle or pedestrian with a rectangular footprint."""

    id: str
    kind: ObjectKind
    state: KinematicState
    footprint_length: float = VEHICLE_LENGTH
    footprint_width: float = VEHICLE_WIDTH

    def __post_init__(self):
        if self.footprint_length <= 0 or self.footprint_width <= 0:
            raise SceneError(f"object {self.id!r}: footprint must be positive")


def make_object(id, kind, state, length=None, width=None) -> TrafficObject:
    """Build a TrafficObject, filling kind-specific footprint defaults."""
    kind = ObjectKind(kind)
    if kind is ObjectKind.PEDESTRIAN:
        length = PEDESTRIAN_LENGTH if length is None else length
        width = PEDESTRIAN_WIDTH if width is None else width
    else:
        length = VEHICLE_LENGTH if length is None else length
        width = VEHICLE_WIDTH if width is None else width
    return TrafficObject(str(id), kind, state, length, width)


@dataclass(frozen=True)
class Frame:
    """One log timestep: ego state, traffic objects, and road class 1..6."""

    timestamp: float
    ego: KinematicState
    objects: tuple[TrafficObject, ...] = ()
    road_condition: int = 1

    def __post_init__(self):
        if not math.isfinite(self.timestamp):
            raise SceneError("non-finite frame timestamp")
        if self.road_condition not in range(1, N_ROAD_CLASSES + 1):
            raise SceneError(
                f"road_condition {self.road_condition!r} outside 1..{N_ROAD_CLASSES}"
            )
        ids = [o.id for o in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneError(f"duplicate object ids in frame t={self.timestamp}")
        object.__setattr__(self, "objects", tuple(self.objects))


@dataclass(frozen=True)
class Scenario:
    """An ordered clip of frames sampled at a fixed frequency."""

    id: str
    frequency: float
    frames: tuple[Frame, ...]

    def __post_init__(self):
        if not self.frequency > 0:
            raise SceneError(f"frequency must be positive, got {self.frequency}")
        object.__setattr__(self, "frames", tuple(self.frames))
        dt = 1.0 / self.frequency
        times = [f.timestamp for f in self.frames]
        for i in range(1, len(times)):
            step = times[i] - times[i - 1]
            if step <= 0:
                raise SceneError(
                    f"scenario {self.id!r}: timestamps not strictly increasing "
                    f"at index {i}"
                )
            if abs(step - dt) > SPACING_TOL:
                raise SceneError(
                    f"scenario {self.id!r}: spacing {step!r} at index {i} deviates "
                    f"from 1/frequency={dt!r}"
                )

    @property
    def timestamps(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames])


@dataclass(frozen=True)
class RatingPanel:
    """Per-participant momentary risk ratings, one column per frame."""

    scenario_id: str
    ratings: np.ndarray  # (participants, frames), integer cells

    def __post_init__(self):
        ratings = np.asarray(self.ratings, dtype=int)
        if ratings.ndim != 2:
            raise SceneError("panel ratings must be a 2-D matrix")
        if ratings.size and (ratings.min() < RATING_MIN or ratings.max() > RATING_MAX_RAW):
            raise SceneError(
                f"panel ratings outside {RATING_MIN}..{RATING_MAX_RAW}"
            )
        object.__setattr__(self, "ratings", ratings)

    @property
    def n_participants(self) -> int:
        return self.ratings.shape[0]

    @property
    def n_frames(self) -> int:
        return self.ratings.shape[1]


# ---------------------------------------------------------------------------
# Scene file format: JSON Lines, one frame per line. Angles are stored in
# degrees for readability; everything internal is radians.
# ---------------------------------------------------------------------------

def _state_to_json(s: KinematicState) -> dict:
    return {
        "x": s.position[0], "y": s.position[1],
        "vx": s.velocity[0], "vy": s.velocity[1],
        "ax": s.acceleration[0], "ay": s.acceleration[1],
        "heading_deg": math.degrees(s.heading),
    }


def _state_from_json(d: dict) -> KinematicState:
    return KinematicState(
        position=(float(d["x"]), float(d["y"])),
        velocity=(float(d.get("vx", 0.0)), float(d.get("vy", 0.0))),
        acceleration=(float(d.get("ax", 0.0)), float(d.get("ay", 0.0))),
        heading=wrap_angle(math.radians(float(d.get("heading_deg", 0.0)))),
    )


def frame_to_json(frame: Frame) -> dict:
    objs = []
    for o in frame.objects:
        rec = _state_to_json(o.state)
        rec.update(id=o.id, kind=o.kind.value,
                   len=o.footprint_length, wid=o.footprint_width)
        objs.append(rec)
    return {"t": frame.timestamp, "ego": _state_to_json(frame.ego),
            "road": frame.road_condition, "objects": objs}


def frame_from_json(d: dict) -> Frame:
    try:
        objects = tuple(
            make_object(rec["id"], rec["kind"], _state_from_json(rec),
                        rec.get("len"), rec.get("wid"))
            for rec in d.get("objects", ())
        )
        return Frame(
            timestamp=float(d["t"]),
            ego=_state_from_json(d["ego"]),
            objects=objects,
            road_condition=int(d.get("road", 1)),
        )
    except (KeyError, TypeError) as exc:
        raise SceneError(f"malformed frame record: {exc}") from exc


def save_scenario(path, scenario: Scenario) -> None:
    path = Path(path)
    with path.open("w") as fh:
        for frame in scenario.frames:
            fh.write(json.dumps(frame_to_json(frame)) + "\n")


def load_scenario(path, scenario_id: str | None = None,
                  default_frequency: float = 10.0) -> Scenario:
    """Load and validate a JSON-Lines scene file.

    The frequency is inferred from the first timestamp spacing (single-frame
    files fall back to `default_frequency`); every subsequent spacing must
    agree with it.
    """
    path = Path(path)
    frames = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SceneError(f"{path.name}:{lineno}: invalid JSON: {exc}") from exc
            frames.append(frame_from_json(record))
    if not frames:
        raise SceneError(f"{path.name}: empty scene file")
    if len(frames) >= 2:
        step = frames[1].timestamp - frames[0].timestamp
        if step <= 0:
            raise SceneError(f"{path.name}: timestamps not strictly increasing")
        frequency = 1.0 / step
    else:
        frequency = default_frequency
    return Scenario(id=scenario_id or path.stem, frequency=frequency,
                    frames=tuple(frames))


def save_panel(path, panel: RatingPanel) -> None:
    np.savetxt(path, panel.ratings, fmt="%d", delimiter=",")


def load_panel(path, scenario_id: str = "") -> RatingPanel:
    path = Path(path)
    try:
        ratings = np.loadtxt(path, dtype=int, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise SceneError(f"{path.name}: unreadable panel: {exc}") from exc
    return RatingPanel(scenario_id=scenario_id or path.stem, ratings=ratings)


# ---------------------------------------------------------------------------
# Slotting and panel validation
# ---------------------------------------------------------------------------

def nearest_objects(frame: Frame) -> list[TrafficObject | None]:
    """Assign objects to the fixed 40-slot layout.

    Slots 0..29 hold the closest vehicles by center distance to the ego,
    slots 30..39 the closest pedestrians; surplus objects are dropped and
    unused slots are None. Distance ties break on id order.
    """
    ex, ey = frame.ego.position

    def dist(o: TrafficObject) -> float:
        return math.hypot(o.state.position[0] - ex, o.state.position[1] - ey)

    vehicles = sorted((o for o in frame.objects if o.kind is ObjectKind.VEHICLE),
                      key=lambda o: (dist(o), o.id))
    peds = sorted((o for o in frame.objects if o.kind is ObjectKind.PEDESTRIAN),
                  key=lambda o: (dist(o), o.id))

    slots: list[TrafficObject | None] = [None] * N_SLOTS
    for i, obj in enumerate(vehicles[:VEHICLE_SLOTS]):
        slots[i] = obj
    for i, obj in enumerate(peds[:PEDESTRIAN_SLOTS]):
        slots[VEHICLE_SLOTS + i] = obj
    return slots


def validate_panel(panel: RatingPanel, scenario: Scenario) -> RatingPanel:
    """Check a panel against its scenario and merge the top rating levels.

    The column count must equal the frame count and every cell must lie in
    1..5; cells rated 5 are remapped to 4 so downstream labels use 4 levels.
    """
    if panel.n_frames != len(scenario.frames):
        raise SceneError(
            f"panel has {panel.n_frames} columns but scenario "
            f"{scenario.id!r} has {len(scenario.frames)} frames"
        )
    ratings = panel.ratings
    if ratings.size and (ratings.min() < RATING_MIN or ratings.max() > RATING_MAX_RAW):
        raise SceneError("panel rating outside 1..5")
    merged = np.minimum(ratings, RATING_MAX)
    return replace(panel, ratings=merged, scenario_id=panel.scenario_id or scenario.id)
