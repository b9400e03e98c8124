"""Shared builders for scene objects used across the test modules."""

import math

import numpy as np
import pytest

from dspr.scene import Frame, KinematicState, make_object


def state(x=0.0, y=0.0, vx=0.0, vy=0.0, ax=0.0, ay=0.0, heading=0.0):
    return KinematicState(position=(x, y), velocity=(vx, vy),
                          acceleration=(ax, ay), heading=heading)


def vehicle(oid, x, y, vx=0.0, vy=0.0, ax=0.0, ay=0.0, heading=0.0,
            length=None, width=None):
    return make_object(oid, "vehicle", state(x, y, vx, vy, ax, ay, heading),
                       length, width)


def pedestrian(oid, x, y, vx=0.0, vy=0.0, heading=0.0):
    return make_object(oid, "pedestrian", state(x, y, vx, vy, heading=heading))


def frame(ego=None, objects=(), t=0.0, road=1):
    return Frame(timestamp=t, ego=ego or state(), objects=tuple(objects),
                 road_condition=road)


def random_encounter(rng: np.random.Generator):
    """One random ego/object pair with bounded desk-scale kinematics."""
    ego = state(
        vx=rng.uniform(-25, 25) * rng.uniform(0, 1), vy=rng.uniform(-5, 5),
        ax=rng.uniform(-3, 3), ay=rng.uniform(-1, 1),
        heading=rng.uniform(-math.pi, math.pi),
    )
    angle = rng.uniform(-math.pi, math.pi)
    dist = rng.uniform(5.0, 90.0)
    ox, oy = dist * math.cos(angle), dist * math.sin(angle)
    speed = rng.uniform(0, 25)
    direction = rng.uniform(-math.pi, math.pi)
    kind = "pedestrian" if rng.uniform() < 0.2 else "vehicle"
    obj = make_object(
        "o", kind,
        state(ox, oy, speed * math.cos(direction), speed * math.sin(direction),
              rng.uniform(-3, 3), rng.uniform(-3, 3),
              heading=rng.uniform(-math.pi, math.pi)),
        None if kind == "pedestrian" else rng.uniform(3.5, 5.5),
        None if kind == "pedestrian" else rng.uniform(1.6, 2.2),
    )
    return ego, obj


def random_frame(rng: np.random.Generator) -> Frame:
    """A bounded random frame with 0..6 mixed objects."""
    ego = state(
        vx=rng.uniform(-30, 30), vy=rng.uniform(-8, 8),
        ax=rng.uniform(-6, 6), ay=rng.uniform(-2, 2),
        heading=rng.uniform(-math.pi, math.pi),
    )
    objects = []
    for j in range(int(rng.integers(0, 7))):
        angle = rng.uniform(-math.pi, math.pi)
        dist = rng.uniform(0.5, 100.0)
        kind = "pedestrian" if rng.uniform() < 0.3 else "vehicle"
        objects.append(make_object(
            f"obj{j}", kind,
            state(dist * math.cos(angle), dist * math.sin(angle),
                  rng.uniform(-30, 30), rng.uniform(-30, 30),
                  rng.uniform(-6, 6), rng.uniform(-6, 6),
                  heading=rng.uniform(-math.pi, math.pi))))
    return frame(ego, objects, t=0.0, road=int(rng.integers(1, 7)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
