"""Constant-acceleration propagation, oriented rectangles, and contact solving.

Risk perception activates when a traffic object's predicted path first touches
one of two velocity-scaled perception domains around the ego vehicle. Both the
domain and the object are treated as oriented rectangles; first contact is
found by a sampled separating-axis sweep followed by bisection refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

from .scene import KinematicState, TrafficObject

if TYPE_CHECKING:  # pragma: no cover
    from .risk import DsprParams

DEFAULT_D_MIN = 0.1  # m, floor for center distances used in divisions


class RpdTier(Enum):
    """Perception-domain tier: contact with STRONG reads as acute risk,
    WEAK as the outer awareness band."""
    STRONG = "strong"
    WEAK = "weak"


@dataclass(frozen=True)
class OrientedRect:
    """Rectangle given by center, half extents, and heading of its long axis."""

    center: tuple[float, float]
    half_length: float
    half_width: float
    heading: float

    def __post_init__(self):
        if self.half_length <= 0 or self.half_width <= 0:
            raise ValueError("rectangle half extents must be positive")

    @property
    def axes(self) -> tuple[tuple[float, float], tuple[float, float]]:
        c, s = math.cos(self.heading), math.sin(self.heading)
        return (c, s), (-s, c)

    def corners(self) -> np.ndarray:
        (ux, uy), (vx, vy) = self.axes
        cx, cy = self.center
        hl, hw = self.half_length, self.half_width
        return np.array([
            (cx + hl * ux + hw * vx, cy + hl * uy + hw * vy),
            (cx - hl * ux + hw * vx, cy - hl * uy + hw * vy),
            (cx - hl * ux - hw * vx, cy - hl * uy - hw * vy),
            (cx + hl * ux - hw * vx, cy + hl * uy - hw * vy),
        ])


@dataclass(frozen=True)
class ContactResult:
    """Outcome of a first-contact search over the prediction horizon."""

    triggered: bool
    tier: RpdTier
    t_r: float | None = None              # s, time of risk activation
    contact_point: tuple[float, float] | None = None
    contact_angle: float | None = None    # rad in [0, pi], ego-frame bearing

    def __post_init__(self):
        if self.triggered != (self.t_r is not None):
            raise ValueError("t_r must be present exactly when triggered")


def propagate(state: KinematicState, dt: float) -> KinematicState:
    """Advance a state by dt under constant acceleration; heading is frozen."""
    if dt < 0:
        raise ValueError(f"dt must be nonnegative, got {dt}")
    px, py = state.position
    vx, vy = state.velocity
    ax, ay = state.acceleration
    return KinematicState(
        position=(px + vx * dt + 0.5 * ax * dt * dt,
                  py + vy * dt + 0.5 * ay * dt * dt),
        velocity=(vx + ax * dt, vy + ay * dt),
        acceleration=state.acceleration,
        heading=state.heading,
    )


def rpd_half_extents(speed: float, tier: RpdTier, params: "DsprParams") -> tuple[float, float]:
    """Half length/width of a perception domain at a given ego speed.

    Full length is 2*(L + THW*v) so the domain grows with speed and extends
    symmetrically fore and aft; full width is 2W (strong) or 5W (weak).
    """
    if tier is RpdTier.STRONG:
        return params.ego_length + params.thw_strong * speed, params.ego_width
    return params.ego_length + params.thw_weak * speed, 2.5 * params.ego_width


def rpd_rect(ego: KinematicState, tier: RpdTier, params: "DsprParams") -> OrientedRect:
    """Perception domain centered on the ego and aligned with its heading."""
    hl, hw = rpd_half_extents(ego.speed, tier, params)
    return OrientedRect(ego.position, hl, hw, ego.heading)


def object_rect(obj: TrafficObject, state: KinematicState | None = None) -> OrientedRect:
    s = state if state is not None else obj.state
    return OrientedRect(s.position, obj.footprint_length / 2.0,
                        obj.footprint_width / 2.0, s.heading)


def rects_intersect(a: OrientedRect, b: OrientedRect) -> bool:
    """Separating-axis test for two oriented rectangles (touching counts)."""
    dx = b.center[0] - a.center[0]
    dy = b.center[1] - a.center[1]
    for rect in (a, b):
        for ax, ay in rect.axes:
            ra = _projection_radius(a, ax, ay)
            rb = _projection_radius(b, ax, ay)
            if abs(dx * ax + dy * ay) > ra + rb:
                return False
    return True


def _projection_radius(rect: OrientedRect, ax: float, ay: float) -> float:
    (ux, uy), (vx, vy) = rect.axes
    return (rect.half_length * abs(ux * ax + uy * ay)
            + rect.half_width * abs(vx * ax + vy * ay))


# ---------------------------------------------------------------------------
# Vectorized contact sweep
# ---------------------------------------------------------------------------

def _scan_times(horizon: float, dt: float) -> np.ndarray:
    times = np.arange(0.0, horizon, dt)
    if not times.size or times[-1] < horizon:
        times = np.append(times, horizon)
    return times


def _contact_mask(ego: KinematicState, obj: TrafficObject, tier: RpdTier,
                  params: "DsprParams", times: np.ndarray) -> np.ndarray:
    """Boolean intersection mask over `times` for the propagated pair.

    Headings are frozen, so each rectangle keeps two fixed axes and only the
    centers (and the domain's half length, which tracks ego speed) vary. The
    separating-axis test then vectorizes over the whole grid.
    """
    t = times
    eax, eay = ego.acceleration
    ecx = ego.position[0] + ego.velocity[0] * t + 0.5 * eax * t * t
    ecy = ego.position[1] + ego.velocity[1] * t + 0.5 * eay * t * t
    espeed = np.hypot(ego.velocity[0] + eax * t, ego.velocity[1] + eay * t)

    if tier is RpdTier.STRONG:
        hl_e = params.ego_length + params.thw_strong * espeed
        hw_e = params.ego_width
    else:
        hl_e = params.ego_length + params.thw_weak * espeed
        hw_e = 2.5 * params.ego_width

    os_ = obj.state
    oax, oay = os_.acceleration
    ocx = os_.position[0] + os_.velocity[0] * t + 0.5 * oax * t * t
    ocy = os_.position[1] + os_.velocity[1] * t + 0.5 * oay * t * t
    hl_o = obj.footprint_length / 2.0
    hw_o = obj.footprint_width / 2.0

    ce, se = math.cos(ego.heading), math.sin(ego.heading)
    co, so = math.cos(os_.heading), math.sin(os_.heading)
    ego_axes = ((ce, se), (-se, ce))
    obj_axes = ((co, so), (-so, co))

    dx = ocx - ecx
    dy = ocy - ecy
    mask = np.ones(t.shape, dtype=bool)
    for ax, ay in (*ego_axes, *obj_axes):
        r_e = hl_e * abs(ego_axes[0][0] * ax + ego_axes[0][1] * ay) \
            + hw_e * abs(ego_axes[1][0] * ax + ego_axes[1][1] * ay)
        r_o = hl_o * abs(obj_axes[0][0] * ax + obj_axes[0][1] * ay) \
            + hw_o * abs(obj_axes[1][0] * ax + obj_axes[1][1] * ay)
        mask &= np.abs(dx * ax + dy * ay) <= r_e + r_o
        if not mask.any():
            break
    return mask


def _intersects_at(ego: KinematicState, obj: TrafficObject, tier: RpdTier,
                   params: "DsprParams", tau: float) -> bool:
    ego_t = propagate(ego, tau)
    obj_t = propagate(obj.state, tau)
    return rects_intersect(rpd_rect(ego_t, tier, params), object_rect(obj, obj_t))


# ---------------------------------------------------------------------------
# Contact-point helpers
# ---------------------------------------------------------------------------

def _closest_point_on_segment(p, a, b) -> np.ndarray:
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return a
    s = float((p - a) @ ab) / denom
    return a + min(1.0, max(0.0, s)) * ab


def _closest_pair(ra: OrientedRect, rb: OrientedRect) -> tuple[np.ndarray, np.ndarray]:
    """Closest boundary points of two disjoint (or touching) rectangles."""
    ca, cb = ra.corners(), rb.corners()
    best = None
    best_d = math.inf
    for corners, other in ((ca, cb), (cb, ca)):
        for p in corners:
            for i in range(4):
                q = _closest_point_on_segment(p, other[i], other[(i + 1) % 4])
                d = float(np.hypot(*(p - q)))
                if d < best_d:
                    best_d = d
                    best = (p, q) if corners is ca else (q, p)
    return best


def _clip_polygon(subject: np.ndarray, clipper: OrientedRect) -> np.ndarray:
    """Sutherland-Hodgman clip of a convex polygon by a rectangle."""
    poly = [tuple(p) for p in subject]
    corners = clipper.corners()
    for i in range(4):
        a = corners[i]
        b = corners[(i + 1) % 4]
        edge = (b[0] - a[0], b[1] - a[1])
        out = []
        for j in range(len(poly)):
            p = poly[j]
            q = poly[(j + 1) % len(poly)]
            side_p = edge[0] * (p[1] - a[1]) - edge[1] * (p[0] - a[0])
            side_q = edge[0] * (q[1] - a[1]) - edge[1] * (q[0] - a[0])
            if side_p >= 0:
                out.append(p)
            if (side_p >= 0) != (side_q >= 0):
                denom = side_p - side_q
                u = side_p / denom if denom != 0 else 0.0
                out.append((p[0] + u * (q[0] - p[0]), p[1] + u * (q[1] - p[1])))
        poly = out
        if not poly:
            break
    return np.array(poly) if poly else np.empty((0, 2))


def _overlap_centroid(ra: OrientedRect, rb: OrientedRect) -> tuple[float, float]:
    poly = _clip_polygon(ra.corners(), rb)
    if poly.shape[0] == 0:
        pa, pb = _closest_pair(ra, rb)
        mid = (pa + pb) / 2.0
        return float(mid[0]), float(mid[1])
    x, y = poly[:, 0], poly[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = cross.sum() / 2.0
    if abs(area) < 1e-12:
        return float(x.mean()), float(y.mean())
    cx = ((x + np.roll(x, -1)) * cross).sum() / (6.0 * area)
    cy = ((y + np.roll(y, -1)) * cross).sum() / (6.0 * area)
    return float(cx), float(cy)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def bearing(ego: KinematicState, obj: TrafficObject,
            d_min: float = DEFAULT_D_MIN) -> tuple[float, float]:
    """Ego-frame bearing of an object center, folded to [0, pi], plus range.

    0 is dead ahead, pi dead astern; left and right fold onto the same angle.
    The returned distance is floored at d_min; coincident centers read as
    (0, d_min).
    """
    theta = point_bearing(ego, obj.state.position)
    dx = obj.state.position[0] - ego.position[0]
    dy = obj.state.position[1] - ego.position[1]
    d = math.hypot(dx, dy)
    if d < d_min:
        return (0.0 if d == 0.0 else theta), d_min
    return theta, d


def point_bearing(ego: KinematicState, point: tuple[float, float]) -> float:
    """Bearing of a world point in the ego-heading frame, folded to [0, pi]."""
    dx = point[0] - ego.position[0]
    dy = point[1] - ego.position[1]
    c, s = math.cos(ego.heading), math.sin(ego.heading)
    rx = dx * c + dy * s
    ry = -dx * s + dy * c
    if rx == 0.0 and ry == 0.0:
        return 0.0
    return abs(math.atan2(ry, rx))


def contact_angle(contact: ContactResult, ego_at_tr: KinematicState) -> float:
    """Ego-frame bearing of the contact point at activation time."""
    if not contact.triggered:
        raise ValueError("contact_angle requires a triggered contact")
    return point_bearing(ego_at_tr, contact.contact_point)


def first_contact(ego: KinematicState, obj: TrafficObject, tier: RpdTier,
                  params: "DsprParams") -> ContactResult:
    """Earliest time in [0, horizon] at which the object's predicted box
    touches the ego's perception domain.

    Both bodies move under constant acceleration with frozen headings; the
    domain is re-sized each instant from the propagated ego speed. A sampled
    separating-axis sweep at step dt_scan brackets the first contact, which
    bisection then narrows to tol_t.
    """
    if params.horizon <= 0:
        raise ValueError("prediction horizon must be positive")
    times = _scan_times(params.horizon, params.dt_scan)
    mask = _contact_mask(ego, obj, tier, params, times)
    if not mask.any():
        return ContactResult(False, tier)

    k = int(np.argmax(mask))
    if k == 0:
        # Already in contact now: activation is immediate.
        point = _overlap_centroid(rpd_rect(ego, tier, params), object_rect(obj))
        theta_w = point_bearing(ego, point)
        return ContactResult(True, tier, 0.0, point, theta_w)

    lo, hi = float(times[k - 1]), float(times[k])
    while hi - lo > params.tol_t:
        mid = 0.5 * (lo + hi)
        if _intersects_at(ego, obj, tier, params, mid):
            hi = mid
        else:
            lo = mid
    t_r = hi

    # At hi the boxes overlap in a thin sliver whose centroid is the touch
    # point (face-face contacts land mid-face, corner contacts at the corner).
    ego_hi = propagate(ego, hi)
    obj_hi = propagate(obj.state, hi)
    point = _overlap_centroid(rpd_rect(ego_hi, tier, params),
                              object_rect(obj, obj_hi))
    theta_w = point_bearing(propagate(ego, t_r), point)
    return ContactResult(True, tier, t_r, point, theta_w)
