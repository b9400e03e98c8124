"""Perceived-risk decomposition per traffic object and the 40-slot risk vector.

Triggered risk is the product of a time-decay coefficient, two spatial-decay
coefficients tied to the perception domains, a direction-dependent observation
sensitivity, and a relative kinetic energy evaluated at activation time.
Untriggered objects contribute only the sensitivity-weighted background energy
of the ego's own motion.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .geometry import (
    RpdTier,
    bearing,
    first_contact,
    propagate,
    rpd_half_extents,
)
from .scene import N_SLOTS, Frame, ObjectKind, TrafficObject, KinematicState, nearest_objects


@dataclass(frozen=True)
class DsprParams:
    """Model constants and engine tolerances.

    The defaults reproduce the reference parameterization: a 4.8 m x 2.0 m
    ego footprint, a 4 s prediction horizon, headway thresholds 2.4 s / 1.2 s
    for the weak / strong perception domains, sensitivity-curve constants
    (1, 0.4, 0.5), speed-balance 0.12, and consequence coefficients 5 / 10
    for vehicles / pedestrians.
    """

    ego_length: float = 4.8        # m
    ego_width: float = 2.0         # m
    horizon: float = 4.0           # s, contact prediction window
    thw_weak: float = 2.4          # s, headway scale of the weak domain
    thw_strong: float = 1.2        # s, headway scale of the strong domain
    sens_a: float = 1.0            # sensitivity-curve amplitude (2-cycle term)
    sens_b: float = 0.4            # sensitivity-curve amplitude (4-cycle term)
    sens_c: float = 0.5            # sensitivity-curve floor
    beta: float = 0.12             # balance between speed and relative speed
    ms_vehicle: float = 5.0        # consequence coefficient, vehicle slots
    ms_pedestrian: float = 10.0    # consequence coefficient, pedestrian slots
    mu: tuple[float, ...] = field(default=(1.0,) * N_SLOTS)  # per-slot weights
    d_min: float = 0.1             # m, floor for distances used in divisions
    dt_scan: float = 0.01          # s, contact sweep step
    tol_t: float = 1e-3            # s, contact bisection tolerance
    clamp_spatial: bool = True     # cap spatial-decay coefficients at 1

    def __post_init__(self):
        if self.horizon <= 0:
            raise ValueError("horizon must be positive")
        if self.thw_strong > self.thw_weak:
            raise ValueError("thw_strong must not exceed thw_weak")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.ms_vehicle <= 0 or self.ms_pedestrian <= 0:
            raise ValueError("consequence coefficients must be positive")
        if len(self.mu) != N_SLOTS:
            raise ValueError(f"mu must have {N_SLOTS} entries")
        object.__setattr__(self, "mu", tuple(float(m) for m in self.mu))

    def ms(self, kind: ObjectKind) -> float:
        return self.ms_pedestrian if kind is ObjectKind.PEDESTRIAN else self.ms_vehicle


@dataclass(frozen=True)
class RiskBreakdown:
    """Per-object risk with every factor exposed for diagnostics."""

    slot: int
    triggered: bool
    tier: RpdTier | None
    t_r: float | None
    alpha_t: float
    alpha_ss: float
    alpha_ws: float
    s_theta: float
    energy: float
    risk: float


@dataclass(frozen=True)
class RiskVector:
    """The 40-slot perceived-risk row: slot i holds mu_i * R_i, empty slots 0."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (N_SLOTS,):
            raise ValueError(f"risk vector must have shape ({N_SLOTS},)")
        if not np.all(np.isfinite(values)):
            raise ValueError("risk vector contains non-finite values")
        if (values < 0).any():
            raise ValueError("risk vector contains negative values")
        object.__setattr__(self, "values", values)


def time_decay(t_r: float, horizon: float) -> float:
    """Decay with activation delay: horizon/(horizon + t_r), in [0.5, 1]."""
    if not 0.0 <= t_r <= horizon:
        raise ValueError(f"t_r={t_r} outside [0, {horizon}]")
    return horizon / (horizon + t_r)


def observation_sensitivity(theta: float, params: DsprParams) -> float:
    """Direction-dependent weighting of perceived risk, theta in [0, pi].

    Two cosine branches split at 90 degrees; the curve is evaluated exactly
    as parameterized (it is discontinuous at the split, where the second
    branch applies).
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta={theta} outside [0, pi]")
    a, b, c = params.sens_a, params.sens_b, params.sens_c
    if theta < math.pi / 2.0:
        return a * (math.cos(2.0 * theta) + 1.0) + b * (1.0 - math.cos(4.0 * theta)) + c
    return (a * (math.cos(2.0 * theta - math.pi) + 1.0)
            + b * (1.0 - math.cos(4.0 * theta - math.pi)) + c)


def spatial_decay(tier: RpdTier, theta_init: float, d_init: float,
                  theta_w: float, d_at_tr: float,
                  params: DsprParams, ego_speed: float) -> tuple[float, float]:
    """Distance-based decay pair (alpha_ss, alpha_ws).

    Both coefficients interpolate between the strong domain's full length
    (head-on) and width (abeam) via sin(theta), divided by center distance.
    Strong-tier contact fixes alpha_ws at 1; weak-tier contact evaluates it
    at the contact bearing and the activation-time distance. With
    clamp_spatial set, each coefficient is capped at 1.
    """
    hl, hw = rpd_half_extents(ego_speed, RpdTier.STRONG, params)
    l_s, w_s = 2.0 * hl, 2.0 * hw
    alpha_ss = (l_s - math.sin(theta_init) * (l_s - w_s)) / max(d_init, params.d_min)
    if tier is RpdTier.STRONG:
        alpha_ws = 1.0
    else:
        alpha_ws = (l_s - math.sin(theta_w) * (l_s - w_s)) / max(d_at_tr, params.d_min)
    if params.clamp_spatial:
        alpha_ss = min(alpha_ss, 1.0)
        alpha_ws = min(alpha_ws, 1.0)
    return alpha_ss, alpha_ws


def relative_kinetic_energy(ego_at_tr: KinematicState, obj_at_tr: KinematicState,
                            kind: ObjectKind, params: DsprParams) -> float:
    """Severity proxy from relative and absolute speeds at activation time.

    The closing rate is the projection of the relative velocity onto the
    ego-to-object direction (negative when approaching); approaching pairs
    carry the full weighted closing term, others only the speed-sum term.
    """
    evx, evy = ego_at_tr.velocity
    ovx, ovy = obj_at_tr.velocity
    v_rel = math.hypot(ovx - evx, ovy - evy)
    v_b = ego_at_tr.speed + obj_at_tr.speed

    dx = obj_at_tr.position[0] - ego_at_tr.position[0]
    dy = obj_at_tr.position[1] - ego_at_tr.position[1]
    dist = math.hypot(dx, dy)
    if dist < params.d_min:
        # Coincident centers: treat the full relative speed as closing.
        v_relp = -v_rel
    else:
        v_relp = ((ovx - evx) * dx + (ovy - evy) * dy) / dist

    beta = params.beta
    ms = params.ms(kind)
    if v_relp < 0.0:
        first = (1.0 - beta) * abs(v_relp) + beta * v_b
    else:
        first = beta * v_b
    return 0.5 * ms * first * (beta * (v_rel + v_b))


def background_energy(ego: KinematicState, kind: ObjectKind,
                      params: DsprParams) -> float:
    """Residual energy from the ego's own motion: 0.5 * ms * (beta * v_ego)^2."""
    return 0.5 * params.ms(kind) * (params.beta * ego.speed) ** 2


def object_risk(ego: KinematicState, obj: TrafficObject,
                params: DsprParams) -> RiskBreakdown:
    """Full risk decomposition for one traffic object.

    The strong domain is probed first; its contact wins over a weak-only
    contact. Untriggered objects fall back to the background term, with the
    decay coefficients reported as 1 so risk always equals their product
    with sensitivity and energy.
    """
    theta_init, d_init = bearing(ego, obj, params.d_min)
    s_theta = observation_sensitivity(theta_init, params)

    contact = first_contact(ego, obj, RpdTier.STRONG, params)
    if not contact.triggered:
        contact = first_contact(ego, obj, RpdTier.WEAK, params)

    if not contact.triggered:
        energy = background_energy(ego, obj.kind, params)
        return RiskBreakdown(
            slot=-1, triggered=False, tier=None, t_r=None,
            alpha_t=1.0, alpha_ss=1.0, alpha_ws=1.0,
            s_theta=s_theta, energy=energy, risk=s_theta * energy,
        )

    t_r = contact.t_r
    ego_tr = propagate(ego, t_r)
    obj_tr = propagate(obj.state, t_r)
    d_at_tr = math.hypot(obj_tr.position[0] - ego_tr.position[0],
                         obj_tr.position[1] - ego_tr.position[1])
    alpha_t = time_decay(t_r, params.horizon)
    alpha_ss, alpha_ws = spatial_decay(
        contact.tier, theta_init, d_init, contact.contact_angle, d_at_tr,
        params, ego.speed,
    )
    energy = relative_kinetic_energy(ego_tr, obj_tr, obj.kind, params)
    risk = alpha_t * alpha_ss * alpha_ws * s_theta * energy
    return RiskBreakdown(
        slot=-1, triggered=True, tier=contact.tier, t_r=t_r,
        alpha_t=alpha_t, alpha_ss=alpha_ss, alpha_ws=alpha_ws,
        s_theta=s_theta, energy=energy, risk=risk,
    )


def risk_vector(frame: Frame, params: DsprParams) -> tuple[RiskVector, list[RiskBreakdown]]:
    """Slot-ordered risk row for a frame plus per-slot breakdowns."""
    slots = nearest_objects(frame)
    values = np.zeros(N_SLOTS)
    breakdowns: list[RiskBreakdown] = []
    for i, obj in enumerate(slots):
        if obj is None:
            continue
        b = replace(object_risk(frame.ego, obj, params), slot=i)
        values[i] = params.mu[i] * b.risk
        breakdowns.append(b)
    return RiskVector(values), breakdowns


# ---------------------------------------------------------------------------
# Risk dump: one CSV row per (frame, slot)
# ---------------------------------------------------------------------------

DUMP_COLUMNS = ["model", "t", "slot", "triggered", "tier", "t_r",
                "alpha_t", "alpha_ss", "alpha_ws", "s_theta", "energy", "risk"]


def write_risk_dump(path, scenario, rows_per_frame: list[list[RiskBreakdown]],
                    timestamps=None, model: str = "dspr") -> None:
    """Write the per-(frame, slot) diagnostic CSV for a scenario.

    `rows_per_frame` holds the breakdown list of each frame; slots with no
    object get a zero row with blank factor columns.
    """
    times = timestamps if timestamps is not None else [f.timestamp for f in scenario.frames]
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(DUMP_COLUMNS)
        for t, breakdowns in zip(times, rows_per_frame):
            by_slot = {b.slot: b for b in breakdowns}
            for slot in range(N_SLOTS):
                b = by_slot.get(slot)
                if b is None:
                    writer.writerow([model, repr(t), slot, 0, "", "", "", "", "", "", "", 0.0])
                    continue
                writer.writerow([
                    model, repr(t), slot, int(b.triggered),
                    b.tier.value if b.tier else "",
                    "" if b.t_r is None else repr(b.t_r),
                    repr(b.alpha_t), repr(b.alpha_ss), repr(b.alpha_ws),
                    repr(b.s_theta), repr(b.energy), repr(b.risk),
                ])
