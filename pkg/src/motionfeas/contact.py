"""Contact feasibility: foot contacts, sliding, ground penetration, floating
and static balance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .dynamic import com_trajectory
from .geometry import convex_hull_2d, point_polygon_distance
from .kinematic import check_unit_interval, exact_mean
from .motion import BodyModel, MeshSequence, MotionTrajectory, frame_speed

SIDES = ("left", "right")


class MissingFootGeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ContactTimeline:
    c: np.ndarray            # (T, 2) bool, columns left/right
    foot_height: np.ndarray  # (T, 2)
    foot_pos: np.ndarray     # (T, 2, 3)
    foot_vel: np.ndarray     # (T, 2)
    frame_rate_hz: float
    source: str = "mesh"     # or "skeleton"

    @property
    def num_frames(self) -> int:
        return self.c.shape[0]


def detect_contacts(traj: MotionTrajectory, body: BodyModel, mesh: MeshSequence | None = None,
                    config: Config | None = None) -> ContactTimeline:
    """Per-foot ground contact: low (h < 0.02 m) and slow (|p'| < 0.05 m/s).

    Uses the body model's sole vertex sets when a mesh is given, otherwise
    the ankle and toe joints.
    """
    cfg = config or Config()
    if mesh is not None and body.has_foot_vertices:
        sets = (body.left_foot_vertices, body.right_foot_vertices)
        pts = [mesh.vertex_frames[:, idx] for idx in sets]
        source = "mesh"
    else:
        joints = [body.foot_joints(s) for s in SIDES]
        if not all(joints):
            raise MissingFootGeometryError("need sole vertex sets with a mesh, or ankle/foot joints")
        pts = [traj.positions[:, idx] for idx in joints]
        source = "skeleton"
    height = np.stack([p[..., 2].min(axis=1) for p in pts], axis=1)
    pos = np.stack([p.mean(axis=1) for p in pts], axis=1)
    vel = frame_speed(pos, traj.frame_rate_hz)
    c = (height < cfg.contact_height_max) & (vel < cfg.contact_vel_max)
    return ContactTimeline(c, height, pos, vel, traj.frame_rate_hz, source)


def slip_violation(timeline: ContactTimeline, slip_norm: float = 0.0025) -> tuple[float, float]:
    """Returns (normalized v_slip, raw mean slip in meters per foot-frame)."""
    slip = timeline.c * timeline.foot_vel / timeline.frame_rate_hz
    raw = float(slip.mean())
    return float(np.clip(raw / slip_norm, 0.0, 1.0)), raw


def penetration_violation(timeline: ContactTimeline, gpen_norm: float = 0.05) -> tuple[float, float]:
    raw = float(np.maximum(0.0, -timeline.foot_height).mean())
    return float(np.clip(raw / gpen_norm, 0.0, 1.0)), raw


def airborne_runs(c: np.ndarray) -> list[tuple[int, int]]:
    """Half-open [start, stop) runs of frames where neither foot is in contact."""
    air = ~c.any(axis=1)
    edges = np.diff(np.concatenate([[0], air.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def ballistic_residual(z: np.ndarray, frame_rate_hz: float, gravity: float) -> float:
    """RMS residual of z(t) against the best parabola with curvature -g/2."""
    t = np.arange(len(z)) / frame_rate_hz
    y = z + 0.5 * gravity * t * t
    A = np.stack([np.ones_like(t), t], axis=1)
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(np.sqrt(np.mean((y - A @ coef) ** 2)))


@dataclass(frozen=True)
class FloatResult:
    v_float: float
    flags: np.ndarray               # (T, 2)
    ratio: np.ndarray               # (T, 2)
    failed_runs: list[tuple[int, int]]
    checked_runs: list[tuple[int, int]]


def float_violation(traj: MotionTrajectory, timeline: ContactTimeline,
                    config: Config | None = None, gravity: float | None = None) -> FloatResult:
    cfg = config or Config()
    g = cfg.gravity if gravity is None else gravity
    f = traj.frame_rate_hz
    root = traj.positions[:, 0]
    rel_speed = frame_speed(timeline.foot_pos - root[:, None, :], f)
    root_speed = frame_speed(root, f)
    ratio = rel_speed / (root_speed[:, None] + cfg.rho_eps)
    flags = (ratio < cfg.rho_min) | (ratio > cfg.rho_max)
    # the ratio says nothing when the root is (nearly) still
    flags &= (root_speed >= cfg.root_speed_min)[:, None]
    checked, failed = [], []
    for start, stop in airborne_runs(timeline.c):
        if stop - start <= cfg.ballistic_min_frames:
            continue
        checked.append((start, stop))
        if ballistic_residual(root[start:stop, 2], f, g) > cfg.ballistic_rms_max:
            failed.append((start, stop))
            flags[start:stop] = True
    return FloatResult(float(flags.mean()), flags, ratio, failed, checked)


def _ankle_indices(body: BodyModel) -> list[int]:
    out = []
    for side in SIDES:
        joints = body.foot_joints(side)
        if not joints:
            raise MissingFootGeometryError(f"no {side} ankle joint")
        out.append(joints[0])
    return out


def balance_violation(traj: MotionTrajectory, timeline: ContactTimeline, body: BodyModel,
                      config: Config | None = None) -> tuple[float, np.ndarray]:
    """Mean clipped distance of the COM ground projection to the support polygon.

    Returns (v_bal, d) with per-frame distances d.
    """
    cfg = config or Config()
    com_xy = com_trajectory(traj, body)[:, :2]
    ankles = traj.positions[:, _ankle_indices(body), :2]
    d = np.empty(traj.num_frames)
    for t in range(traj.num_frames):
        touching = timeline.c[t]
        if not touching.any():
            d[t] = cfg.no_contact_distance
        else:
            d[t] = point_polygon_distance(com_xy[t], convex_hull_2d(ankles[t][touching]))
    clip = cfg.balance_clip
    return float(np.mean(np.clip(d, 0.0, clip) / clip)), d


def contact_score(v_slip: float, v_gpen: float, v_float: float, v_bal: float) -> float:
    check_unit_interval(v_slip=v_slip, v_gpen=v_gpen, v_float=v_float, v_bal=v_bal)
    return float(1 - exact_mean((v_slip, v_gpen, v_float, v_bal)))
