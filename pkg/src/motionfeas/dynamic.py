"""Dynamic feasibility from a point-mass and segment-inertia approximation.

Ground reaction force follows Newton's second law on the weighted joint
centroid; per-joint torque is inertia times joint linear acceleration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Config
from .kinematic import check_unit_interval, exact_mean
from .motion import BodyModel, MotionTrajectory, finite_difference


@dataclass(frozen=True)
class DynamicsTrace:
    com: np.ndarray      # (T, 3)
    com_acc: np.ndarray  # (T, 3)
    grf: np.ndarray      # (T, 3)
    torque: np.ndarray   # (T, J)
    met_total: float


def com_trajectory(traj: MotionTrajectory, body: BodyModel) -> np.ndarray:
    w = body.com_weights
    return np.einsum("tjk,j->tk", traj.positions, w) / w.sum()


def grf_estimate(com: np.ndarray, body: BodyModel, frame_rate_hz: float):
    """Force the ground must supply for the observed COM acceleration.

    Returns (grf, com_acc), both (T, 3).
    """
    acc = finite_difference(com, frame_rate_hz, order=2)
    grf = body.mass_kg * acc
    grf[:, 2] = body.mass_kg * (body.gravity + acc[:, 2])
    return grf, acc


def grf_score(grf: np.ndarray, body: BodyModel, config: Config | None = None) -> tuple[float, float, float]:
    """Returns (s_grf, v_vert, v_horiz)."""
    cfg = config or Config()
    weight = body.mass_kg * body.gravity
    v_vert = float(np.mean(grf[:, 2] > cfg.grf_vertical_factor * weight))
    horiz = np.hypot(grf[:, 0], grf[:, 1])
    v_horiz = float(np.mean(horiz > cfg.grf_horizontal_factor * weight))
    return 1.0 - (v_vert + v_horiz) / 2.0, v_vert, v_horiz


def joint_torques(traj: MotionTrajectory, body: BodyModel) -> np.ndarray:
    acc = finite_difference(traj.positions, traj.frame_rate_hz, order=2)
    return body.inertia[None, :] * np.linalg.norm(acc, axis=2)


def torque_score(traj: MotionTrajectory, body: BodyModel) -> tuple[float, np.ndarray]:
    """s_tau = 1 - mean over joints of the fraction of frames above the limit."""
    tau = joint_torques(traj, body)
    per_joint = np.mean(tau > body.torque_max[None, :], axis=0)
    return 1.0 - float(per_joint.mean()), tau


def met_score(traj: MotionTrajectory, torque: np.ndarray, met_norm: float = 10000.0) -> tuple[float, float]:
    """Mechanical-work proxy sum(tau * |xdot| * dt) and its score.

    Joint speed is the forward difference, so the sum runs over the first T-1
    frames of the torque trace.
    """
    speed = np.linalg.norm(finite_difference(traj.positions, traj.frame_rate_hz, 1), axis=2)
    met = float(np.sum(torque[:-1] * speed) * traj.dt)
    return met_to_score(met, met_norm), met


def met_to_score(met: float, met_norm: float = 10000.0) -> float:
    return max(0.0, 1.0 - met / met_norm)


def dynamic_score(s_tau: float, s_grf: float, s_met: float) -> float:
    check_unit_interval(s_tau=s_tau, s_grf=s_grf, s_met=s_met)
    return float(exact_mean((s_tau, s_grf, s_met)))


@dataclass(frozen=True)
class DynamicScores:
    s_tau: float
    s_grf: float
    s_met: float
    v_grf_vertical: float
    v_grf_horizontal: float
    trace: DynamicsTrace


def dynamic_scores(traj: MotionTrajectory, body: BodyModel, config: Config | None = None) -> DynamicScores:
    cfg = config or Config()
    com = com_trajectory(traj, body)
    grf, acc = grf_estimate(com, body, traj.frame_rate_hz)
    s_grf, v_vert, v_horiz = grf_score(grf, body, cfg)
    s_tau, tau = torque_score(traj, body)
    s_met, met = met_score(traj, tau, cfg.met_norm)
    return DynamicScores(s_tau, s_grf, s_met, v_vert, v_horiz,
                         DynamicsTrace(com, acc, grf, tau, met))
