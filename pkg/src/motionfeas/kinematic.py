"""Kinematic feasibility: joint angular speed, joint limits, self-penetration."""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from .motion import BodyModel, MotionTrajectory


class MissingLimitsError(ValueError):
    pass


class DomainError(ValueError):
    """A score input outside [0, 1]."""


@dataclass(frozen=True)
class KinematicViolations:
    v_vel: float
    v_spen: float
    v_lim: float
    per_joint_velocity_flags: np.ndarray  # (T-1, J)
    per_joint_limit_flags: np.ndarray     # (T, D)


def check_unit_interval(**values: float) -> None:
    for name, v in values.items():
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"{name}={v!r} is outside [0, 1]")


def exact_mean(values: Sequence[float], weights: Sequence[float] | None = None) -> Fraction:
    """Exact (weighted) mean of finite floats as a Fraction.

    Score formulas are evaluated exactly and rounded once, so every reported
    score is the correctly rounded value of its defining formula.
    """
    if weights is None:
        weights = [1.0] * len(values)
    num = sum(Fraction(float(w)) * Fraction(float(v)) for v, w in zip(values, weights))
    return num / sum(Fraction(float(w)) for w in weights)


def quaternion_geodesic(q1: np.ndarray, q2: np.ndarray) -> np.ndarray:
    """Rotation angle between unit quaternions, in [0, pi]."""
    dot = np.abs(np.einsum("...k,...k->...", q1, q2))
    return 2.0 * np.arccos(np.minimum(1.0, dot))


def angular_velocity(traj: MotionTrajectory) -> np.ndarray:
    """(T-1, J) joint angular speeds in rad/s from consecutive rotations."""
    q = traj.rotations
    return traj.frame_rate_hz * quaternion_geodesic(q[1:], q[:-1])


def velocity_violation(omega: np.ndarray, body: BodyModel) -> tuple[float, np.ndarray]:
    flags = omega > body.omega_max[None, :]
    return float(flags.mean()), flags


def joint_euler_angles(traj: MotionTrajectory) -> np.ndarray:
    """(T, J, 3) intrinsic XYZ Euler angles of every joint rotation."""
    q = traj.rotations.reshape(-1, 4)
    with warnings.catch_warnings():
        # gimbal lock only affects how x and z split, both still reported
        warnings.simplefilter("ignore", UserWarning)
        angles = Rotation.from_quat(q[:, [1, 2, 3, 0]]).as_euler("XYZ")
    return angles.reshape(traj.num_frames, traj.num_joints, 3)


def joint_limit_violation(traj: MotionTrajectory, body: BodyModel) -> tuple[float, np.ndarray]:
    """Fraction of (frame, DoF) entries outside the closed joint ranges.

    Returns v_lim and flags of shape (T, 3J).
    """
    limits = body.joint_limits
    if limits is None or limits.size == 0:
        raise MissingLimitsError("body model has no joint limits")
    angles = joint_euler_angles(traj)
    flags = (angles < limits[None, :, :, 0]) | (angles > limits[None, :, :, 1])
    flags = flags.reshape(traj.num_frames, -1)
    return float(flags.mean()), flags


def kinematic_score(v_vel: float, v_spen: float, v_lim: float) -> float:
    check_unit_interval(v_vel=v_vel, v_spen=v_spen, v_lim=v_lim)
    return float(1 - exact_mean((v_vel, v_spen, v_lim)))


def kinematic_violations(traj: MotionTrajectory, body: BodyModel, v_spen: float = 0.0) -> KinematicViolations:
    v_vel, vflags = velocity_violation(angular_velocity(traj), body)
    v_lim, lflags = joint_limit_violation(traj, body)
    return KinematicViolations(v_vel, v_spen, v_lim, vflags, lflags)
