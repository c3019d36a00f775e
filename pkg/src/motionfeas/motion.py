"""Core motion data types, validation and finite differencing.

Conventions: +Z is up and the ground is the plane z = 0. Lengths are meters,
time seconds, angles radians. Quaternions are stored w, x, y, z.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import skeleton
from .config import Config

QUAT_TOL = 1e-6
QUAT_HARD_TOL = 1e-3


class MotionError(ValueError):
    """Malformed motion data."""


class TooFewFramesError(MotionError):
    pass


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


def normalize_quaternions(q: np.ndarray, strict: bool = True) -> np.ndarray:
    """Renormalize quaternions whose norm drifted by more than 1e-6.

    Norms off by more than 1e-3 raise MotionError when ``strict``; otherwise
    they are left as-is for validation to report. Quaternions already within
    tolerance are returned untouched so files round-trip.
    """
    q = np.asarray(q, dtype=np.float64)
    norms = np.linalg.norm(q, axis=-1)
    dev = np.abs(norms - 1.0)
    hard = ~np.isfinite(dev) | (dev > QUAT_HARD_TOL)
    if strict and np.any(hard):
        idx = tuple(int(i) for i in np.argwhere(hard)[0])
        raise MotionError(f"quaternion at {idx} has norm {norms[idx]:.6g}")
    fix = (dev > QUAT_TOL) & ~hard
    if np.any(fix):
        q = q.copy()
        q[fix] /= norms[fix][:, None]
    return q


@dataclass(frozen=True)
class Frame:
    positions: np.ndarray  # (J, 3)
    rotations: np.ndarray  # (J, 4) w-x-y-z


@dataclass(frozen=True)
class MotionTrajectory:
    """Joint positions and parent-relative rotations sampled at a fixed rate.

    ``positions`` has shape (T, J, 3) and ``rotations`` (T, J, 4). The root
    (joint 0) rotation is the global body orientation.
    """

    frame_rate_hz: float
    positions: np.ndarray
    rotations: np.ndarray
    subject_id: str = ""
    prompt_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "positions", _frozen(np.asarray(self.positions, dtype=np.float64)))
        object.__setattr__(self, "rotations", _frozen(np.asarray(self.rotations, dtype=np.float64)))

    @property
    def num_frames(self) -> int:
        return self.positions.shape[0]

    @property
    def num_joints(self) -> int:
        return self.positions.shape[1]

    @property
    def dt(self) -> float:
        return 1.0 / self.frame_rate_hz

    @property
    def frames(self) -> list[Frame]:
        return [Frame(p, r) for p, r in zip(self.positions, self.rotations)]

    @classmethod
    def from_frames(cls, frame_rate_hz: float, frames: Sequence[Frame], **kw) -> MotionTrajectory:
        return cls(frame_rate_hz,
                   np.stack([f.positions for f in frames]),
                   np.stack([f.rotations for f in frames]), **kw)

    def translated(self, offset) -> MotionTrajectory:
        return MotionTrajectory(self.frame_rate_hz, self.positions + np.asarray(offset, float),
                                self.rotations, self.subject_id, self.prompt_id)


@dataclass(frozen=True)
class MeshSequence:
    faces: np.ndarray          # (F, 3) int
    vertex_frames: np.ndarray  # (T, V, 3)

    def __post_init__(self):
        object.__setattr__(self, "faces", _frozen(np.asarray(self.faces, dtype=np.int64)))
        object.__setattr__(self, "vertex_frames",
                           _frozen(np.asarray(self.vertex_frames, dtype=np.float64)))

    @property
    def num_faces(self) -> int:
        return self.faces.shape[0]

    @property
    def num_vertices(self) -> int:
        return self.vertex_frames.shape[1]

    @property
    def num_frames(self) -> int:
        return self.vertex_frames.shape[0]

    def translated(self, offset) -> MeshSequence:
        return MeshSequence(self.faces, self.vertex_frames + np.asarray(offset, float))


@dataclass(frozen=True)
class BodyModel:
    """Skeleton topology plus per-joint physical limits.

    ``joint_limits`` is (J, 3, 2): per joint, per intrinsic XYZ Euler axis,
    the closed [min, max] range.
    """

    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    joint_limits: np.ndarray
    omega_max: np.ndarray
    torque_max: np.ndarray
    inertia: np.ndarray
    com_weights: np.ndarray
    mass_kg: float = 70.0
    gravity: float = 9.81
    left_foot_vertices: Optional[np.ndarray] = None
    right_foot_vertices: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("joint_limits", "omega_max", "torque_max", "inertia", "com_weights"):
            object.__setattr__(self, name, _frozen(np.asarray(getattr(self, name), dtype=np.float64)))
        for name in ("left_foot_vertices", "right_foot_vertices"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, _frozen(np.asarray(v, dtype=np.int64)))
        problems = _check_body(self)
        if problems:
            raise MotionError("; ".join(problems))

    @property
    def num_joints(self) -> int:
        return len(self.joint_names)

    def index(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"body model has no joint {name!r}") from None

    def foot_joints(self, side: str) -> list[int]:
        """Indices of ``<side>_ankle`` and ``<side>_foot`` that exist."""
        return [self.joint_names.index(n) for n in (f"{side}_ankle", f"{side}_foot")
                if n in self.joint_names]

    @property
    def has_foot_vertices(self) -> bool:
        return (self.left_foot_vertices is not None and self.right_foot_vertices is not None
                and len(self.left_foot_vertices) > 0 and len(self.right_foot_vertices) > 0)

    @classmethod
    def from_joints(cls, joint_names: Sequence[str], parents: Sequence[int],
                    config: Config | None = None,
                    left_foot_vertices=None, right_foot_vertices=None,
                    joint_limits: dict | None = None) -> BodyModel:
        """Build a body model filling per-joint values from the default tables.

        Joint limits start from the default table, then ``joint_limits``
        (usually from the trajectory file), then ``config.joint_limits``;
        later sources win.
        """
        cfg = config or Config()
        names = tuple(joint_names)
        limits = np.empty((len(names), 3, 2))
        omega = np.empty(len(names))
        torque = np.empty(len(names))
        for j, name in enumerate(names):
            limits[j] = skeleton.default_joint_limits(name)
            for source in ((joint_limits or {}).get(name, {}), cfg.joint_limits.get(name, {})):
                for axis, rng in _axis_items(source):
                    limits[j, axis] = rng
            omega[j] = cfg.omega_max.get(name, skeleton.default_omega_max(name))
            cls_name = skeleton.torque_class(name)
            torque[j] = cfg.torque_max.get(cls_name, cfg.torque_max["default"])
        weights = np.ones(len(names))
        weights[0] = 3.0
        return cls(names, tuple(int(p) for p in parents), limits, omega, torque,
                   np.full(len(names), cfg.inertia), weights,
                   mass_kg=cfg.mass_kg, gravity=cfg.gravity,
                   left_foot_vertices=left_foot_vertices,
                   right_foot_vertices=right_foot_vertices)

    @classmethod
    def smplx(cls, config: Config | None = None, **kw) -> BodyModel:
        return cls.from_joints(skeleton.SMPLX_JOINT_NAMES, skeleton.SMPLX_PARENTS, config, **kw)


def _axis_items(source):
    """Yield (axis index, (lo, hi)) from either {"x": [..]} or [[..], [..], [..]]."""
    if isinstance(source, dict):
        for axis, rng in source.items():
            yield "xyz".index(axis), tuple(rng)
    else:
        for axis, rng in enumerate(source):
            yield axis, tuple(rng)


def _check_body(body: BodyModel) -> list[str]:
    J = len(body.joint_names)
    out = []
    if len(body.parents) != J:
        out.append("parents length differs from joint_names")
        return out
    if J == 0 or body.parents[0] != -1:
        out.append("joint 0 must be the root (parent -1)")
    for j, p in enumerate(body.parents[1:], start=1):
        if not 0 <= p < j:
            out.append(f"joint {j} has parent {p}; parents must precede children")
    if body.joint_limits.shape != (J, 3, 2):
        out.append(f"joint_limits shape {body.joint_limits.shape}, expected {(J, 3, 2)}")
    elif not np.all(np.isfinite(body.joint_limits)):
        out.append("joint limits must be finite")
    elif np.any(body.joint_limits[..., 0] > body.joint_limits[..., 1]):
        out.append("joint limit min exceeds max")
    for name in ("omega_max", "torque_max", "inertia", "com_weights"):
        arr = getattr(body, name)
        if arr.shape != (J,):
            out.append(f"{name} shape {arr.shape}, expected {(J,)}")
    if body.com_weights.shape == (J,) and np.any(body.com_weights <= 0):
        out.append("com_weights must be positive")
    return out


@dataclass
class ValidationResult:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self) -> bool:
        return self.ok


def validate_trajectory(traj: MotionTrajectory, body: BodyModel,
                        mesh: MeshSequence | None = None) -> ValidationResult:
    """Collect every structural problem instead of stopping at the first."""
    res = ValidationResult()
    P, R = traj.positions, traj.rotations
    if not traj.frame_rate_hz > 0 or not np.isfinite(traj.frame_rate_hz):
        res.problems.append(f"frame rate must be positive, got {traj.frame_rate_hz}")
    if P.ndim != 3 or P.shape[2] != 3:
        res.problems.append(f"positions shape {P.shape}, expected (T, J, 3)")
        return res
    if R.shape != P.shape[:2] + (4,):
        res.problems.append(f"rotations shape {R.shape}, expected {P.shape[:2] + (4,)}")
        return res
    T, J = P.shape[:2]
    if T < 2:
        res.problems.append(f"need at least 2 frames, got {T}")
    if J != body.num_joints:
        res.problems.append(f"trajectory has {J} joints, body model has {body.num_joints}")
    for t, j in np.argwhere(~np.isfinite(P).all(axis=2))[:10]:
        res.problems.append(f"non-finite position at ({t},{j})")
    norms = np.linalg.norm(R, axis=2)
    bad = ~np.isfinite(norms) | (np.abs(norms - 1.0) > QUAT_TOL)
    for t, j in np.argwhere(bad)[:10]:
        res.problems.append(f"non-unit quaternion at ({t},{j}): norm {norms[t, j]:.6g}")
    if mesh is not None:
        res.problems.extend(_check_mesh(mesh, T))
        if mesh.num_vertices and body.has_foot_vertices:
            V = mesh.num_vertices
            for side, idx in (("left", body.left_foot_vertices), ("right", body.right_foot_vertices)):
                if np.any((idx < 0) | (idx >= V)):
                    res.problems.append(f"{side} foot vertex index out of range")
    return res


def _check_mesh(mesh: MeshSequence, T: int) -> list[str]:
    out = []
    F, VF = mesh.faces, mesh.vertex_frames
    if F.ndim != 2 or F.shape[1] != 3:
        return [f"faces shape {F.shape}, expected (F, 3)"]
    if VF.ndim != 3 or VF.shape[2] != 3:
        return [f"vertex_frames shape {VF.shape}, expected (T, V, 3)"]
    if VF.shape[0] != T:
        out.append(f"mesh has {VF.shape[0]} frames, trajectory has {T}")
    V = VF.shape[1]
    if F.size and (F.min() < 0 or F.max() >= V):
        out.append("face index out of range")
    if not np.all(np.isfinite(VF)):
        out.append("non-finite mesh vertex")
    return out


def finite_difference(series, frame_rate_hz: float, order: int = 1) -> np.ndarray:
    """Time derivative of a (T, ...) series.

    order=1: forward differences, length T-1.
    order=2: central second differences, length T, with the 3-point one-sided
    stencil at both boundary frames (exact for quadratics).
    """
    x = np.asarray(series, dtype=np.float64)
    f = float(frame_rate_hz)
    T = x.shape[0]
    if order == 1:
        if T < 2:
            raise TooFewFramesError(f"first difference needs 2 frames, got {T}")
        return (x[1:] - x[:-1]) * f
    if order == 2:
        if T < 3:
            raise TooFewFramesError(f"second difference needs 3 frames, got {T}")
        acc = np.empty_like(x)
        acc[1:-1] = x[2:] - 2.0 * x[1:-1] + x[:-2]
        acc[0] = x[2] - 2.0 * x[1] + x[0]
        acc[-1] = x[-1] - 2.0 * x[-2] + x[-3]
        return acc * (f * f)
    raise ValueError(f"order must be 1 or 2, got {order}")


def frame_speed(series, frame_rate_hz: float) -> np.ndarray:
    """Per-frame speed ‖dx/dt‖ of a (T, ..., 3) series, length T.

    Forward difference everywhere; the last frame reuses the final interval.
    """
    v = np.linalg.norm(finite_difference(series, frame_rate_hz, 1), axis=-1)
    return np.concatenate([v, v[-1:]], axis=0)
