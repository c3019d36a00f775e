"""Synthetic trajectories with known scores, used by ``selfcheck`` and tests.

Coordinates of the standing pose are multiples of 1/64 m so that sums over
joints are exact and the oracle scores come out exactly.
"""

from __future__ import annotations

import numpy as np

from .config import Config
from .io import MotionFile
from .motion import BodyModel, MeshSequence, MotionTrajectory
from .skeleton import SMPLX_JOINT_NAMES, SMPLX_PARENTS

FRAME_RATE = 16.0
IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])

# (x, z) for left-side / centre joints, y = 0 everywhere; right side mirrors x.
_CENTRE = {
    "pelvis": 0.9375, "spine1": 1.0625, "spine2": 1.1875, "spine3": 1.3125,
    "neck": 1.5, "head": 1.625, "jaw": 1.5625,
}
_LEFT = {
    "hip": (0.125, 0.875), "knee": (0.125, 0.5), "ankle": (0.125, 0.0625),
    "foot": (0.125, 0.015625), "collar": (0.0625, 1.4375), "shoulder": (0.1875, 1.4375),
    "elbow": (0.25, 1.1875), "wrist": (0.3125, 0.9375), "eye_smplhf": (0.03125, 1.6875),
}
_FINGERS = ("index", "middle", "pinky", "ring", "thumb")


def standing_positions() -> np.ndarray:
    """(55, 3) symmetric standing pose, feet flat, COM above the ankle midpoint."""
    pos = np.zeros((len(SMPLX_JOINT_NAMES), 3))
    for j, name in enumerate(SMPLX_JOINT_NAMES):
        if name in _CENTRE:
            pos[j] = (0.0, 0.0, _CENTRE[name])
            continue
        side, _, part = name.partition("_")
        sign = 1.0 if side == "left" else -1.0
        if part in _LEFT:
            x, z = _LEFT[part]
        else:
            finger = _FINGERS.index(part[:-1])
            seg = int(part[-1])
            x = 0.3125 + 0.015625 * finger
            z = 0.9375 - 0.03125 * seg
        pos[j] = (sign * x, 0.0, z)
    return pos


def _box(lo, hi, base: int):
    """Closed box surface: 8 vertices, 12 outward triangles."""
    (x0, y0, z0), (x1, y1, z1) = lo, hi
    verts = np.array([[x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
                      [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1]], dtype=float)
    quads = [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4), (1, 2, 6, 5), (2, 3, 7, 6), (3, 0, 4, 7)]
    faces = []
    for a, b, c, d in quads:
        faces += [(a, b, c), (a, c, d)]
    return verts, np.array(faces) + base


def standing_mesh_frame():
    """Two foot boxes and a torso box; returns (vertices, faces, left_sole, right_sole)."""
    parts = [((0.0625, -0.0625, 0.0), (0.1875, 0.1875, 0.0625)),
             ((-0.1875, -0.0625, 0.0), (-0.0625, 0.1875, 0.0625)),
             ((-0.125, -0.0625, 0.75), (0.125, 0.0625, 1.5))]
    verts, faces = [], []
    for k, (lo, hi) in enumerate(parts):
        v, f = _box(lo, hi, 8 * k)
        verts.append(v)
        faces.append(f)
    return np.concatenate(verts), np.concatenate(faces), np.arange(4), np.arange(8, 12)


def static_standing(num_frames: int = 16, with_mesh: bool = True) -> MotionFile:
    pos = np.broadcast_to(standing_positions(), (num_frames, 55, 3))
    rot = np.broadcast_to(IDENTITY, (num_frames, 55, 4))
    traj = MotionTrajectory(FRAME_RATE, pos, rot, subject_id="static", prompt_id="stand")
    mesh, feet = None, None
    if with_mesh:
        v, f, left, right = standing_mesh_frame()
        mesh = MeshSequence(f, np.broadcast_to(v, (num_frames,) + v.shape))
        feet = {"left": left.tolist(), "right": right.tolist()}
    return MotionFile(traj, tuple(SMPLX_JOINT_NAMES), tuple(SMPLX_PARENTS), mesh, feet)


def ballistic(num_frames: int = 8, z0: float = 0.5, vz: float = 2.0, vx: float = 1.0,
              gravity: float = 9.81) -> MotionFile:
    """Standing pose thrown as a rigid projectile; feet never touch down."""
    t = np.arange(num_frames) / FRAME_RATE
    offset = np.stack([vx * t, np.zeros_like(t), z0 + vz * t - 0.5 * gravity * t * t], axis=1)
    base = static_standing(num_frames)
    mesh = base.mesh
    moved_mesh = MeshSequence(mesh.faces, mesh.vertex_frames + offset[:, None, :])
    traj = MotionTrajectory(FRAME_RATE, base.trajectory.positions + offset[:, None, :],
                            base.trajectory.rotations, subject_id="ballistic", prompt_id="jump")
    return MotionFile(traj, base.joint_names, base.parents, moved_mesh, base.foot_vertex_sets)


def _fan_mesh(n: int, centre) -> tuple[np.ndarray, np.ndarray]:
    """n triangles around a common vertical axis, pairwise crossing, no shared vertices."""
    verts, faces = [], []
    for k in range(n):
        ang = np.pi * k / n
        d = np.array([np.cos(ang), np.sin(ang), 0.0])
        base = len(verts)
        verts += [centre - 0.2 * d + [0, 0, -0.1 - 0.01 * k], centre + 0.2 * d + [0, 0, -0.1 - 0.01 * k],
                  centre + [0, 0, 0.3 + 0.01 * k]]
        faces.append((base, base + 1, base + 2))
    return np.array(verts), np.array(faces)


def everything_violated(num_frames: int = 16) -> tuple[MotionFile, BodyModel]:
    """Trajectory plus a tightened body model under which every term saturates."""
    f = FRAME_RATE
    t = np.arange(num_frames) / f
    J = len(SMPLX_JOINT_NAMES)
    base = standing_positions()
    pos = np.empty((num_frames, J, 3))
    # the rest of the body accelerates hard up and forward, far from the ankles' polygon
    cluster = base[None] + np.stack([50.0 * t * t, np.zeros_like(t), 50.0 * t * t], axis=1)[:, None, :]
    pos[:] = cluster
    ankles = [SMPLX_JOINT_NAMES.index("left_ankle"), SMPLX_JOINT_NAMES.index("right_ankle")]
    pos[:, ankles, 1] += 3.0
    # root creeps at ~0.04 m/s with a small constant acceleration
    root_x = 0.041 * t + 0.002 * t * t
    pos[:, 0] = np.stack([root_x, np.zeros_like(t), np.full_like(t, 0.9375)], axis=1)
    half_turn = np.array([0.0, 1.0, 0.0, 0.0])
    rot = np.where((np.arange(num_frames) % 2 == 0)[:, None, None], IDENTITY, half_turn)
    rot = np.broadcast_to(rot, (num_frames, J, 4))
    traj = MotionTrajectory(f, pos, rot, subject_id="bad", prompt_id="bad")

    fan_v, fan_f = _fan_mesh(24, np.array([0.0, 0.0, 1.0]))
    # sole vertices sink 6 cm below ground and slide with the root
    sole = np.array([[0.1, 0.0, -0.06], [0.15, 0.0, -0.06], [-0.1, 0.0, -0.06], [-0.15, 0.0, -0.06]])
    frames = []
    for k in range(num_frames):
        s = sole.copy()
        s[:, 0] += root_x[k]
        frames.append(np.concatenate([fan_v, s]))
    mesh = MeshSequence(fan_f, np.stack(frames))
    nv = len(fan_v)
    feet = {"left": [nv, nv + 1], "right": [nv + 2, nv + 3]}
    mf = MotionFile(traj, tuple(SMPLX_JOINT_NAMES), tuple(SMPLX_PARENTS), mesh, feet)
    cfg = Config().with_overrides({"dynamics.torque_max.default": 1e-3,
                                   "dynamics.torque_max.ankle": 1e-3,
                                   "dynamics.torque_max.knee": 1e-3,
                                   "dynamics.torque_max.hip": 1e-3,
                                   "dynamics.torque_max.spine": 1e-3})
    tight = {name: {axis: (0.5, 0.6) for axis in "xyz"} for name in SMPLX_JOINT_NAMES}
    body = BodyModel.from_joints(mf.joint_names, mf.parents, cfg,
                                 left_foot_vertices=feet["left"], right_foot_vertices=feet["right"],
                                 joint_limits=tight)
    return mf, body


def random_motion(seed: int, num_frames: int = 24, prompt_id: str | None = None,
                  with_mesh: bool = True) -> MotionFile:
    """Standing pose with smooth random sway and joint rotations; feet mostly planted."""
    rng = np.random.default_rng(seed)
    t = np.arange(num_frames) / FRAME_RATE
    J = len(SMPLX_JOINT_NAMES)
    base = standing_positions()
    amp = rng.uniform(0.0, 0.05, size=(J, 3))
    planted = [SMPLX_JOINT_NAMES.index(n) for n in ("left_ankle", "right_ankle", "left_foot", "right_foot")]
    amp[planted] *= rng.uniform(0.0, 0.1)
    freq = rng.uniform(0.5, 3.0, size=(J, 3))
    phase = rng.uniform(0, 2 * np.pi, size=(J, 3))
    wobble = amp[None] * np.sin(2 * np.pi * freq[None] * t[:, None, None] + phase[None])
    drift = np.stack([rng.uniform(-0.05, 0.05) * t, rng.uniform(-0.05, 0.05) * t, np.zeros_like(t)], axis=1)
    lift = rng.uniform(-0.03, 0.08)
    pos = base[None] + wobble + drift[:, None, :] + [0.0, 0.0, lift]
    axis = rng.normal(size=(J, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    speed = rng.uniform(0.0, 1.5, size=J)
    angle = 0.5 * np.sin(speed[None] * 2 * np.pi * t[:, None])  # (T, J)
    rot = np.concatenate([np.cos(angle / 2)[..., None], np.sin(angle / 2)[..., None] * axis[None]], axis=2)
    traj = MotionTrajectory(FRAME_RATE, pos, rot, subject_id=f"rand{seed:03d}",
                            prompt_id=prompt_id if prompt_id is not None else f"p{seed % 5}")
    mesh, feet = None, None
    if with_mesh:
        v, f, left, right = standing_mesh_frame()
        ankle = [SMPLX_JOINT_NAMES.index("left_ankle"), SMPLX_JOINT_NAMES.index("right_ankle")]
        frames = np.broadcast_to(v, (num_frames,) + v.shape).copy()
        for k, idx in enumerate((np.arange(8), np.arange(8, 16))):
            frames[:, idx] += (pos[:, ankle[k]] - base[ankle[k]])[:, None, :]
        frames[:, 16:] += (pos[:, 0] - base[0])[:, None, :]
        mesh = MeshSequence(f, frames)
        feet = {"left": left.tolist(), "right": right.tolist()}
    return MotionFile(traj, tuple(SMPLX_JOINT_NAMES), tuple(SMPLX_PARENTS), mesh, feet)


def smplx_sized_mesh(num_lat: int = 88, num_lon: int = 119, holes: int = 36):
    """Closed UV-sphere body proxy with SMPL-X counts (V=10475, F=20908).

    88 x 119 rings plus two poles is 10474 vertices and 20944 faces; one
    unreferenced vertex and 36 removed faces match the SMPL-X layout sizes.
    """
    theta = np.linspace(0.0, np.pi, num_lat + 2)[1:-1]
    phi = np.linspace(0.0, 2 * np.pi, num_lon, endpoint=False)
    ring = np.stack([np.outer(np.sin(theta), np.cos(phi)).ravel(),
                     np.outer(np.sin(theta), np.sin(phi)).ravel(),
                     np.repeat(np.cos(theta), num_lon)], axis=1)
    verts = np.concatenate([[[0.0, 0.0, 1.0]], ring, [[0.0, 0.0, -1.0]], [[0.0, 0.0, 0.0]]])
    south = 1 + num_lat * num_lon

    def idx(i, k):
        return 1 + i * num_lon + (k % num_lon)

    faces = [(0, idx(0, k), idx(0, k + 1)) for k in range(num_lon)]
    for i in range(num_lat - 1):
        for k in range(num_lon):
            faces += [(idx(i, k), idx(i + 1, k), idx(i + 1, k + 1)),
                      (idx(i, k), idx(i + 1, k + 1), idx(i, k + 1))]
    faces += [(south, idx(num_lat - 1, k + 1), idx(num_lat - 1, k)) for k in range(num_lon)]
    faces = np.array(faces[holes:])
    # body-sized ellipsoid standing on the ground
    verts = verts * [0.2, 0.15, 0.85] + [0.0, 0.0, 0.85]
    return verts, faces


def smplx_sized(num_frames: int = 3, seed: int = 0) -> MotionFile:
    rng = np.random.default_rng(seed)
    verts, faces = smplx_sized_mesh()
    jitter = rng.normal(scale=1e-3, size=(num_frames,) + verts.shape)
    vf = verts[None] + jitter
    motion = random_motion(seed, num_frames, with_mesh=False)
    z = verts[:, 2]
    lowest = np.argsort(z, kind="stable")[:40]
    left = sorted(int(i) for i in lowest if verts[i, 0] >= 0)
    right = sorted(int(i) for i in lowest if verts[i, 0] < 0)
    return MotionFile(motion.trajectory, motion.joint_names, motion.parents,
                      MeshSequence(faces, vf), {"left": left, "right": right})
