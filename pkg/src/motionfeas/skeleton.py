"""SMPL-X 55-joint skeleton layout and default per-joint limit tables.

All angular values are radians, torques N·m. Joint-limit ranges are given per
intrinsic XYZ Euler axis of the parent-relative joint rotation.
"""

import math

_HAND_PARTS = ["index", "middle", "pinky", "ring", "thumb"]


def _hand(side: str) -> list[str]:
    return [f"{side}_{part}{i}" for part in _HAND_PARTS for i in (1, 2, 3)]


SMPLX_JOINT_NAMES: list[str] = [
    "pelvis", "left_hip", "right_hip", "spine1", "left_knee", "right_knee",
    "spine2", "left_ankle", "right_ankle", "spine3", "left_foot", "right_foot",
    "neck", "left_collar", "right_collar", "head", "left_shoulder",
    "right_shoulder", "left_elbow", "right_elbow", "left_wrist", "right_wrist",
    "jaw", "left_eye_smplhf", "right_eye_smplhf",
] + _hand("left") + _hand("right")


def _hand_parents(wrist: int, first: int) -> list[int]:
    parents = []
    for k in range(len(_HAND_PARTS)):
        base = first + 3 * k
        parents += [wrist, base, base + 1]
    return parents


SMPLX_PARENTS: list[int] = [
    -1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 12, 13, 14, 16, 17, 18, 19,
    15, 15, 15,
] + _hand_parents(20, 25) + _hand_parents(21, 40)

assert len(SMPLX_JOINT_NAMES) == 55 and len(SMPLX_PARENTS) == 55

PI = math.pi
FULL = (-PI, PI)

# Per-axis (x, y, z) ranges. Every range contains 0 so the rest pose is valid.
_LIMITS_BY_KIND: dict[str, tuple[tuple[float, float], ...]] = {
    "root": (FULL, FULL, FULL),
    "hip": ((-2.5, 1.0), (-1.0, 1.0), (-1.0, 1.0)),
    "knee": ((-0.1, 2.7), (-0.3, 0.3), (-0.3, 0.3)),
    "ankle": ((-0.9, 0.9), (-0.6, 0.6), (-0.6, 0.6)),
    "foot": ((-0.8, 0.8), (-0.3, 0.3), (-0.3, 0.3)),
    "spine": ((-0.8, 0.8), (-0.6, 0.6), (-0.6, 0.6)),
    "neck": ((-1.0, 1.0), (-1.2, 1.2), (-0.8, 0.8)),
    "head": ((-0.8, 0.8), (-1.0, 1.0), (-0.6, 0.6)),
    "collar": ((-0.5, 0.5), (-0.6, 0.6), (-0.6, 0.6)),
    "shoulder": ((-2.5, 2.5), (-2.0, 2.0), (-2.0, 2.0)),
    "elbow": ((-0.5, 0.5), (-2.8, 2.8), (-0.5, 0.5)),
    "wrist": ((-1.4, 1.4), (-1.0, 1.0), (-1.0, 1.0)),
    "jaw": ((-0.2, 0.6), (-0.2, 0.2), (-0.2, 0.2)),
    "eye": ((-0.6, 0.6), (-0.8, 0.8), (-0.6, 0.6)),
    "finger": ((-0.5, 0.5), (-0.5, 0.5), (-0.3, 2.0)),
    "thumb": ((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)),
    "other": (FULL, FULL, FULL),
}

TORQUE_LIMITS: dict[str, float] = {
    "ankle": 200.0,
    "knee": 300.0,
    "hip": 400.0,
    "spine": 200.0,
    "default": 200.0,
}

OMEGA_LIMB = 2 * PI
OMEGA_AXIAL = PI


def joint_kind(name: str) -> str:
    """Coarse anatomical class of an SMPL-X style joint name."""
    n = name.lower()
    if n == "pelvis" or n == "root":
        return "root"
    if "thumb" in n:
        return "thumb"
    if any(p in n for p in ("index", "middle", "pinky", "ring")):
        return "finger"
    if "eye" in n:
        return "eye"
    for kind in ("hip", "knee", "ankle", "spine", "neck", "head", "collar",
                 "shoulder", "elbow", "wrist", "jaw"):
        if kind in n:
            return kind
    if n.endswith("foot") or "toe" in n:
        return "foot"
    return "other"


def default_joint_limits(name: str) -> tuple[tuple[float, float], ...]:
    return _LIMITS_BY_KIND[joint_kind(name)]


def default_omega_max(name: str) -> float:
    # axial chain (root, spine, neck, head) is slower than limbs
    kind = joint_kind(name)
    if kind in ("root", "spine", "neck", "head", "jaw", "eye"):
        return OMEGA_AXIAL
    return OMEGA_LIMB


def torque_class(name: str) -> str:
    """Map a joint to one of the torque-limit classes (ankle/knee/hip/spine/default).

    Toe joints count as ankle, the pelvis falls through to default.
    """
    kind = joint_kind(name)
    if kind in ("ankle", "foot"):
        return "ankle"
    if kind in ("knee", "hip", "spine"):
        return kind
    return "default"
