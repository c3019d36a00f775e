"""Trajectory file formats.

Two containers carry the same content:

* canonical JSON (``.json``) with keys ``version, frame_rate_hz, subject_id,
  prompt_id, joint_names, parents, frames`` and optional ``mesh``,
  ``foot_vertex_sets`` and ``joint_limits``;
* a binary container (``.mft``): magic ``MFT1``, a little-endian uint32
  header length, a compact JSON header, then little-endian blocks
  positions (f32, T*J*3), rotations (f32, T*J*4) and, when a mesh is present,
  faces (u32, F*3) and vertex frames (f32, T*V*3).

Both writers round array values to float32, so write -> read -> write is
byte-identical.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .config import Config
from .motion import BodyModel, MeshSequence, MotionTrajectory, normalize_quaternions

FORMAT_VERSION = 1
MAGIC = b"MFT1"
_U32 = struct.Struct("<I")


class ParseError(ValueError):
    """A trajectory file that cannot be decoded into the expected structure."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)


@dataclass(frozen=True)
class MotionFile:
    trajectory: MotionTrajectory
    joint_names: tuple[str, ...]
    parents: tuple[int, ...]
    mesh: Optional[MeshSequence] = None
    foot_vertex_sets: Optional[dict[str, list[int]]] = None
    joint_limits: dict[str, Any] = field(default_factory=dict)

    def body_model(self, config: Config | None = None) -> BodyModel:
        feet = self.foot_vertex_sets or {}
        return BodyModel.from_joints(self.joint_names, self.parents, config,
                                     left_foot_vertices=feet.get("left"),
                                     right_foot_vertices=feet.get("right"),
                                     joint_limits=self.joint_limits)


def _f32_list(a) -> Any:
    """Nested lists of the shortest decimal that round-trips through float32."""
    a = np.asarray(a, dtype=np.float32)
    flat = [float(s) for s in a.ravel().astype(str)]
    return np.asarray(flat, dtype=object).reshape(a.shape).tolist() if a.ndim > 1 else flat


def _meta(mf: MotionFile) -> dict[str, Any]:
    traj = mf.trajectory
    doc: dict[str, Any] = {
        "version": FORMAT_VERSION,
        "frame_rate_hz": float(traj.frame_rate_hz),
        "subject_id": traj.subject_id,
        "prompt_id": traj.prompt_id,
        "joint_names": list(mf.joint_names),
        "parents": [int(p) for p in mf.parents],
    }
    if mf.foot_vertex_sets is not None:
        doc["foot_vertex_sets"] = {k: [int(i) for i in mf.foot_vertex_sets[k]]
                                   for k in ("left", "right")}
    if mf.joint_limits:
        doc["joint_limits"] = {name: {axis: [float(v) for v in rng] for axis, rng in axes.items()}
                               for name, axes in mf.joint_limits.items()}
    return doc


def dumps_json(mf: MotionFile) -> str:
    doc = _meta(mf)
    traj = mf.trajectory
    doc["frames"] = [{"positions": p, "rotations": r}
                     for p, r in zip(_f32_list(traj.positions), _f32_list(traj.rotations))]
    if mf.mesh is not None:
        doc["mesh"] = {"faces": mf.mesh.faces.tolist(),
                       "vertex_frames": _f32_list(mf.mesh.vertex_frames)}
    return json.dumps(doc, separators=(",", ":"))


def dumps_binary(mf: MotionFile) -> bytes:
    traj = mf.trajectory
    header = _meta(mf)
    header["num_frames"] = traj.num_frames
    header["num_joints"] = traj.num_joints
    if mf.mesh is not None:
        header["mesh"] = {"num_faces": mf.mesh.num_faces, "num_vertices": mf.mesh.num_vertices}
    head = json.dumps(header, separators=(",", ":")).encode()
    parts = [MAGIC, _U32.pack(len(head)), head,
             traj.positions.astype("<f4").tobytes(),
             traj.rotations.astype("<f4").tobytes()]
    if mf.mesh is not None:
        parts.append(mf.mesh.faces.astype("<u4").tobytes())
        parts.append(mf.mesh.vertex_frames.astype("<f4").tobytes())
    return b"".join(parts)


def _require(doc: dict, key: str, kind):
    if key not in doc:
        raise ParseError(f"missing field {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise ParseError(f"field {key!r} has type {type(value).__name__}")
    return value


def _array(value, shape_tail: tuple[int, ...], what: str, dtype=np.float64) -> np.ndarray:
    try:
        a = np.asarray(value, dtype=dtype)
    except (TypeError, ValueError):
        raise ParseError(f"{what} is not a rectangular numeric array") from None
    if a.ndim != 1 + len(shape_tail) or a.shape[1:] != shape_tail:
        if not (a.size == 0 and shape_tail):
            raise ParseError(f"{what} has shape {a.shape}, expected (N, {', '.join(map(str, shape_tail))})")
        a = a.reshape((0,) + shape_tail)
    return a


def _build(doc: dict, positions, rotations, mesh) -> MotionFile:
    version = _require(doc, "version", int)
    if version != FORMAT_VERSION:
        raise ParseError(f"unsupported format version {version}")
    rate = _require(doc, "frame_rate_hz", (int, float))
    names = _require(doc, "joint_names", list)
    parents = _require(doc, "parents", list)
    if not all(isinstance(n, str) for n in names):
        raise ParseError("joint_names must be strings")
    if not all(isinstance(p, int) for p in parents):
        raise ParseError("parents must be integers")
    feet = doc.get("foot_vertex_sets")
    if feet is not None:
        if not isinstance(feet, dict) or not {"left", "right"} <= feet.keys():
            raise ParseError("foot_vertex_sets needs 'left' and 'right'")
        feet = {k: [int(i) for i in feet[k]] for k in ("left", "right")}
    limits = doc.get("joint_limits") or {}
    if not isinstance(limits, dict):
        raise ParseError("joint_limits must be an object")
    traj = MotionTrajectory(float(rate), positions, normalize_quaternions(rotations, strict=False),
                            subject_id=str(doc.get("subject_id", "")),
                            prompt_id=str(doc.get("prompt_id", "")))
    return MotionFile(traj, tuple(names), tuple(parents), mesh, feet, limits)


def loads_json(text: str | bytes) -> MotionFile:
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError("file is not UTF-8", exc.start) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed JSON: {exc.msg}", len(text[:exc.pos].encode())) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    frames = _require(doc, "frames", list)
    if not all(isinstance(f, dict) and "positions" in f and "rotations" in f for f in frames):
        raise ParseError("each frame needs 'positions' and 'rotations'")
    J = len(doc.get("joint_names", []))
    positions = _array([f["positions"] for f in frames], (J, 3), "positions")
    rotations = _array([f["rotations"] for f in frames], (J, 4), "rotations")
    mesh = None
    if doc.get("mesh") is not None:
        m = doc["mesh"]
        if not isinstance(m, dict):
            raise ParseError("mesh must be an object")
        faces = _array(_require(m, "faces", list), (3,), "mesh.faces", np.int64)
        vf = _require(m, "vertex_frames", list)
        try:
            vertex_frames = np.asarray(vf, dtype=np.float64)
        except (TypeError, ValueError):
            raise ParseError("mesh.vertex_frames is not a rectangular numeric array") from None
        if vertex_frames.ndim != 3 or vertex_frames.shape[2] != 3:
            raise ParseError(f"mesh.vertex_frames has shape {vertex_frames.shape}, expected (T, V, 3)")
        mesh = MeshSequence(faces, vertex_frames)
    return _build(doc, positions, rotations, mesh)


def loads_binary(data: bytes) -> MotionFile:
    if data[:4] != MAGIC:
        raise ParseError("bad magic, expected MFT1", 0)
    if len(data) < 8:
        raise ParseError("truncated header", len(data))
    (hlen,) = _U32.unpack_from(data, 4)
    end = 8 + hlen
    if end > len(data):
        raise ParseError("truncated header", len(data))
    try:
        header = json.loads(data[8:end].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError):
        raise ParseError("corrupt header", 8) from None
    if not isinstance(header, dict):
        raise ParseError("corrupt header", 8)
    T = _require(header, "num_frames", int)
    J = _require(header, "num_joints", int)
    offset = end

    def block(dtype: str, shape: tuple[int, ...]) -> np.ndarray:
        nonlocal offset
        n = int(np.prod(shape)) * 4
        if offset + n > len(data):
            raise ParseError("truncated data block", len(data))
        a = np.frombuffer(data, dtype=dtype, count=n // 4, offset=offset).reshape(shape)
        offset += n
        return a.astype(np.float64 if dtype == "<f4" else np.int64)

    positions = block("<f4", (T, J, 3))
    rotations = block("<f4", (T, J, 4))
    mesh = None
    if header.get("mesh") is not None:
        F = _require(header["mesh"], "num_faces", int)
        V = _require(header["mesh"], "num_vertices", int)
        faces = block("<u4", (F, 3))
        mesh = MeshSequence(faces, block("<f4", (T, V, 3)))
    if offset != len(data):
        raise ParseError("trailing bytes after last block", offset)
    return _build(header, positions, rotations, mesh)


def read_motion(path: str | Path) -> MotionFile:
    """Read a trajectory file, choosing the container by its first bytes."""
    data = Path(path).read_bytes()
    if data[:4] == MAGIC:
        return loads_binary(data)
    return loads_json(data)


def write_motion(path: str | Path, mf: MotionFile, binary: bool | None = None) -> None:
    path = Path(path)
    if binary is None:
        binary = path.suffix == ".mft"
    if binary:
        path.write_bytes(dumps_binary(mf))
    else:
        path.write_text(dumps_json(mf))
