"""Score assembly: one ScoreReport per trajectory, and per-prompt reward
normalization for policy training."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Hashable, Optional, Sequence

import numpy as np

from . import contact, dynamic, geometry, kinematic
from .config import Config
from .motion import BodyModel, MeshSequence, MotionTrajectory

VIOLATION_FIELDS = ("v_vel", "v_spen", "v_lim", "v_slip", "v_gpen", "v_float", "v_bal")
SUBSCORE_FIELDS = ("s_tau", "s_grf", "s_met")
AXIS_FIELDS = ("f_kin", "f_con", "f_dyn")
SCORE_FIELDS = VIOLATION_FIELDS + SUBSCORE_FIELDS + AXIS_FIELDS + ("r_motion",)


def aggregate(f_kin: float, f_con: float, f_dyn: float, config: Config | None = None) -> float:
    """Motion reward; the plain mean of the three axes under default weights."""
    cfg = config or Config()
    w = (cfg.weight_kin, cfg.weight_con, cfg.weight_dyn)
    return float(kinematic.exact_mean((f_kin, f_con, f_dyn), w))


@dataclass(frozen=True)
class ScoreReport:
    v_vel: float
    v_spen: float
    v_lim: float
    v_slip: float
    v_gpen: float
    v_float: float
    v_bal: float
    s_tau: float
    s_grf: float
    s_met: float
    f_kin: float
    f_con: float
    f_dyn: float
    r_motion: float
    subject_id: str = ""
    prompt_id: str = ""
    flags: tuple[str, ...] = ()
    diagnostics: Optional[dict[str, Any]] = field(default=None, compare=False)

    @classmethod
    def from_terms(cls, v_vel, v_spen, v_lim, v_slip, v_gpen, v_float, v_bal,
                   s_tau, s_grf, s_met, config: Config | None = None, **extra) -> ScoreReport:
        """Build a report from the ten terms; axis scores and reward are derived."""
        f_kin = kinematic.kinematic_score(v_vel, v_spen, v_lim)
        f_con = contact.contact_score(v_slip, v_gpen, v_float, v_bal)
        f_dyn = dynamic.dynamic_score(s_tau, s_grf, s_met)
        return cls(v_vel, v_spen, v_lim, v_slip, v_gpen, v_float, v_bal, s_tau, s_grf, s_met,
                   f_kin, f_con, f_dyn, aggregate(f_kin, f_con, f_dyn, config), **extra)

    def scores(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in SCORE_FIELDS}

    def to_dict(self, include_diagnostics: bool = False) -> dict[str, Any]:
        out: dict[str, Any] = {"subject_id": self.subject_id, "prompt_id": self.prompt_id}
        out.update(self.scores())
        out["flags"] = list(self.flags)
        if include_diagnostics and self.diagnostics is not None:
            out["diagnostics"] = self.diagnostics
        return out


def score_trajectory(traj: MotionTrajectory, body: BodyModel, mesh: MeshSequence | None = None,
                     config: Config | None = None, trace: bool = False) -> ScoreReport:
    """Run all three feasibility axes over one trajectory.

    Without a mesh the self-penetration term is 0 and the report carries the
    ``spen-skipped`` flag. ``trace`` attaches per-frame diagnostics.
    """
    cfg = config or Config()
    flags = []
    if mesh is not None:
        spen_frames, spen = geometry.self_penetration_rate(mesh)
        v_spen = geometry.normalize_spen(spen, cfg.spen_baseline, cfg.spen_severe)
    else:
        spen_frames, spen, v_spen = None, 0.0, 0.0
        flags.append("spen-skipped")
    kin = kinematic.kinematic_violations(traj, body, v_spen)

    timeline = contact.detect_contacts(traj, body, mesh, cfg)
    if timeline.source == "skeleton":
        flags.append("contacts-from-skeleton")
    v_slip, slip_raw = contact.slip_violation(timeline, cfg.slip_norm)
    v_gpen, gpen_raw = contact.penetration_violation(timeline, cfg.gpen_norm)
    flt = contact.float_violation(traj, timeline, cfg, gravity=body.gravity)
    v_bal, dist = contact.balance_violation(traj, timeline, body, cfg)

    dyn = dynamic.dynamic_scores(traj, body, cfg)

    diagnostics = None
    if trace:
        diagnostics = {
            "spen_percent": spen,
            "spen_per_frame": None if spen_frames is None else spen_frames.tolist(),
            "velocity_flags_per_frame": kin.per_joint_velocity_flags.sum(axis=1).tolist(),
            "limit_flags_per_frame": kin.per_joint_limit_flags.sum(axis=1).tolist(),
            "contact": timeline.c.astype(int).tolist(),
            "foot_height": timeline.foot_height.tolist(),
            "foot_speed": timeline.foot_vel.tolist(),
            "slip_raw_m": slip_raw,
            "gpen_raw_m": gpen_raw,
            "float_flags": flt.flags.astype(int).tolist(),
            "ballistic_runs_checked": flt.checked_runs,
            "ballistic_runs_failed": flt.failed_runs,
            "balance_distance": dist.tolist(),
            "grf": dyn.trace.grf.tolist(),
            "v_grf_vertical": dyn.v_grf_vertical,
            "v_grf_horizontal": dyn.v_grf_horizontal,
            "met": dyn.trace.met_total,
        }
    return ScoreReport.from_terms(kin.v_vel, v_spen, kin.v_lim, v_slip, v_gpen, flt.v_float, v_bal,
                                  dyn.s_tau, dyn.s_grf, dyn.s_met, cfg,
                                  subject_id=traj.subject_id, prompt_id=traj.prompt_id,
                                  flags=tuple(flags), diagnostics=diagnostics)


def normalize_rewards(rewards: Sequence[float], groups: Sequence[Hashable],
                      clip: float = 5.0, std_floor: float = 1e-8) -> np.ndarray:
    """Per-group z-score advantages clipped to [-clip, clip], mapped to [0, 1].

    Uses the population standard deviation. Singleton groups map to 0.5.
    """
    r = np.asarray(rewards, dtype=np.float64)
    keys = list(groups)
    if len(keys) != len(r):
        raise ValueError("rewards and groups differ in length")
    out = np.empty_like(r)
    index: dict[Hashable, list[int]] = {}
    for i, k in enumerate(keys):
        index.setdefault(k, []).append(i)
    for members in index.values():
        x = r[members]
        if len(x) < 2:
            out[members] = 0.5
            continue
        adv = (x - x.mean()) / max(float(x.std()), std_floor)
        out[members] = (np.clip(adv, -clip, clip) + clip) / (2.0 * clip)
    return out
