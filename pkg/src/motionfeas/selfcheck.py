"""Built-in fixture suite run by ``motionfeas selfcheck``."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from . import fixtures
from .config import Config
from .dynamic import com_trajectory, grf_estimate, met_to_score
from .evaluation import PairwiseVote, elo_ratings
from .geometry import normalize_spen
from .io import dumps_binary, dumps_json, loads_binary, loads_json
from .nft import PolicyTriple, loss_gradient, policy_loss
from .reward import VIOLATION_FIELDS, score_trajectory


def _static() -> str | None:
    mf = fixtures.static_standing()
    r = score_trajectory(mf.trajectory, mf.body_model(), mf.mesh)
    bad = [k for k in VIOLATION_FIELDS if getattr(r, k) != 0.0]
    bad += [k for k in ("s_tau", "s_grf", "s_met") if getattr(r, k) != 1.0]
    if bad or r.r_motion != 1.0:
        return f"r_motion={r.r_motion!r}, off terms {bad}"
    return None


def _ballistic() -> str | None:
    mf = fixtures.ballistic()
    body = mf.body_model()
    cfg = Config()
    r = score_trajectory(mf.trajectory, body, mf.mesh, cfg, trace=True)
    grf, _ = grf_estimate(com_trajectory(mf.trajectory, body), body, mf.trajectory.frame_rate_hz)
    fz = np.abs(grf[1:-1, 2]).max()
    if r.diagnostics["ballistic_runs_failed"] or fz > 1.0:
        return f"failed runs {r.diagnostics['ballistic_runs_failed']}, max |F_z| {fz:.3g} N"
    return None


def _saturated() -> str | None:
    mf, body = fixtures.everything_violated()
    r = score_trajectory(mf.trajectory, body, mf.mesh)
    return None if r.r_motion == 0.0 else f"r_motion={r.r_motion!r}"


def _constants() -> str | None:
    m, g = 70.0, 9.81
    checks = [(m * g, 686.7), (3 * m * g, 2060.1), (0.5 * m * g, 343.35),
              (normalize_spen(2), 0.0), (normalize_spen(11), 0.5), (normalize_spen(20), 1.0),
              (met_to_score(0), 1.0), (met_to_score(5000), 0.5), (met_to_score(10000), 0.0)]
    bad = [(a, b) for a, b in checks if abs(a - b) > 1e-9]
    return f"mismatches {bad}" if bad else None


def _nft() -> str | None:
    t = PolicyTriple(np.array([1.0]), np.array([0.0]), np.array([0.0]), beta=0.1, r_tilde=1.0)
    loss, grad = policy_loss(t), float(loss_gradient(t)[0])
    if not (math.isclose(loss, 0.01, abs_tol=1e-12) and math.isclose(grad, 0.02, abs_tol=1e-12)):
        return f"L={loss!r}, grad={grad!r}"
    return None


def _elo() -> str | None:
    table = elo_ratings([PairwiseVote("p0", "A", "B", "balance", "A")])
    got = (table.ratings["A"], table.ratings["B"])
    return None if got == (1516.0, 1484.0) else f"ratings {got}"


def _roundtrip() -> str | None:
    mf = fixtures.random_motion(7, num_frames=4)
    for name, dump, load in (("json", dumps_json, loads_json), ("binary", dumps_binary, loads_binary)):
        back = load(dump(mf))
        want = mf.trajectory.positions.astype(np.float32)
        if not np.array_equal(back.trajectory.positions.astype(np.float32), want):
            return f"{name} positions changed"
    return None


CHECKS: list[tuple[str, Callable[[], str | None]]] = [
    ("static pose scores 1.0", _static),
    ("projectile passes ballistic check", _ballistic),
    ("saturated fixture scores 0.0", _saturated),
    ("threshold constants", _constants),
    ("policy loss worked case", _nft),
    ("single Elo game", _elo),
    ("container round-trip", _roundtrip),
]


def run_selfcheck(emit: Callable[[str], None] = print) -> bool:
    ok = True
    for name, fn in CHECKS:
        try:
            problem = fn()
        except Exception as exc:  # report and keep going
            problem = f"{type(exc).__name__}: {exc}"
        ok &= problem is None
        emit(f"{'ok  ' if problem is None else 'FAIL'} {name}" + (f": {problem}" if problem else ""))
    emit("selfcheck passed" if ok else "selfcheck FAILED")
    return ok
