from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motionfeas import fixtures
from motionfeas.config import Config
from motionfeas.contact import (MissingFootGeometryError, airborne_runs, balance_violation,
                                ballistic_residual, contact_score, detect_contacts,
                                float_violation, penetration_violation, slip_violation)
from motionfeas.kinematic import DomainError
from motionfeas.motion import BodyModel, MeshSequence, MotionTrajectory

F = 16.0
NAMES = ("pelvis", "left_ankle", "right_ankle", "left_foot", "right_foot")
PARENTS = (-1, 0, 0, 1, 2)


def _body(**kw):
    return BodyModel.from_joints(NAMES, PARENTS, **kw)


def _traj(left, right, root=None):
    """left/right: (T, 3) foot positions; ankle and toe share them."""
    left, right = np.asarray(left, float), np.asarray(right, float)
    T = len(left)
    if root is None:
        root = np.tile([0.0, 0.0, 0.9], (T, 1))
    pos = np.stack([root, left, right, left, right], axis=1)
    return MotionTrajectory(F, pos, np.tile([1.0, 0, 0, 0], (T, 5, 1)))


def _still(x, z, T=8):
    return np.tile([x, 0.0, z], (T, 1))


def _sliding(x, z, speed, T=8):
    out = _still(x, z, T)
    out[:, 1] += speed * np.arange(T) / F
    return out


def test_resting_foot_in_contact():
    tl = detect_contacts(_traj(_still(0.1, 0.0), _still(-0.1, 0.0)), _body())
    assert tl.c.all() and tl.source == "skeleton"


def test_height_gate():
    tl = detect_contacts(_traj(_still(0.1, 0.5), _still(-0.1, 0.0)), _body())
    assert not tl.c[:, 0].any() and tl.c[:, 1].all()


def test_velocity_gate():
    tl = detect_contacts(_traj(_sliding(0.1, 0.01, 0.2), _still(-0.1, 0.0)), _body())
    assert not tl.c[:, 0].any()


def test_mesh_sole_vertices_preferred():
    traj = _traj(_still(0.1, 0.5), _still(-0.1, 0.5))
    verts = np.array([[0.1, 0, 0.0], [0.2, 0, 0.0], [0.1, 0.1, 0.0],
                      [-0.1, 0, 0.0], [-0.2, 0, 0.0], [-0.1, 0.1, 0.0]])
    mesh = MeshSequence([[0, 1, 2], [3, 4, 5]], np.tile(verts, (8, 1, 1)))
    body = _body(left_foot_vertices=[0, 1, 2], right_foot_vertices=[3, 4, 5])
    tl = detect_contacts(traj, body, mesh)
    assert tl.source == "mesh" and tl.c.all()


def test_missing_foot_geometry():
    body = BodyModel.from_joints(("pelvis", "spine1"), (-1, 0))
    traj = MotionTrajectory(F, np.zeros((3, 2, 3)), np.tile([1.0, 0, 0, 0], (3, 2, 1)))
    with pytest.raises(MissingFootGeometryError):
        detect_contacts(traj, body)


def test_contact_invariant_holds_on_random_motion():
    for seed in range(5):
        mf = fixtures.random_motion(seed)
        tl = detect_contacts(mf.trajectory, mf.body_model(), mf.mesh)
        assert np.all(tl.foot_height[tl.c] < 0.02) and np.all(tl.foot_vel[tl.c] < 0.05)


# ----------------------------------------------------------------- slip


def test_no_contact_no_slip():
    tl = detect_contacts(_traj(_still(0.1, 0.5), _still(-0.1, 0.5)), _body())
    assert slip_violation(tl)[0] == 0.0


def test_planted_feet_no_slip():
    tl = detect_contacts(_traj(_still(0.1, 0.0), _still(-0.1, 0.0)), _body())
    assert slip_violation(tl) == (0.0, 0.0)


def test_one_foot_sliding_at_four_cm_per_second():
    tl = detect_contacts(_traj(_sliding(0.1, 0.0, 0.04), _still(-0.1, 0.5)), _body())
    assert tl.c[:, 0].all()
    v, raw = slip_violation(tl)
    assert raw == pytest.approx(0.04 / 16 / 2, rel=1e-12)
    assert v == pytest.approx(0.5, rel=1e-12)


# ---------------------------------------------------------- penetration


def test_feet_above_ground_no_penetration():
    tl = detect_contacts(_traj(_still(0.1, 0.0), _still(-0.1, 0.3)), _body())
    assert penetration_violation(tl)[0] == 0.0


def test_one_foot_five_cm_under():
    tl = detect_contacts(_traj(_still(0.1, -0.05), _still(-0.1, 0.0)), _body())
    v, raw = penetration_violation(tl)
    assert raw == pytest.approx(0.025) and v == pytest.approx(0.5)


def test_foot_dipping_ten_percent_of_frames():
    left = _still(0.1, 0.0, T=20)
    left[[3, 11], 2] = -0.01
    tl = detect_contacts(_traj(left, _still(-0.1, 0.0, T=20)), _body())
    assert penetration_violation(tl)[1] == pytest.approx(0.0005)


# ---------------------------------------------------------------- float


def _walking_root(T=8, speed=1.0):
    root = np.tile([0.0, 0.0, 0.9], (T, 1))
    root[:, 1] = speed * np.arange(T) / F
    return root


def test_foot_planted_while_root_walks_has_unit_ratio():
    # relative foot speed equals root speed, rho = 1 / (1 + eps)
    traj = _traj(_still(0.1, 0.0), _still(-0.1, 0.0), root=_walking_root())
    res = float_violation(traj, detect_contacts(traj, _body()))
    assert res.ratio == pytest.approx(1.0, rel=2e-3)
    assert res.v_float == 0.0


def test_foot_carried_with_fast_root_flagged():
    root = _walking_root(speed=2.0)
    left = root + [0.1, 0.0, -0.9]
    right = root + [-0.1, 0.0, -0.9]
    traj = _traj(left, right, root=root)
    res = float_violation(traj, detect_contacts(traj, _body()))
    assert res.ratio.max() == pytest.approx(0.0, abs=1e-9)
    assert res.v_float == 1.0


def test_still_root_exempt_from_ratio():
    traj = _traj(_sliding(0.1, 0.0, 0.03), _still(-0.1, 0.0))
    assert float_violation(traj, detect_contacts(traj, _body())).v_float == 0.0


def test_projectile_passes_ballistic_check():
    mf = fixtures.ballistic()
    traj = mf.trajectory
    res = float_violation(traj, detect_contacts(traj, mf.body_model(), mf.mesh))
    assert res.checked_runs == [(0, 8)] and res.failed_runs == []


def test_hovering_body_fails_ballistic_check():
    T = 10
    root = np.tile([0.0, 0.0, 1.5], (T, 1))
    root[:, 1] = np.arange(T) / F   # slow walk in mid-air, no fall
    left, right = root + [0.1, 0, -0.9], root + [-0.1, 0, -0.9]
    traj = _traj(left, right, root=root)
    res = float_violation(traj, detect_contacts(traj, _body()))
    assert res.failed_runs == [(0, T)] and res.v_float == 1.0


def test_short_airborne_runs_not_checked():
    c = np.ones((10, 2), bool)
    c[2:5] = False  # 3 frames: not longer than 3
    assert airborne_runs(c) == [(2, 5)]
    traj = _traj(_still(0.1, 0.3, 10), _still(-0.1, 0.3, 10))
    tl = detect_contacts(traj, _body())
    res = float_violation(traj, replace(tl, c=c))
    assert res.checked_runs == []


@given(z0=st.floats(0.2, 3), v0=st.floats(-3, 3), n=st.integers(4, 40))
def test_exact_parabola_zero_residual(z0, v0, n):
    t = np.arange(n) / F
    assert ballistic_residual(z0 + v0 * t - 0.5 * 9.81 * t * t, F, 9.81) < 1e-9


# -------------------------------------------------------------- balance


def test_com_inside_support_polygon():
    mf = fixtures.static_standing(with_mesh=False)
    body = mf.body_model()
    tl = detect_contacts(mf.trajectory, body)
    v, d = balance_violation(mf.trajectory, tl, body)
    assert v == 0.0 and np.all(d == 0.0)


def test_no_contact_full_violation():
    traj = _traj(_still(0.1, 0.5), _still(-0.1, 0.5))
    v, d = balance_violation(traj, detect_contacts(traj, _body()), _body())
    assert v == 1.0 and np.all(d == 1.0)


def test_quarter_metre_offset_half_violation():
    # one contacting ankle at x = a, everything else at x = 0: COM x = 2a/7 and
    # the degenerate polygon is the ankle point, so d = 5a/7
    T, a = 6, 0.35
    traj = _traj(_still(a, 0.0, T), np.tile([0.0, 0.0, 0.5], (T, 1)))
    tl = detect_contacts(traj, _body())
    assert tl.c[:, 0].all() and not tl.c[:, 1].any()
    v, d = balance_violation(traj, tl, _body())
    assert d == pytest.approx(np.full(T, 0.25), abs=1e-12)
    assert v == pytest.approx(0.5, abs=1e-12)


def test_translation_invariance():
    mf = fixtures.random_motion(4)
    body = mf.body_model()
    cfg = Config()
    a = (mf.trajectory, mf.mesh)
    b = (mf.trajectory.translated([3.5, -2.0, 0.0]), mf.mesh.translated([3.5, -2.0, 0.0]))
    out = []
    for traj, mesh in (a, b):
        tl = detect_contacts(traj, body, mesh, cfg)
        out.append((slip_violation(tl)[0], penetration_violation(tl)[0],
                    float_violation(traj, tl, cfg).v_float, balance_violation(traj, tl, body, cfg)[0]))
    assert out[0] == pytest.approx(out[1], abs=1e-9)


# ---------------------------------------------------------------- score


def test_contact_score_examples():
    assert contact_score(0, 0, 0, 0) == 1.0
    assert contact_score(1, 1, 1, 1) == 0.0
    assert contact_score(0.2, 0, 0.4, 0.2) == pytest.approx(0.8, abs=1e-15)
    with pytest.raises(DomainError):
        contact_score(0, 0, -0.1, 0)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.integers(0, 3), st.floats(0, 1))
def test_contact_score_monotone(v, k, bump):
    w = list(v)
    w[k] = max(w[k], bump)
    assert contact_score(*w) <= contact_score(*v)
