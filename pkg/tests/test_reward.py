import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from motionfeas import fixtures
from motionfeas.config import Config
from motionfeas.reward import (SCORE_FIELDS, ScoreReport, aggregate, normalize_rewards,
                               score_trajectory)

unit = st.floats(0, 1)


def test_aggregate_example():
    assert aggregate(0.9, 0.6, 0.9) == pytest.approx(0.8, abs=1e-15)
    assert aggregate(1, 1, 1) == 1.0


def test_weighted_aggregate():
    cfg = Config().with_overrides({"reward.weight_kin": 2.0})
    assert aggregate(1.0, 0.0, 0.0, cfg) == pytest.approx(0.5)


def test_static_fixture_scores_one():
    mf = fixtures.static_standing()
    r = score_trajectory(mf.trajectory, mf.body_model(), mf.mesh)
    assert r.r_motion == 1.0 and r.flags == ()


def test_everything_violated_scores_zero():
    mf, body = fixtures.everything_violated()
    r = score_trajectory(mf.trajectory, body, mf.mesh)
    assert all(getattr(r, k) == 1.0 for k in SCORE_FIELDS[:7])
    assert (r.s_tau, r.s_grf, r.s_met) == (0.0, 0.0, 0.0)
    assert r.r_motion == 0.0


def test_missing_mesh_flags():
    mf = fixtures.static_standing(with_mesh=False)
    r = score_trajectory(mf.trajectory, mf.body_model())
    assert set(r.flags) == {"spen-skipped", "contacts-from-skeleton"} and r.v_spen == 0.0


def test_trace_diagnostics_shapes():
    mf = fixtures.random_motion(1)
    r = score_trajectory(mf.trajectory, mf.body_model(), mf.mesh, trace=True)
    T = mf.trajectory.num_frames
    assert len(r.diagnostics["contact"]) == T and len(r.diagnostics["grf"]) == T
    assert "diagnostics" in r.to_dict(include_diagnostics=True)
    assert "diagnostics" not in r.to_dict()


def test_report_dict_has_all_fields():
    mf = fixtures.random_motion(0)
    d = score_trajectory(mf.trajectory, mf.body_model(), mf.mesh).to_dict()
    assert set(SCORE_FIELDS) <= d.keys() and len(SCORE_FIELDS) == 14


@given(st.lists(unit, min_size=10, max_size=10))
def test_report_scores_in_unit_interval(terms):
    r = ScoreReport.from_terms(*terms)
    assert all(0.0 <= v <= 1.0 for v in r.scores().values())


def test_random_motion_scores_in_unit_interval():
    for seed in range(6):
        mf = fixtures.random_motion(seed)
        r = score_trajectory(mf.trajectory, mf.body_model(), mf.mesh)
        assert all(0.0 <= v <= 1.0 for v in r.scores().values())


# -------------------------------------------------------- normalization


def test_equal_rewards_half():
    assert normalize_rewards([0.3, 0.3, 0.3], ["a"] * 3).tolist() == [0.5, 0.5, 0.5]


def test_two_samples():
    assert normalize_rewards([0.0, 1.0], ["a", "a"]) == pytest.approx([0.4, 0.6])


def test_clip_at_five():
    r = [1.0] + [0.0] * 49   # advantage of the outlier is 7
    out = normalize_rewards(r, ["g"] * 50)
    assert out[0] == 1.0


def test_groups_independent_and_singletons():
    out = normalize_rewards([0.0, 1.0, 5.0, 9.0, 3.0], ["a", "a", "b", "b", "c"])
    assert out[:2] == pytest.approx([0.4, 0.6]) and out[2:4] == pytest.approx([0.4, 0.6])
    assert out[4] == 0.5


@given(st.lists(st.tuples(st.floats(-10, 10), st.sampled_from("abc")), min_size=1, max_size=30))
def test_normalized_in_unit_interval_and_order_preserving(items):
    r = [x for x, _ in items]
    g = [k for _, k in items]
    out = normalize_rewards(r, g)
    assert np.all((0.0 <= out) & (out <= 1.0))
    for i in range(len(r)):
        for j in range(len(r)):
            if g[i] == g[j] and r[i] < r[j]:
                assert out[i] <= out[j]


def test_length_mismatch():
    with pytest.raises(ValueError):
        normalize_rewards([1.0], ["a", "b"])
