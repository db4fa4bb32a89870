"""Robot model validation, limit bands, and JSON round trips."""
import numpy as np
import pytest

from helpers import chain_model
from physink.motion import REGIONS
from physink.robot import (
    Body,
    FootSite,
    Joint,
    RobotModel,
    load_robot_model,
    margin_bands,
    save_robot_model,
)
from physink.validation import MotionFormatError


def test_joint_normalizes_axis_and_checks_inputs():
    j = Joint(name="a", body=1, axis=(0.0, 0.0, 1.0 + 5e-7), q_min=-1.0, q_max=1.0, v_max=2.0)
    assert np.allclose(np.linalg.norm(j.axis), 1.0)
    with pytest.raises(MotionFormatError, match="unit length"):
        Joint(name="a", body=1, axis=(0.0, 0.0, 2.0), q_min=-1.0, q_max=1.0, v_max=2.0)
    with pytest.raises(MotionFormatError, match="zero length"):
        Joint(name="a", body=1, axis=(0.0, 0.0, 0.0), q_min=-1.0, q_max=1.0, v_max=2.0)
    with pytest.raises(MotionFormatError, match="q_min"):
        Joint(name="a", body=1, axis=(0.0, 0.0, 1.0), q_min=1.0, q_max=1.0, v_max=2.0)
    with pytest.raises(MotionFormatError, match="v_max"):
        Joint(name="a", body=1, axis=(0.0, 0.0, 1.0), q_min=-1.0, q_max=1.0, v_max=0.0)


def _site_map(body: int):
    return {r: FootSite(body=body, offset=np.zeros(3)) for r in REGIONS}


def test_model_rejects_structural_mistakes():
    root = Body(name="base", parent=-1, offset=np.zeros(3))
    child = Body(name="link", parent=0, offset=np.array([1.0, 0.0, 0.0]))
    joint = Joint(name="q0", body=1, axis=np.array([0.0, 0.0, 1.0]),
                  q_min=-1.0, q_max=1.0, v_max=5.0)
    ok = RobotModel(bodies=(root, child), joints=(joint,), foot_sites=_site_map(1),
                    balance_bodies=("base", "link"))
    assert ok.body_count == 2 and ok.joint_count == 1

    with pytest.raises(MotionFormatError, match="root"):
        RobotModel(bodies=(child,), joints=(), foot_sites=_site_map(0))
    with pytest.raises(MotionFormatError, match="unique"):
        RobotModel(bodies=(root, child, Body(name="link", parent=0, offset=np.zeros(3))),
                   joints=(joint,), foot_sites=_site_map(1))
    with pytest.raises(MotionFormatError, match="topological"):
        RobotModel(bodies=(root, Body(name="late", parent=2, offset=np.zeros(3)),
                           Body(name="early", parent=0, offset=np.zeros(3))),
                   joints=(), foot_sites=_site_map(0))
    with pytest.raises(MotionFormatError, match="cannot carry a joint"):
        RobotModel(bodies=(root, child),
                   joints=(Joint(name="bad", body=0, axis=np.array([0.0, 0.0, 1.0]),
                                 q_min=-1.0, q_max=1.0, v_max=5.0),),
                   foot_sites=_site_map(1))
    with pytest.raises(MotionFormatError, match="already has a joint"):
        RobotModel(bodies=(root, child),
                   joints=(joint, Joint(name="dup", body=1, axis=np.array([0.0, 1.0, 0.0]),
                                        q_min=-1.0, q_max=1.0, v_max=5.0)),
                   foot_sites=_site_map(1))
    with pytest.raises(MotionFormatError, match="regions"):
        RobotModel(bodies=(root, child), joints=(joint,),
                   foot_sites={"LH": FootSite(body=1, offset=np.zeros(3))})
    with pytest.raises(MotionFormatError, match="exactly two"):
        RobotModel(bodies=(root, child), joints=(joint,), foot_sites=_site_map(1),
                   balance_bodies=("base",))


def test_margin_bands_shrink_both_ends():
    lo, hi = margin_bands(np.array([0.0]), np.array([1.0]), 0.98)
    assert lo[0] == pytest.approx(0.02, abs=1e-12)
    assert hi[0] == pytest.approx(0.98, abs=1e-12)
    # margin 1 keeps the full range
    lo, hi = margin_bands(np.array([-2.0]), np.array([3.0]), 1.0)
    assert lo[0] == -2.0 and hi[0] == 3.0
    with pytest.raises(ValueError, match="margin"):
        margin_bands(np.array([0.0]), np.array([1.0]), 0.0)


def test_model_band_helpers():
    model = chain_model(2)
    lo, hi = model.margin_bands(0.9)
    # limits are +-3, so a 0.1 margin trims 0.6 from each side
    assert np.allclose(lo, -2.4) and np.allclose(hi, 2.4)
    vlo, vhi = model.velocity_bands(0.9)
    assert np.allclose(vlo, -8.0) and np.allclose(vhi, 8.0)


def test_rest_positions_accumulate_offsets():
    model = chain_model(3)
    rest = model.rest_body_positions()
    assert np.allclose(rest, [[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]])


def test_robot_json_round_trip(tmp_path):
    model = chain_model(3, axis_seed=5)
    path = tmp_path / "robot.json"
    save_robot_model(model, path)
    back = load_robot_model(path)
    assert back.body_names == model.body_names
    assert back.joint_names == model.joint_names
    assert back.balance_bodies == model.balance_bodies
    assert np.allclose(back.offsets(), model.offsets())
    for a, b in zip(back.joints, model.joints):
        assert np.allclose(a.axis, b.axis)
        assert (a.q_min, a.q_max, a.v_max) == (b.q_min, b.q_max, b.v_max)
    for region in REGIONS:
        assert back.foot_sites[region].body == model.foot_sites[region].body


def test_load_robot_model_names_file_on_errors(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"bodies": []}')
    with pytest.raises(MotionFormatError, match="broken.json"):
        load_robot_model(path)
    path.write_text('{"bodies": [{"name": "base"}], "joints": [], "foot_sites": {}}')
    with pytest.raises(MotionFormatError, match="broken.json"):
        load_robot_model(path)


def test_body_index_lookup():
    model = chain_model(2)
    assert model.body_index("link1") == 2
    with pytest.raises(KeyError, match="nope"):
        model.body_index("nope")
