"""Shape and bookkeeping of the generated evaluation suite."""
import json

import numpy as np

from physink import synthetic
from physink.curation import CRITERIA
from physink.kinematics import fk_batch, site_positions
from physink.motion import REGIONS, load_retargeted_motion, load_source_motion
from physink.robot import load_robot_model
from physink.rotations import quat_to_matrix

CLEAN = ("walk_slow", "walk_fast", "squat_shallow", "squat_paced",
         "jump_single", "jump_double", "turn_left", "turn_right")
DEFECT = ("float_walk", "pen_walk", "float_squat", "pen_squat",
          "slide_walk", "slide_march", "over_twist_pos", "over_twist_neg")
BATTERY = ("battery_teleport", "battery_float", "battery_crouch", "battery_lean")


def test_suite_inventory(suite):
    assert tuple(c.name for c in suite) == CLEAN + DEFECT + BATTERY
    for clip in suite:
        expected_frames = 2 * synthetic.CLIP_FRAMES if clip.category == "battery" \
            else synthetic.CLIP_FRAMES
        assert clip.source.frame_count == expected_frames
        assert clip.source.fps == synthetic.TEST_FPS
        assert clip.q_true.shape[0] == expected_frames
    categories = {c.name: c.category for c in suite}
    assert all(categories[n] == "clean" for n in CLEAN)
    assert all(categories[n] == "battery" for n in BATTERY)
    assert categories["float_walk"] == "float"
    assert categories["pen_squat"] == "penetration"
    assert categories["slide_march"] == "slide"
    assert categories["over_twist_neg"] == "overdrive"


def test_recovery_targets_respect_joint_limits(model, suite):
    lo, hi = model.q_limits()
    for clip in suite:
        assert np.all(clip.q_true >= lo[None, :]), clip.name
        assert np.all(clip.q_true <= hi[None, :]), clip.name


def test_overdrive_clip_saturates_a_limit(model, clips_by_name):
    lo, hi = model.q_limits()
    for name in ("over_twist_pos", "over_twist_neg"):
        q = clips_by_name[name].q_true
        assert np.any((q == lo[None, :]) | (q == hi[None, :])), name


def test_expected_chunk_verdicts(suite):
    for clip in suite:
        if clip.category == "battery":
            assert len(clip.expected_chunks) == 2
            first, second = clip.expected_chunks
            assert first == (True, ())
            assert second[0] is False
            assert len(second[1]) == 1  # exactly one criterion trips
            assert second[1][0] in CRITERIA
        else:
            assert clip.expected_chunks == ((True, ()),)
    # the four battery clips cover four distinct criteria
    reasons = {c.expected_chunks[1][1][0] for c in suite if c.category == "battery"}
    assert len(reasons) == 4


def test_clean_sources_match_their_recovery_target(model, clips_by_name):
    for name in ("walk_slow", "turn_right", "battery_crouch"):
        clip = clips_by_name[name]
        mats = quat_to_matrix(clip.root_rot_true)
        pos, rot = fk_batch(model, clip.q_true, clip.root_pos_true, mats)
        assert np.allclose(clip.source.joints, pos, atol=1e-9), name
        sites = site_positions(model, pos, rot)
        for i, region in enumerate(REGIONS):
            assert np.allclose(clip.source.markers[region][:, 0], sites[:, i], atol=1e-9)


def test_scale_defect_scales_joints_but_not_markers(model, clips_by_name):
    clip = clips_by_name["float_walk"]
    mats = quat_to_matrix(clip.root_rot_true)
    pos, rot = fk_batch(model, clip.q_true, clip.root_pos_true, mats)
    assert np.allclose(clip.source.joints, 1.06 * pos, atol=1e-9)
    sites = site_positions(model, pos, rot)
    for i, region in enumerate(REGIONS):
        assert np.allclose(clip.source.markers[region][:, 0], sites[:, i], atol=1e-9)


def test_slide_defect_shifts_joints_and_markers_together(model, clips_by_name):
    clip = clips_by_name["slide_walk"]
    mats = quat_to_matrix(clip.root_rot_true)
    pos, rot = fk_batch(model, clip.q_true, clip.root_pos_true, mats)
    delta = clip.source.joints - pos
    # the drift is a shared x offset per frame
    assert np.allclose(delta[:, :, 1:], 0.0, atol=1e-9)
    drift = delta[:, 0, 0]
    assert np.allclose(delta[:, :, 0], drift[:, None], atol=1e-9)
    assert drift.max() > 0.2
    sites = site_positions(model, pos, rot)
    for i, region in enumerate(REGIONS):
        md = clip.source.markers[region][:, 0] - sites[:, i]
        assert np.allclose(md[:, 0], drift, atol=1e-9)
        assert np.allclose(md[:, 1:], 0.0, atol=1e-9)


def test_clean_clips_keep_markers_near_ground(suite):
    for clip in suite:
        if clip.category != "clean":
            continue
        z = np.concatenate([clip.source.markers[r][:, :, 2] for r in REGIONS], axis=1)
        per_frame_min = z.min(axis=1)
        assert per_frame_min.min() > -1e-6, clip.name
        # some foot is on or near the ground for at least half the clip
        # (the jump clips spend stretches fully airborne)
        assert np.median(per_frame_min) < 2e-3, clip.name


def test_correspondence_covers_root_and_support(model):
    corr = synthetic.test_correspondence(model)
    mapped = corr.body_to_source()
    assert 0 in mapped  # pelvis drives the root
    body_names = {model.body_names[b] for b in mapped}
    for name in synthetic.SUPPORT_JOINTS:
        assert name in body_names
    assert any(corr.end_effector)


def test_suite_generation_is_deterministic(model):
    a = synthetic.generate_suite(model)
    b = synthetic.generate_suite(model)
    for x, y in zip(a, b):
        assert x.source.joints.tobytes() == y.source.joints.tobytes()
        assert x.q_true.tobytes() == y.q_true.tobytes()


def test_suite_config_payload():
    cfg = synthetic.suite_config("bot.json", "map.json")
    assert cfg["contact"]["ramp_top"] == synthetic.SUITE_RAMP_TOP
    assert cfg["joints"]["support"] == list(synthetic.SUPPORT_JOINTS)
    assert cfg["joints"]["heading"] == list(synthetic.HEADING_JOINTS)
    assert cfg["paths"] == {"robot": "bot.json", "correspondence": "map.json"}


def test_write_suite_inventory_and_round_trip(tmp_path):
    clips = synthetic.write_suite(tmp_path)
    assert (tmp_path / "robot.json").exists()
    assert (tmp_path / "correspondence.json").exists()
    assert (tmp_path / "config.json").exists()
    sources = sorted(p.stem for p in (tmp_path / "sources").glob("*.json"))
    truths = sorted(p.stem for p in (tmp_path / "truth").glob("*.json"))
    assert sources == truths == sorted(c.name for c in clips)

    model = load_robot_model(tmp_path / "robot.json")
    assert model.joint_names == synthetic.test_humanoid().joint_names

    clip = next(c for c in clips if c.name == "battery_teleport")
    source = load_source_motion(tmp_path / "sources" / "battery_teleport.json")
    assert np.allclose(source.joints, clip.source.joints, atol=1e-12)
    truth = load_retargeted_motion(tmp_path / "truth" / "battery_teleport.json")
    assert np.allclose(truth.q, clip.q_true, atol=1e-12)
    assert np.allclose(truth.root_pos, clip.root_pos_true, atol=1e-12)

    expectations = json.loads((tmp_path / "expectations.json").read_text())
    assert set(expectations) == set(c.name for c in clips)
    entry = expectations["battery_float"]
    assert entry["category"] == "battery"
    assert entry["chunks"] == [
        {"passes": True, "reasons": []},
        {"passes": False, "reasons": ["foot contact score"]},
    ]
