"""Procedurally generated motions over a small test humanoid.

Every clip is built from a closed-form robot trajectory (joint angles, root
path), rendered to source format through forward kinematics, so ground-truth
angles are known exactly.  Defect variants then perturb the rendered source
(scaled skeleton, horizontal slide, over-limit poses) while keeping the clean
trajectory as the recovery target.  Battery clips carry the expected curation
verdict for each 4 s chunk.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import JointCorrespondence, build_correspondence, fk_batch, site_positions
from .motion import (
    REGIONS,
    RetargetedMotion,
    SourceMotion,
    _dump_json,
    save_retargeted_motion,
    save_source_motion,
)
from .robot import Body, FootSite, Joint, RobotModel, save_robot_model
from .rotations import matrix_to_quat, yaw_matrix

TEST_FPS = 30.0
CLIP_FRAMES = 120  # 4 s
# sharper contact grading than the package default: frames counted as contact
# (score >= 0.5) then have true foot height <= 6 mm, leaving headroom under
# the 1 cm grounding tolerance for the optimizer's settling depth
SUITE_RAMP_TOP = 0.0125
LEG_LINK = 0.38  # thigh and shin length
HIP_DROP = 0.05  # pelvis origin to hip pivot
SOLE_DROP = 0.04  # ankle to sole
STAND_HEIGHT = 0.78

JOINT_ORDER = (
    "waist_yaw",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
    "left_shoulder",
    "left_elbow",
    "right_shoulder",
    "right_elbow",
)

SUPPORT_JOINTS = ("left_foot", "right_foot", "left_toe", "right_toe")
HEADING_JOINTS = ("left_thigh", "right_thigh")
SPINE_JOINT = "torso"


def test_humanoid() -> RobotModel:
    """17-body, 11-joint pitch/yaw humanoid used across the test suite."""
    bodies = (
        Body("pelvis", -1, (0.0, 0.0, 0.0)),
        Body("torso", 0, (0.0, 0.0, 0.20)),
        Body("head", 1, (0.0, 0.0, 0.30)),
        Body("left_thigh", 0, (0.0, 0.10, -HIP_DROP)),
        Body("left_shin", 3, (0.0, 0.0, -LEG_LINK)),
        Body("left_foot", 4, (0.0, 0.0, -LEG_LINK)),
        Body("left_toe", 5, (0.13, 0.0, 0.0)),
        Body("right_thigh", 0, (0.0, -0.10, -HIP_DROP)),
        Body("right_shin", 7, (0.0, 0.0, -LEG_LINK)),
        Body("right_foot", 8, (0.0, 0.0, -LEG_LINK)),
        Body("right_toe", 9, (0.13, 0.0, 0.0)),
        Body("left_upper_arm", 1, (0.0, 0.22, 0.12)),
        Body("left_forearm", 11, (0.0, 0.0, -0.28)),
        Body("left_hand", 12, (0.0, 0.0, -0.24)),
        Body("right_upper_arm", 1, (0.0, -0.22, 0.12)),
        Body("right_forearm", 14, (0.0, 0.0, -0.28)),
        Body("right_hand", 15, (0.0, 0.0, -0.24)),
    )
    y = (0.0, 1.0, 0.0)
    z = (0.0, 0.0, 1.0)
    joints = (
        Joint("waist_yaw", 1, z, -1.5, 1.5, 8.0),
        Joint("left_hip", 3, y, -2.0, 2.0, 12.0),
        Joint("left_knee", 4, y, 0.0, 2.4, 14.0),
        Joint("left_ankle", 5, y, -1.2, 1.2, 12.0),
        Joint("right_hip", 7, y, -2.0, 2.0, 12.0),
        Joint("right_knee", 8, y, 0.0, 2.4, 14.0),
        Joint("right_ankle", 9, y, -1.2, 1.2, 12.0),
        Joint("left_shoulder", 11, y, -2.5, 2.5, 12.0),
        Joint("left_elbow", 12, y, -2.4, 0.0, 14.0),
        Joint("right_shoulder", 14, y, -2.5, 2.5, 12.0),
        Joint("right_elbow", 15, y, -2.4, 0.0, 14.0),
    )
    sites = {
        "LH": FootSite(5, (-0.05, 0.0, -SOLE_DROP)),
        "LT": FootSite(6, (0.0, 0.0, -SOLE_DROP)),
        "RH": FootSite(9, (-0.05, 0.0, -SOLE_DROP)),
        "RT": FootSite(10, (0.0, 0.0, -SOLE_DROP)),
    }
    return RobotModel(bodies=bodies, joints=joints, foot_sites=sites,
                      balance_bodies=("pelvis", "torso"))


def correspondence_entries() -> list[dict]:
    """One-to-one mapping; extremities flagged for the ik baseline."""
    model = test_humanoid()
    ee = {"head", "left_hand", "right_hand", "left_foot", "left_toe",
          "right_foot", "right_toe"}
    return [
        {"source": name, "robot_body": name, "end_effector": name in ee}
        for name in model.body_names
    ]


def test_correspondence(model: RobotModel | None = None) -> JointCorrespondence:
    model = model if model is not None else test_humanoid()
    return build_correspondence(correspondence_entries(), model.body_names, model)


# ---------------------------------------------------------------------------
# trajectory building blocks


def smoothstep(u: np.ndarray) -> np.ndarray:
    """Quintic 0 -> 1 step with zero velocity and acceleration at both ends."""
    u = np.clip(u, 0.0, 1.0)
    return u**3 * (10.0 + u * (-15.0 + 6.0 * u))


def _window(t: np.ndarray, start: float, length: float) -> np.ndarray:
    return smoothstep((t - start) / length)


def leg_ik(dx: np.ndarray, dz: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sagittal hip/knee/ankle angles reaching a hip-relative ankle target.

    dx is forward displacement, dz vertical (negative below the hip).  The
    ankle angle keeps the foot level.  Targets beyond reach are clamped to a
    nearly straight leg.
    """
    r = np.hypot(dx, dz)
    r = np.clip(r, 0.05, 2.0 * LEG_LINK * 0.9999)
    phi = np.arctan2(dx, -dz)
    beta = np.arccos(r / (2.0 * LEG_LINK))
    return -(phi + beta), 2.0 * beta, phi - beta


def _stance_legs(q: np.ndarray, pelvis_z: np.ndarray,
                 lift_left=None, lift_right=None, dx_left=None, dx_right=None) -> None:
    """Fill both legs with IK toward plumb (or offset) ankle targets."""
    T = len(pelvis_z)
    zero = np.zeros(T)
    for side, lift, dx in (("left", lift_left, dx_left), ("right", lift_right, dx_right)):
        lift = zero if lift is None else lift
        dx = zero if dx is None else dx
        ankle_z = SOLE_DROP + lift
        hip_z = pelvis_z - HIP_DROP
        hip, knee, ankle = leg_ik(dx, ankle_z - hip_z)
        base = 1 if side == "left" else 4
        q[:, base] = hip
        q[:, base + 1] = knee
        q[:, base + 2] = ankle


def _arm_sway(q: np.ndarray, t: np.ndarray, amp: float = 0.25, freq: float = 1.0) -> None:
    swing = amp * np.sin(2.0 * np.pi * freq * t)
    q[:, 7] = swing
    q[:, 9] = -swing
    q[:, 8] = -0.3 + 0.08 * np.sin(2.0 * np.pi * freq * t + np.pi)
    q[:, 10] = -0.3 + 0.08 * np.sin(2.0 * np.pi * freq * t)


def _swing_x(w: np.ndarray, amp: float) -> np.ndarray:
    """Forward swing -amp -> +amp whose entry/exit velocity matches stance.

    Stance moves the foot at -4*amp per cycle-unit; this quintic matches that
    slope at both ends so the foot path is velocity-continuous.
    """
    return amp * (-1.0 - 2.0 * w + 40.0 * w**3 - 60.0 * w**4 + 24.0 * w**5)


def _gait_legs(q: np.ndarray, t: np.ndarray, pelvis_z: np.ndarray,
               amp: float, lift_height: float, cycle: float = 1.0) -> None:
    """Alternating stance/swing legs; stance feet are world-fixed when the
    pelvis advances at 4*amp/cycle."""
    for side, phase in (("left", 0.0), ("right", 0.5)):
        u = np.mod(t / cycle + phase, 1.0)
        stance = u < 0.5
        w = (u - 0.5) / 0.5
        dx = np.where(stance, amp * (1.0 - 4.0 * u), _swing_x(w, amp))
        lift = np.where(stance, 0.0, lift_height * np.sin(np.pi * np.clip(w, 0, 1)) ** 2)
        ankle_z = SOLE_DROP + lift
        hip_z = pelvis_z - HIP_DROP
        hip, knee, ankle = leg_ik(dx, ankle_z - hip_z)
        base = 1 if side == "left" else 4
        q[:, base] = hip
        q[:, base + 1] = knee
        q[:, base + 2] = ankle


# ---------------------------------------------------------------------------
# clips


@dataclass(frozen=True)
class SyntheticClip:
    """One generated motion plus its recovery target and curation verdicts.

    q_true/root_*_true is the clean, limit-respecting robot trajectory (for
    defect clips, the trajectory before the defect was injected).
    expected_chunks lists (passes, failed criteria names) per 4 s chunk.
    """

    name: str
    category: str
    source: SourceMotion
    q_true: np.ndarray
    root_pos_true: np.ndarray
    root_rot_true: np.ndarray
    expected_chunks: tuple[tuple[bool, tuple[str, ...]], ...]


def render_source(model: RobotModel, q: np.ndarray, root_pos: np.ndarray,
                  yaw: np.ndarray) -> SourceMotion:
    """FK positions become source joints; foot sites become contact markers."""
    rot = yaw_matrix(yaw)
    pos, body_rot = fk_batch(model, q, root_pos, rot)
    sites = site_positions(model, pos, body_rot)
    markers = {region: sites[:, i : i + 1].copy() for i, region in enumerate(REGIONS)}
    return SourceMotion(fps=TEST_FPS, joint_names=model.body_names,
                        joints=pos.copy(), markers=markers)


def _assemble(model, name, category, q, root_pos, yaw,
              expected=((True, ()),), transform=None) -> SyntheticClip:
    lo, hi = model.q_limits()
    q_true = np.clip(q, lo, hi)
    source = render_source(model, q, root_pos, yaw)
    if transform is not None:
        joints = source.joints.copy()
        markers = {r: m.copy() for r, m in source.markers.items()}
        transform(joints, markers)
        source = SourceMotion(fps=source.fps, joint_names=source.joint_names,
                              joints=joints, markers=markers)
    return SyntheticClip(
        name=name,
        category=category,
        source=source,
        q_true=q_true,
        root_pos_true=root_pos.copy(),
        root_rot_true=matrix_to_quat(yaw_matrix(yaw)),
        expected_chunks=tuple((bool(p), tuple(r)) for p, r in expected),
    )


def _walk_trajectory(T: int, speed: float):
    t = np.arange(T) / TEST_FPS
    q = np.zeros((T, len(JOINT_ORDER)))
    pelvis_z = STAND_HEIGHT + 0.01 * np.sin(2.0 * np.pi * 2.0 * t)
    amp = speed / 4.0
    _gait_legs(q, t, pelvis_z, amp, lift_height=0.06)
    _arm_sway(q, t)
    q[:, 0] = 0.08 * np.sin(2.0 * np.pi * t)
    root = np.stack([speed * t, np.zeros(T), pelvis_z], axis=1)
    return q, root, np.zeros(T)


def _squat_trajectory(T: int, depth: float, cycles: float):
    t = np.arange(T) / TEST_FPS
    q = np.zeros((T, len(JOINT_ORDER)))
    pelvis_z = STAND_HEIGHT - depth * np.sin(np.pi * cycles * t / 4.0) ** 2
    _stance_legs(q, pelvis_z)
    lowered = (STAND_HEIGHT - pelvis_z) / max(depth, 1e-9)
    q[:, 7] = -0.9 * lowered  # arms reach forward while low
    q[:, 9] = -0.9 * lowered
    q[:, 8] = -0.2 - 0.3 * lowered
    q[:, 10] = -0.2 - 0.3 * lowered
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    return q, root, np.zeros(T)


def _jump_trajectory(T: int, flights: tuple[tuple[float, float, float], ...],
                     height: float = 0.14):
    """flights: (crouch_start, flight_start, flight_len) per jump.

    Flight apex jerk grows as height * (pi / flight_len) ** 3, so short hops
    must stay low to clear the curation jerk gate.
    """
    t = np.arange(T) / TEST_FPS
    pelvis_z = np.full(T, STAND_HEIGHT)
    lift = np.zeros(T)
    for crouch_start, flight_start, flight_len in flights:
        down = _window(t, crouch_start, flight_start - crouch_start)
        recover = _window(t, flight_start + flight_len, 0.6)
        pelvis_z = pelvis_z - 0.08 * down + 0.08 * recover
        u = np.clip((t - flight_start) / flight_len, 0.0, 1.0)
        bump = height * np.sin(np.pi * u) ** 2
        pelvis_z = pelvis_z + bump
        lift = lift + bump
    q = np.zeros((T, len(JOINT_ORDER)))
    _stance_legs(q, pelvis_z, lift_left=lift, lift_right=lift)
    q[:, 7] = -0.6 * lift / height
    q[:, 9] = -0.6 * lift / height
    q[:, 8] = -0.25
    q[:, 10] = -0.25
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    return q, root, np.zeros(T)


def _turn_trajectory(T: int, total_yaw: float):
    t = np.arange(T) / TEST_FPS
    q = np.zeros((T, len(JOINT_ORDER)))
    pelvis_z = STAND_HEIGHT + 0.008 * np.sin(2.0 * np.pi * 1.5 * t)
    # marching in place while the root yaws
    for side, phase in (("left", 0.0), ("right", 0.5)):
        u = np.mod(t + phase, 1.0)
        stance = u < 0.5
        w = np.clip((u - 0.5) / 0.5, 0.0, 1.0)
        lift = np.where(stance, 0.0, 0.05 * np.sin(np.pi * w) ** 2)
        if side == "left":
            _stance_legs(q, pelvis_z, lift_left=lift)
        else:
            hip, knee, ankle = leg_ik(np.zeros(T), SOLE_DROP + lift - (pelvis_z - HIP_DROP))
            q[:, 4], q[:, 5], q[:, 6] = hip, knee, ankle
    _arm_sway(q, t, amp=0.15)
    yaw = total_yaw * smoothstep(t / 4.0)
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    return q, root, yaw


def _stand_trajectory(T: int):
    t = np.arange(T) / TEST_FPS
    q = np.zeros((T, len(JOINT_ORDER)))
    pelvis_z = STAND_HEIGHT + 0.008 * np.sin(2.0 * np.pi * 0.4 * t)
    _stance_legs(q, pelvis_z)
    _arm_sway(q, t, amp=0.15, freq=0.5)
    q[:, 0] = 0.05 * np.sin(2.0 * np.pi * 0.3 * t)
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    return q, root, np.zeros(T)


def _twist_trajectory(T: int, direction: float):
    """Standing torso twists that demand a waist angle past its limit.

    The overshoot past the hard stop is kept small (0.06 rad): just enough
    that a clamped solve parks outside the margin band, but not enough for
    the free root yaw to start absorbing the excess and smearing error into
    the arm joints.
    """
    t = np.arange(T) / TEST_FPS
    q = np.zeros((T, len(JOINT_ORDER)))
    pelvis_z = np.full(T, STAND_HEIGHT)
    _stance_legs(q, pelvis_z)
    twist = np.zeros(T)
    for start, sign in ((0.4, 1.0), (2.2, -1.0)):
        up = _window(t, start, 0.6)
        down = _window(t, start + 1.2, 0.6)
        twist = twist + sign * (up - down)
    q[:, 0] = direction * 1.56 * twist
    q[:, 7] = 0.2 * np.abs(twist)
    q[:, 9] = 0.2 * np.abs(twist)
    q[:, 8] = -0.3
    q[:, 10] = -0.3
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    return q, root, np.zeros(T)


def clean_clips(model: RobotModel) -> list[SyntheticClip]:
    T = CLIP_FRAMES
    return [
        _assemble(model, "walk_slow", "clean", *_walk_trajectory(T, 0.35)),
        _assemble(model, "walk_fast", "clean", *_walk_trajectory(T, 0.55)),
        _assemble(model, "squat_shallow", "clean", *_squat_trajectory(T, 0.12, 1.0)),
        _assemble(model, "squat_paced", "clean", *_squat_trajectory(T, 0.16, 2.0)),
        _assemble(model, "jump_single", "clean",
                  *_jump_trajectory(T, ((0.8, 1.4, 1.0),), height=0.14)),
        _assemble(model, "jump_double", "clean",
                  *_jump_trajectory(T, ((0.4, 1.0, 0.65), (2.0, 2.7, 0.65)),
                                    height=0.07)),
        _assemble(model, "turn_left", "clean", *_turn_trajectory(T, 0.9)),
        _assemble(model, "turn_right", "clean", *_turn_trajectory(T, -0.75)),
    ]


def _scale_defect(scale: float):
    def transform(joints, markers):
        joints *= scale  # markers left on the ground
    return transform


def _slide_defect(distance: float, start: float, length: float):
    def transform(joints, markers):
        t = np.arange(joints.shape[0]) / TEST_FPS
        drift = distance * _window(t, start, length)
        joints[:, :, 0] += drift[:, None]
        for m in markers.values():
            m[:, :, 0] += drift[:, None]
    return transform


def defect_clips(model: RobotModel) -> list[SyntheticClip]:
    T = CLIP_FRAMES
    clips = []
    # shallow squat: the 0.88x shrink defect lowers the pelvis by ~9cm, which
    # must not dip under the curation minimum height on its own.  The float
    # scale is milder than the shrink: at 1.06 the lifted feet stay reachable
    # by leg extension (shrunk feet are always reachable by bending), so the
    # grounding term can settle them without straightening the knees out.
    for stem, build in (("walk", lambda: _walk_trajectory(T, 0.40)),
                        ("squat", lambda: _squat_trajectory(T, 0.06, 1.5))):
        clips.append(_assemble(model, f"float_{stem}", "float", *build(),
                               transform=_scale_defect(1.06)))
        clips.append(_assemble(model, f"pen_{stem}", "penetration", *build(),
                               transform=_scale_defect(0.88)))
    # slide defects need swing phases: with feet alternating off the ground the
    # skate penalty can pin stance feet and route the drift through the swings
    clips.append(_assemble(model, "slide_walk", "slide", *_walk_trajectory(T, 0.40),
                           transform=_slide_defect(0.24, 1.4, 1.2)))
    clips.append(_assemble(model, "slide_march", "slide", *_turn_trajectory(T, 0.0),
                           transform=_slide_defect(0.26, 1.4, 1.1)))
    clips.append(_assemble(model, "over_twist_pos", "overdrive", *_twist_trajectory(T, 1.0)))
    clips.append(_assemble(model, "over_twist_neg", "overdrive", *_twist_trajectory(T, -1.0)))
    return clips


def battery_clips(model: RobotModel) -> list[SyntheticClip]:
    """8 s clips whose second 4 s chunk fails exactly one curation criterion."""
    T = 2 * CLIP_FRAMES
    t = np.arange(T) / TEST_FPS
    clips = []

    def teleport(joints, markers):
        dip = (t >= 6.0) & (t < 6.2)
        joints[dip, :, 2] -= 0.10
        for m in markers.values():
            m[dip, :, 2] -= 0.10

    q, root, yaw = _stand_trajectory(T)
    root_tele = root.copy()
    root_tele[(t >= 6.0) & (t < 6.2), 2] -= 0.10
    clips.append(SyntheticClip(
        name="battery_teleport", category="battery",
        source=_assemble(model, "tmp", "battery", q, root, yaw, transform=teleport).source,
        q_true=q, root_pos_true=root_tele,
        root_rot_true=matrix_to_quat(yaw_matrix(yaw)),
        expected_chunks=((True, ()), (False, ("root jerk",))),
    ))

    def floatup(joints, markers):
        lift = 0.10 * _window(t, 4.3, 0.7)
        joints[:, :, 2] += lift[:, None]
        for m in markers.values():
            m[:, :, 2] += lift[:, None]

    q, root, yaw = _stand_trajectory(T)
    root_float = root.copy()
    root_float[:, 2] += 0.10 * _window(t, 4.3, 0.7)
    clips.append(SyntheticClip(
        name="battery_float", category="battery",
        source=_assemble(model, "tmp", "battery", q, root, yaw, transform=floatup).source,
        q_true=q, root_pos_true=root_float,
        root_rot_true=matrix_to_quat(yaw_matrix(yaw)),
        expected_chunks=((True, ()), (False, ("foot contact score",))),
    ))

    pelvis_z = STAND_HEIGHT - 0.33 * np.sin(np.pi * np.clip((t - 5.0) / 3.0, 0.0, 1.0)) ** 2
    q = np.zeros((T, len(JOINT_ORDER)))
    _stance_legs(q, pelvis_z)
    _arm_sway(q, t, amp=0.1, freq=0.5)
    root = np.stack([np.zeros(T), np.zeros(T), pelvis_z], axis=1)
    clips.append(_assemble(
        model, "battery_crouch", "battery", q, root, np.zeros(T),
        expected=((True, ()), (False, ("min pelvis height",))),
    ))

    # genuine lean: the root drifts forward while the feet stay planted, so
    # the pelvis leaves the support hull without distorting any bone
    q, root, yaw = _stand_trajectory(T)
    shift = 0.22 * _window(t, 4.5, 1.0)
    _stance_legs(q, root[:, 2], dx_left=-shift, dx_right=-shift)
    root[:, 0] = shift
    clips.append(_assemble(
        model, "battery_lean", "battery", q, root, yaw,
        expected=((True, ()), (False, ("pelvis support distance",))),
    ))
    return clips


def generate_suite(model: RobotModel | None = None) -> list[SyntheticClip]:
    model = model if model is not None else test_humanoid()
    return clean_clips(model) + defect_clips(model) + battery_clips(model)


def suite_config(robot_path: str = "robot.json",
                 correspondence_path: str = "correspondence.json") -> dict:
    """Pipeline configuration for the generated suite, as plain data."""
    return {
        "contact": {"ramp_top": SUITE_RAMP_TOP},
        "joints": {
            "root": "pelvis",
            "spine": SPINE_JOINT,
            "support": list(SUPPORT_JOINTS),
            "heading": list(HEADING_JOINTS),
        },
        "paths": {
            "robot": robot_path,
            "correspondence": correspondence_path,
        },
    }


def write_suite(directory) -> list[SyntheticClip]:
    """Write the robot, correspondence, config, sources, and truth files."""
    directory = Path(directory)
    (directory / "sources").mkdir(parents=True, exist_ok=True)
    (directory / "truth").mkdir(parents=True, exist_ok=True)
    model = test_humanoid()
    save_robot_model(model, directory / "robot.json")
    _dump_json(correspondence_entries(), directory / "correspondence.json")
    _dump_json(suite_config(), directory / "config.json")
    clips = generate_suite(model)
    expectations = {}
    for clip in clips:
        save_source_motion(clip.source, directory / "sources" / f"{clip.name}.json")
        truth = RetargetedMotion(
            fps=TEST_FPS, joint_names=model.joint_names, q=clip.q_true,
            root_pos=clip.root_pos_true, root_rot=clip.root_rot_true,
        )
        save_retargeted_motion(truth, directory / "truth" / f"{clip.name}.json")
        expectations[clip.name] = {
            "category": clip.category,
            "chunks": [
                {"passes": passes, "reasons": list(reasons)}
                for passes, reasons in clip.expected_chunks
            ],
        }
    _dump_json(expectations, directory / "expectations.json")
    return clips
