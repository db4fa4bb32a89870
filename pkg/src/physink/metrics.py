"""Physical-reliability metrics for retargeted trajectories.

Each metric is a percentage of qualifying frames (or contact pairs).  The
three contact metrics are undefined when the schedule never reaches the
contact threshold; they report None rather than a misleading 0 or 100.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .kinematics import JointCorrespondence, fk_motion
from .motion import ContactSchedule, RetargetedMotion, SourceMotion
from .robot import RobotModel

#: a (region, frame) pair counts as in contact at or above this score
CONTACT_THRESHOLD = 0.5

POSITION_TOLERANCE = 0.10  # m, mean per-joint error
ANGLE_TOLERANCE_DEG = 10.0  # mean per-bone orientation error
HEIGHT_TOLERANCE = 0.01  # m above/below ground during contact
SKATE_TOLERANCE = 0.10  # m/s horizontal during contact

METRIC_NAMES = (
    "motion_fidelity",
    "joint_feasibility",
    "non_floating",
    "non_penetration",
    "non_skating",
)


@dataclass(frozen=True)
class QualityReport:
    """Five percentages with the frame/pair counts backing each."""

    motion_fidelity_pct: float
    joint_feasibility_pct: float
    non_floating_pct: float | None
    non_penetration_pct: float | None
    non_skating_pct: float | None
    counts: dict[str, tuple[int, int]]

    def to_dict(self) -> dict:
        payload = {}
        for name in METRIC_NAMES:
            value = getattr(self, f"{name}_pct")
            passed, total = self.counts[name]
            payload[name] = {
                "percent": None if value is None else float(value),
                "passed": int(passed),
                "total": int(total),
            }
        return payload

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _percent(passed: int, total: int) -> float | None:
    if total == 0:
        return None
    return 100.0 * passed / total


def _bone_angles(
    robot_pos: np.ndarray, source_pos: np.ndarray, corr: JointCorrespondence
) -> np.ndarray:
    """Per-frame mean angle in degrees between corresponded bone directions."""
    edges = corr.edges()
    if not edges:
        return np.zeros(robot_pos.shape[0])
    ci = np.array([e[0] for e in edges])
    pi = np.array([e[1] for e in edges])
    sc = np.array([e[2] for e in edges])
    sp = np.array([e[3] for e in edges])
    rvec = robot_pos[:, ci] - robot_pos[:, pi]
    svec = source_pos[:, sc] - source_pos[:, sp]
    rnorm = np.linalg.norm(rvec, axis=2)
    snorm = np.linalg.norm(svec, axis=2)
    for norms, label in ((rnorm, "robot"), (snorm, "source")):
        tiny = norms < 1e-9
        if tiny.any():
            t, e = (int(i) for i in np.argwhere(tiny)[0])
            pair = (corr.body_names[ci[e]], corr.body_names[pi[e]])
            raise ValueError(
                f"zero-length {label} bone {pair[0]!r} -> {pair[1]!r} at frame {t}"
            )
    cos = np.einsum("tei,tei->te", rvec / rnorm[..., None], svec / snorm[..., None])
    angles = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    return angles.mean(axis=1)


def _fidelity_counts(
    retargeted: RetargetedMotion,
    source: SourceMotion,
    corr: JointCorrespondence,
    model: RobotModel,
) -> tuple[int, int]:
    if source.frame_count != retargeted.frame_count:
        raise ValueError(
            f"source has {source.frame_count} frames, retargeted has {retargeted.frame_count}"
        )
    fk = fk_motion(model, retargeted)
    robot_pos = fk.body_pos[:, corr.body_indices]
    source_pos = source.joints[:, corr.source_indices]
    pos_err = np.linalg.norm(robot_pos - source_pos, axis=2).mean(axis=1)
    angle_err = _bone_angles(fk.body_pos, source.joints, corr)
    good = (pos_err < POSITION_TOLERANCE) & (angle_err < ANGLE_TOLERANCE_DEG)
    return int(good.sum()), retargeted.frame_count


def motion_fidelity_pct(
    retargeted: RetargetedMotion,
    source: SourceMotion,
    corr: JointCorrespondence,
    model: RobotModel,
) -> float:
    """Percent of frames with mean position error < 10 cm and mean bone angle < 10 deg."""
    passed, total = _fidelity_counts(retargeted, source, corr, model)
    return _percent(passed, total)


def _feasibility_counts(
    retargeted: RetargetedMotion, model: RobotModel, margin: float, fps: float
) -> tuple[int, int]:
    q = retargeted.q
    T = retargeted.frame_count
    if q.shape[1] == 0:
        return T, T
    lo, hi = model.margin_bands(margin)
    pos_ok = ((q >= lo) & (q <= hi)).all(axis=1)
    v = np.diff(q, axis=0) * fps
    vlo, vhi = model.velocity_bands(margin)
    vel_ok = ((v >= vlo) & (v <= vhi)).all(axis=1)
    good = pos_ok.copy()
    good[:-1] &= vel_ok  # last frame has no forward difference
    return int(good.sum()), T


def joint_feasibility_pct(
    retargeted: RetargetedMotion, model: RobotModel, margin: float, fps: float
) -> float:
    """Percent of frames with every joint position and velocity inside the margin bands."""
    passed, total = _feasibility_counts(retargeted, model, margin, fps)
    return _percent(passed, total)


def _foot_heights(retargeted: RetargetedMotion, model: RobotModel) -> np.ndarray:
    return fk_motion(model, retargeted).foot_pos


def _check_contacts(retargeted: RetargetedMotion, contacts: ContactSchedule) -> None:
    if contacts.frame_count != retargeted.frame_count:
        raise ValueError(
            f"contact schedule has {contacts.frame_count} frames, "
            f"motion has {retargeted.frame_count}"
        )


def _grounding_counts(
    retargeted: RetargetedMotion, model: RobotModel, contacts: ContactSchedule, kind: str
) -> tuple[int, int]:
    _check_contacts(retargeted, contacts)
    z = _foot_heights(retargeted, model)[:, :, 2]
    mask = contacts.scores >= CONTACT_THRESHOLD
    if kind == "floating":
        ok = z <= HEIGHT_TOLERANCE
    else:
        ok = z >= -HEIGHT_TOLERANCE
    return int((ok & mask).sum()), int(mask.sum())


def non_floating_pct(
    retargeted: RetargetedMotion, model: RobotModel, contacts: ContactSchedule
) -> float | None:
    """Percent of contact pairs with the foot site at most 1 cm above ground."""
    passed, total = _grounding_counts(retargeted, model, contacts, "floating")
    return _percent(passed, total)


def non_penetration_pct(
    retargeted: RetargetedMotion, model: RobotModel, contacts: ContactSchedule
) -> float | None:
    """Percent of contact pairs with the foot site at most 1 cm below ground."""
    passed, total = _grounding_counts(retargeted, model, contacts, "penetration")
    return _percent(passed, total)


def _skating_counts(
    retargeted: RetargetedMotion, model: RobotModel, contacts: ContactSchedule, fps: float
) -> tuple[int, int]:
    _check_contacts(retargeted, contacts)
    feet = _foot_heights(retargeted, model)
    v = np.diff(feet[:, :, :2], axis=0) * fps
    speed = np.linalg.norm(v, axis=2)
    mask = contacts.scores[:-1] >= CONTACT_THRESHOLD
    ok = speed < SKATE_TOLERANCE
    return int((ok & mask).sum()), int(mask.sum())


def non_skating_pct(
    retargeted: RetargetedMotion, model: RobotModel, contacts: ContactSchedule, fps: float
) -> float | None:
    """Percent of contact pairs with horizontal foot speed below 10 cm/s."""
    passed, total = _skating_counts(retargeted, model, contacts, fps)
    return _percent(passed, total)


def quality_report(
    retargeted: RetargetedMotion,
    source: SourceMotion,
    corr: JointCorrespondence,
    model: RobotModel,
    contacts: ContactSchedule,
    fps: float,
    *,
    margin: float = 0.98,
) -> QualityReport:
    """All five metrics with their backing counts."""
    counts = {
        "motion_fidelity": _fidelity_counts(retargeted, source, corr, model),
        "joint_feasibility": _feasibility_counts(retargeted, model, margin, fps),
        "non_floating": _grounding_counts(retargeted, model, contacts, "floating"),
        "non_penetration": _grounding_counts(retargeted, model, contacts, "penetration"),
        "non_skating": _skating_counts(retargeted, model, contacts, fps),
    }
    values = {name: _percent(*counts[name]) for name in METRIC_NAMES}
    return QualityReport(
        motion_fidelity_pct=values["motion_fidelity"],
        joint_feasibility_pct=values["joint_feasibility"],
        non_floating_pct=values["non_floating"],
        non_penetration_pct=values["non_penetration"],
        non_skating_pct=values["non_skating"],
        counts=counts,
    )


def aggregate_reports(reports: list[QualityReport]) -> dict:
    """Mean and median of each metric over the reports where it is defined."""
    summary = {}
    for name in METRIC_NAMES:
        values = [
            getattr(r, f"{name}_pct") for r in reports if getattr(r, f"{name}_pct") is not None
        ]
        summary[name] = {
            "mean": float(np.mean(values)) if values else None,
            "median": float(np.median(values)) if values else None,
            "defined": len(values),
        }
    return summary
