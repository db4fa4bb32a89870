"""Motion curation: ground alignment, contact scoring, chunking, clip filtering.

The pipeline is smooth -> estimate ground -> align -> chunk -> filter.  Every
stage is a pure function; MotionCurator wraps the whole pipeline as a
transformer.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, fields

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .filtering import FilterSpec, smooth_motion
from .motion import REGIONS, ContactSchedule, GroundPlane, SourceMotion, finite_difference

DEFAULT_GROUND_DELTA = 0.025
DEFAULT_CONTACT_RAMP = 0.025
DEFAULT_SUPPORT_JOINTS = ("left_ankle", "right_ankle", "left_foot", "right_foot")

#: report criterion keys, in evaluation order
CRITERIA = (
    "root jerk",
    "foot contact score",
    "min pelvis height",
    "max pelvis height",
    "pelvis support distance",
    "spine support distance",
)


@dataclass(frozen=True)
class FilterThresholds:
    """Clip acceptance thresholds; a clip must satisfy all of them."""

    max_root_jerk: float = 50.0  # m/s^3
    min_contact_score: float = 0.6
    min_pelvis_height: float = 0.6  # m
    max_pelvis_height: float = 1.5  # m
    max_pelvis_bos_dist: float = 0.06  # m outside the base of support
    max_spine_bos_dist: float = 0.11  # m
    clip_seconds: float = 4.0

    def __post_init__(self):
        for f in fields(self):
            value = getattr(self, f.name)
            if not np.isfinite(value) or value <= 0.0:
                raise ValueError(f"{f.name} must be positive and finite, got {value}")
        if self.min_pelvis_height >= self.max_pelvis_height:
            raise ValueError("min_pelvis_height must be below max_pelvis_height")


@dataclass(frozen=True)
class ClipReport:
    """Measured values and the pass/fail decision for one chunked clip."""

    clip_index: int
    start_frame: int
    end_frame: int
    passed: bool
    jerk: float
    contact_score: float
    min_pelvis_z: float
    max_pelvis_z: float
    pelvis_bos: float
    spine_bos: float
    reasons: tuple[str, ...]

    def __post_init__(self):
        if self.passed != (len(self.reasons) == 0):
            raise ValueError("reasons must be non-empty exactly when the clip fails")

    def to_dict(self) -> dict:
        return {
            "clip_index": self.clip_index,
            "start_frame": self.start_frame,
            "end_frame": self.end_frame,
            "pass": self.passed,
            "jerk": self.jerk,
            "contact_score": self.contact_score,
            "min_pelvis_z": self.min_pelvis_z,
            "max_pelvis_z": self.max_pelvis_z,
            "pelvis_bos": self.pelvis_bos,
            "spine_bos": self.spine_bos,
            "reasons": list(self.reasons),
        }


CSV_COLUMNS = (
    "clip_index",
    "start_frame",
    "end_frame",
    "pass",
    "jerk",
    "contact_score",
    "min_pelvis_z",
    "max_pelvis_z",
    "pelvis_bos",
    "spine_bos",
    "reasons",
)


@dataclass(frozen=True)
class CurationReport:
    """Per-clip measurements plus corpus totals for one input motion."""

    clips: tuple[ClipReport, ...]
    kept_count: int
    discarded_count: int
    retained_seconds: float

    def to_dict(self) -> dict:
        return {
            "clips": [c.to_dict() for c in self.clips],
            "totals": {
                "kept": self.kept_count,
                "discarded": self.discarded_count,
                "retained_seconds": self.retained_seconds,
            },
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True, indent=2)
            fh.write("\n")

    def csv_rows(self) -> list[dict]:
        rows = []
        for c in self.clips:
            row = c.to_dict()
            row["reasons"] = "; ".join(c.reasons)
            rows.append(row)
        return rows

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            writer.writerows(self.csv_rows())


# ---------------------------------------------------------------------------
# ground plane


def estimate_ground_plane(motion: SourceMotion, delta: float = DEFAULT_GROUND_DELTA) -> GroundPlane:
    """Majority-vote ground height over per-frame minimum marker heights.

    Every frame nominates its lowest marker z; the candidate that the most
    markers (over all frames and regions) fall within +-delta of wins.  Ties go
    to the lowest candidate.
    """
    if not delta > 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    marker_z = np.concatenate([motion.markers[r][:, :, 2] for r in REGIONS], axis=1)  # [T, K]
    candidates = marker_z.min(axis=1)  # [T]
    flat = marker_z.ravel()
    counts = np.empty(candidates.shape[0], dtype=np.int64)
    # Exhaustive |z - g| <= delta counting, chunked to bound memory.
    chunk_size = max(1, int(2_000_000 // max(flat.size, 1)))
    for start in range(0, candidates.shape[0], chunk_size):
        block = candidates[start : start + chunk_size, None]
        counts[start : start + chunk_size] = (np.abs(flat[None, :] - block) <= delta).sum(axis=1)
    best = np.lexsort((candidates, -counts))[0]
    return GroundPlane(height=float(candidates[best]), tolerance=float(delta))


def align_to_ground(motion: SourceMotion, plane: GroundPlane) -> SourceMotion:
    """Shift all z coordinates so the ground plane sits at z = 0."""
    joints = motion.joints.copy()
    joints[:, :, 2] -= plane.height
    markers = {}
    for region in REGIONS:
        m = motion.markers[region].copy()
        m[:, :, 2] -= plane.height
        markers[region] = m
    return SourceMotion(
        fps=motion.fps, joint_names=motion.joint_names, joints=joints, markers=markers
    )


# ---------------------------------------------------------------------------
# contact scoring


def contact_scores(motion: SourceMotion, ramp_top: float = DEFAULT_CONTACT_RAMP) -> ContactSchedule:
    """Per-region mean of a linear height ramp: 1 at or below ground, 0 at ramp_top."""
    if not ramp_top > 0.0:
        raise ValueError(f"ramp_top must be positive, got {ramp_top}")
    cols = []
    for region in REGIONS:
        z = motion.markers[region][:, :, 2]
        cols.append(np.clip((ramp_top - z) / ramp_top, 0.0, 1.0).mean(axis=1))
    return ContactSchedule(scores=np.stack(cols, axis=1))


def foot_contact_score(schedule: ContactSchedule) -> float:
    """Mean over frames of the best-contacting region."""
    return float(schedule.scores.max(axis=1).mean())


def root_jerk_max(motion: SourceMotion, root_joint: str = "pelvis") -> float:
    """Peak magnitude of the third finite difference of the root trajectory."""
    traj = motion.joints[:, motion.joint_index(root_joint)]
    jerk = finite_difference(traj, 3, motion.fps)
    return float(np.linalg.norm(jerk, axis=1).max())


# ---------------------------------------------------------------------------
# base of support


def base_of_support(points: np.ndarray) -> np.ndarray:
    """Convex hull of ground-plane projections, CCW; degenerate hulls allowed.

    Accepts [N, 2] or [N, 3] points (z is ignored) and returns [M, 2] with
    M == 1 for coincident points and M == 2 for collinear ones.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] not in (2, 3):
        raise ValueError(f"expected [N, 2] or [N, 3] points, got shape {pts.shape}")
    xy = pts[:, :2]
    order = np.lexsort((xy[:, 1], xy[:, 0]))
    xy = xy[order]
    keep = np.ones(len(xy), dtype=bool)
    keep[1:] = np.any(xy[1:] != xy[:-1], axis=1)
    xy = xy[keep]
    if len(xy) == 1:
        return xy.copy()

    def half_hull(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                a, b = out[-2], out[-1]
                if (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 0.0:
                    break
                out.pop()
            out.append(p)
        return out

    lower = half_hull(xy)
    upper = half_hull(xy[::-1])
    hull = lower[:-1] + upper[:-1]
    return np.asarray(hull)


def distance_to_support(point: np.ndarray, hull: np.ndarray) -> float:
    """Horizontal distance from a point to the support polygon; 0 inside or on it."""
    p = np.asarray(point, dtype=float)[:2]
    hull = np.asarray(hull, dtype=float)
    if hull.ndim != 2 or hull.shape[1] != 2 or len(hull) < 1:
        raise ValueError(f"expected an [M, 2] hull, got shape {hull.shape}")
    if len(hull) == 1:
        return float(np.linalg.norm(p - hull[0]))
    a = hull
    b = np.roll(hull, -1, axis=0)
    if len(hull) > 2:
        edge = b - a
        rel = p[None, :] - a
        cross = edge[:, 0] * rel[:, 1] - edge[:, 1] * rel[:, 0]
        if np.all(cross >= 0.0):  # CCW polygon: inside or on the boundary
            return 0.0
    else:
        a, b = hull[:1], hull[1:2]
    seg = b - a
    rel = p[None, :] - a
    seg_len2 = np.einsum("ij,ij->i", seg, seg)
    t = np.clip(np.einsum("ij,ij->i", rel, seg) / np.where(seg_len2 > 0.0, seg_len2, 1.0), 0.0, 1.0)
    nearest = a + t[:, None] * seg
    return float(np.linalg.norm(p[None, :] - nearest, axis=1).min())


# ---------------------------------------------------------------------------
# chunking and filtering


def chunk(motion: SourceMotion, clip_seconds: float = 4.0) -> list[SourceMotion]:
    """Split into consecutive fixed-length clips; the short tail is dropped."""
    n = int(round(clip_seconds * motion.fps))
    if n < 3:
        raise ValueError(f"clip length of {n} frames is too short (clip_seconds={clip_seconds})")
    count = motion.frame_count // n
    return [motion.slice_frames(i * n, (i + 1) * n) for i in range(count)]


def evaluate_clip(
    clip: SourceMotion,
    thresholds: FilterThresholds,
    root_joint: str = "pelvis",
    spine_joint: str = "spine1",
    support_joints: tuple[str, ...] = DEFAULT_SUPPORT_JOINTS,
    ramp_top: float = DEFAULT_CONTACT_RAMP,
    clip_index: int = 0,
    start_frame: int = 0,
) -> ClipReport:
    """Measure all filter criteria on one clip and decide pass/fail."""
    th = thresholds
    jerk = root_jerk_max(clip, root_joint)
    score = foot_contact_score(contact_scores(clip, ramp_top))
    root_idx = clip.joint_index(root_joint)
    spine_idx = clip.joint_index(spine_joint)
    support_idx = [clip.joint_index(name) for name in support_joints]
    pelvis_z = clip.joints[:, root_idx, 2]

    pelvis_dist = 0.0
    spine_dist = 0.0
    for t in range(clip.frame_count):
        hull = base_of_support(clip.joints[t, support_idx])
        pelvis_dist = max(pelvis_dist, distance_to_support(clip.joints[t, root_idx], hull))
        spine_dist = max(spine_dist, distance_to_support(clip.joints[t, spine_idx], hull))

    measured = {
        "root jerk": (jerk, jerk < th.max_root_jerk, f"{jerk:.3f} >= {th.max_root_jerk}"),
        "foot contact score": (score, score > th.min_contact_score, f"{score:.3f} <= {th.min_contact_score}"),
        "min pelvis height": (
            float(pelvis_z.min()),
            pelvis_z.min() > th.min_pelvis_height,
            f"{pelvis_z.min():.3f} <= {th.min_pelvis_height}",
        ),
        "max pelvis height": (
            float(pelvis_z.max()),
            pelvis_z.max() < th.max_pelvis_height,
            f"{pelvis_z.max():.3f} >= {th.max_pelvis_height}",
        ),
        "pelvis support distance": (
            pelvis_dist,
            pelvis_dist < th.max_pelvis_bos_dist,
            f"{pelvis_dist:.3f} >= {th.max_pelvis_bos_dist}",
        ),
        "spine support distance": (
            spine_dist,
            spine_dist < th.max_spine_bos_dist,
            f"{spine_dist:.3f} >= {th.max_spine_bos_dist}",
        ),
    }
    reasons = tuple(f"{name}: {measured[name][2]}" for name in CRITERIA if not measured[name][1])
    return ClipReport(
        clip_index=clip_index,
        start_frame=start_frame,
        end_frame=start_frame + clip.frame_count,
        passed=not reasons,
        jerk=jerk,
        contact_score=score,
        min_pelvis_z=measured["min pelvis height"][0],
        max_pelvis_z=measured["max pelvis height"][0],
        pelvis_bos=pelvis_dist,
        spine_bos=spine_dist,
        reasons=reasons,
    )


def filter_clip(
    clip: SourceMotion,
    thresholds: FilterThresholds,
    root_joint: str = "pelvis",
    spine_joint: str = "spine1",
    support_joints: tuple[str, ...] = DEFAULT_SUPPORT_JOINTS,
    ramp_top: float = DEFAULT_CONTACT_RAMP,
) -> tuple[bool, list[str]]:
    report = evaluate_clip(clip, thresholds, root_joint, spine_joint, support_joints, ramp_top)
    return report.passed, list(report.reasons)


def curate(
    motion: SourceMotion,
    thresholds: FilterThresholds | None = None,
    spec: FilterSpec | None = None,
    *,
    delta: float = DEFAULT_GROUND_DELTA,
    ramp_top: float = DEFAULT_CONTACT_RAMP,
    root_joint: str = "pelvis",
    spine_joint: str = "spine1",
    support_joints: tuple[str, ...] = DEFAULT_SUPPORT_JOINTS,
) -> tuple[list[SourceMotion], CurationReport]:
    """Run the full curation pipeline on one motion.

    Returns the kept clips (smoothed, ground-aligned) and a report covering
    every chunked clip.
    """
    th = thresholds if thresholds is not None else FilterThresholds()
    spec = spec if spec is not None else FilterSpec(fs=motion.fps)
    smoothed = smooth_motion(motion, spec, root_joint)
    plane = estimate_ground_plane(smoothed, delta)
    aligned = align_to_ground(smoothed, plane)
    clips = chunk(aligned, th.clip_seconds)
    clip_frames = int(round(th.clip_seconds * motion.fps))

    kept = []
    reports = []
    for i, piece in enumerate(clips):
        report = evaluate_clip(
            piece,
            th,
            root_joint=root_joint,
            spine_joint=spine_joint,
            support_joints=support_joints,
            ramp_top=ramp_top,
            clip_index=i,
            start_frame=i * clip_frames,
        )
        reports.append(report)
        if report.passed:
            kept.append(piece)
    summary = CurationReport(
        clips=tuple(reports),
        kept_count=len(kept),
        discarded_count=len(reports) - len(kept),
        retained_seconds=len(kept) * clip_frames / motion.fps,
    )
    return kept, summary


# ---------------------------------------------------------------------------
# estimator facades


class GroundAligner(TransformerMixin, BaseEstimator):
    """Estimate the ground plane on fit, shift motions onto it on transform."""

    def __init__(self, delta: float = DEFAULT_GROUND_DELTA):
        self.delta = delta

    def fit(self, X: SourceMotion, y=None):
        self.plane_ = estimate_ground_plane(X, self.delta)
        return self

    def transform(self, X: SourceMotion) -> SourceMotion:
        if not hasattr(self, "plane_"):
            raise NotFittedError("GroundAligner must be fitted before calling transform")
        return align_to_ground(X, self.plane_)


class ContactScorer(TransformerMixin, BaseEstimator):
    """Transform a motion into its per-region contact schedule."""

    def __init__(self, ramp_top: float = DEFAULT_CONTACT_RAMP):
        self.ramp_top = ramp_top

    def fit(self, X: SourceMotion, y=None):
        return self

    def transform(self, X: SourceMotion) -> ContactSchedule:
        return contact_scores(X, self.ramp_top)


class MotionCurator(BaseEstimator):
    """Full curation pipeline as an estimator; transform returns the kept clips.

    After transform, report_ holds the CurationReport for the last input.
    """

    def __init__(
        self,
        order: int = 4,
        cutoff_root: float = 3.0,
        cutoff_pose: float = 6.0,
        delta: float = DEFAULT_GROUND_DELTA,
        ramp_top: float = DEFAULT_CONTACT_RAMP,
        root_joint: str = "pelvis",
        spine_joint: str = "spine1",
        support_joints: tuple[str, ...] = DEFAULT_SUPPORT_JOINTS,
        max_root_jerk: float = 50.0,
        min_contact_score: float = 0.6,
        min_pelvis_height: float = 0.6,
        max_pelvis_height: float = 1.5,
        max_pelvis_bos_dist: float = 0.06,
        max_spine_bos_dist: float = 0.11,
        clip_seconds: float = 4.0,
    ):
        self.order = order
        self.cutoff_root = cutoff_root
        self.cutoff_pose = cutoff_pose
        self.delta = delta
        self.ramp_top = ramp_top
        self.root_joint = root_joint
        self.spine_joint = spine_joint
        self.support_joints = support_joints
        self.max_root_jerk = max_root_jerk
        self.min_contact_score = min_contact_score
        self.min_pelvis_height = min_pelvis_height
        self.max_pelvis_height = max_pelvis_height
        self.max_pelvis_bos_dist = max_pelvis_bos_dist
        self.max_spine_bos_dist = max_spine_bos_dist
        self.clip_seconds = clip_seconds

    def _thresholds(self) -> FilterThresholds:
        return FilterThresholds(
            max_root_jerk=self.max_root_jerk,
            min_contact_score=self.min_contact_score,
            min_pelvis_height=self.min_pelvis_height,
            max_pelvis_height=self.max_pelvis_height,
            max_pelvis_bos_dist=self.max_pelvis_bos_dist,
            max_spine_bos_dist=self.max_spine_bos_dist,
            clip_seconds=self.clip_seconds,
        )

    def curate(self, X: SourceMotion) -> tuple[list[SourceMotion], CurationReport]:
        spec = FilterSpec(
            order=self.order, cutoff_root=self.cutoff_root, cutoff_pose=self.cutoff_pose, fs=X.fps
        )
        return curate(
            X,
            self._thresholds(),
            spec,
            delta=self.delta,
            ramp_top=self.ramp_top,
            root_joint=self.root_joint,
            spine_joint=self.spine_joint,
            support_joints=tuple(self.support_joints),
        )

    def fit(self, X: SourceMotion, y=None):
        return self

    def transform(self, X: SourceMotion) -> list[SourceMotion]:
        kept, report = self.curate(X)
        self.report_ = report
        return kept

    def fit_transform(self, X: SourceMotion, y=None) -> list[SourceMotion]:
        return self.fit(X).transform(X)
