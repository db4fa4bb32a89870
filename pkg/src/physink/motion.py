"""Motion data model, JSON file I/O, and shared numerical utilities.

Conventions: z-up world frame, units in meters, time along axis 0.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import interp1d

from .validation import MotionFormatError, as_float_array, check_finite, check_shape, freeze

#: Foot contact regions: left/right heel and toe.
REGIONS = ("LH", "LT", "RH", "RT")

MIN_FRAMES = 3


def _check_fps(fps: float) -> float:
    fps = float(fps)
    if not np.isfinite(fps) or fps <= 0.0:
        raise MotionFormatError(f"fps must be a positive finite number, got {fps}")
    return fps


@dataclass(frozen=True)
class SourceMotion:
    """Marker-annotated joint-position motion.

    joints  -- [T, J, 3] global joint positions
    markers -- region name -> [T, K, 3] contact marker positions (K >= 1 per region)
    """

    fps: float
    joint_names: tuple[str, ...]
    joints: np.ndarray = field(repr=False)
    markers: dict[str, np.ndarray] = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fps", _check_fps(self.fps))
        object.__setattr__(self, "joint_names", tuple(str(n) for n in self.joint_names))
        if len(set(self.joint_names)) != len(self.joint_names):
            raise MotionFormatError("joint_names contains duplicates")
        joints = freeze(as_float_array(self.joints, "joints"))
        check_shape(joints, "joints", (-1, len(self.joint_names), 3))
        if joints.shape[0] < MIN_FRAMES:
            raise MotionFormatError(
                f"too few frames: got {joints.shape[0]}, need at least {MIN_FRAMES}"
            )
        check_finite(joints, "joints")
        object.__setattr__(self, "joints", joints)

        if set(self.markers) != set(REGIONS):
            raise MotionFormatError(
                f"markers must cover regions {sorted(REGIONS)}, got {sorted(self.markers)}"
            )
        clean = {}
        for region in REGIONS:
            arr = freeze(as_float_array(self.markers[region], f"markers[{region}]"))
            check_shape(arr, f"markers[{region}]", (joints.shape[0], -1, 3))
            if arr.shape[1] < 1:
                raise MotionFormatError(f"markers[{region}] needs at least one marker")
            check_finite(arr, f"markers[{region}]")
            clean[region] = arr
        object.__setattr__(self, "markers", clean)

    @property
    def frame_count(self) -> int:
        return self.joints.shape[0]

    @property
    def joint_count(self) -> int:
        return self.joints.shape[1]

    @property
    def duration(self) -> float:
        return (self.frame_count - 1) / self.fps

    def joint_index(self, name: str) -> int:
        try:
            return self.joint_names.index(name)
        except ValueError:
            raise KeyError(f"joint {name!r} not found; available: {list(self.joint_names)}") from None

    def slice_frames(self, start: int, stop: int) -> "SourceMotion":
        return replace(
            self,
            joints=self.joints[start:stop],
            markers={r: m[start:stop] for r, m in self.markers.items()},
        )

    def with_joints(self, joints: np.ndarray) -> "SourceMotion":
        return replace(self, joints=joints)


@dataclass(frozen=True)
class RetargetedMotion:
    """Robot-space trajectory: joint angles plus a floating root.

    q        -- [T, J] joint angles (radians)
    root_pos -- [T, 3] root position
    root_rot -- [T, 4] unit quaternions, scalar-first (w, x, y, z)
    """

    fps: float
    joint_names: tuple[str, ...]
    q: np.ndarray = field(repr=False)
    root_pos: np.ndarray = field(repr=False)
    root_rot: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "fps", _check_fps(self.fps))
        object.__setattr__(self, "joint_names", tuple(str(n) for n in self.joint_names))
        q = as_float_array(self.q, "q")
        if q.size == 0 and q.ndim != 2:
            q = q.reshape((0, 0))  # empty list input; a [T, 0] array stays as is
        q = freeze(q)
        check_shape(q, "q", (-1, len(self.joint_names)))
        T = q.shape[0]
        if T < MIN_FRAMES:
            raise MotionFormatError(f"too few frames: got {T}, need at least {MIN_FRAMES}")
        check_finite(q, "q")
        root_pos = freeze(as_float_array(self.root_pos, "root_pos"))
        check_shape(root_pos, "root_pos", (T, 3))
        check_finite(root_pos, "root_pos")
        root_rot = freeze(as_float_array(self.root_rot, "root_rot"))
        check_shape(root_rot, "root_rot", (T, 4))
        check_finite(root_rot, "root_rot")
        norms = np.linalg.norm(root_rot, axis=1)
        bad = np.abs(norms - 1.0) > 1e-6
        if bad.any():
            frame = int(np.argwhere(bad)[0][0])
            raise MotionFormatError(
                f"root_rot is not a unit quaternion at frame {frame} (norm {norms[frame]:.6f})"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "root_pos", root_pos)
        object.__setattr__(self, "root_rot", root_rot)

    @property
    def frame_count(self) -> int:
        return self.q.shape[0]

    @property
    def joint_count(self) -> int:
        return self.q.shape[1]


@dataclass(frozen=True)
class ContactSchedule:
    """Per-frame contact scores in [0, 1] for each foot region.

    scores -- [T, 4] with columns ordered as REGIONS.
    """

    scores: np.ndarray = field(repr=False)

    def __post_init__(self):
        scores = freeze(as_float_array(self.scores, "scores"))
        check_shape(scores, "scores", (-1, len(REGIONS)))
        check_finite(scores, "scores")
        if scores.size and (scores.min() < -1e-9 or scores.max() > 1.0 + 1e-9):
            raise MotionFormatError("contact scores must lie in [0, 1]")
        object.__setattr__(self, "scores", scores)

    @property
    def frame_count(self) -> int:
        return self.scores.shape[0]

    def region(self, name: str) -> np.ndarray:
        return self.scores[:, REGIONS.index(name)]


@dataclass(frozen=True)
class GroundPlane:
    """Horizontal ground plane: height on the z axis plus the vote tolerance band."""

    height: float
    tolerance: float

    def __post_init__(self):
        if not np.isfinite(self.height):
            raise MotionFormatError("ground plane height must be finite")
        if not (np.isfinite(self.tolerance) and self.tolerance > 0.0):
            raise MotionFormatError("ground plane tolerance must be positive")


# ---------------------------------------------------------------------------
# file I/O


def _load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MotionFormatError(f"{path}: cannot read file ({exc})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise MotionFormatError(f"{path}: invalid JSON: {exc}") from exc


def _dump_json(payload: dict, path) -> None:
    path = Path(path)
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def load_source_motion(path) -> SourceMotion:
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, dict):
        raise MotionFormatError(f"{path}: top level must be an object")
    for key in ("fps", "joint_names", "frames"):
        if key not in data:
            raise MotionFormatError(f"{path}: missing field {key!r}")
    names = data["joint_names"]
    if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
        raise MotionFormatError(f"{path}: joint_names must be a list of strings")
    frames = data["frames"]
    if not isinstance(frames, list):
        raise MotionFormatError(f"{path}: frames must be a list")

    joints = []
    markers: dict[str, list] = {r: [] for r in REGIONS}
    marker_counts: dict[str, int] | None = None
    for t, frame in enumerate(frames):
        if not isinstance(frame, dict) or "joints" not in frame or "markers" not in frame:
            raise MotionFormatError(f"{path}: frame {t}: expected object with joints and markers")
        fj = frame["joints"]
        if len(fj) != len(names):
            raise MotionFormatError(
                f"{path}: frame {t}: expected {len(names)} joints, got {len(fj)}"
            )
        joints.append(fj)
        fm = frame["markers"]
        if not isinstance(fm, dict) or set(fm) != set(REGIONS):
            got = sorted(fm) if isinstance(fm, dict) else type(fm).__name__
            raise MotionFormatError(f"{path}: frame {t}: markers must map regions {sorted(REGIONS)}, got {got}")
        counts = {r: len(fm[r]) for r in REGIONS}
        if marker_counts is None:
            marker_counts = counts
        elif counts != marker_counts:
            raise MotionFormatError(
                f"{path}: frame {t}: marker counts {counts} differ from frame 0 {marker_counts}"
            )
        for r in REGIONS:
            markers[r].append(fm[r])
    try:
        return SourceMotion(
            fps=data["fps"],
            joint_names=tuple(names),
            joints=as_float_array(joints, "joints"),
            markers={r: as_float_array(markers[r], f"markers[{r}]") for r in REGIONS},
        )
    except MotionFormatError as exc:
        raise MotionFormatError(f"{path}: {exc}") from exc


def save_source_motion(motion: SourceMotion, path) -> None:
    payload = {
        "fps": motion.fps,
        "joint_names": list(motion.joint_names),
        "frames": [
            {
                "joints": motion.joints[t].tolist(),
                "markers": {r: motion.markers[r][t].tolist() for r in REGIONS},
            }
            for t in range(motion.frame_count)
        ],
    }
    _dump_json(payload, path)


def load_retargeted_motion(path) -> RetargetedMotion:
    path = Path(path)
    data = _load_json(path)
    if not isinstance(data, dict):
        raise MotionFormatError(f"{path}: top level must be an object")
    for key in ("fps", "joint_names", "frames"):
        if key not in data:
            raise MotionFormatError(f"{path}: missing field {key!r}")
    names = data["joint_names"]
    frames = data["frames"]
    if not isinstance(frames, list):
        raise MotionFormatError(f"{path}: frames must be a list")
    q, root_pos, root_rot = [], [], []
    for t, frame in enumerate(frames):
        if not isinstance(frame, dict) or not {"q", "root_pos", "root_rot"} <= set(frame):
            raise MotionFormatError(
                f"{path}: frame {t}: expected object with q, root_pos, root_rot"
            )
        if len(frame["q"]) != len(names):
            raise MotionFormatError(
                f"{path}: frame {t}: expected {len(names)} joint angles, got {len(frame['q'])}"
            )
        q.append(frame["q"])
        root_pos.append(frame["root_pos"])
        root_rot.append(frame["root_rot"])
    try:
        return RetargetedMotion(
            fps=data["fps"],
            joint_names=tuple(names),
            q=np.asarray(q, dtype=float).reshape((len(frames), len(names))),
            root_pos=as_float_array(root_pos, "root_pos"),
            root_rot=as_float_array(root_rot, "root_rot"),
        )
    except MotionFormatError as exc:
        raise MotionFormatError(f"{path}: {exc}") from exc


def save_retargeted_motion(motion: RetargetedMotion, path) -> None:
    payload = {
        "fps": motion.fps,
        "joint_names": list(motion.joint_names),
        "frames": [
            {
                "q": motion.q[t].tolist(),
                "root_pos": motion.root_pos[t].tolist(),
                "root_rot": motion.root_rot[t].tolist(),
            }
            for t in range(motion.frame_count)
        ],
    }
    _dump_json(payload, path)


# ---------------------------------------------------------------------------
# shared numerics


def finite_difference(series: np.ndarray, order: int, fps: float) -> np.ndarray:
    """Forward finite differences along axis 0, scaled by fps**order.

    Output has length len(series) - order.
    """
    if order not in (1, 2, 3):
        raise ValueError(f"order must be 1, 2, or 3, got {order}")
    fps = _check_fps(fps)
    arr = np.asarray(series, dtype=float)
    if arr.shape[0] <= order:
        raise ValueError(
            f"series too short for order-{order} differences: {arr.shape[0]} frames"
        )
    return np.diff(arr, n=order, axis=0) * fps**order


def resample(motion: SourceMotion, target_fps: float) -> SourceMotion:
    """Linear resampling of all position tracks; first/last timestamps preserved."""
    target_fps = _check_fps(target_fps)
    duration = motion.duration
    new_count = int(round(duration * target_fps)) + 1
    if new_count < MIN_FRAMES:
        raise ValueError(
            f"resampling to {target_fps} fps would leave {new_count} frames; need {MIN_FRAMES}"
        )
    old_t = np.arange(motion.frame_count) / motion.fps
    new_t = np.linspace(0.0, duration, new_count)

    def interp(arr: np.ndarray) -> np.ndarray:
        return interp1d(old_t, arr, axis=0, assume_sorted=True, copy=False)(new_t)

    return SourceMotion(
        fps=target_fps,
        joint_names=motion.joint_names,
        joints=interp(motion.joints),
        markers={r: interp(m) for r, m in motion.markers.items()},
    )
