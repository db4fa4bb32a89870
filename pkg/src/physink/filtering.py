"""Zero-phase low-pass smoothing of motion tracks.

The filter is a Butterworth low-pass designed by bilinear transform as a
cascade of biquad sections and run forward-backward with odd-symmetric edge
padding, so the net phase response is zero and the magnitude response is the
squared one-pass response.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import butter, sosfiltfilt
from sklearn.base import BaseEstimator, TransformerMixin

from .motion import REGIONS, SourceMotion


@dataclass(frozen=True)
class FilterSpec:
    """Low-pass design parameters: separate cutoffs for the root and pose tracks."""

    order: int = 4
    cutoff_root: float = 3.0
    cutoff_pose: float = 6.0
    fs: float = 30.0

    def __post_init__(self):
        if self.order < 2 or self.order % 2:
            raise ValueError(f"order must be even and >= 2, got {self.order}")
        if not self.fs > 0.0:
            raise ValueError(f"fs must be positive, got {self.fs}")
        for name in ("cutoff_root", "cutoff_pose"):
            cutoff = getattr(self, name)
            if not 0.0 < cutoff < self.fs / 2.0:
                raise ValueError(
                    f"{name} must lie in (0, fs/2) = (0, {self.fs / 2.0}), got {cutoff}"
                )


def _transient_length(sos: np.ndarray) -> int:
    """Samples until the slowest filter pole has decayed to 1e-12."""
    radius = 0.0
    for section in sos:
        poles = np.roots([1.0, section[4], section[5]])
        radius = max(radius, float(np.abs(poles).max()))
    if radius >= 1.0:  # pragma: no cover - butter designs are strictly stable
        return 10**6
    return int(np.ceil(np.log(1e-12) / np.log(radius)))


def butterworth_zero_phase(series: np.ndarray, spec: FilterSpec, cutoff: float) -> np.ndarray:
    """Forward-backward Butterworth low-pass of a time series (axis 0).

    The odd-symmetric edge pad covers the full filter transient (capped at the
    series length), which keeps the forward-backward result symmetric under
    time reversal to well below 1e-9 on series longer than the transient.
    """
    if not 0.0 < cutoff < spec.fs / 2.0:
        raise ValueError(f"cutoff must lie in (0, fs/2) = (0, {spec.fs / 2.0}), got {cutoff}")
    arr = np.asarray(series, dtype=float)
    if arr.shape[0] < 3 * spec.order:
        raise ValueError(
            f"series too short to filter: {arr.shape[0]} samples, need at least {3 * spec.order}"
        )
    sos = butter(spec.order, cutoff, btype="low", fs=spec.fs, output="sos")
    padlen = min(max(3 * spec.order, _transient_length(sos)), arr.shape[0] - 1)
    return sosfiltfilt(sos, arr, axis=0, padtype="odd", padlen=padlen)


def smooth_motion(motion: SourceMotion, spec: FilterSpec, root_joint: str = "pelvis") -> SourceMotion:
    """Filter the root joint track at cutoff_root and everything else at cutoff_pose.

    The digital design always uses the motion's own frame rate; spec.fs is the
    design-time default and is overridden when the data disagrees.
    """
    root = motion.joint_index(root_joint)
    if spec.fs != motion.fps:
        spec = replace(spec, fs=motion.fps)
    joints = butterworth_zero_phase(motion.joints, spec, spec.cutoff_pose)
    joints[:, root] = butterworth_zero_phase(motion.joints[:, root], spec, spec.cutoff_root)
    markers = {
        r: butterworth_zero_phase(motion.markers[r], spec, spec.cutoff_pose) for r in REGIONS
    }
    return SourceMotion(
        fps=motion.fps, joint_names=motion.joint_names, joints=joints, markers=markers
    )


class MotionSmoother(TransformerMixin, BaseEstimator):
    """Transformer facade over smooth_motion; stateless, fit is a no-op."""

    def __init__(self, order: int = 4, cutoff_root: float = 3.0, cutoff_pose: float = 6.0,
                 root_joint: str = "pelvis"):
        self.order = order
        self.cutoff_root = cutoff_root
        self.cutoff_pose = cutoff_pose
        self.root_joint = root_joint

    def fit(self, X: SourceMotion, y=None):
        return self

    def transform(self, X: SourceMotion) -> SourceMotion:
        spec = FilterSpec(
            order=self.order,
            cutoff_root=self.cutoff_root,
            cutoff_pose=self.cutoff_pose,
            fs=X.fps,
        )
        return smooth_motion(X, spec, self.root_joint)
