"""Input validation helpers shared by loaders, constructors, and estimators."""
from __future__ import annotations

import numpy as np


class MotionFormatError(ValueError):
    """A motion, robot, or config file violates its schema or invariants."""


class RetargetError(RuntimeError):
    """Trajectory optimization cannot proceed (e.g. the loss became non-finite)."""


def as_float_array(value, name: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise MotionFormatError(f"{name}: not convertible to a float array ({exc})") from exc
    return arr


def check_shape(arr: np.ndarray, name: str, shape: tuple[int, ...]) -> np.ndarray:
    """Check dimensionality and sizes; -1 entries are wildcards."""
    if arr.ndim != len(shape):
        raise MotionFormatError(
            f"{name}: expected {len(shape)} dimensions, got {arr.ndim} (shape {arr.shape})"
        )
    for axis, want in enumerate(shape):
        if want != -1 and arr.shape[axis] != want:
            raise MotionFormatError(
                f"{name}: expected size {want} on axis {axis}, got {arr.shape[axis]}"
            )
    return arr


def check_finite(arr: np.ndarray, name: str, *, frame_axis: int | None = 0) -> np.ndarray:
    mask = np.isfinite(arr)
    if mask.all():
        return arr
    first = tuple(int(i) for i in np.argwhere(~mask)[0])
    where = f"index {first}"
    if frame_axis is not None and arr.ndim > frame_axis:
        where = f"frame {first[frame_axis]}, {where}"
    raise MotionFormatError(f"non-finite value in {name} at {where}")


def freeze(arr: np.ndarray) -> np.ndarray:
    """Return a read-only copy; stored arrays must not alias caller memory."""
    out = np.array(arr, dtype=float, copy=True)
    out.setflags(write=False)
    return out
