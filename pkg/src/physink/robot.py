"""Rigid-body robot model: kinematic tree, revolute joints, foot sites."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .motion import REGIONS, _dump_json, _load_json
from .validation import MotionFormatError, as_float_array, check_finite, check_shape, freeze


@dataclass(frozen=True)
class Body:
    """Tree node: rigidly offset from its parent, optionally rotated by one joint."""

    name: str
    parent: int  # -1 for the root body
    offset: np.ndarray = field(repr=False)  # [3] translation in the parent frame

    def __post_init__(self):
        offset = freeze(as_float_array(self.offset, f"body {self.name!r} offset"))
        check_shape(offset, f"body {self.name!r} offset", (3,))
        check_finite(offset, f"body {self.name!r} offset", frame_axis=None)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "parent", int(self.parent))


@dataclass(frozen=True)
class Joint:
    """Revolute joint rotating one body about a fixed axis in that body's frame."""

    name: str
    body: int
    axis: np.ndarray = field(repr=False)  # [3] unit rotation axis
    q_min: float
    q_max: float
    v_max: float

    def __post_init__(self):
        axis = as_float_array(self.axis, f"joint {self.name!r} axis")
        check_shape(axis, f"joint {self.name!r} axis", (3,))
        norm = np.linalg.norm(axis)
        if not np.isfinite(norm) or norm < 1e-9:
            raise MotionFormatError(f"joint {self.name!r}: axis has zero length")
        if abs(norm - 1.0) > 1e-6:
            raise MotionFormatError(f"joint {self.name!r}: axis must be unit length (norm {norm:.6f})")
        object.__setattr__(self, "axis", freeze(axis / norm))
        object.__setattr__(self, "body", int(self.body))
        for attr in ("q_min", "q_max", "v_max"):
            object.__setattr__(self, attr, float(getattr(self, attr)))
        if not self.q_min < self.q_max:
            raise MotionFormatError(
                f"joint {self.name!r}: q_min {self.q_min} must be below q_max {self.q_max}"
            )
        if not self.v_max > 0.0:
            raise MotionFormatError(f"joint {self.name!r}: v_max must be positive")


@dataclass(frozen=True)
class FootSite:
    """Contact reference point rigidly attached to a body."""

    body: int
    offset: np.ndarray = field(repr=False)  # [3] in the body frame

    def __post_init__(self):
        offset = freeze(as_float_array(self.offset, "foot site offset"))
        check_shape(offset, "foot site offset", (3,))
        check_finite(offset, "foot site offset", frame_axis=None)
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "body", int(self.body))


@dataclass(frozen=True)
class RobotModel:
    """Kinematic tree with joint limits and foot contact sites.

    Bodies are stored in topological order: bodies[0] is the floating root and
    every other body's parent precedes it.  At most one joint drives a body;
    the root body is unactuated.
    """

    bodies: tuple[Body, ...]
    joints: tuple[Joint, ...]
    foot_sites: dict[str, FootSite]
    balance_bodies: tuple[str, str] = ("pelvis", "spine")

    def __post_init__(self):
        bodies = tuple(self.bodies)
        if not bodies:
            raise MotionFormatError("robot model needs at least one body")
        if bodies[0].parent != -1:
            raise MotionFormatError("bodies[0] must be the root (parent == -1)")
        names = [b.name for b in bodies]
        if len(set(names)) != len(names):
            raise MotionFormatError("body names must be unique")
        for i, body in enumerate(bodies[1:], start=1):
            if not 0 <= body.parent < i:
                raise MotionFormatError(
                    f"body {body.name!r}: parent index {body.parent} must precede it "
                    "(bodies must be in topological order)"
                )
        joints = tuple(self.joints)
        jnames = [j.name for j in joints]
        if len(set(jnames)) != len(jnames):
            raise MotionFormatError("joint names must be unique")
        seen_bodies = set()
        for joint in joints:
            if not 1 <= joint.body < len(bodies):
                raise MotionFormatError(
                    f"joint {joint.name!r}: body index {joint.body} is out of range "
                    "(the root body cannot carry a joint)"
                )
            if joint.body in seen_bodies:
                raise MotionFormatError(
                    f"joint {joint.name!r}: body {bodies[joint.body].name!r} already has a joint"
                )
            seen_bodies.add(joint.body)
        if set(self.foot_sites) != set(REGIONS):
            raise MotionFormatError(
                f"foot_sites must cover regions {sorted(REGIONS)}, got {sorted(self.foot_sites)}"
            )
        for region, site in self.foot_sites.items():
            if not 0 <= site.body < len(bodies):
                raise MotionFormatError(f"foot site {region}: body index {site.body} out of range")
        balance = tuple(str(n) for n in self.balance_bodies)
        if len(balance) != 2:
            raise MotionFormatError("balance_bodies must name exactly two bodies")
        object.__setattr__(self, "bodies", bodies)
        object.__setattr__(self, "joints", joints)
        object.__setattr__(self, "foot_sites", dict(self.foot_sites))
        object.__setattr__(self, "balance_bodies", balance)

    @property
    def body_count(self) -> int:
        return len(self.bodies)

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def body_names(self) -> tuple[str, ...]:
        return tuple(b.name for b in self.bodies)

    @property
    def joint_names(self) -> tuple[str, ...]:
        return tuple(j.name for j in self.joints)

    def body_index(self, name: str) -> int:
        for i, body in enumerate(self.bodies):
            if body.name == name:
                return i
        raise KeyError(f"body {name!r} not found; available: {list(self.body_names)}")

    def parents(self) -> np.ndarray:
        return np.array([b.parent for b in self.bodies], dtype=int)

    def offsets(self) -> np.ndarray:
        return np.stack([b.offset for b in self.bodies])

    def q_limits(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([j.q_min for j in self.joints])
        hi = np.array([j.q_max for j in self.joints])
        return lo, hi

    def velocity_limits(self) -> np.ndarray:
        return np.array([j.v_max for j in self.joints])

    def margin_bands(self, margin: float) -> tuple[np.ndarray, np.ndarray]:
        """Position band shrunk inward by (1 - margin) of each joint's span."""
        lo, hi = self.q_limits()
        return margin_bands(lo, hi, margin)

    def velocity_bands(self, margin: float) -> tuple[np.ndarray, np.ndarray]:
        v = self.velocity_limits()
        return margin_bands(-v, v, margin)

    def rest_body_positions(self) -> np.ndarray:
        """Body origins with q = 0 and the root at the world origin; [B, 3]."""
        out = np.zeros((self.body_count, 3))
        for i, body in enumerate(self.bodies[1:], start=1):
            out[i] = out[body.parent] + body.offset
        return out


def margin_bands(lo: np.ndarray, hi: np.ndarray, margin: float) -> tuple[np.ndarray, np.ndarray]:
    """Shrink [lo, hi] inward by (1 - margin) of its span on both ends."""
    if not 0.0 < margin <= 1.0:
        raise ValueError(f"margin must be in (0, 1], got {margin}")
    buffer = (1.0 - margin) * (np.asarray(hi, dtype=float) - np.asarray(lo, dtype=float))
    return lo + buffer, hi - buffer


def load_robot_model(path) -> RobotModel:
    path = Path(path)
    data = _load_json(path)
    try:
        if not isinstance(data, dict):
            raise MotionFormatError("top level must be an object")
        for key in ("bodies", "joints", "foot_sites"):
            if key not in data:
                raise MotionFormatError(f"missing field {key!r}")
        bodies = tuple(
            Body(name=b["name"], parent=b["parent"], offset=b["offset"]) for b in data["bodies"]
        )
        joints = tuple(
            Joint(
                name=j["name"],
                body=j["body"],
                axis=j["axis"],
                q_min=j["q_min"],
                q_max=j["q_max"],
                v_max=j["v_max"],
            )
            for j in data["joints"]
        )
        sites = {
            region: FootSite(body=s["body"], offset=s["offset"])
            for region, s in data["foot_sites"].items()
        }
        balance = tuple(data.get("balance_bodies", ("pelvis", "spine")))
        return RobotModel(bodies=bodies, joints=joints, foot_sites=sites, balance_bodies=balance)
    except (KeyError, TypeError) as exc:
        raise MotionFormatError(f"{path}: malformed robot model ({exc})") from exc
    except MotionFormatError as exc:
        raise MotionFormatError(f"{path}: {exc}") from exc


def save_robot_model(model: RobotModel, path) -> None:
    payload = {
        "bodies": [
            {"name": b.name, "parent": b.parent, "offset": b.offset.tolist()} for b in model.bodies
        ],
        "joints": [
            {
                "name": j.name,
                "body": j.body,
                "axis": j.axis.tolist(),
                "q_min": j.q_min,
                "q_max": j.q_max,
                "v_max": j.v_max,
            }
            for j in model.joints
        ],
        "foot_sites": {
            region: {"body": s.body, "offset": s.offset.tolist()}
            for region, s in model.foot_sites.items()
        },
        "balance_bodies": list(model.balance_bodies),
    }
    _dump_json(payload, path)


__all__ = [
    "Body",
    "Joint",
    "FootSite",
    "RobotModel",
    "margin_bands",
    "load_robot_model",
    "save_robot_model",
]
