"""Forward kinematics, analytic Jacobians, and source-to-robot shape adaptation."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .motion import REGIONS, RetargetedMotion, SourceMotion, _load_json
from .robot import RobotModel
from .rotations import axis_angle_matrix, matrix_to_quat, quat_to_matrix, skew
from .validation import MotionFormatError, check_finite, freeze


@dataclass(frozen=True)
class FkResult:
    """Global body poses and resolved foot sites over time.

    body_pos -- [T, B, 3]; body_rot -- [T, B, 4] scalar-first unit quaternions;
    foot_pos -- [T, 4, 3] in REGIONS order.
    """

    body_pos: np.ndarray = field(repr=False)
    body_rot: np.ndarray = field(repr=False)
    foot_pos: np.ndarray = field(repr=False)

    @property
    def frame_count(self) -> int:
        return self.body_pos.shape[0]


@dataclass(frozen=True)
class JointCorrespondence:
    """Mapping from source joints to robot bodies plus robot-tree adjacency.

    pairs        -- tuple of (source_index, body_index); each robot body appears
                    at most once.
    end_effector -- per-pair flags marking hands/feet/head pairs.
    adjacency    -- [B, B] symmetric mask; 1 where two corresponded bodies are
                    parent and child in the robot tree.
    """

    source_names: tuple[str, ...]
    body_names: tuple[str, ...]
    pairs: tuple[tuple[int, int], ...]
    end_effector: tuple[bool, ...]
    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        if len(self.pairs) == 0:
            raise MotionFormatError("correspondence needs at least one pair")
        if len(self.end_effector) != len(self.pairs):
            raise MotionFormatError("end_effector flags must match pairs")
        bodies = [b for _, b in self.pairs]
        if len(set(bodies)) != len(bodies):
            raise MotionFormatError("each robot body may appear in at most one pair")
        adjacency = np.asarray(self.adjacency, dtype=bool)
        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise MotionFormatError("adjacency must be a square mask")
        if not np.array_equal(adjacency, adjacency.T):
            raise MotionFormatError("adjacency mask must be symmetric")
        if np.any(np.diag(adjacency)):
            raise MotionFormatError("adjacency mask must have a zero diagonal")
        arr = np.array(adjacency, copy=True)
        arr.setflags(write=False)
        object.__setattr__(self, "adjacency", arr)
        object.__setattr__(self, "pairs", tuple((int(s), int(b)) for s, b in self.pairs))
        object.__setattr__(self, "end_effector", tuple(bool(f) for f in self.end_effector))

    @property
    def source_indices(self) -> np.ndarray:
        return np.array([s for s, _ in self.pairs], dtype=int)

    @property
    def body_indices(self) -> np.ndarray:
        return np.array([b for _, b in self.pairs], dtype=int)

    def body_to_source(self) -> dict[int, int]:
        return {b: s for s, b in self.pairs}

    def end_effector_subset(self) -> "JointCorrespondence":
        pairs = tuple(p for p, ee in zip(self.pairs, self.end_effector) if ee)
        if not pairs:
            raise MotionFormatError("correspondence has no end-effector pairs")
        return JointCorrespondence(
            source_names=self.source_names,
            body_names=self.body_names,
            pairs=pairs,
            end_effector=tuple(True for _ in pairs),
            adjacency=np.zeros_like(self.adjacency),
        )

    def edges(self) -> list[tuple[int, int, int, int]]:
        """Corresponded robot-tree bone pairs as (body_i, body_j, src_i, src_j).

        Each unordered adjacent pair appears once, child first.
        """
        mapping = self.body_to_source()
        out = []
        bi, bj = np.nonzero(np.triu(self.adjacency))
        for a, b in zip(bi.tolist(), bj.tolist()):
            child, parent = (b, a) if a < b else (a, b)
            out.append((child, parent, mapping[child], mapping[parent]))
        return out


def build_correspondence(
    entries: list[dict],
    source_joint_names: tuple[str, ...],
    model: RobotModel,
) -> JointCorrespondence:
    """Resolve name-based correspondence entries against a motion and a model."""
    source_names = tuple(source_joint_names)
    pairs = []
    flags = []
    for i, entry in enumerate(entries):
        try:
            src_name = entry["source"]
            body_name = entry["robot_body"]
        except (KeyError, TypeError) as exc:
            raise MotionFormatError(f"correspondence entry {i}: missing field ({exc})") from exc
        if src_name not in source_names:
            raise MotionFormatError(
                f"correspondence entry {i}: source joint {src_name!r} not in motion"
            )
        pairs.append((source_names.index(src_name), model.body_index(body_name)))
        flags.append(bool(entry.get("end_effector", False)))
    corresponded = {b for _, b in pairs}
    parents = model.parents()
    adjacency = np.zeros((model.body_count, model.body_count), dtype=bool)
    for child in range(1, model.body_count):
        parent = parents[child]
        if child in corresponded and parent in corresponded:
            adjacency[child, parent] = adjacency[parent, child] = True
    return JointCorrespondence(
        source_names=source_names,
        body_names=model.body_names,
        pairs=tuple(pairs),
        end_effector=tuple(flags),
        adjacency=adjacency,
    )


def load_correspondence(path, source_joint_names, model: RobotModel) -> JointCorrespondence:
    data = _load_json(path)
    if not isinstance(data, list):
        raise MotionFormatError(f"{path}: correspondence file must be a JSON list")
    try:
        return build_correspondence(data, source_joint_names, model)
    except MotionFormatError as exc:
        raise MotionFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# forward kinematics


def _local_rotations(model: RobotModel, q: np.ndarray) -> list[np.ndarray | None]:
    """Per-body local rotation matrices [T, 3, 3]; None for jointless bodies."""
    out: list[np.ndarray | None] = [None] * model.body_count
    for j, joint in enumerate(model.joints):
        out[joint.body] = axis_angle_matrix(joint.axis, q[:, j])
    return out


def fk_batch(
    model: RobotModel, q: np.ndarray, root_pos: np.ndarray, root_rot_mats: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized FK over frames: returns body positions [T, B, 3] and rotation
    matrices [T, B, 3, 3].

    Each child frame is parent frame * translate(offset) * rotate(axis, q).
    """
    T = q.shape[0]
    B = model.body_count
    pos = np.empty((T, B, 3))
    rot = np.empty((T, B, 3, 3))
    pos[:, 0] = root_pos
    rot[:, 0] = root_rot_mats
    local = _local_rotations(model, q)
    for b in range(1, B):
        body = model.bodies[b]
        parent_rot = rot[:, body.parent]
        pos[:, b] = pos[:, body.parent] + parent_rot @ body.offset
        rot[:, b] = parent_rot @ local[b] if local[b] is not None else parent_rot
    if local[0] is not None:  # pragma: no cover - model validation forbids this
        raise MotionFormatError("root body cannot carry a joint")
    return pos, rot


def site_positions(model: RobotModel, pos: np.ndarray, rot: np.ndarray) -> np.ndarray:
    """Foot sites resolved to global points, [T, 4, 3] in REGIONS order."""
    out = np.empty((pos.shape[0], len(REGIONS), 3))
    for k, region in enumerate(REGIONS):
        site = model.foot_sites[region]
        out[:, k] = pos[:, site.body] + rot[:, site.body] @ site.offset
    return out


def _as_fk_result(model: RobotModel, pos: np.ndarray, rot: np.ndarray) -> FkResult:
    return FkResult(
        body_pos=freeze(pos),
        body_rot=freeze(matrix_to_quat(rot)),
        foot_pos=freeze(site_positions(model, pos, rot)),
    )


def forward_kinematics(
    model: RobotModel, q: np.ndarray, root_pos: np.ndarray, root_rot: np.ndarray
) -> FkResult:
    """Single-frame FK; root_rot is a scalar-first unit quaternion."""
    q = np.asarray(q, dtype=float).reshape((1, -1))
    if q.shape[1] != model.joint_count:
        raise ValueError(f"expected {model.joint_count} joint angles, got {q.shape[1]}")
    check_finite(q, "q")
    root_pos = np.asarray(root_pos, dtype=float).reshape((1, 3))
    root_rot = np.asarray(root_rot, dtype=float).reshape((1, 4))
    norm = np.linalg.norm(root_rot)
    if abs(norm - 1.0) > 1e-6:
        raise ValueError(f"root_rot must be a unit quaternion (norm {norm:.6f})")
    pos, rot = fk_batch(model, q, root_pos, quat_to_matrix(root_rot))
    return _as_fk_result(model, pos, rot)


def fk_motion(model: RobotModel, motion: RetargetedMotion) -> FkResult:
    """FK over a full retargeted trajectory."""
    if motion.joint_count != model.joint_count:
        raise ValueError(
            f"motion has {motion.joint_count} joints but model has {model.joint_count}"
        )
    pos, rot = fk_batch(model, motion.q, motion.root_pos, quat_to_matrix(motion.root_rot))
    return _as_fk_result(model, pos, rot)


def _ancestor_chains(model: RobotModel) -> list[list[int]]:
    """For each body, the chain of bodies from the root down to it (inclusive)."""
    chains: list[list[int]] = []
    parents = model.parents()
    for b in range(model.body_count):
        chain = [b]
        while parents[chain[-1]] != -1:
            chain.append(int(parents[chain[-1]]))
        chains.append(chain[::-1])
    return chains


def fk_jacobian(
    model: RobotModel, q: np.ndarray, root_pos: np.ndarray, root_rot: np.ndarray, body: int
) -> np.ndarray:
    """Analytic position Jacobian of one body origin, shape [3, 6 + J].

    Columns are ordered root translation (3), then a world-frame exponential
    rotation increment about the current root orientation (3), then the joints.
    Joint columns are axis x lever for ancestors of the body and zero elsewhere.
    """
    if not 0 <= body < model.body_count:
        raise ValueError(f"body index {body} out of range")
    fk = forward_kinematics(model, q, root_pos, root_rot)
    pos = fk.body_pos[0]
    rot = quat_to_matrix(fk.body_rot[0])
    J = np.zeros((3, 6 + model.joint_count))
    J[:, 0:3] = np.eye(3)
    if body != 0:
        J[:, 3:6] = -skew(pos[body] - pos[0])
        chain = set(_ancestor_chains(model)[body][:-1])  # proper ancestors
        for j, joint in enumerate(model.joints):
            if joint.body in chain:
                axis_world = rot[model.bodies[joint.body].parent] @ joint.axis
                J[:, 6 + j] = np.cross(axis_world, pos[body] - pos[joint.body])
    return J


# ---------------------------------------------------------------------------
# shape adaptation


def _edge_rest_lengths(model: RobotModel, edges) -> np.ndarray:
    rest = model.rest_body_positions()
    return np.array([np.linalg.norm(rest[ci] - rest[pi]) for ci, pi, _, _ in edges])


def _propagation_order(model: RobotModel, corr: JointCorrespondence):
    """Edges sorted so parents are rebuilt before children; validates coverage."""
    edges = corr.edges()
    mapping = corr.body_to_source()
    root_src = mapping.get(0)
    if root_src is None:
        raise MotionFormatError("correspondence must include the robot root body")
    reached = {0}
    ordered = []
    remaining = list(edges)
    while remaining:
        progress = False
        for edge in list(remaining):
            child, parent, _, _ = edge
            if parent in reached:
                ordered.append(edge)
                reached.add(child)
                remaining.remove(edge)
                progress = True
        if not progress:
            names = sorted(corr.body_names[e[0]] for e in remaining)
            raise MotionFormatError(
                f"correspondence does not form connected chains from the root; unreachable: {names}"
            )
    stranded = {b for _, b in corr.pairs} - reached
    if stranded:
        names = sorted(corr.body_names[b] for b in stranded)
        raise MotionFormatError(
            f"corresponded bodies not connected to the root through corresponded pairs: {names}"
        )
    return ordered


def adapt_source_shape(
    source: SourceMotion, corr: JointCorrespondence, model: RobotModel
) -> SourceMotion:
    """Re-proportion source joints to robot bone lengths, keeping bone directions.

    Bone vectors are rebuilt outward from the root correspondence with their
    per-frame directions preserved and lengths set to the robot's rest lengths,
    so every output bone length matches the robot exactly in every frame.  The
    root (pelvis) trajectory and the contact marker tracks are left unchanged.
    """
    edges = _propagation_order(model, corr)
    rest_lengths = _edge_rest_lengths(model, edges)
    mapping = corr.body_to_source()
    joints = np.array(source.joints, copy=True)
    new_pos: dict[int, np.ndarray] = {mapping[0]: joints[:, mapping[0]]}
    for (child, parent, src_child, src_parent), rest_len in zip(edges, rest_lengths):
        bone = source.joints[:, src_child] - source.joints[:, src_parent]
        length = np.linalg.norm(bone, axis=1)
        tiny = length < 1e-9
        if tiny.any():
            frame = int(np.argwhere(tiny)[0][0])
            raise MotionFormatError(
                f"zero-length source bone {source.joint_names[src_parent]!r} -> "
                f"{source.joint_names[src_child]!r} at frame {frame}"
            )
        scaled = bone * (rest_len / length)[:, None]
        new_pos[src_child] = new_pos[src_parent] + scaled
        joints[:, src_child] = new_pos[src_child]
    return source.with_joints(joints)


def rigid_scale(
    source: SourceMotion, corr: JointCorrespondence, model: RobotModel
) -> tuple[SourceMotion, float]:
    """Uniformly scale the whole motion so total corresponded bone length matches
    the robot; scaling is about the world origin so the ground plane stays put."""
    edges = corr.edges()
    if not edges:
        raise MotionFormatError("correspondence has no adjacent pairs to scale against")
    rest_lengths = _edge_rest_lengths(model, edges)
    src_lengths = np.array(
        [
            np.linalg.norm(source.joints[:, sc] - source.joints[:, sp], axis=1).mean()
            for _, _, sc, sp in edges
        ]
    )
    total = src_lengths.sum()
    if total < 1e-9:
        raise MotionFormatError("source bones have zero total length")
    scale = float(rest_lengths.sum() / total)
    scaled = SourceMotion(
        fps=source.fps,
        joint_names=source.joint_names,
        joints=source.joints * scale,
        markers={r: m * scale for r, m in source.markers.items()},
    )
    return scaled, scale
