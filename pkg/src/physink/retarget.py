"""Retargeting as trajectory optimization over joint angles and a floating root.

The objective combines position fidelity (global L1 match, bone-local match),
temporal smoothness, joint limit margins, contact grounding, and anti-skating,
with per-mode term activation.  Gradients are analytic; the optimizer is a
deterministic full-batch Adam-style descent with cosine step decay and hard
clamping of joint angles into their limits.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .curation import DEFAULT_CONTACT_RAMP, contact_scores
from .kinematics import (
    FkResult,
    JointCorrespondence,
    adapt_source_shape,
    fk_batch,
    rigid_scale,
    site_positions,
)
from .motion import REGIONS, ContactSchedule, RetargetedMotion, SourceMotion
from .robot import RobotModel, margin_bands
from .rotations import (
    expmap_to_matrix,
    matrix_to_quat,
    quat_to_matrix,
    so3_left_jacobian,
    yaw_matrix,
)
from .validation import RetargetError

#: canonical optimization modes, in increasing term count
MODES = ("ik", "sink", "sink+feasibility", "sink+feasibility+ground", "physink")

#: short spellings accepted on the command line
MODE_CHOICES = ("ik", "sink", "+feasibility", "+ground", "physink")

_MODE_ALIASES = {
    "ik": "ik",
    "sink": "sink",
    "+feasibility": "sink+feasibility",
    "sink+feasibility": "sink+feasibility",
    "+ground": "sink+feasibility+ground",
    "sink+feasibility+ground": "sink+feasibility+ground",
    "physink": "physink",
}

TERM_ORDER = ("global_match", "local_match", "smooth", "feasibility", "ground", "skate")

_MODE_TERMS = {
    "ik": ("global_match",),
    "sink": ("global_match", "local_match", "smooth"),
    "sink+feasibility": ("global_match", "local_match", "smooth", "feasibility"),
    "sink+feasibility+ground": ("global_match", "local_match", "smooth", "feasibility", "ground"),
    "physink": TERM_ORDER,
}


def parse_mode(mode: str) -> str:
    key = str(mode).strip().lower()
    if key not in _MODE_ALIASES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {sorted(_MODE_ALIASES)}")
    return _MODE_ALIASES[key]


@dataclass(frozen=True)
class LossWeights:
    """Per-term weights applied to the raw loss values."""

    global_match: float = 1.0
    local_match: float = 1.0
    smooth: float = 0.1
    feasibility: float = 10.0
    # the grounding penalty is quadratic while the match terms are L1, so this
    # weight sets the contact-depth equilibrium directly; it must be large for
    # feet to settle within the metre-scale millimetre tolerances
    ground: float = 1000.0
    skate: float = 1.0

    def __post_init__(self):
        for name in TERM_ORDER:
            if getattr(self, name) < 0.0:
                raise ValueError(f"weight {name} must be non-negative")

    def get(self, name: str) -> float:
        return float(getattr(self, name))


@dataclass(frozen=True)
class OptimizerConfig:
    """Optimization settings.

    limit_margin is the fraction of each limit span kept usable (0.98 keeps a
    2% buffer at both ends).  feasibility_slack tightens the optimized hinge
    band slightly inside the reported band so first-order chatter cannot park
    solutions exactly on the boundary.  seed is accepted for interface
    stability; the optimizer itself is deterministic.
    """

    mode: str = "physink"
    weights: LossWeights = field(default_factory=LossWeights)
    iterations: int = 2000
    step_size: float = 0.05
    limit_margin: float = 0.98
    feasibility_slack: float = 0.005
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mode", parse_mode(self.mode))
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not self.step_size > 0.0:
            raise ValueError("step_size must be positive")
        if not 0.0 < self.limit_margin <= 1.0:
            raise ValueError("limit_margin must lie in (0, 1]")
        if not 0.0 <= self.feasibility_slack < self.limit_margin:
            raise ValueError("feasibility_slack must be small and non-negative")


@dataclass
class DecisionVariables:
    """Free parameters of the trajectory plus the fixed rotation reference.

    The root orientation at frame t is exp(root_rot_inc[t]) applied to
    base_rot[t]; base_rot itself is not optimized.
    """

    q: np.ndarray  # [T, J]
    root_pos: np.ndarray  # [T, 3]
    root_rot_inc: np.ndarray  # [T, 3] exponential-map increments
    base_rot: np.ndarray  # [T, 4] scalar-first unit quaternions

    def copy(self) -> "DecisionVariables":
        return DecisionVariables(
            q=self.q.copy(),
            root_pos=self.root_pos.copy(),
            root_rot_inc=self.root_rot_inc.copy(),
            base_rot=self.base_rot.copy(),
        )

    @property
    def frame_count(self) -> int:
        return self.q.shape[0]

    def root_matrices(self) -> np.ndarray:
        return expmap_to_matrix(self.root_rot_inc) @ quat_to_matrix(self.base_rot)


@dataclass
class VariableGradients:
    q: np.ndarray
    root_pos: np.ndarray
    root_rot_inc: np.ndarray


@dataclass
class LossTrace:
    """Per-iteration objective values; best is the running minimum of total."""

    iteration: np.ndarray
    total: np.ndarray
    best: np.ndarray
    terms: dict[str, np.ndarray]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(("iteration", "total", *TERM_ORDER, "best"))
            for i in range(len(self.iteration)):
                row = [int(self.iteration[i]), repr(float(self.total[i]))]
                for name in TERM_ORDER:
                    values = self.terms.get(name)
                    row.append("" if values is None else repr(float(values[i])))
                row.append(repr(float(self.best[i])))
                writer.writerow(row)


# ---------------------------------------------------------------------------
# individual loss terms (value-only, for direct inspection and testing)


def loss_global_match(fk: FkResult, source: SourceMotion, corr: JointCorrespondence) -> float:
    """Summed L1 distance between corresponded source and robot positions."""
    d = fk.body_pos[:, corr.body_indices] - source.joints[:, corr.source_indices]
    return float(np.abs(d).sum())


def _edge_vectors(positions: np.ndarray, first: np.ndarray, second: np.ndarray) -> np.ndarray:
    return positions[:, first] - positions[:, second]


def _checked_norms(vec: np.ndarray, label: str, names: list[tuple[str, str]]) -> np.ndarray:
    norms = np.linalg.norm(vec, axis=2)
    tiny = norms < 1e-9
    if tiny.any():
        t, e = (int(i) for i in np.argwhere(tiny)[0])
        raise ValueError(
            f"zero-length {label} bone {names[e][0]!r} -> {names[e][1]!r} at frame {t}"
        )
    return norms


def loss_local_match(fk: FkResult, source: SourceMotion, corr: JointCorrespondence) -> float:
    """Bone-relative match over robot-adjacent corresponded pairs.

    Each unordered bone contributes its squared relative-offset error plus one
    minus the cosine between the unit source and robot bone directions.
    """
    edges = corr.edges()
    if not edges:
        return 0.0
    ci = np.array([e[0] for e in edges])
    pi = np.array([e[1] for e in edges])
    sc = np.array([e[2] for e in edges])
    sp = np.array([e[3] for e in edges])
    pair_names = [(corr.body_names[a], corr.body_names[b]) for a, b in zip(ci, pi)]
    robot_vec = _edge_vectors(fk.body_pos, ci, pi)
    source_vec = _edge_vectors(source.joints, sc, sp)
    robot_norm = _checked_norms(robot_vec, "robot", pair_names)
    source_norm = _checked_norms(source_vec, "source", pair_names)
    pos_term = ((source_vec - robot_vec) ** 2).sum()
    cos = np.einsum(
        "tei,tei->te", source_vec / source_norm[..., None], robot_vec / robot_norm[..., None]
    )
    return float(pos_term + (1.0 - cos).sum())


def _third_difference(series: np.ndarray, fps: float) -> np.ndarray:
    return (series[3:] - 3.0 * series[2:-1] + 3.0 * series[1:-2] - series[:-3]) * fps


def loss_smooth(variables: DecisionVariables, fps: float) -> float:
    """L1 norm of the second difference of joint and root velocities."""
    value = np.abs(_third_difference(variables.q, fps)).sum()
    value += np.abs(_third_difference(variables.root_pos, fps)).sum()
    return float(value)


def loss_feasibility(
    variables: DecisionVariables, model: RobotModel, margin: float, fps: float
) -> float:
    """Hinge penalties on joint positions and velocities outside margin bands."""
    q = variables.q
    lo, hi = model.margin_bands(margin)
    value = np.maximum(0.0, q - hi).sum() + np.maximum(0.0, lo - q).sum()
    v = np.diff(q, axis=0) * fps
    vlo, vhi = model.velocity_bands(margin)
    value += np.maximum(0.0, v - vhi).sum() + np.maximum(0.0, vlo - v).sum()
    return float(value)


def loss_ground(fk: FkResult, contacts: ContactSchedule) -> float:
    """Contact-weighted squared height of the foot sites."""
    z = fk.foot_pos[:, :, 2]
    return float((contacts.scores * z * z).sum())


def loss_skate(fk: FkResult, contacts: ContactSchedule, fps: float) -> float:
    """Contact-weighted horizontal speed of the foot sites."""
    v = np.diff(fk.foot_pos[:, :, :2], axis=0) * fps
    speed = np.linalg.norm(v, axis=2)
    return float((contacts.scores[:-1] * speed).sum())


# ---------------------------------------------------------------------------
# fused evaluation with analytic gradients


@dataclass
class _Context:
    model: RobotModel
    source: SourceMotion
    corr: JointCorrespondence
    contacts: ContactSchedule
    cfg: OptimizerConfig
    terms: tuple[str, ...]
    # pair data for the global term (end-effector subset in ik mode)
    pair_body: np.ndarray
    src_pair_pos: np.ndarray
    # edge data for the local term
    edge_child: np.ndarray
    edge_parent: np.ndarray
    src_edge_vec: np.ndarray
    src_edge_unit: np.ndarray
    # model arrays
    parents: np.ndarray
    joint_body: np.ndarray
    joint_parent: np.ndarray
    axes: np.ndarray
    q_lo: np.ndarray
    q_hi: np.ndarray
    band_lo: np.ndarray
    band_hi: np.ndarray
    vband_lo: np.ndarray
    vband_hi: np.ndarray
    desc_bodies: list[np.ndarray]
    desc_sites: list[np.ndarray]


def _descendant_tables(model: RobotModel) -> tuple[list[np.ndarray], list[np.ndarray]]:
    parents = model.parents()
    chains: list[set[int]] = []
    for b in range(model.body_count):
        chain = set()
        node = b
        while parents[node] != -1:
            node = int(parents[node])
            chain.add(node)
        chains.append(chain)  # proper ancestors of b
    site_bodies = [model.foot_sites[r].body for r in REGIONS]
    desc_bodies = []
    desc_sites = []
    for joint in model.joints:
        jb = joint.body
        desc_bodies.append(
            np.array([b for b in range(model.body_count) if jb in chains[b]], dtype=int)
        )
        desc_sites.append(
            np.array(
                [k for k, sb in enumerate(site_bodies) if sb == jb or jb in chains[sb]], dtype=int
            )
        )
    return desc_bodies, desc_sites


def _build_context(
    model: RobotModel,
    source: SourceMotion,
    corr: JointCorrespondence,
    contacts: ContactSchedule,
    cfg: OptimizerConfig,
) -> _Context:
    if contacts.frame_count != source.frame_count:
        raise ValueError(
            f"contact schedule has {contacts.frame_count} frames, source has {source.frame_count}"
        )
    terms = _MODE_TERMS[cfg.mode]
    used = corr.end_effector_subset() if cfg.mode == "ik" else corr
    pair_body = used.body_indices
    src_pair_pos = source.joints[:, used.source_indices]

    edges = corr.edges()
    edge_child = np.array([e[0] for e in edges], dtype=int)
    edge_parent = np.array([e[1] for e in edges], dtype=int)
    if edges:
        sc = np.array([e[2] for e in edges])
        sp = np.array([e[3] for e in edges])
        names = [(corr.body_names[a], corr.body_names[b]) for a, b in zip(edge_child, edge_parent)]
        src_edge_vec = source.joints[:, sc] - source.joints[:, sp]
        norms = _checked_norms(src_edge_vec, "source", names)
        src_edge_unit = src_edge_vec / norms[..., None]
        rest = model.rest_body_positions()
        rest_len = np.linalg.norm(rest[edge_child] - rest[edge_parent], axis=1)
        if np.any(rest_len < 1e-9):
            bad = int(np.argwhere(rest_len < 1e-9)[0][0])
            raise ValueError(
                f"zero-length robot bone {names[bad][0]!r} -> {names[bad][1]!r}"
            )
    else:
        src_edge_vec = np.zeros((source.frame_count, 0, 3))
        src_edge_unit = src_edge_vec
    lo, hi = model.q_limits()
    margin = cfg.limit_margin - cfg.feasibility_slack
    band_lo, band_hi = model.margin_bands(margin)
    v = model.velocity_limits()
    vband_lo, vband_hi = margin_bands(-v, v, margin)
    desc_bodies, desc_sites = _descendant_tables(model)
    return _Context(
        model=model,
        source=source,
        corr=corr,
        contacts=contacts,
        cfg=cfg,
        terms=terms,
        pair_body=pair_body,
        src_pair_pos=src_pair_pos,
        edge_child=edge_child,
        edge_parent=edge_parent,
        src_edge_vec=src_edge_vec,
        src_edge_unit=src_edge_unit,
        parents=model.parents(),
        joint_body=np.array([j.body for j in model.joints], dtype=int),
        joint_parent=np.array([model.bodies[j.body].parent for j in model.joints], dtype=int),
        axes=np.stack([j.axis for j in model.joints]) if model.joints else np.zeros((0, 3)),
        q_lo=lo,
        q_hi=hi,
        band_lo=band_lo,
        band_hi=band_hi,
        vband_lo=vband_lo,
        vband_hi=vband_hi,
        desc_bodies=desc_bodies,
        desc_sites=desc_sites,
    )


def _evaluate(variables: DecisionVariables, ctx: _Context) -> tuple[float, VariableGradients, dict]:
    cfg = ctx.cfg
    w = cfg.weights
    fps = ctx.source.fps
    T, J = variables.q.shape
    B = ctx.model.body_count

    root_mats = variables.root_matrices()
    pos, rot = fk_batch(ctx.model, variables.q, variables.root_pos, root_mats)
    sites = site_positions(ctx.model, pos, rot)

    g_body = np.zeros((T, B, 3))
    g_site = np.zeros((T, len(sites[0]), 3))
    grad_q = np.zeros((T, J))
    grad_root = np.zeros((T, 3))
    terms: dict[str, float] = {}

    if "global_match" in ctx.terms:
        d = pos[:, ctx.pair_body] - ctx.src_pair_pos
        terms["global_match"] = float(np.abs(d).sum())
        g_body[:, ctx.pair_body] += w.global_match * np.sign(d)

    if "local_match" in ctx.terms and ctx.edge_child.size:
        robot_vec = pos[:, ctx.edge_child] - pos[:, ctx.edge_parent]
        norms = np.linalg.norm(robot_vec, axis=2)
        unit = robot_vec / norms[..., None]
        diff = ctx.src_edge_vec - robot_vec
        cos = np.einsum("tei,tei->te", ctx.src_edge_unit, unit)
        terms["local_match"] = float((diff**2).sum() + (1.0 - cos).sum())
        g_edge = -2.0 * diff  # d(pos term)/d(robot_vec)
        g_edge += -(ctx.src_edge_unit - cos[..., None] * unit) / norms[..., None]
        g_edge *= w.local_match
        for e in range(ctx.edge_child.size):
            g_body[:, ctx.edge_child[e]] += g_edge[:, e]
            g_body[:, ctx.edge_parent[e]] -= g_edge[:, e]

    if "smooth" in ctx.terms:
        value = 0.0
        for series, target in ((variables.q, grad_q), (variables.root_pos, grad_root)):
            d3 = _third_difference(series, fps)
            value += np.abs(d3).sum()
            # subgradient: zero inside the kink so float noise on constant
            # trajectories does not inject O(fps) gradient entries
            s = w.smooth * fps * np.where(np.abs(d3) > 1e-12, np.sign(d3), 0.0)
            target[: T - 3] += -s
            target[1 : T - 2] += 3.0 * s
            target[2 : T - 1] += -3.0 * s
            target[3:] += s
        terms["smooth"] = float(value)

    if "feasibility" in ctx.terms and J:
        q = variables.q
        over = np.maximum(0.0, q - ctx.band_hi)
        under = np.maximum(0.0, ctx.band_lo - q)
        value = over.sum() + under.sum()
        grad_q += w.feasibility * ((q > ctx.band_hi).astype(float) - (q < ctx.band_lo))
        v = np.diff(q, axis=0) * fps
        vover = np.maximum(0.0, v - ctx.vband_hi)
        vunder = np.maximum(0.0, ctx.vband_lo - v)
        value += vover.sum() + vunder.sum()
        sv = w.feasibility * fps * ((v > ctx.vband_hi).astype(float) - (v < ctx.vband_lo))
        grad_q[:-1] += -sv
        grad_q[1:] += sv
        terms["feasibility"] = float(value)

    c = ctx.contacts.scores
    if "ground" in ctx.terms:
        z = sites[:, :, 2]
        terms["ground"] = float((c * z * z).sum())
        g_site[:, :, 2] += 2.0 * w.ground * c * z

    if "skate" in ctx.terms:
        v = np.diff(sites[:, :, :2], axis=0) * fps
        speed = np.linalg.norm(v, axis=2)
        terms["skate"] = float((c[:-1] * speed).sum())
        safe = np.where(speed > 1e-12, speed, 1.0)
        gv = w.skate * (c[:-1] / safe)[..., None] * v
        gv[speed <= 1e-12] = 0.0
        g_site[:-1, :, :2] += -fps * gv
        g_site[1:, :, :2] += fps * gv

    # --- backpropagate position gradients to the decision variables
    grad_root += g_body.sum(axis=1) + g_site.sum(axis=1)

    lever_b = pos - variables.root_pos[:, None, :]
    moment = np.cross(lever_b, g_body).sum(axis=1)
    lever_s = sites - variables.root_pos[:, None, :]
    moment += np.cross(lever_s, g_site).sum(axis=1)
    jl = so3_left_jacobian(variables.root_rot_inc)
    grad_inc = np.einsum("tji,tj->ti", jl, moment)

    for j in range(J):
        jb = ctx.joint_body[j]
        axis_world = rot[:, ctx.joint_parent[j]] @ ctx.axes[j]
        pivot = pos[:, jb]
        contrib = np.zeros(T)
        bodies = ctx.desc_bodies[j]
        if bodies.size:
            lever = pos[:, bodies] - pivot[:, None, :]
            omega = np.cross(axis_world[:, None, :], lever)
            contrib += np.einsum("tbi,tbi->t", omega, g_body[:, bodies])
        site_idx = ctx.desc_sites[j]
        if site_idx.size:
            lever = sites[:, site_idx] - pivot[:, None, :]
            omega = np.cross(axis_world[:, None, :], lever)
            contrib += np.einsum("tsi,tsi->t", omega, g_site[:, site_idx])
        grad_q[:, j] += contrib

    total = sum(w.get(name) * terms[name] for name in terms)
    grads = VariableGradients(q=grad_q, root_pos=grad_root, root_rot_inc=grad_inc)
    return float(total), grads, terms


def total_loss(
    variables: DecisionVariables,
    model: RobotModel,
    source: SourceMotion,
    corr: JointCorrespondence,
    contacts: ContactSchedule,
    cfg: OptimizerConfig,
) -> tuple[float, VariableGradients]:
    """Weighted objective for the configured mode, with analytic gradients."""
    ctx = _build_context(model, source, corr, contacts, cfg)
    value, grads, _ = _evaluate(variables, ctx)
    return value, grads


# ---------------------------------------------------------------------------
# initialization and descent


def _initial_q(model: RobotModel, T: int) -> np.ndarray:
    lo, hi = model.q_limits()
    init = np.where((lo < 0.0) & (hi > 0.0), 0.0, 0.5 * (lo + hi))
    return np.tile(init, (T, 1))


def _heading_base(
    source: SourceMotion, heading_joints: tuple[str, str] | None
) -> np.ndarray:
    T = source.frame_count
    if heading_joints is None:
        quat = np.zeros((T, 4))
        quat[:, 0] = 1.0
        return quat
    left, right = heading_joints
    h = source.joints[:, source.joint_index(right)] - source.joints[:, source.joint_index(left)]
    yaw = np.arctan2(h[:, 0], -h[:, 1])  # facing = up x (left -> right hip)
    flat = np.hypot(h[:, 0], h[:, 1]) < 1e-9
    yaw = np.where(flat, 0.0, yaw)
    return matrix_to_quat(yaw_matrix(yaw))


def initialize_variables(
    model: RobotModel,
    source: SourceMotion,
    corr: JointCorrespondence,
    heading_joints: tuple[str, str] | None = None,
) -> DecisionVariables:
    """Neutral joint angles, root on the source pelvis, heading from the hips."""
    T = source.frame_count
    root_src = corr.body_to_source().get(0)
    if root_src is None:
        raise RetargetError("correspondence must map the robot root body to a source joint")
    return DecisionVariables(
        q=_initial_q(model, T),
        root_pos=source.joints[:, root_src].copy(),
        root_rot_inc=np.zeros((T, 3)),
        base_rot=_heading_base(source, heading_joints),
    )


def retarget(
    source: SourceMotion,
    model: RobotModel,
    corr: JointCorrespondence,
    cfg: OptimizerConfig | None = None,
    *,
    ramp_top: float = DEFAULT_CONTACT_RAMP,
    heading_joints: tuple[str, str] | None = None,
) -> tuple[RetargetedMotion, LossTrace]:
    """Optimize a robot trajectory against one source motion.

    The source is shape-adapted to the robot's proportions first (rigidly
    scaled instead in ik mode); contacts are scored on its marker tracks and
    frozen.  Identical inputs and config produce bit-identical outputs.
    """
    cfg = cfg if cfg is not None else OptimizerConfig()
    if cfg.mode == "ik":
        work, _ = rigid_scale(source, corr, model)
    else:
        work = adapt_source_shape(source, corr, model)
    contacts = contact_scores(work, ramp_top)
    variables = initialize_variables(model, work, corr, heading_joints)
    ctx = _build_context(model, work, corr, contacts, cfg)

    lo, hi = model.q_limits()
    groups = ("q", "root_pos", "root_rot_inc")
    m = {g: np.zeros_like(getattr(variables, g)) for g in groups}
    v = {g: np.zeros_like(getattr(variables, g)) for g in groups}
    beta1, beta2, eps = 0.9, 0.999, 1e-8

    n = cfg.iterations
    trace_total = np.empty(n)
    trace_best = np.empty(n)
    trace_terms = {name: np.empty(n) for name in ctx.terms}
    best_value = np.inf
    best_vars = variables.copy()

    for it in range(n):
        value, grads, terms = _evaluate(variables, ctx)
        if not np.isfinite(value):
            detail = ", ".join(f"{k}={terms[k]:.3e}" for k in terms)
            raise RetargetError(f"non-finite loss at iteration {it} ({detail})")
        if value < best_value:
            best_value = value
            best_vars = variables.copy()
        trace_total[it] = value
        trace_best[it] = best_value
        for name in ctx.terms:
            trace_terms[name][it] = terms[name]

        lr = cfg.step_size * 0.5 * (1.0 + np.cos(np.pi * it / n))
        t_adam = it + 1
        for g in groups:
            grad = getattr(grads, g)
            m[g] = beta1 * m[g] + (1.0 - beta1) * grad
            v[g] = beta2 * v[g] + (1.0 - beta2) * grad * grad
            m_hat = m[g] / (1.0 - beta1**t_adam)
            v_hat = v[g] / (1.0 - beta2**t_adam)
            setattr(
                variables, g, getattr(variables, g) - lr * m_hat / (np.sqrt(v_hat) + eps)
            )
        if variables.q.size:
            variables.q = np.clip(variables.q, lo, hi)

    value, _, _ = _evaluate(variables, ctx)
    if np.isfinite(value) and value < best_value:
        best_value = value
        best_vars = variables.copy()

    root_rot = matrix_to_quat(best_vars.root_matrices())
    motion = RetargetedMotion(
        fps=source.fps,
        joint_names=model.joint_names,
        q=best_vars.q,
        root_pos=best_vars.root_pos,
        root_rot=root_rot,
    )
    trace = LossTrace(
        iteration=np.arange(n), total=trace_total, best=trace_best, terms=trace_terms
    )
    return motion, trace


# ---------------------------------------------------------------------------
# estimator facade


class PhySinkRetargeter(TransformerMixin, BaseEstimator):
    """Estimator facade over retarget; each transform optimizes its input.

    After fit or transform, motion_ and trace_ describe the most recent run.
    """

    def __init__(
        self,
        model: RobotModel = None,
        correspondence: JointCorrespondence = None,
        mode: str = "physink",
        iterations: int = 2000,
        step_size: float = 0.05,
        limit_margin: float = 0.98,
        feasibility_slack: float = 0.005,
        seed: int = 0,
        w_global_match: float = 1.0,
        w_local_match: float = 1.0,
        w_smooth: float = 0.1,
        w_feasibility: float = 10.0,
        w_ground: float = 1000.0,
        w_skate: float = 1.0,
        ramp_top: float = DEFAULT_CONTACT_RAMP,
        heading_joints: tuple[str, str] | None = None,
    ):
        self.model = model
        self.correspondence = correspondence
        self.mode = mode
        self.iterations = iterations
        self.step_size = step_size
        self.limit_margin = limit_margin
        self.feasibility_slack = feasibility_slack
        self.seed = seed
        self.w_global_match = w_global_match
        self.w_local_match = w_local_match
        self.w_smooth = w_smooth
        self.w_feasibility = w_feasibility
        self.w_ground = w_ground
        self.w_skate = w_skate
        self.ramp_top = ramp_top
        self.heading_joints = heading_joints

    def _config(self) -> OptimizerConfig:
        return OptimizerConfig(
            mode=self.mode,
            weights=LossWeights(
                global_match=self.w_global_match,
                local_match=self.w_local_match,
                smooth=self.w_smooth,
                feasibility=self.w_feasibility,
                ground=self.w_ground,
                skate=self.w_skate,
            ),
            iterations=self.iterations,
            step_size=self.step_size,
            limit_margin=self.limit_margin,
            feasibility_slack=self.feasibility_slack,
            seed=self.seed,
        )

    def fit(self, X: SourceMotion, y=None):
        if self.model is None or self.correspondence is None:
            raise ValueError("PhySinkRetargeter needs a model and a correspondence")
        motion, trace = retarget(
            X,
            self.model,
            self.correspondence,
            self._config(),
            ramp_top=self.ramp_top,
            heading_joints=self.heading_joints,
        )
        self.motion_ = motion
        self.trace_ = trace
        return self

    def transform(self, X: SourceMotion) -> RetargetedMotion:
        self.fit(X)
        return self.motion_

    def fit_transform(self, X: SourceMotion, y=None) -> RetargetedMotion:
        return self.fit(X).motion_
