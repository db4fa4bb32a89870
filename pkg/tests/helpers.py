"""Reference computations and small builders shared across test modules.

The oracles here deliberately avoid the library's code paths: hulls come from
orientation tests over point triples, segment distances from a bounded scalar
minimizer, ground votes from literal loops, and forward kinematics from an
explicit homogeneous-matrix chain.  Agreement between two independent routes
is the point; do not "simplify" an oracle by calling the function under test.
"""
from __future__ import annotations

import math
from itertools import combinations

import numpy as np
from scipy.optimize import minimize_scalar

from physink.motion import REGIONS, SourceMotion
from physink.robot import Body, FootSite, Joint, RobotModel

# ---------------------------------------------------------------------------
# motion builders

#: joint layout used by curation-level tests (no robot involved)
BASIC_JOINTS = ("pelvis", "spine1", "left_ankle", "right_ankle", "left_foot", "right_foot")


def flat_motion(
    T: int = 12,
    fps: float = 30.0,
    pelvis_z: float = 0.9,
    foot_z: float = 0.02,
    marker_z: float = 0.0,
    stance: float = 0.1,
) -> SourceMotion:
    """A static standing pose: feet straddling the origin, markers per region."""
    joints = np.zeros((T, len(BASIC_JOINTS), 3))
    joints[:, 0] = (0.0, 0.0, pelvis_z)
    joints[:, 1] = (0.0, 0.0, pelvis_z + 0.25)
    joints[:, 2] = (-0.05, stance, foot_z)   # left ankle
    joints[:, 3] = (-0.05, -stance, foot_z)  # right ankle
    joints[:, 4] = (0.08, stance, foot_z)    # left foot
    joints[:, 5] = (0.08, -stance, foot_z)   # right foot
    markers = {}
    for region in REGIONS:
        y = stance if region[0] == "L" else -stance
        x = 0.1 if region[1] == "T" else -0.05
        m = np.zeros((T, 1, 3))
        m[:, 0] = (x, y, marker_z)
        markers[region] = m
    return SourceMotion(fps=fps, joint_names=BASIC_JOINTS, joints=joints, markers=markers)


def random_motion(rng: np.random.Generator, T: int = 10, J: int = 4, fps: float = 30.0) -> SourceMotion:
    """Arbitrary finite motion for I/O and numerics tests."""
    names = tuple(f"j{i}" for i in range(J))
    joints = rng.normal(size=(T, J, 3))
    markers = {r: rng.normal(size=(T, 2, 3)) for r in REGIONS}
    return SourceMotion(fps=fps, joint_names=names, joints=joints, markers=markers)


def chain_model(n_links: int = 5, axis_seed: int | None = None) -> RobotModel:
    """Serial chain of unit-offset links, one revolute joint per link."""
    rng = np.random.default_rng(axis_seed) if axis_seed is not None else None
    bodies = [Body(name="base", parent=-1, offset=np.zeros(3))]
    joints = []
    for i in range(n_links):
        if rng is None:
            axis = np.zeros(3)
            axis[i % 3] = 1.0
        else:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
        bodies.append(Body(name=f"link{i}", parent=i, offset=np.array([1.0, 0.0, 0.0])))
        joints.append(Joint(name=f"q{i}", body=i + 1, axis=axis, q_min=-3.0, q_max=3.0, v_max=10.0))
    last = len(bodies) - 1
    sites = {r: FootSite(body=last, offset=np.zeros(3)) for r in REGIONS}
    return RobotModel(bodies=tuple(bodies), joints=tuple(joints), foot_sites=sites,
                      balance_bodies=("base", f"link{n_links - 1}"))


# ---------------------------------------------------------------------------
# ground-plane vote oracle

def ground_vote_oracle(marker_z: np.ndarray, delta: float) -> float:
    """Literal two-loop majority vote over per-frame minimum candidates."""
    rows = [list(map(float, row)) for row in marker_z]
    flat = [z for row in rows for z in row]
    best_height = math.inf
    best_count = -1
    for row in rows:
        g = min(row)
        count = sum(1 for z in flat if abs(z - g) <= delta)
        if count > best_count or (count == best_count and g < best_height):
            best_count = count
            best_height = g
    return best_height


def motion_marker_z(motion: SourceMotion) -> np.ndarray:
    return np.concatenate([motion.markers[r][:, :, 2] for r in REGIONS], axis=1)


# ---------------------------------------------------------------------------
# convex hull and distance oracles (assume general position)

def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def hull_oracle(points: np.ndarray) -> np.ndarray:
    """Hull vertices by triple orientation tests, returned in CCW order.

    A point is interior iff it lies strictly inside a triangle over the other
    points; random continuous inputs keep the strictness unambiguous.
    """
    pts = [tuple(map(float, p[:2])) for p in np.asarray(points)]
    verts = []
    for i, p in enumerate(pts):
        others = pts[:i] + pts[i + 1:]
        inside = False
        for a, b, c in combinations(others, 3):
            d1, d2, d3 = _cross(a, b, p), _cross(b, c, p), _cross(c, a, p)
            if (d1 > 0 and d2 > 0 and d3 > 0) or (d1 < 0 and d2 < 0 and d3 < 0):
                inside = True
                break
        if not inside:
            verts.append(p)
    cx = sum(p[0] for p in verts) / len(verts)
    cy = sum(p[1] for p in verts) / len(verts)
    verts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
    return np.asarray(verts)


def same_cycle(a: np.ndarray, b: np.ndarray, tol: float = 1e-6) -> bool:
    """True when two CCW vertex lists agree up to a cyclic rotation."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        return False
    n = len(a)
    return any(np.allclose(a, np.roll(b, k, axis=0), atol=tol) for k in range(n))


def point_in_polygon_oracle(p, polygon) -> bool:
    """Crossing-number test: count boundary intersections of a +x ray."""
    x, y = float(p[0]), float(p[1])
    inside = False
    n = len(polygon)
    for i in range(n):
        x1, y1 = polygon[i]
        x2, y2 = polygon[(i + 1) % n]
        if (y1 > y) != (y2 > y):
            x_at = x1 + (y - y1) / (y2 - y1) * (x2 - x1)
            if x_at > x:
                inside = not inside
    return inside


def distance_oracle(p, polygon) -> float:
    """0 inside; otherwise the bounded-minimizer distance to the nearest edge."""
    polygon = np.asarray(polygon, dtype=float)
    p = np.asarray(p, dtype=float)[:2]
    if len(polygon) >= 3 and point_in_polygon_oracle(p, polygon):
        return 0.0
    best = math.inf
    for i in range(len(polygon)):
        a = polygon[i]
        b = polygon[(i + 1) % len(polygon)] if len(polygon) > 1 else a
        if np.allclose(a, b):
            best = min(best, float(np.linalg.norm(p - a)))
            continue
        res = minimize_scalar(
            lambda t: float(np.linalg.norm(p - (a + t * (b - a)))),
            bounds=(0.0, 1.0), method="bounded",
            options={"xatol": 1e-12},
        )
        best = min(best, float(res.fun))
    return best


# ---------------------------------------------------------------------------
# forward-kinematics oracle

def _rot_homog(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    K = np.array([
        [0.0, -axis[2], axis[1]],
        [axis[2], 0.0, -axis[0]],
        [-axis[1], axis[0], 0.0],
    ])
    R = np.eye(3) + math.sin(angle) * K + (1.0 - math.cos(angle)) * (K @ K)
    M = np.eye(4)
    M[:3, :3] = R
    return M


def _trans_homog(offset: np.ndarray) -> np.ndarray:
    M = np.eye(4)
    M[:3, 3] = offset
    return M


def fk_oracle(model: RobotModel, q: np.ndarray, root_pos: np.ndarray, root_R: np.ndarray) -> np.ndarray:
    """Body positions from an explicit 4x4 matrix chain; single frame, [B, 3]."""
    joint_for_body = {j.body: (k, j) for k, j in enumerate(model.joints)}
    frames = [None] * model.body_count
    root = np.eye(4)
    root[:3, :3] = root_R
    root[:3, 3] = root_pos
    frames[0] = root
    for b in range(1, model.body_count):
        body = model.bodies[b]
        M = frames[body.parent] @ _trans_homog(body.offset)
        if b in joint_for_body:
            k, joint = joint_for_body[b]
            M = M @ _rot_homog(joint.axis, float(q[k]))
        frames[b] = M
    return np.stack([frames[b][:3, 3] for b in range(model.body_count)])


# ---------------------------------------------------------------------------
# objective instances and finite-difference gradients

def chain_correspondence(model: RobotModel):
    """Map every chain body to a synthetic source joint; last link is the ee."""
    last = model.body_names[-1]
    entries = [
        {"source": f"s_{name}", "robot_body": name, "end_effector": name == last}
        for name in model.body_names
    ]
    names = tuple(f"s_{name}" for name in model.body_names)
    from physink.kinematics import build_correspondence

    return build_correspondence(entries, names, model), names


def rendered_source(model, corr, source_names, q, root_pos, root_mats, fps=30.0) -> SourceMotion:
    """Source whose corresponded joints sit at the model's fk positions."""
    from physink.kinematics import fk_batch

    pos, _ = fk_batch(model, q, root_pos, root_mats)
    T = q.shape[0]
    joints = np.zeros((T, len(source_names), 3))
    for s, b in corr.pairs:
        joints[:, s] = pos[:, b]
    markers = {r: np.zeros((T, 1, 3)) for r in REGIONS}
    return SourceMotion(fps=fps, joint_names=tuple(source_names), joints=joints, markers=markers)


def _smooth_poly(rng: np.random.Generator, T: int, width: int, scale: float) -> np.ndarray:
    t = np.linspace(0.0, 1.0, T)[:, None]
    coef = rng.normal(size=(4, 1, width))
    return scale * sum(coef[k] * t**k for k in range(4))


def loss_instance(model, corr, source_names, rng, T=4, fps=30.0):
    """Random smooth objective instance with both hinge families active.

    One joint is parked above its position band and another alternates hard
    enough to violate the velocity band, so the feasibility gradients are
    exercised away from their kinks.
    """
    from physink.retarget import DecisionVariables
    from physink.rotations import expmap_to_matrix

    J = model.joint_count
    lo, hi = model.q_limits()
    mid, span = 0.5 * (lo + hi), hi - lo
    q = mid + 0.4 * span * np.tanh(_smooth_poly(rng, T, J, 1.0))
    if J:
        j = int(rng.integers(J))
        phase = rng.uniform(0.0, 6.0)
        q[:, j] = hi[j] + (0.08 + 0.04 * np.sin(np.linspace(0.0, 3.0, T) + phase)) * span[j]
    if J > 1:
        k = (j + 1 + int(rng.integers(J - 1))) % J
        q[:, k] = mid[k] + 0.45 * span[k] * (-1.0) ** np.arange(T)
    root_pos = _smooth_poly(rng, T, 3, 0.3)
    root_pos[:, 2] += 0.5
    inc = 0.2 * rng.normal(size=(T, 3))
    half = 0.5 * rng.uniform(-np.pi, np.pi, size=T)
    axis = rng.normal(size=(T, 3))
    axis /= np.linalg.norm(axis, axis=1, keepdims=True)
    base = np.concatenate([np.cos(half)[:, None], np.sin(half)[:, None] * axis], axis=1)
    variables = DecisionVariables(q=q, root_pos=root_pos, root_rot_inc=inc, base_rot=base)

    q2 = mid + 0.4 * span * np.tanh(_smooth_poly(rng, T, J, 1.0))
    rp2 = _smooth_poly(rng, T, 3, 0.3)
    rp2[:, 2] += 0.6
    mats2 = expmap_to_matrix(0.3 * rng.normal(size=(T, 3)))
    source = rendered_source(model, corr, source_names, q2, rp2, mats2, fps)
    from physink.motion import ContactSchedule

    contacts = ContactSchedule(scores=rng.uniform(0.2, 1.0, size=(T, len(REGIONS))))
    return variables, source, contacts


def kink_clearance(variables, model, source, corr, cfg, fps) -> float:
    """Distance from the nearest non-smooth point of the objective.

    Finite differences are only trusted when this clears the probe size by a
    wide factor; instances closer than that are resampled, not tested.
    """
    from physink.kinematics import fk_batch, site_positions

    margin = cfg.limit_margin - cfg.feasibility_slack
    ds = []
    q = variables.q
    if q.size:
        lo, hi = model.margin_bands(margin)
        ds += [np.abs(q - lo).min(), np.abs(q - hi).min()]
        v = np.diff(q, axis=0) * fps
        vlo, vhi = model.velocity_bands(margin)
        ds += [np.abs(v - vlo).min(), np.abs(v - vhi).min()]
    for series in (q, variables.root_pos):
        if series.size and series.shape[0] >= 4:
            d3 = (series[3:] - 3.0 * series[2:-1] + 3.0 * series[1:-2] - series[:-3]) * fps
            ds.append(np.abs(d3).min())
    pos, rot = fk_batch(model, q, variables.root_pos, variables.root_matrices())
    used = corr.end_effector_subset() if cfg.mode == "ik" else corr
    d = pos[:, used.body_indices] - source.joints[:, used.source_indices]
    ds.append(np.abs(d).min())
    sites = site_positions(model, pos, rot)
    sv = np.diff(sites[:, :, :2], axis=0) * fps
    ds.append(float(np.linalg.norm(sv, axis=2).min()))
    return float(min(ds))


def fd_loss_gradients(variables, model, source, corr, contacts, cfg, h=1e-6):
    """Central differences of total_loss over every decision variable entry."""
    from physink.retarget import total_loss

    out = {}
    for name in ("q", "root_pos", "root_rot_inc"):
        base = getattr(variables, name)
        g = np.zeros_like(base)
        for idx in np.ndindex(base.shape):
            probe = variables.copy()
            arr = getattr(probe, name)
            arr[idx] = base[idx] + h
            fp, _ = total_loss(probe, model, source, corr, contacts, cfg)
            arr[idx] = base[idx] - h
            fm, _ = total_loss(probe, model, source, corr, contacts, cfg)
            g[idx] = (fp - fm) / (2.0 * h)
        out[name] = g
    return out


def max_grad_error(analytic, fd: dict) -> float:
    """Worst relative disagreement, with unit floor on the denominator."""
    worst = 0.0
    for name, ref in fd.items():
        a = getattr(analytic, name)
        if ref.size:
            err = np.abs(a - ref) / np.maximum(np.abs(ref), 1.0)
            worst = max(worst, float(err.max()))
    return worst


def per_term_values(variables, model, source, corr, contacts, cfg) -> dict:
    """All six raw term values at one point, via the value-only functions.

    Shares one fk pass across the position-dependent terms so finite
    differences over every term stay affordable at acceptance scale.
    """
    from physink.kinematics import FkResult, fk_batch, site_positions
    from physink.retarget import (
        loss_feasibility,
        loss_global_match,
        loss_ground,
        loss_local_match,
        loss_skate,
        loss_smooth,
    )
    from physink.rotations import matrix_to_quat

    pos, rot = fk_batch(model, variables.q, variables.root_pos, variables.root_matrices())
    fk = FkResult(
        body_pos=pos, body_rot=matrix_to_quat(rot), foot_pos=site_positions(model, pos, rot)
    )
    used = corr.end_effector_subset() if cfg.mode == "ik" else corr
    margin = cfg.limit_margin - cfg.feasibility_slack
    return {
        "global_match": loss_global_match(fk, source, used),
        "local_match": loss_local_match(fk, source, corr),
        "smooth": loss_smooth(variables, source.fps),
        "feasibility": loss_feasibility(variables, model, margin, source.fps),
        "ground": loss_ground(fk, contacts),
        "skate": loss_skate(fk, contacts, source.fps),
    }


def fd_term_gradients(variables, model, source, corr, contacts, cfg, h=1e-6) -> dict:
    """Central differences of every raw term value, keyed term -> variable."""
    from physink.retarget import TERM_ORDER

    out = {t: {} for t in TERM_ORDER}
    for name in ("q", "root_pos", "root_rot_inc"):
        base = getattr(variables, name)
        grads = {t: np.zeros_like(base) for t in TERM_ORDER}
        for idx in np.ndindex(base.shape):
            probe = variables.copy()
            arr = getattr(probe, name)
            arr[idx] = base[idx] + h
            vp = per_term_values(probe, model, source, corr, contacts, cfg)
            arr[idx] = base[idx] - h
            vm = per_term_values(probe, model, source, corr, contacts, cfg)
            for t in TERM_ORDER:
                grads[t][idx] = (vp[t] - vm[t]) / (2.0 * h)
        for t in TERM_ORDER:
            out[t][name] = grads[t]
    return out
