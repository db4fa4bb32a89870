"""Rotation helpers: scalar-first quaternions, axis-angle matrices, SO(3) exp map."""
from __future__ import annotations

import numpy as np

_EPS = 1e-12


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrices over the last axis: skew(v) @ u == cross(v, u)."""
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    x, y, z = v[..., 0], v[..., 1], v[..., 2]
    out[..., 0, 1] = -z
    out[..., 0, 2] = y
    out[..., 1, 0] = z
    out[..., 1, 2] = -x
    out[..., 2, 0] = -y
    out[..., 2, 1] = x
    return out


def normalize_quat(q: np.ndarray) -> np.ndarray:
    """Unit quaternion with a canonical non-negative scalar part."""
    q = np.asarray(q, dtype=float)
    norm = np.linalg.norm(q, axis=-1, keepdims=True)
    if np.any(norm < _EPS):
        raise ValueError("zero-norm quaternion")
    q = q / norm
    flip = q[..., :1] < 0.0
    return np.where(flip, -q, q)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    out = np.empty(q.shape[:-1] + (3, 3))
    out[..., 0, 0] = 1.0 - 2.0 * (y * y + z * z)
    out[..., 0, 1] = 2.0 * (x * y - w * z)
    out[..., 0, 2] = 2.0 * (x * z + w * y)
    out[..., 1, 0] = 2.0 * (x * y + w * z)
    out[..., 1, 1] = 1.0 - 2.0 * (x * x + z * z)
    out[..., 1, 2] = 2.0 * (y * z - w * x)
    out[..., 2, 0] = 2.0 * (x * z - w * y)
    out[..., 2, 1] = 2.0 * (y * z + w * x)
    out[..., 2, 2] = 1.0 - 2.0 * (x * x + y * y)
    return out


def matrix_to_quat(R: np.ndarray) -> np.ndarray:
    """Largest-component extraction; stable for all proper rotations."""
    R = np.asarray(R, dtype=float)
    lead = R.shape[:-2]
    m = R.reshape((-1, 3, 3))
    n = m.shape[0]
    r00, r11, r22 = m[:, 0, 0], m[:, 1, 1], m[:, 2, 2]
    # Four squared components; the largest one is numerically safe to root.
    sq = np.stack(
        [
            1.0 + r00 + r11 + r22,  # 4w^2
            1.0 + r00 - r11 - r22,  # 4x^2
            1.0 - r00 + r11 - r22,  # 4y^2
            1.0 - r00 - r11 + r22,  # 4z^2
        ],
        axis=1,
    )
    case = np.argmax(sq, axis=1)
    q = np.empty((n, 4))
    s = np.sqrt(np.maximum(sq[np.arange(n), case], 0.0)) * 0.5
    inv = 0.25 / np.where(s > _EPS, s, 1.0)

    w_sel = case == 0
    q[w_sel, 0] = s[w_sel]
    q[w_sel, 1] = (m[w_sel, 2, 1] - m[w_sel, 1, 2]) * inv[w_sel]
    q[w_sel, 2] = (m[w_sel, 0, 2] - m[w_sel, 2, 0]) * inv[w_sel]
    q[w_sel, 3] = (m[w_sel, 1, 0] - m[w_sel, 0, 1]) * inv[w_sel]

    x_sel = case == 1
    q[x_sel, 1] = s[x_sel]
    q[x_sel, 0] = (m[x_sel, 2, 1] - m[x_sel, 1, 2]) * inv[x_sel]
    q[x_sel, 2] = (m[x_sel, 0, 1] + m[x_sel, 1, 0]) * inv[x_sel]
    q[x_sel, 3] = (m[x_sel, 0, 2] + m[x_sel, 2, 0]) * inv[x_sel]

    y_sel = case == 2
    q[y_sel, 2] = s[y_sel]
    q[y_sel, 0] = (m[y_sel, 0, 2] - m[y_sel, 2, 0]) * inv[y_sel]
    q[y_sel, 1] = (m[y_sel, 0, 1] + m[y_sel, 1, 0]) * inv[y_sel]
    q[y_sel, 3] = (m[y_sel, 1, 2] + m[y_sel, 2, 1]) * inv[y_sel]

    z_sel = case == 3
    q[z_sel, 3] = s[z_sel]
    q[z_sel, 0] = (m[z_sel, 1, 0] - m[z_sel, 0, 1]) * inv[z_sel]
    q[z_sel, 1] = (m[z_sel, 0, 2] + m[z_sel, 2, 0]) * inv[z_sel]
    q[z_sel, 2] = (m[z_sel, 1, 2] + m[z_sel, 2, 1]) * inv[z_sel]

    return normalize_quat(q).reshape(lead + (4,))


def axis_angle_matrix(axis: np.ndarray, angle: np.ndarray) -> np.ndarray:
    """Rodrigues formula for a fixed unit axis and a (possibly batched) angle."""
    axis = np.asarray(axis, dtype=float)
    angle = np.asarray(angle, dtype=float)
    K = skew(axis)
    K2 = K @ K
    s = np.sin(angle)[..., None, None]
    c1 = (1.0 - np.cos(angle))[..., None, None]
    return np.eye(3) + s * K + c1 * K2


def expmap_to_matrix(v: np.ndarray) -> np.ndarray:
    """exp of a rotation vector (axis * angle), with series fallback near zero."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    theta2 = theta * theta
    small = theta < 1e-6
    with np.errstate(invalid="ignore", divide="ignore"):
        a = np.where(small, 1.0 - theta2 / 6.0, np.sin(theta) / np.where(small, 1.0, theta))
        b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(theta)) / np.where(small, 1.0, theta2))
    K = skew(v)
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def so3_left_jacobian(v: np.ndarray) -> np.ndarray:
    """Left Jacobian of the SO(3) exp map: d(exp(v) u)/dv = -skew(exp(v) u) @ Jl(v)."""
    v = np.asarray(v, dtype=float)
    theta = np.linalg.norm(v, axis=-1)
    theta2 = theta * theta
    theta3 = theta2 * theta
    small = theta < 1e-6
    safe2 = np.where(small, 1.0, theta2)
    safe3 = np.where(small, 1.0, theta3)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = np.where(small, 0.5 - theta2 / 24.0, (1.0 - np.cos(theta)) / safe2)
        c = np.where(small, 1.0 / 6.0 - theta2 / 120.0, (theta - np.sin(theta)) / safe3)
    K = skew(v)
    return np.eye(3) + b[..., None, None] * K + c[..., None, None] * (K @ K)


def yaw_matrix(yaw: np.ndarray) -> np.ndarray:
    yaw = np.asarray(yaw, dtype=float)
    c, s = np.cos(yaw), np.sin(yaw)
    out = np.zeros(yaw.shape + (3, 3))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    out[..., 2, 2] = 1.0
    return out
