"""Concrete groups: SO(2), SO(3), SE(2), SE(3) and the affine group of the line.

Basis conventions
-----------------
* so(2): ``[[0, -1], [1, 0]]``.
* so(3): ``E_1, E_2, E_3`` with ``hat(a, b, c) = [[0, -c, b], [c, 0, -a], [-b, a, 0]]``;
  structure constants are the Levi-Civita symbols.
* se(d): rotational generators first, then the translational ones
  (``E_{d'+k}`` has a single 1 in row k, last column).
* aff(1): ``E_1 = [[1, 0], [0, 0]]``, ``E_2 = [[0, 1], [0, 0]]`` so ``[E_1, E_2] = E_2``.

Quaternions are scalar-first ``(w, x, y, z)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, MembershipError, SingularInput
from .lie_core import BRANCH_MARGIN, GroupSpec, structure_constants_from_basis

BUILTIN_NAMES = ("SO2", "SO3", "SE2", "SE3", "AFF1")

_SMALL = 1e-5


def skew3(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape[:-1] + (3, 3))
    out[..., 0, 1] = -v[..., 2]
    out[..., 0, 2] = v[..., 1]
    out[..., 1, 0] = v[..., 2]
    out[..., 1, 2] = -v[..., 0]
    out[..., 2, 0] = -v[..., 1]
    out[..., 2, 1] = v[..., 0]
    return out


def _raise_outside(mask: np.ndarray, what: str) -> None:
    bad = np.flatnonzero(np.atleast_1d(mask))
    if bad.size:
        raise DomainError(f"{what}: rotation angle within {BRANCH_MARGIN:g} of pi, outside the principal log chart", bad)


# --------------------------------------------------------------------------- SO(2)

def so2_exp(x: np.ndarray) -> np.ndarray:
    th = np.asarray(x, dtype=float)[..., 0]
    c, s = np.cos(th), np.sin(th)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def so2_log(R: np.ndarray) -> np.ndarray:
    th = np.arctan2(R[..., 1, 0] - R[..., 0, 1], R[..., 0, 0] + R[..., 1, 1])
    _raise_outside(np.abs(th) >= np.pi - BRANCH_MARGIN, "SO2 log")
    return th[..., None]


# --------------------------------------------------------------------------- SO(3)

def _so3_coeffs(th: np.ndarray):
    """sin(t)/t and (1 - cos t)/t^2 with small-angle series."""
    small = th < _SMALL
    safe = np.where(small, 1.0, th)
    t2 = th * th
    a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)
    half = np.sin(safe / 2.0) / safe
    b = np.where(small, 0.5 - t2 / 24.0 + t2 * t2 / 720.0, 2.0 * half * half)
    return a, b


def so3_exp(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w, axis=-1)
    a, b = _so3_coeffs(th)
    K = skew3(w)
    return np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)


def so3_log(R: np.ndarray) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    w = 0.5 * np.stack(
        [R[..., 2, 1] - R[..., 1, 2], R[..., 0, 2] - R[..., 2, 0], R[..., 1, 0] - R[..., 0, 1]], -1
    )
    s = np.linalg.norm(w, axis=-1)
    c = 0.5 * (np.trace(R, axis1=-2, axis2=-1) - 1.0)
    th = np.arctan2(s, c)
    _raise_outside(th >= np.pi - BRANCH_MARGIN, "SO3 log")

    small = th < _SMALL
    t2 = th * th
    factor = np.where(small, 1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0, th / np.where(small, 1.0, s))
    out = factor[..., None] * w

    # for large angles the antisymmetric part loses precision; take the axis
    # from the symmetric part and only its sign from w (keeps log(R^T) = -log(R) exact)
    wide = c < -0.5
    if np.any(wide):
        B = 0.5 * (R + np.swapaxes(R, -1, -2)) - c[..., None, None] * np.eye(3)
        diag = np.diagonal(B, axis1=-2, axis2=-1)
        k = np.argmax(diag, axis=-1)
        col = np.take_along_axis(B, k[..., None, None].repeat(3, axis=-2), axis=-1)[..., 0]
        denom = np.sqrt(np.maximum(np.take_along_axis(diag, k[..., None], -1)[..., 0] * (1.0 - c), 1e-300))
        axis = col / denom[..., None]
        sign = np.where(np.sum(axis * w, axis=-1) < 0.0, -1.0, 1.0)
        alt = (sign * th)[..., None] * axis
        out = np.where(wide[..., None], alt, out)
    return out


# --------------------------------------------------------------------------- SE(3)

def _se3_V_coeffs(th: np.ndarray):
    """(1 - cos t)/t^2 and (t - sin t)/t^3."""
    _, a = _so3_coeffs(th)
    small = th < _SMALL
    safe = np.where(small, 1.0, th)
    t2 = th * th
    b = np.where(small, 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0, (safe - np.sin(safe)) / safe**3)
    return a, b


def se3_exp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    w, v = x[..., :3], x[..., 3:]
    th = np.linalg.norm(w, axis=-1)
    R = so3_exp(w)
    a, b = _se3_V_coeffs(th)
    K = skew3(w)
    V = np.eye(3) + a[..., None, None] * K + b[..., None, None] * (K @ K)
    out = np.zeros(x.shape[:-1] + (4, 4))
    out[..., :3, :3] = R
    out[..., :3, 3] = np.einsum("...ij,...j->...i", V, v)
    out[..., 3, 3] = 1.0
    return out


def se3_log(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    w = so3_log(g[..., :3, :3])
    th = np.linalg.norm(w, axis=-1)
    small = th < _SMALL
    safe = np.where(small, 1.0, th)
    t2 = th * th
    half = safe / 2.0
    # 1/t^2 (1 - (t/2) cot(t/2))
    k = np.where(small, 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0, (1.0 - half / np.tan(half)) / (safe * safe))
    K = skew3(w)
    Vinv = np.eye(3) - 0.5 * K + k[..., None, None] * (K @ K)
    v = np.einsum("...ij,...j->...i", Vinv, g[..., :3, 3])
    return np.concatenate([w, v], axis=-1)


# --------------------------------------------------------------------------- SE(2)

def _se2_V_coeffs(th: np.ndarray):
    """sin(t)/t and (1 - cos t)/t."""
    small = np.abs(th) < _SMALL
    safe = np.where(small, 1.0, th)
    t2 = th * th
    a = np.where(small, 1.0 - t2 / 6.0 + t2 * t2 / 120.0, np.sin(safe) / safe)
    b = np.where(small, th / 2.0 - th * t2 / 24.0, 2.0 * np.sin(safe / 2.0) ** 2 / safe)
    return a, b


def se2_exp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    th, v = x[..., 0], x[..., 1:]
    a, b = _se2_V_coeffs(th)
    t = np.stack([a * v[..., 0] - b * v[..., 1], b * v[..., 0] + a * v[..., 1]], -1)
    out = np.zeros(x.shape[:-1] + (3, 3))
    out[..., :2, :2] = so2_exp(th[..., None])
    out[..., :2, 2] = t
    out[..., 2, 2] = 1.0
    return out


def se2_log(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    th = so2_log(g[..., :2, :2])[..., 0]
    a, b = _se2_V_coeffs(th)
    det = a * a + b * b
    t = g[..., :2, 2]
    v = np.stack([(a * t[..., 0] + b * t[..., 1]) / det, (-b * t[..., 0] + a * t[..., 1]) / det], -1)
    return np.concatenate([th[..., None], v], axis=-1)


# --------------------------------------------------------------------------- membership

def _is_rotation(R: np.ndarray, tol: float) -> np.ndarray:
    d = R.shape[-1]
    orth = np.max(np.abs(np.swapaxes(R, -1, -2) @ R - np.eye(d)), axis=(-2, -1)) <= tol
    return orth & (np.abs(np.linalg.det(R) - 1.0) <= tol)


def _so_member(R: np.ndarray, tol: float) -> np.ndarray:
    return _is_rotation(R, tol)


def _se_member(g: np.ndarray, tol: float) -> np.ndarray:
    d = g.shape[-1] - 1
    last = np.zeros(d + 1)
    last[-1] = 1.0
    row_ok = np.max(np.abs(g[..., d, :] - last), axis=-1) <= tol
    return row_ok & _is_rotation(g[..., :d, :d], tol)


def _aff1_member(g: np.ndarray, tol: float) -> np.ndarray:
    row_ok = (np.abs(g[..., 1, 0]) <= tol) & (np.abs(g[..., 1, 1] - 1.0) <= tol)
    return row_ok & (g[..., 0, 0] > tol)


# --------------------------------------------------------------------------- registry

def _so3_basis() -> np.ndarray:
    return skew3(np.eye(3))


def _se_basis(d: int) -> np.ndarray:
    rot = _so3_basis() if d == 3 else np.array([[[0.0, -1.0], [1.0, 0.0]]])
    k = rot.shape[0]
    basis = np.zeros((k + d, d + 1, d + 1))
    basis[:k, :d, :d] = rot
    for i in range(d):
        basis[k + i, i, d] = 1.0
    return basis


@lru_cache(maxsize=None)
def make_group(name: str) -> GroupSpec:
    """Built-in group by name: ``SO2``, ``SO3``, ``SE2``, ``SE3`` or ``AFF1``."""
    key = name.upper().replace("(", "").replace(")", "")
    if key == "SO2":
        basis = np.array([[[0.0, -1.0], [1.0, 0.0]]])
        return GroupSpec("SO2", 2, 1, basis, np.zeros((1, 1, 1)), so2_exp, so2_log, _so_member)
    if key == "SO3":
        basis = _so3_basis()
        C = np.zeros((3, 3, 3))
        for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
            C[i, j, k], C[j, i, k] = 1.0, -1.0
        return GroupSpec("SO3", 3, 3, basis, C, so3_exp, so3_log, _so_member)
    if key == "SE2":
        basis = _se_basis(2)
        return GroupSpec("SE2", 3, 3, basis, structure_constants_from_basis(basis), se2_exp, se2_log, _se_member)
    if key == "SE3":
        basis = _se_basis(3)
        return GroupSpec("SE3", 4, 6, basis, structure_constants_from_basis(basis), se3_exp, se3_log, _se_member)
    if key == "AFF1":
        basis = np.array([[[1.0, 0.0], [0.0, 0.0]], [[0.0, 1.0], [0.0, 0.0]]])
        return GroupSpec("AFF1", 2, 2, basis, structure_constants_from_basis(basis), None, None, _aff1_member)
    raise KeyError(f"unknown group {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")


def check_member(group: GroupSpec, g, tol: float = 1e-9) -> np.ndarray:
    """Return ``g`` as an array or raise MembershipError naming the failing indices."""
    g = np.asarray(g, dtype=float)
    ok = np.atleast_1d(group.contains(g, tol))
    if not np.all(ok):
        bad = np.flatnonzero(~ok).tolist()
        raise MembershipError(f"{len(bad)} matrix(es) are not elements of {group.name}: indices {bad[:10]}")
    return g


# --------------------------------------------------------------------------- projections & SE blocks

def project_special_orthogonal(A) -> np.ndarray:
    """Closest rotation to ``A`` in Frobenius norm, via SVD with a det = +1 correction."""
    A = np.asarray(A, dtype=float)
    d = A.shape[-1]
    if np.any(np.abs(np.linalg.det(A)) <= 1e-12):
        raise SingularInput("matrix is numerically singular; perturb the data slightly before projecting")
    U, _, Vt = np.linalg.svd(A)
    D = np.ones(A.shape[:-2] + (d,))
    D[..., -1] = np.sign(np.linalg.det(U @ Vt))
    return (U * D[..., None, :]) @ Vt


@dataclass(frozen=True, eq=False)
class PoseParts:
    rotation: np.ndarray
    translation: np.ndarray


def se_split(g) -> PoseParts:
    g = np.asarray(g, dtype=float)
    d = g.shape[-1] - 1
    last = np.zeros(d + 1)
    last[-1] = 1.0
    if not np.allclose(g[..., d, :], last, rtol=0.0, atol=1e-9):
        raise MembershipError("homogeneous matrix must have last row (0, ..., 0, 1)")
    return PoseParts(g[..., :d, :d].copy(), g[..., :d, d].copy())


def se_compose(parts: PoseParts) -> np.ndarray:
    R = np.asarray(parts.rotation, dtype=float)
    t = np.asarray(parts.translation, dtype=float)
    d = R.shape[-1]
    out = np.zeros(R.shape[:-2] + (d + 1, d + 1))
    out[..., :d, :d] = R
    out[..., :d, d] = t
    out[..., d, d] = 1.0
    return out


def group_action_se(g, x) -> np.ndarray:
    """Action ``g . x = R_g x + t_g`` of SE(d) on R^d."""
    parts = se_split(g)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != parts.rotation.shape[-1]:
        raise ValueError(f"point has dimension {x.shape[-1]}, group acts on R^{parts.rotation.shape[-1]}")
    return np.einsum("...ij,...j->...i", parts.rotation, x) + parts.translation


# --------------------------------------------------------------------------- quaternions

def quat_to_so3(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    q = q / np.linalg.norm(q, axis=-1, keepdims=True)
    w, x, y, z = q[..., 0], q[..., 1], q[..., 2], q[..., 3]
    rows = [
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ]
    return np.stack([np.stack(r, -1) for r in rows], -2)


def so3_to_quat(R) -> np.ndarray:
    """Unit quaternion with non-negative scalar part; branch chosen on the largest pivot."""
    R = np.asarray(R, dtype=float)
    flat = R.reshape(-1, 3, 3)
    out = np.empty((flat.shape[0], 4))
    for i, M in enumerate(flat):
        tr = M[0, 0] + M[1, 1] + M[2, 2]
        pivots = (tr, M[0, 0], M[1, 1], M[2, 2])
        k = int(np.argmax(pivots))
        if k == 0:
            s = 2.0 * np.sqrt(1.0 + tr)
            q = (0.25 * s, (M[2, 1] - M[1, 2]) / s, (M[0, 2] - M[2, 0]) / s, (M[1, 0] - M[0, 1]) / s)
        elif k == 1:
            s = 2.0 * np.sqrt(1.0 + M[0, 0] - M[1, 1] - M[2, 2])
            q = ((M[2, 1] - M[1, 2]) / s, 0.25 * s, (M[0, 1] + M[1, 0]) / s, (M[0, 2] + M[2, 0]) / s)
        elif k == 2:
            s = 2.0 * np.sqrt(1.0 + M[1, 1] - M[0, 0] - M[2, 2])
            q = ((M[0, 2] - M[2, 0]) / s, (M[0, 1] + M[1, 0]) / s, 0.25 * s, (M[1, 2] + M[2, 1]) / s)
        else:
            s = 2.0 * np.sqrt(1.0 + M[2, 2] - M[0, 0] - M[1, 1])
            q = ((M[1, 0] - M[0, 1]) / s, (M[0, 2] + M[2, 0]) / s, (M[1, 2] + M[2, 1]) / s, 0.25 * s)
        q = np.asarray(q)
        q /= np.linalg.norm(q)
        out[i] = -q if q[0] < 0 else q
    return out.reshape(R.shape[:-2] + (4,))
