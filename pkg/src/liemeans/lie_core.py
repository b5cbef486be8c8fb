"""Group-agnostic Lie algebra / Lie group kernel.

Group elements are plain ``(m, m)`` float arrays and algebra elements are
carried by their coordinate vectors ``x`` in ``R^n`` (``hat`` builds the
matrix ``x^i E_i``).  Every routine accepts a leading batch axis, so a stack
of ``N`` elements is an ``(N, m, m)`` array and ``N`` coordinate vectors an
``(N, n)`` array.

Structure constants are stored as ``C[i, j, k]`` with ``[E_i, E_j] = C_ij^k E_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import factorial
from typing import Callable, Optional

import numpy as np
import scipy.linalg

from .errors import DomainError, GroupMismatch

# principal branch is rejected this close to the cut
BRANCH_MARGIN = 1e-6
SERIES_TOL = 1e-16
SERIES_MAX_TERMS = 30

ExpFn = Callable[[np.ndarray], np.ndarray]
LogFn = Callable[[np.ndarray], np.ndarray]
MemberFn = Callable[[np.ndarray, float], np.ndarray]


def _bernoulli_numbers(count: int) -> list[Fraction]:
    """Exact Bernoulli numbers B_0..B_count (B_1 = -1/2 convention)."""
    b = [Fraction(1)]
    for k in range(1, count + 1):
        acc = Fraction(0)
        for j in range(k):
            acc += Fraction(factorial(k + 1), factorial(j) * factorial(k + 1 - j)) * b[j]
        b.append(-acc / (k + 1))
    return b


_B = _bernoulli_numbers(2 * SERIES_MAX_TERMS)

#: beta_{2i} / (2i)! for i = 1..SERIES_MAX_TERMS, coefficients of ad^{2i} in J_log
LOG_JACOBIAN_COEFFS = tuple(float(_B[2 * i] / factorial(2 * i)) for i in range(1, SERIES_MAX_TERMS + 1))

#: B_2, B_4, ..., B_20 as exact fractions (reference table)
BERNOULLI_EVEN = {2 * i: _B[2 * i] for i in range(1, 11)}


@dataclass(frozen=True, eq=False)
class GroupSpec:
    """A concrete matrix Lie group.

    ``exp_override``/``log_override`` map coordinates to matrices and back in
    closed form; when absent the generic matrix exp/log is used.
    ``membership(mats, tol)`` returns a boolean array.
    """

    name: str
    m: int
    n: int
    basis: np.ndarray
    structure_constants: np.ndarray
    exp_override: Optional[ExpFn] = None
    log_override: Optional[LogFn] = None
    membership: Optional[MemberFn] = None
    _vee_op: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=float)
        C = np.asarray(self.structure_constants, dtype=float)
        if basis.shape != (self.n, self.m, self.m):
            raise ValueError(f"basis must have shape {(self.n, self.m, self.m)}, got {basis.shape}")
        if C.shape != (self.n, self.n, self.n):
            raise ValueError(f"structure constants must have shape {(self.n,) * 3}, got {C.shape}")
        flat = basis.reshape(self.n, -1).T
        if np.linalg.matrix_rank(flat) != self.n:
            raise ValueError("basis matrices are linearly dependent")
        basis.setflags(write=False)
        C.setflags(write=False)
        vee_op = np.linalg.pinv(flat)
        vee_op.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "structure_constants", C)
        object.__setattr__(self, "_vee_op", vee_op)

    @property
    def identity(self) -> np.ndarray:
        return np.eye(self.m)

    def contains(self, g: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        if g.shape[-2:] != (self.m, self.m):
            return np.zeros(g.shape[:-2], dtype=bool)
        finite = np.all(np.isfinite(g), axis=(-2, -1))
        if self.membership is None:
            return finite & (np.abs(np.linalg.det(g)) > tol)
        return finite & self.membership(g, tol)

    def __repr__(self) -> str:
        return f"GroupSpec({self.name!r}, m={self.m}, n={self.n})"


def require_same_group(a: GroupSpec, b: GroupSpec) -> None:
    if a is not b and a.name != b.name:
        raise GroupMismatch(f"group mismatch: {a.name} vs {b.name}")


def structure_constants_from_basis(basis: np.ndarray) -> np.ndarray:
    """Solve ``[E_i, E_j] = C_ij^k E_k`` by least squares against the basis."""
    basis = np.asarray(basis, dtype=float)
    n = basis.shape[0]
    flat = basis.reshape(n, -1).T
    brackets = np.einsum("iab,jbc->ijac", basis, basis) - np.einsum("jab,ibc->ijac", basis, basis)
    C = np.einsum("kp,ijp->ijk", np.linalg.pinv(flat), brackets.reshape(n, n, -1))
    return C


def structure_residuals(group: GroupSpec) -> dict[str, float]:
    """Max residuals of antisymmetry, the Jacobi identity and bracket reproduction."""
    C = group.structure_constants
    E = group.basis
    antisym = np.max(np.abs(C + C.transpose(1, 0, 2)), initial=0.0)
    jac = (
        np.einsum("ijm,mkl->ijkl", C, C)
        + np.einsum("jkm,mil->ijkl", C, C)
        + np.einsum("kim,mjl->ijkl", C, C)
    )
    brackets = np.einsum("iab,jbc->ijac", E, E) - np.einsum("jab,ibc->ijac", E, E)
    rebuilt = np.einsum("ijk,kab->ijab", C, E)
    return {
        "antisymmetry": float(antisym),
        "jacobi": float(np.max(np.abs(jac), initial=0.0)),
        "bracket": float(np.max(np.abs(brackets - rebuilt), initial=0.0)),
    }


def hat(group: GroupSpec, coords) -> np.ndarray:
    """Coordinates ``(..., n)`` to algebra matrices ``(..., m, m)``."""
    x = np.asarray(coords, dtype=float)
    if x.shape[-1:] != (group.n,):
        raise ValueError(f"{group.name}: expected {group.n} coordinates, got shape {x.shape}")
    return np.einsum("...i,ijk->...jk", x, group.basis)


def vee(group: GroupSpec, X) -> np.ndarray:
    """Algebra matrices ``(..., m, m)`` to coordinates ``(..., n)``."""
    X = np.asarray(X, dtype=float)
    if X.shape[-2:] != (group.m, group.m):
        raise ValueError(f"{group.name}: expected {group.m}x{group.m} matrices, got shape {X.shape}")
    return X.reshape(X.shape[:-2] + (group.m * group.m,)) @ group._vee_op.T


def expm_generic(X: np.ndarray) -> np.ndarray:
    # scaling-and-squaring with a degree-13 Pade approximant
    return scipy.linalg.expm(np.asarray(X, dtype=float))


def logm_generic(g: np.ndarray) -> np.ndarray:
    """Principal matrix logarithm of a stack; DomainError on the closed negative real axis."""
    g = np.asarray(g, dtype=float)
    flat = g.reshape((-1,) + g.shape[-2:])
    out = np.empty_like(flat)
    bad = []
    for idx, a in enumerate(flat):
        lam = np.linalg.eigvals(a)
        scale = max(1.0, float(np.max(np.abs(lam))))
        on_cut = (np.abs(lam.imag) <= 1e-12 * scale) & (lam.real <= 1e-12 * scale)
        if np.any(on_cut):
            bad.append(idx)
            continue
        L = scipy.linalg.logm(a)
        if np.iscomplexobj(L):
            L = L.real
        out[idx] = L
    if bad:
        raise DomainError("matrix has eigenvalues on the closed negative real axis; principal log undefined", bad)
    return out.reshape(g.shape)


def group_exp(group: GroupSpec, coords) -> np.ndarray:
    """Exponential of ``hat(coords)``; closed form when the group provides one."""
    x = np.asarray(coords, dtype=float)
    if group.exp_override is not None:
        return group.exp_override(x)
    return expm_generic(hat(group, x))


def group_log(group: GroupSpec, g) -> np.ndarray:
    """Principal log in coordinates.  Raises DomainError outside the chart."""
    g = np.asarray(g, dtype=float)
    if g.shape[-2:] != (group.m, group.m):
        raise ValueError(f"{group.name}: expected {group.m}x{group.m} matrices, got shape {g.shape}")
    if group.log_override is not None:
        return group.log_override(g)
    return vee(group, logm_generic(g))


def inverse(g) -> np.ndarray:
    return np.linalg.inv(np.asarray(g, dtype=float))


def ad_matrix(group: GroupSpec, coords) -> np.ndarray:
    """Matrix of ad_X with ``(ad_X)_ij = X^k C_kj^i``."""
    x = np.asarray(coords, dtype=float)
    return np.einsum("...k,kji->...ij", x, group.structure_constants)


def Ad_matrix(group: GroupSpec, g) -> np.ndarray:
    """Matrix of Ad_g; column i is ``vee(g E_i g^-1)``."""
    g = np.asarray(g, dtype=float)
    ginv = np.linalg.inv(g)
    conj = np.einsum("...ab,ibc,...cd->...iad", g, group.basis, ginv)
    cols = vee(group, conj)  # (..., i, coord)
    return np.swapaxes(cols, -1, -2)


def is_unimodular(group: GroupSpec, tol: float = 1e-12) -> bool:
    """True iff tr(ad_{E_i}) = sum_j C_ij^j vanishes for every i."""
    traces = np.einsum("ijj->i", group.structure_constants)
    scale = max(1.0, float(np.max(np.abs(group.structure_constants), initial=0.0)))
    return bool(np.all(np.abs(traces) <= tol * scale))


def _spectral_radius(A: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.linalg.eigvals(A)), axis=-1)


def dexp_series(ad: np.ndarray) -> np.ndarray:
    """sum_k (-ad)^k / (k+1)!  (right Jacobian of exp), batched over leading axes."""
    n = ad.shape[-1]
    eye = np.broadcast_to(np.eye(n), ad.shape)
    acc = eye.copy()
    term = eye.copy()
    for k in range(1, 200):
        term = -(term @ ad) / (k + 1)
        acc = acc + term
        if np.max(np.abs(term)) < SERIES_TOL * max(1.0, float(np.max(np.abs(acc)))):
            break
    return acc


def dexpinv_series(ad: np.ndarray) -> tuple[np.ndarray, bool]:
    """I + ad/2 + sum_i beta_2i/(2i)! ad^2i truncated at SERIES_TOL; returns (value, converged)."""
    n = ad.shape[-1]
    eye = np.broadcast_to(np.eye(n), ad.shape)
    acc = eye + 0.5 * ad
    ad2 = ad @ ad
    power = eye.copy()
    for coeff in LOG_JACOBIAN_COEFFS:
        power = power @ ad2
        term = coeff * power
        acc = acc + term
        if np.max(np.abs(term)) < SERIES_TOL:
            return acc, True
    return acc, False


def jacobian_exp(group: GroupSpec, coords) -> np.ndarray:
    """J_exp(x): columns ``(exp(x)^-1 d/dx^i exp(x))^vee``."""
    return dexp_series(ad_matrix(group, coords))


def jacobian_log_coords(group: GroupSpec, coords) -> np.ndarray:
    """J_log evaluated at ``exp(hat(coords))`` without re-taking the log."""
    ad = ad_matrix(group, coords)
    rho = _spectral_radius(ad)
    bad = np.flatnonzero(np.atleast_1d(rho) >= 2 * np.pi - 1e-9)
    if bad.size:
        raise DomainError("spectral radius of ad_log(h) reaches 2*pi; log Jacobian series diverges", bad)
    J, converged = dexpinv_series(ad)
    if not converged:
        # slow tail near the radius of convergence; invert the entire series instead
        J = np.linalg.inv(dexp_series(ad))
    return J


def jacobian_log(group: GroupSpec, h) -> np.ndarray:
    """J_log(h) so that d/dt log(h exp(tX))^vee |_0 = J_log(h) X^vee."""
    return jacobian_log_coords(group, group_log(group, h))


def symmetric_sqrt(W: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(W)
    return (vecs * np.sqrt(vals)) @ vecs.T


def check_spd(W, n: int | None = None, what: str = "W") -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[0] != W.shape[1] or (n is not None and W.shape[0] != n):
        raise ValueError(f"{what} must be a square {n}x{n} matrix, got shape {W.shape}")
    if np.max(np.abs(W - W.T), initial=0.0) > 1e-12 * max(1.0, float(np.max(np.abs(W)))):
        raise ValueError(f"{what} is not symmetric")
    if np.min(np.linalg.eigvalsh(W)) <= 1e-12:
        raise ValueError(f"{what} is not positive definite")
    return W


def orthonormalize_basis(group: GroupSpec, W) -> GroupSpec:
    """Change to the basis ``E'_i = (sqrt W)^-1_ij E_j`` in which the inner product is the identity."""
    W = check_spd(W, group.n)
    S = symmetric_sqrt(W)
    Sinv = np.linalg.inv(S)
    basis = np.einsum("ij,jab->iab", Sinv, group.basis)
    C = np.einsum("is,jl,kr,slr->ijk", Sinv, Sinv, S, group.structure_constants)

    exp_override = log_override = None
    if group.exp_override is not None:
        old_exp = group.exp_override

        def exp_override(x):
            return old_exp(np.asarray(x, dtype=float) @ Sinv.T)

    if group.log_override is not None:
        old_log = group.log_override

        def log_override(g):
            return old_log(g) @ S.T

    return GroupSpec(
        name=f"{group.name}/orthonormal",
        m=group.m,
        n=group.n,
        basis=basis,
        structure_constants=C,
        exp_override=exp_override,
        log_override=log_override,
        membership=group.membership,
    )


def group_to_json(group: GroupSpec) -> dict:
    return {
        "name": group.name,
        "m": group.m,
        "n": group.n,
        "basis": group.basis.tolist(),
        "C": group.structure_constants.tolist(),
    }


def group_from_json(doc: dict) -> GroupSpec:
    """Rebuild a GroupSpec; built-in names keep their closed-form overrides."""
    from .groups import BUILTIN_NAMES, make_group

    name = doc["name"]
    if name in BUILTIN_NAMES:
        builtin = make_group(name)
        if "basis" not in doc or np.allclose(np.asarray(doc["basis"], dtype=float), builtin.basis, atol=1e-15):
            return builtin
    basis = np.asarray(doc["basis"], dtype=float)
    n, m = basis.shape[0], basis.shape[1]
    if "m" in doc and int(doc["m"]) != m or "n" in doc and int(doc["n"]) != n:
        raise ValueError("declared m/n disagree with the basis shape")
    C = np.asarray(doc["C"], dtype=float) if "C" in doc else structure_constants_from_basis(basis)
    return GroupSpec(name=name, m=m, n=n, basis=basis, structure_constants=C)
