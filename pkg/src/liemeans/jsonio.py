"""JSON documents read and written by the command-line tool.

Floats are written with 17 significant digits so that every double
round-trips bit for bit.

Schemas
-------
samples   ``{"group": name, "samples": [entry, ...]}`` where each entry is
          ``{"matrix": [[...]]}``, ``{"R": [[...]], "t": [...]}`` (SE groups) or
          ``{"q": [w, x, y, z]}`` (SO3), each with an optional ``"weight"``.
metric    ``{"group": name, "W": [[...]]}``
element   ``{"matrix": ...}``, ``{"R": ..., "t": ...}``, ``{"q": ...}`` or a bare nested list.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .distributions import EmpiricalDistribution, make_empirical
from .groups import PoseParts, make_group, quat_to_so3, se_compose
from .lie_core import GroupSpec, group_from_json
from .metric import InnerProduct


class InputError(ValueError):
    """A malformed input document; the message names the offending field."""


# --------------------------------------------------------------------------- writing

def _fmt(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj: Any) -> str:
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_encode(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any) -> str:
    return _encode(obj) + "\n"


# --------------------------------------------------------------------------- reading

def loads(text: str, source: str = "<input>") -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None


def load_file(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return loads(text, path)


def _matrix(value, where: str, shape=None) -> np.ndarray:
    try:
        A = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}: expected a numeric array") from None
    if shape is not None and A.shape != shape:
        raise InputError(f"{where}: expected shape {shape}, got {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{where}: contains non-finite values")
    return A


def element_from_json(doc, group: GroupSpec, where: str = "element") -> tuple[np.ndarray, np.ndarray | None]:
    """Matrix of a group element (and its quaternion when given as one)."""
    m = group.m
    if isinstance(doc, list):
        return _matrix(doc, where, (m, m)), None
    if not isinstance(doc, dict):
        raise InputError(f"{where}: expected an object or a nested list")
    if "matrix" in doc:
        return _matrix(doc["matrix"], f"{where}.matrix", (m, m)), None
    if "R" in doc or "t" in doc:
        if not group.name.startswith("SE"):
            raise InputError(f"{where}: R/t form is only accepted for SE groups")
        d = m - 1
        for key in ("R", "t"):
            if key not in doc:
                raise InputError(f"{where}: missing field {key!r}")
        R = _matrix(doc["R"], f"{where}.R", (d, d))
        t = _matrix(doc["t"], f"{where}.t", (d,))
        return se_compose(PoseParts(R, t)), None
    if "q" in doc:
        if group.name != "SO3":
            raise InputError(f"{where}: quaternion form is only accepted for SO3")
        q = _matrix(doc["q"], f"{where}.q", (4,))
        nq = float(np.linalg.norm(q))
        if abs(nq - 1.0) > 1e-9:
            raise InputError(f"{where}.q: quaternion must have unit norm (got {nq:.12g})")
        return quat_to_so3(q), q / nq
    raise InputError(f"{where}: expected one of 'matrix', 'R'/'t' or 'q'")


def group_from_doc(doc, where: str) -> GroupSpec:
    g = doc.get("group") if isinstance(doc, dict) else None
    if g is None:
        raise InputError(f"{where}: missing field 'group'")
    try:
        if isinstance(g, dict):
            return group_from_json(g)
        return make_group(str(g))
    except (KeyError, ValueError) as exc:
        raise InputError(f"{where}.group: {exc}") from None


def samples_from_json(doc, source: str = "samples", group: GroupSpec | None = None) -> EmpiricalDistribution:
    if not isinstance(doc, dict):
        raise InputError(f"{source}: expected a JSON object")
    file_group = group_from_doc(doc, source)
    if group is not None and file_group.name != group.name:
        raise InputError(f"{source}: file is for group {file_group.name}, but {group.name} was requested")
    group = group or file_group
    entries = doc.get("samples")
    if not isinstance(entries, list) or not entries:
        raise InputError(f"{source}: 'samples' must be a nonempty list")
    mats, weights, quats = [], [], []
    for i, entry in enumerate(entries):
        where = f"{source}: samples[{i}]"
        mat, q = element_from_json(entry, group, where)
        mats.append(mat)
        quats.append(q)
        w = entry.get("weight", None) if isinstance(entry, dict) else None
        if w is not None and not isinstance(w, (int, float)):
            raise InputError(f"{where}.weight: expected a number")
        weights.append(w)
    if any(w is None for w in weights) and not all(w is None for w in weights):
        raise InputError(f"{source}: either every sample has a weight or none does")
    weights = None if weights[0] is None else weights
    quaternions = None
    if all(q is not None for q in quats):
        quaternions = np.stack(quats)
    try:
        return make_empirical(group, np.stack(mats), weights, quaternions)
    except ValueError as exc:
        raise InputError(f"{source}: {exc}") from None


def samples_to_json(d: EmpiricalDistribution) -> dict:
    entries = []
    w = d.weights * d.mass
    for i, g in enumerate(d.samples):
        entry = {"matrix": g}
        if d.quaternions is not None:
            entry = {"q": d.quaternions[i]}
        entry["weight"] = float(w[i])
        entries.append(entry)
    return {"group": d.group.name, "samples": entries}


def metric_from_json(doc, source: str = "metric", group: GroupSpec | None = None) -> InnerProduct:
    if not isinstance(doc, dict):
        raise InputError(f"{source}: expected a JSON object")
    file_group = group_from_doc(doc, source)
    if group is not None and file_group.name != group.name:
        raise InputError(f"{source}: metric is for group {file_group.name}, but {group.name} was requested")
    group = group or file_group
    if "W" not in doc:
        raise InputError(f"{source}: missing field 'W'")
    W = _matrix(doc["W"], f"{source}.W", (group.n, group.n))
    try:
        return InnerProduct(group, W)
    except ValueError as exc:
        raise InputError(f"{source}.W: {exc}") from None


def metric_to_json(ip: InnerProduct) -> dict:
    return {"group": ip.group.name, "W": ip.W}


def mean_report_to_json(rep) -> dict:
    diag = {k: v for k, v in rep.diagnostics.items()}
    return {
        "method": rep.method,
        "mean": rep.mean,
        "iterations": rep.iterations,
        "residual": rep.residual,
        "cost": rep.cost,
        "converged": rep.converged,
        "diagnostics": diag,
    }


def cov_report_to_json(rep) -> dict:
    return {"kind": rep.kind, "anchor": rep.anchor, "matrix": rep.matrix, "variance": rep.variance}
