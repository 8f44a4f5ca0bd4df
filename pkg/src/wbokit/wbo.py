"""Whole-body orientation as a polynomial quaternion of the configuration.

The vector part of the orientation is Q_xyz = theta @ lambda(q) with
lambda a monomial basis, and the scalar part is the positive root
Q_s = sqrt(1 - |Q_xyz|^2), so theta = 0 is the identity rotation.  The
induced angular velocity relative to the base is

    omega = T(Q) @ theta @ J_lambda(q) @ qdot

with T(Q) = 2 R(Q) (Q_s I - skew(Q_xyz) + Q_xyz Q_xyz^T / Q_s), the
chain rule through the scalar-part constraint.  T is well conditioned only
away from the equator of the sphere; evaluation insists on Q_s >= 0.5.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .basis import MonomialBasis, basis_jacobian, eval_basis
from .centroidal import centroidal_matrices
from .errors import ContractViolationError, QuaternionDomainError, ScalarFloorError
from .spatial import UnitQuaternion, skew

__all__ = [
    "WboFunction",
    "SCALAR_FLOOR",
    "VECTOR_NORM_LIMIT",
    "eval_q",
    "t_matrix",
    "t_matrix_from_quat",
    "omega_wbo",
    "world_wbo",
    "approx_cam",
    "save_wbo",
    "load_wbo",
]

SCALAR_FLOOR = 0.5
VECTOR_NORM_LIMIT = 1.0 - 1e-9

ARTIFACT_FORMAT = "wbo-theta"


@dataclass(frozen=True, eq=False)
class WboFunction:
    """Coefficients over a monomial basis, plus provenance metadata."""

    basis: MonomialBasis
    theta: np.ndarray  # (3, n_terms)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        if theta.shape != (3, self.basis.n_terms):
            raise ContractViolationError(
                f"theta must be 3 x {self.basis.n_terms}, got {theta.shape}"
            )
        theta.setflags(write=False)
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zero(cls, basis, metadata=None):
        return cls(basis, np.zeros((3, basis.n_terms)), dict(metadata or {}))


def _vector_part(wbo, q):
    return wbo.theta @ eval_basis(wbo.basis, q)


def _scalar_part(v):
    norm = np.linalg.norm(v)
    if norm > VECTOR_NORM_LIMIT:
        raise QuaternionDomainError(
            f"fitted vector part has norm {norm!r}; the configuration is outside "
            "the function's valid domain"
        )
    return float(np.sqrt(1.0 - norm * norm))


def eval_q(wbo, q):
    """Orientation of the whole-body frame relative to the base."""
    v = _vector_part(wbo, q)
    s = _scalar_part(v)
    return UnitQuaternion(np.concatenate([[s], v]))


def t_matrix_from_quat(quat):
    """Rate map T with omega = T @ d(Q_xyz)/dt, parent-frame output."""
    s = quat.scalar
    if s < SCALAR_FLOOR:
        raise ScalarFloorError(
            f"quaternion scalar part {s!r} is below the rate-map floor "
            f"{SCALAR_FLOOR}; the fit drifted too far from identity"
        )
    v = quat.vector
    return 2.0 * quat.rotation_matrix() @ (
        s * np.eye(3) - skew(v) + np.outer(v, v) / s
    )


def t_matrix(wbo, q):
    return t_matrix_from_quat(eval_q(wbo, q))


def omega_wbo(wbo, q, qdot):
    """Angular velocity of the WBO frame relative to the base, base frame."""
    qdot = np.asarray(qdot, dtype=float)
    return t_matrix(wbo, q) @ (wbo.theta @ (basis_jacobian(wbo.basis, q) @ qdot))


def world_wbo(wbo, cfg):
    """World orientation of the WBO frame: base orientation composed with Q."""
    return cfg.base_pose.orientation.compose(eval_q(wbo, cfg.q))


def approx_cam(wbo, model, cfg, omega_base, qdot):
    """Approximate centroidal angular momentum M_B (omega_B + omega_wbo)."""
    mats = centroidal_matrices(model, cfg)
    omega_base = np.asarray(omega_base, dtype=float)
    return mats.locked_inertia @ (omega_base + omega_wbo(wbo, cfg.q, qdot))


def _artifact_dict(wbo):
    return {
        "format": ARTIFACT_FORMAT,
        "tool_version": __version__,
        "basis": wbo.basis.to_descriptor(),
        "theta": [[float(v) for v in row] for row in wbo.theta],
        "metadata": wbo.metadata,
    }


def save_wbo(wbo, path):
    """Write the coefficient artifact as deterministic JSON."""
    payload = json.dumps(_artifact_dict(wbo), indent=2, sort_keys=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(payload)
        handle.write("\n")


def load_wbo(path):
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise ContractViolationError(
                f"{path}: not valid JSON ({exc.msg} at line {exc.lineno})"
            ) from exc
    if not isinstance(doc, dict) or doc.get("format") != ARTIFACT_FORMAT:
        raise ContractViolationError(
            f"{path}: not a coefficient artifact "
            f"(format={doc.get('format') if isinstance(doc, dict) else None!r})"
        )
    try:
        basis = MonomialBasis.from_descriptor(doc["basis"])
        theta = np.array(doc["theta"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ContractViolationError(f"{path}: malformed artifact: {exc}") from exc
    return WboFunction(basis, theta, doc.get("metadata", {}))
