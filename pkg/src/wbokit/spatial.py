"""Quaternion, pose, and rigid-body inertia primitives.

Conventions are fixed here once and assumed by every other module:

* Quaternions use the Hamilton product and are stored scalar-first,
  ``[w, x, y, z]``.
* A quaternion is passive: ``rotation_matrix()`` maps child-frame vectors
  into the parent frame, and frames chain left to right, so
  ``q_ac = quat_compose(q_ab, q_bc)``.
* The double-cover sign is canonicalized at construction: the scalar part is
  kept non-negative; when it is within 1e-9 of zero the first vector
  component above 1e-9 is made positive instead.
* Angular velocities are of the child frame relative to the parent.
  ``2 * e_matrix(q) @ qdot`` gives the rate in child-frame coordinates;
  ``quat_rate_to_angular_velocity`` re-expresses it in the parent frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolationError

__all__ = [
    "UnitQuaternion",
    "Pose",
    "SpatialInertia",
    "skew",
    "quat_compose",
    "e_matrix",
    "quat_rate_to_angular_velocity",
    "rotation_to_quaternion",
]

_SIGN_EPS = 1e-9
_UNIT_TOL = 1e-9
_TANGENT_TOL = 1e-9


def skew(v):
    """3x3 matrix S with S @ u == cross(v, u)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def _canonical_sign(wxyz):
    if wxyz[0] > _SIGN_EPS:
        return wxyz
    if wxyz[0] < -_SIGN_EPS:
        return -wxyz
    for c in wxyz[1:]:
        if abs(c) > _SIGN_EPS:
            return wxyz if c > 0 else -wxyz
    return wxyz


@dataclass(frozen=True, eq=False)
class UnitQuaternion:
    """Unit quaternion, normalized and sign-canonicalized at construction."""

    wxyz: np.ndarray

    def __post_init__(self):
        arr = np.array(self.wxyz, dtype=float).reshape(4)
        norm = np.linalg.norm(arr)
        if not np.isfinite(norm) or norm < 1e-12:
            raise ContractViolationError(
                "quaternion components have zero or non-finite norm"
            )
        arr = _canonical_sign(arr / norm)
        arr.setflags(write=False)
        object.__setattr__(self, "wxyz", arr)

    @classmethod
    def identity(cls):
        return cls(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def from_axis_angle(cls, axis, angle):
        axis = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(axis)
        if norm < 1e-12:
            raise ContractViolationError("rotation axis has zero norm")
        half = 0.5 * float(angle)
        return cls(np.concatenate([[np.cos(half)], np.sin(half) * axis / norm]))

    @property
    def scalar(self):
        return float(self.wxyz[0])

    @property
    def vector(self):
        return self.wxyz[1:]

    def compose(self, other):
        """Hamilton product; chains child-of-child onto this parent."""
        return quat_compose(self, other)

    def conjugate(self):
        w, x, y, z = self.wxyz
        return UnitQuaternion(np.array([w, -x, -y, -z]))

    def rotation_matrix(self):
        """Matrix taking child-frame vectors to the parent frame."""
        w, x, y, z = self.wxyz
        return np.array(
            [
                [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
                [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
                [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
            ]
        )

    def rotate(self, v):
        """Apply the rotation to a child-frame vector."""
        return self.rotation_matrix() @ np.asarray(v, dtype=float)

    def angle_about_z(self):
        """Signed rotation angle assuming the rotation is about +z."""
        return 2.0 * np.arctan2(self.wxyz[3], self.wxyz[0])

    def __repr__(self):
        w, x, y, z = self.wxyz
        return f"UnitQuaternion([{w:.9g}, {x:.9g}, {y:.9g}, {z:.9g}])"


def _quat_array(q):
    if isinstance(q, UnitQuaternion):
        return q.wxyz
    arr = np.asarray(q, dtype=float)
    if arr.shape != (4,):
        raise ContractViolationError(
            f"expected 4 quaternion components, got shape {arr.shape}"
        )
    return arr


def quat_compose(qa, qb):
    """Hamilton product qa * qb as a UnitQuaternion.

    With passive child-to-parent quaternions this is frame chaining:
    ``quat_compose(q_ab, q_bc)`` orients frame c in frame a, and
    ``rotation_matrix`` is multiplicative over it.
    """
    a = _quat_array(qa)
    b = _quat_array(qb)
    aw, av = a[0], a[1:]
    bw, bv = b[0], b[1:]
    return UnitQuaternion(
        np.concatenate([[aw * bw - av @ bv], aw * bv + bw * av + np.cross(av, bv)])
    )


def e_matrix(q):
    """3x4 map from quaternion rates to child-frame angular velocity.

    ``2 * e_matrix(q) @ qdot`` is the angular velocity of the child frame
    relative to the parent, expressed in the child frame.  Entries are signed
    components of q, each row is orthogonal to q, and at identity the result
    is ``[0 | I]``.
    """
    arr = _quat_array(q)
    w, v = arr[0], arr[1:]
    return np.hstack([-v[:, None], w * np.eye(3) - skew(v)])


def quat_rate_to_angular_velocity(q, qdot):
    """Angular velocity (parent frame) of the child given q and its rate.

    Requires q unit within 1e-9 and qdot tangent (q . qdot == 0 within 1e-9,
    scaled by the rate magnitude); both are checked.
    """
    arr = _quat_array(q)
    rate = np.asarray(qdot, dtype=float)
    if rate.shape != (4,):
        raise ContractViolationError(
            f"expected 4 quaternion rate components, got shape {rate.shape}"
        )
    norm = np.linalg.norm(arr)
    if abs(norm - 1.0) > _UNIT_TOL:
        raise ContractViolationError(f"quaternion norm {norm!r} is not 1")
    if abs(arr @ rate) > _TANGENT_TOL * max(1.0, np.linalg.norm(rate)):
        raise ContractViolationError("quaternion rate is not tangent to the sphere")
    quat = UnitQuaternion(arr) if not isinstance(q, UnitQuaternion) else q
    return 2.0 * quat.rotation_matrix() @ (e_matrix(arr) @ rate)


def rotation_to_quaternion(matrix):
    """Inverse of ``rotation_matrix``; validates orthonormality to 1e-9."""
    m = np.asarray(matrix, dtype=float)
    if m.shape != (3, 3):
        raise ContractViolationError(f"expected a 3x3 matrix, got shape {m.shape}")
    if np.max(np.abs(m.T @ m - np.eye(3))) > 1e-9 or np.linalg.det(m) < 0.0:
        raise ContractViolationError("matrix is not a rotation")
    # Shepperd's method: branch on the largest of the four squared components.
    t = np.trace(m)
    cands = [t, m[0, 0], m[1, 1], m[2, 2]]
    i = int(np.argmax(cands))
    if i == 0:
        r = np.sqrt(1.0 + t)
        s = 0.5 / r
        wxyz = [
            0.5 * r,
            (m[2, 1] - m[1, 2]) * s,
            (m[0, 2] - m[2, 0]) * s,
            (m[1, 0] - m[0, 1]) * s,
        ]
    elif i == 1:
        r = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2])
        s = 0.5 / r
        wxyz = [
            (m[2, 1] - m[1, 2]) * s,
            0.5 * r,
            (m[0, 1] + m[1, 0]) * s,
            (m[0, 2] + m[2, 0]) * s,
        ]
    elif i == 2:
        r = np.sqrt(1.0 - m[0, 0] + m[1, 1] - m[2, 2])
        s = 0.5 / r
        wxyz = [
            (m[0, 2] - m[2, 0]) * s,
            (m[0, 1] + m[1, 0]) * s,
            0.5 * r,
            (m[1, 2] + m[2, 1]) * s,
        ]
    else:
        r = np.sqrt(1.0 - m[0, 0] - m[1, 1] + m[2, 2])
        s = 0.5 / r
        wxyz = [
            (m[1, 0] - m[0, 1]) * s,
            (m[0, 2] + m[2, 0]) * s,
            (m[1, 2] + m[2, 1]) * s,
            0.5 * r,
        ]
    return UnitQuaternion(np.array(wxyz))


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform placing a child frame in a parent frame."""

    orientation: UnitQuaternion
    translation: np.ndarray

    def __post_init__(self):
        t = np.array(self.translation, dtype=float).reshape(3)
        if not np.all(np.isfinite(t)):
            raise ContractViolationError("pose translation is not finite")
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)

    @classmethod
    def identity(cls):
        return cls(UnitQuaternion.identity(), np.zeros(3))

    def compose(self, other):
        return Pose(
            self.orientation.compose(other.orientation),
            self.translation + self.orientation.rotate(other.translation),
        )

    def inverse(self):
        inv = self.orientation.conjugate()
        return Pose(inv, -inv.rotate(self.translation))

    def transform_point(self, p):
        return self.translation + self.orientation.rotate(p)


@dataclass(frozen=True, eq=False)
class SpatialInertia:
    """Mass, CoM offset, and rotational inertia about the CoM, link frame.

    Zero-mass links are allowed (they model massless connectors such as the
    carriage of a slotted mechanism); the model as a whole must still carry
    positive mass.  The inertia must be symmetric, positive semidefinite, and
    satisfy the principal-moment triangle inequality within 1e-9.
    """

    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        mass = float(self.mass)
        if not np.isfinite(mass) or mass < 0.0:
            raise ContractViolationError(f"mass must be finite and >= 0, got {mass!r}")
        com = np.array(self.com, dtype=float).reshape(3)
        inertia = np.array(self.inertia, dtype=float).reshape(3, 3)
        if not (np.all(np.isfinite(com)) and np.all(np.isfinite(inertia))):
            raise ContractViolationError("mass properties must be finite")
        scale = max(1.0, float(np.max(np.abs(inertia))))
        if np.max(np.abs(inertia - inertia.T)) > 1e-12 * scale:
            raise ContractViolationError("inertia matrix is not symmetric")
        moments = np.sort(np.linalg.eigvalsh(inertia))
        if moments[0] < -1e-9 * scale:
            raise ContractViolationError("inertia matrix is not positive semidefinite")
        if moments[0] + moments[1] < moments[2] - 1e-9 * scale:
            raise ContractViolationError(
                "principal moments violate the triangle inequality"
            )
        com.setflags(write=False)
        inertia.setflags(write=False)
        object.__setattr__(self, "mass", mass)
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "inertia", inertia)

    @classmethod
    def point_mass(cls, mass, com=(0.0, 0.0, 0.0)):
        return cls(mass, np.asarray(com, dtype=float), np.zeros((3, 3)))
