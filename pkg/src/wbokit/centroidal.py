"""Centroidal angular momentum and the local connection of a kinematic tree.

All momentum quantities are taken about the instantaneous whole-body center
of mass and expressed in the base frame.  The two inputs with frames are the
base twist (angular and linear velocity of the base, both in base-frame
coordinates) and the joint rates.

Momentum splits linearly as

    H = M_B @ omega_B + M_q @ qdot

where M_B is the locked whole-body rotational inertia about the CoM (so it is
symmetric positive definite and independent of base pose) and M_q couples
joint rates into centroidal momentum.  The local connection A = M_B^{-1} M_q
maps joint rates to the base angular velocity that keeps H = 0, which is what
``reconstruct_base_orientation`` integrates.

Two independent routes to H exist on purpose: ``centroidal_momentum_oracle``
propagates per-link velocities down the tree and sums per-link momenta, while
``centroidal_matrices`` assembles M_B and M_q from world-frame joint axes and
subtree mass properties.  Tests hold them against each other.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    ContractViolationError,
    NumericalError,
    SingularInertiaError,
    TrajectoryError,
)
from .model import Configuration
from .parallel import ordered_map
from .spatial import Pose, UnitQuaternion, skew

__all__ = [
    "CentroidalMatrices",
    "LocalConnectionSample",
    "JointTrajectory",
    "OrientationTrajectory",
    "forward_kinematics",
    "centroidal_momentum_oracle",
    "centroidal_matrices",
    "local_connection",
    "local_connection_batch",
    "sampled_joint_trajectory",
    "reconstruct_base_orientation",
]

CONDITION_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class CentroidalMatrices:
    """Base-frame momentum maps at one configuration."""

    locked_inertia: np.ndarray  # (3, 3) M_B, about the CoM
    coupling: np.ndarray        # (3, n_q) M_q
    com: np.ndarray             # (3,) CoM position in the base frame


@dataclass(eq=False)
class LocalConnectionSample:
    """A(q) at one configuration, with room to cache the basis jacobian."""

    q: np.ndarray
    connection: np.ndarray  # (3, n_q)
    basis_jacobian: np.ndarray | None = None


def _check_q(model, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_q,):
        raise ContractViolationError(
            f"expected {model.n_q} joint values, got shape {q.shape}"
        )
    return q


def forward_kinematics(model, cfg):
    """World pose of every link frame, keyed by link name."""
    q = _check_q(model, cfg.q)
    poses = {model.root: cfg.base_pose}
    for joint in model.topological_joints:
        value = q[model.q_index(joint.name)] if joint.kind != "fixed" else 0.0
        poses[joint.child] = (
            poses[joint.parent].compose(joint.origin).compose(joint.motion(value))
        )
    return poses


def _link_states(model, cfg, omega_base, v_base, qdot):
    """Per-link world pose and velocity by propagation down the tree.

    Returns {link: (rotation, origin, omega_w, v_origin_w)} with the base
    twist re-expressed from base to world coordinates first.
    """
    q = _check_q(model, cfg.q)
    qdot = _check_q(model, qdot)
    base_rot = cfg.base_pose.orientation.rotation_matrix()
    states = {
        model.root: (
            base_rot,
            cfg.base_pose.translation.copy(),
            base_rot @ np.asarray(omega_base, dtype=float),
            base_rot @ np.asarray(v_base, dtype=float),
        )
    }
    poses = {model.root: cfg.base_pose}
    for joint in model.topological_joints:
        parent_rot, parent_origin, parent_omega, parent_vel = states[joint.parent]
        joint_pose = poses[joint.parent].compose(joint.origin)
        if joint.kind == "fixed":
            value, rate = 0.0, 0.0
        else:
            idx = model.q_index(joint.name)
            value, rate = q[idx], qdot[idx]
        child_pose = joint_pose.compose(joint.motion(value))
        poses[joint.child] = child_pose
        origin = child_pose.translation
        omega = parent_omega.copy()
        vel = parent_vel + np.cross(parent_omega, origin - parent_origin)
        if joint.kind != "fixed":
            axis_w = joint_pose.orientation.rotate(joint.axis)
            if joint.kind == "revolute":
                omega = omega + axis_w * rate
            else:
                vel = vel + axis_w * rate
        states[joint.child] = (
            child_pose.orientation.rotation_matrix(),
            origin,
            omega,
            vel,
        )
    return states


def centroidal_momentum_oracle(model, cfg, base_twist, qdot):
    """Brute-force H about the CoM, in base frame, by per-link summation.

    ``base_twist`` is (omega_base, v_base), both in base-frame coordinates.
    The result is invariant to v_base: shifting every link velocity by a
    common translation contributes sum(m_i (c_i - c_com)) x v = 0.
    """
    omega_base, v_base = base_twist
    states = _link_states(model, cfg, omega_base, v_base, qdot)
    masses, coms, vels = [], [], []
    h_world = np.zeros(3)
    for name, inertia in model.links:
        rot, origin, omega, vel = states[name]
        com_w = origin + rot @ inertia.com
        vcom_w = vel + np.cross(omega, rot @ inertia.com)
        masses.append(inertia.mass)
        coms.append(com_w)
        vels.append(vcom_w)
        h_world += (rot @ inertia.inertia @ rot.T) @ omega
    masses = np.array(masses)
    coms = np.array(coms)
    vels = np.array(vels)
    c_com = masses @ coms / masses.sum()
    h_world += np.sum(masses[:, None] * np.cross(coms - c_com, vels), axis=0)
    return cfg.base_pose.orientation.rotation_matrix().T @ h_world


def centroidal_matrices(model, cfg):
    """Assemble M_B, M_q, and the CoM from world-frame geometry.

    M_B is the locked inertia about the CoM: rotated link inertias plus
    parallel-axis point-mass terms.  Column j of M_q sums, over the subtree
    below joint j, the momentum produced by a unit rate of that joint.
    """
    poses = forward_kinematics(model, cfg)
    names = [name for name, _ in model.links]
    inertias = {name: inertia for name, inertia in model.links}
    rots = {name: poses[name].orientation.rotation_matrix() for name in names}
    coms_w = {
        name: poses[name].translation + rots[name] @ inertias[name].com
        for name in names
    }
    world_inertia = {
        name: rots[name] @ inertias[name].inertia @ rots[name].T for name in names
    }
    total_mass = sum(inertias[name].mass for name in names)
    c_com = (
        sum(inertias[name].mass * coms_w[name] for name in names) / total_mass
    )

    locked = np.zeros((3, 3))
    for name in names:
        r = coms_w[name] - c_com
        locked += world_inertia[name] + inertias[name].mass * (
            (r @ r) * np.eye(3) - np.outer(r, r)
        )

    coupling = np.zeros((3, model.n_q))
    for joint in model.actuated_joints:
        joint_pose = poses[joint.parent].compose(joint.origin)
        axis_w = joint_pose.orientation.rotate(joint.axis)
        col = np.zeros(3)
        for name in model.subtree_links(joint.name):
            mass = inertias[name].mass
            r = coms_w[name] - c_com
            if joint.kind == "revolute":
                col += world_inertia[name] @ axis_w
                col += mass * np.cross(r, np.cross(axis_w, coms_w[name] - joint_pose.translation))
            else:
                col += mass * np.cross(r, axis_w)
        coupling[:, model.q_index(joint.name)] = col

    base_rot = cfg.base_pose.orientation.rotation_matrix()
    locked = base_rot.T @ locked @ base_rot
    locked = 0.5 * (locked + locked.T)
    try:
        np.linalg.cholesky(locked)
    except np.linalg.LinAlgError as exc:
        raise SingularInertiaError(
            "locked inertia is not positive definite; the model carries no "
            "rotational inertia about some axis"
        ) from exc
    return CentroidalMatrices(
        locked_inertia=locked,
        coupling=base_rot.T @ coupling,
        com=base_rot.T @ (c_com - cfg.base_pose.translation),
    )


def local_connection(model, cfg):
    """A = M_B^{-1} M_q via Cholesky, with conditioning and residual checks."""
    mats = centroidal_matrices(model, cfg)
    cond = np.linalg.cond(mats.locked_inertia)
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularInertiaError(
            f"locked inertia condition number {cond:.3e} exceeds {CONDITION_LIMIT:.0e}"
        )
    factor = scipy.linalg.cho_factor(mats.locked_inertia)
    connection = scipy.linalg.cho_solve(factor, mats.coupling)
    coupling_scale = np.linalg.norm(mats.coupling)
    if coupling_scale > 0.0:
        residual = np.linalg.norm(
            mats.locked_inertia @ connection - mats.coupling
        )
        if residual >= 1e-9 * coupling_scale:
            raise NumericalError(
                f"connection solve residual {residual:.3e} exceeds tolerance"
            )
    return LocalConnectionSample(q=np.array(cfg.q, dtype=float), connection=connection)


def local_connection_batch(model, cfgs, threads=1):
    """local_connection over many configurations, order-preserving."""
    return ordered_map(lambda cfg: local_connection(model, cfg), cfgs, threads)


@dataclass(frozen=True, eq=False)
class JointTrajectory:
    """Joint path q(t), qdot(t) over a closed time span.

    ``breakpoints`` mark interior times where smoothness is lost; the
    integrator lands a step boundary on each so its order is preserved.
    """

    position: object  # Callable[[float], ndarray]
    velocity: object  # Callable[[float], ndarray]
    span: tuple[float, float]
    breakpoints: tuple[float, ...] = ()


def sampled_joint_trajectory(times, positions, velocities):
    """Joint trajectory from samples, linearly interpolated between rows."""
    times = np.asarray(times, dtype=float)
    positions = np.atleast_2d(np.asarray(positions, dtype=float))
    velocities = np.atleast_2d(np.asarray(velocities, dtype=float))
    if times.ndim != 1 or len(times) < 2:
        raise TrajectoryError("need at least two time samples")
    if np.any(np.diff(times) <= 0.0):
        raise TrajectoryError("time stamps must be strictly increasing")
    if positions.shape[0] != len(times) or velocities.shape != positions.shape:
        raise TrajectoryError("times, positions, and velocities disagree in shape")

    def interp(table):
        def f(t):
            return np.array(
                [np.interp(t, times, table[:, j]) for j in range(table.shape[1])]
            )

        return f

    return JointTrajectory(
        position=interp(positions),
        velocity=interp(velocities),
        span=(float(times[0]), float(times[-1])),
        breakpoints=tuple(float(t) for t in times[1:-1]),
    )


@dataclass(frozen=True, eq=False)
class OrientationTrajectory:
    times: np.ndarray
    orientations: tuple[UnitQuaternion, ...]

    @property
    def final(self):
        return self.orientations[-1]


def _segment_steps(t0, t1, breakpoints, n_steps):
    edges = [t0]
    for b in sorted(set(breakpoints)):
        if t0 < b < t1:
            edges.append(float(b))
    edges.append(t1)
    total = t1 - t0
    counts = [
        max(1, int(round(n_steps * (edges[i + 1] - edges[i]) / total)))
        for i in range(len(edges) - 1)
    ]
    return edges, counts


def reconstruct_base_orientation(model, trajectory, initial_orientation, n_steps=1000):
    """Integrate the base orientation under zero centroidal momentum.

    Fixed-step RK4 on the quaternion kinematics with omega_base(t) =
    -A(q(t)) qdot(t), renormalizing after every step.  Steps are distributed
    over the trajectory's smooth segments proportionally to duration.
    Returns the orientation at every step boundary.
    """
    t0, t1 = trajectory.span
    if not t1 > t0:
        raise TrajectoryError("trajectory span must have positive duration")
    if n_steps < 1:
        raise ContractViolationError("need at least one integration step")

    def omega(t):
        cfg = Configuration(Pose.identity(), trajectory.position(t))
        sample = local_connection(model, cfg)
        return -(sample.connection @ trajectory.velocity(t))

    def derivative(quat, w):
        # qdot = 0.5 * q ⊗ [0, w] with w in the child (base) frame
        qw, qv = quat[0], quat[1:]
        return 0.5 * np.concatenate([[-qv @ w], qw * w + np.cross(qv, w)])

    quat = np.array(initial_orientation.wxyz, dtype=float)
    times = [t0]
    quats = [UnitQuaternion(quat)]
    edges, counts = _segment_steps(t0, t1, trajectory.breakpoints, n_steps)
    for seg_start, seg_end, count in zip(edges[:-1], edges[1:], counts):
        h = (seg_end - seg_start) / count
        nodes = seg_start + h * np.arange(count + 1)
        w_right = omega(nodes[0])
        for i in range(count):
            w_left = w_right
            w_mid = omega(nodes[i] + 0.5 * h)
            w_right = omega(nodes[i + 1])
            k1 = derivative(quat, w_left)
            k2 = derivative(quat + 0.5 * h * k1, w_mid)
            k3 = derivative(quat + 0.5 * h * k2, w_mid)
            k4 = derivative(quat + h * k3, w_right)
            quat = quat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            quat = quat / np.linalg.norm(quat)
            times.append(nodes[i + 1])
            quats.append(UnitQuaternion(quat))
    return OrientationTrajectory(np.array(times), tuple(quats))
