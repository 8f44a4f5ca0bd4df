"""Shared oracles and model generators for the test suite.

Everything here is written from scratch against the math, not against the
package internals: forward kinematics chains raw 4x4 homogeneous matrices,
angular velocities come from central differences of rotation matrices, and
monomials are recomputed in the log domain.  When a test compares package
output with one of these, two independent derivations have to coincide.
"""

import math
from pathlib import Path

import numpy as np

from wbokit.model import Configuration, Joint, RobotModel
from wbokit.spatial import Pose, SpatialInertia, UnitQuaternion

BIPED_PATH = Path(__file__).resolve().parents[1] / "models" / "biped12.json"


def quat_to_matrix(wxyz):
    """Standalone quaternion-to-matrix formula (w, x, y, z)."""
    w, x, y, z = wxyz
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def homogeneous(rotation, translation):
    out = np.eye(4)
    out[:3, :3] = rotation
    out[:3, 3] = translation
    return out


def rodrigues(axis, angle):
    k = np.array(
        [
            [0.0, -axis[2], axis[1]],
            [axis[2], 0.0, -axis[0]],
            [-axis[1], axis[0], 0.0],
        ]
    )
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def naive_fk(model, cfg):
    """World transform of every link by plain 4x4 chaining, no Pose algebra."""
    base = homogeneous(
        quat_to_matrix(cfg.base_pose.orientation.wxyz), cfg.base_pose.translation
    )
    frames = {model.root: base}
    for joint in model.topological_joints:
        origin = homogeneous(
            quat_to_matrix(joint.origin.orientation.wxyz), joint.origin.translation
        )
        if joint.kind == "fixed":
            motion = np.eye(4)
        else:
            value = cfg.q[model.q_index(joint.name)]
            if joint.kind == "revolute":
                motion = homogeneous(rodrigues(joint.axis, value), np.zeros(3))
            else:
                motion = homogeneous(np.eye(3), joint.axis * value)
        frames[joint.child] = frames[joint.parent] @ origin @ motion
    return frames


def fd_angular_velocity(rotation_at, t, h=1e-6):
    """Parent-frame angular velocity of R(t) by central differences.

    Rdot = skew(omega) R, so omega is the antisymmetric part of Rdot R^T.
    """
    rdot = (rotation_at(t + h) - rotation_at(t - h)) / (2.0 * h)
    w = rdot @ rotation_at(t).T
    return 0.5 * np.array(
        [w[2, 1] - w[1, 2], w[0, 2] - w[2, 0], w[1, 0] - w[0, 1]]
    )


def random_unit(rng, n=3):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def random_rotation(rng):
    return quat_to_matrix(random_unit(rng, 4))


def random_inertia(rng, scale=1.0):
    # diag(y+z, x+z, x+y) satisfies the principal-moment triangle
    # inequality for any positive x, y, z; conjugating by a rotation
    # preserves that.
    x, y, z = rng.uniform(0.05, 1.0, 3) * scale
    principal = np.diag([y + z, x + z, x + y])
    rot = random_rotation(rng)
    return rot @ principal @ rot.T


def random_tree(rng, n_links=None):
    """Random floating-base tree: 3 to 8 links, mixed joint kinds."""
    n = int(n_links) if n_links is not None else int(rng.integers(3, 9))
    links = [
        (
            "link0",
            SpatialInertia(
                float(rng.uniform(0.5, 4.0)),
                rng.uniform(-0.2, 0.2, 3),
                random_inertia(rng),
            ),
        )
    ]
    joints = []
    for i in range(1, n):
        parent = int(rng.integers(0, i))
        kind = "revolute" if rng.random() < 0.6 else "prismatic"
        origin = Pose(UnitQuaternion(random_unit(rng, 4)), rng.uniform(-0.4, 0.4, 3))
        links.append(
            (
                f"link{i}",
                SpatialInertia(
                    float(rng.uniform(0.1, 3.0)),
                    rng.uniform(-0.2, 0.2, 3),
                    random_inertia(rng),
                ),
            )
        )
        joints.append(
            Joint(
                name=f"j{i}",
                parent=f"link{parent}",
                child=f"link{i}",
                kind=kind,
                axis=random_unit(rng),
                origin=origin,
                limits=(-1.0, 1.0),
            )
        )
    return RobotModel(tuple(links), tuple(joints), "link0")


def random_configuration(rng, model, world_pose=True):
    limits = model.limits_array()
    q = limits[:, 0] + (limits[:, 1] - limits[:, 0]) * rng.random(model.n_q)
    if world_pose:
        pose = Pose(UnitQuaternion(random_unit(rng, 4)), rng.uniform(-1.0, 1.0, 3))
    else:
        pose = Pose.identity()
    return Configuration(pose, q)
