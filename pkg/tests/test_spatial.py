"""Quaternion algebra and rigid-body value types.

The finite-difference checks are the arbiter for every sign and frame
convention: an analytic axis-angle path has a known angular velocity, and
the rate map has to reproduce it.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import fd_angular_velocity, quat_to_matrix, random_unit
from wbokit.errors import ContractViolationError
from wbokit.spatial import (
    Pose,
    SpatialInertia,
    UnitQuaternion,
    e_matrix,
    quat_compose,
    quat_rate_to_angular_velocity,
    rotation_to_quaternion,
    skew,
)


def random_quat(rng):
    return UnitQuaternion(random_unit(rng, 4))


class TestUnitQuaternion:
    def test_construction_normalizes(self):
        q = UnitQuaternion(np.array([2.0, 0.0, 0.0, 0.0]))
        assert q.scalar == 1.0

    def test_norm_invariant(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            q = random_quat(rng)
            assert abs(np.linalg.norm(q.wxyz) - 1.0) < 1e-12

    def test_sign_canonicalization_scalar(self):
        q = UnitQuaternion(np.array([-0.5, 0.5, 0.5, 0.5]))
        assert q.scalar > 0.0

    def test_sign_canonicalization_equator(self):
        # scalar ~ 0: first nonzero vector component is forced positive
        q = UnitQuaternion(np.array([0.0, -1.0, 0.0, 0.0]))
        assert q.wxyz[1] > 0.0

    def test_zero_norm_rejected(self):
        with pytest.raises(ContractViolationError):
            UnitQuaternion(np.zeros(4))

    def test_rotation_matrix_orthonormal(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            r = random_quat(rng).rotation_matrix()
            assert np.max(np.abs(r.T @ r - np.eye(3))) < 1e-12
            assert abs(np.linalg.det(r) - 1.0) < 1e-12

    def test_angle_about_z(self):
        q = UnitQuaternion.from_axis_angle([0.0, 0.0, 1.0], 0.7)
        assert q.angle_about_z() == pytest.approx(0.7, abs=1e-14)


class TestCompose:
    def test_identity_element(self):
        rng = np.random.default_rng(11)
        q = random_quat(rng)
        out = quat_compose(q, UnitQuaternion.identity())
        np.testing.assert_allclose(out.wxyz, q.wxyz, atol=1e-15)

    def test_conjugate_inverse(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            q = random_quat(rng)
            out = quat_compose(q, q.conjugate())
            np.testing.assert_allclose(out.wxyz, [1.0, 0.0, 0.0, 0.0], atol=1e-12)

    def test_matches_rotation_matrix_product(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            qa, qb = random_quat(rng), random_quat(rng)
            left = quat_compose(qa, qb).rotation_matrix()
            right = qa.rotation_matrix() @ qb.rotation_matrix()
            assert np.max(np.abs(left - right)) < 1e-10

    @given(st.integers(0, 10_000))
    def test_compose_stays_unit(self, seed):
        rng = np.random.default_rng(seed)
        out = quat_compose(random_quat(rng), random_quat(rng))
        assert abs(np.linalg.norm(out.wxyz) - 1.0) < 1e-12


class TestEMatrix:
    def test_identity_layout(self):
        e = e_matrix(UnitQuaternion.identity())
        np.testing.assert_array_equal(e, np.hstack([np.zeros((3, 1)), np.eye(3)]))

    def test_rows_orthogonal_to_q(self):
        rng = np.random.default_rng(21)
        for _ in range(30):
            q = random_quat(rng)
            np.testing.assert_allclose(e_matrix(q) @ q.wxyz, 0.0, atol=1e-12)

    def test_row_norms(self):
        # entries are signed components of q, so each row has unit norm
        rng = np.random.default_rng(22)
        for _ in range(30):
            q = random_quat(rng)
            norms = np.linalg.norm(e_matrix(q), axis=1)
            np.testing.assert_allclose(norms, 1.0, atol=1e-14)


class TestRateToAngularVelocity:
    def test_identity_doubling(self):
        out = quat_rate_to_angular_velocity(
            UnitQuaternion.identity(), np.array([0.0, 0.3, -0.2, 0.9])
        )
        np.testing.assert_allclose(out, [0.6, -0.4, 1.8], atol=1e-14)

    def test_zero_rate(self):
        rng = np.random.default_rng(31)
        out = quat_rate_to_angular_velocity(random_quat(rng), np.zeros(4))
        np.testing.assert_array_equal(out, np.zeros(3))

    def test_axis_angle_paths(self):
        """Q(t) spinning about a fixed axis u at rate w must map to w u."""
        rng = np.random.default_rng(32)
        for _ in range(20):
            u = random_unit(rng)
            w = float(rng.uniform(-4.0, 4.0))
            t = float(rng.uniform(0.0, 2.0))
            half = 0.5 * w * t
            q = np.concatenate([[np.cos(half)], np.sin(half) * u])
            qdot = 0.5 * w * np.concatenate([[-np.sin(half)], np.cos(half) * u])
            out = quat_rate_to_angular_velocity(q, qdot)
            np.testing.assert_allclose(out, w * u, atol=1e-9)

            # same path, arbitrated by finite differences of R(t)
            def rotation(s, u=u, w=w):
                h = 0.5 * w * s
                return quat_to_matrix(np.concatenate([[np.cos(h)], np.sin(h) * u]))

            np.testing.assert_allclose(
                out, fd_angular_velocity(rotation, t), atol=1e-6
            )

    def test_linearity_in_rate(self):
        rng = np.random.default_rng(33)
        q = random_quat(rng)
        # project random 4-vectors onto the tangent space at q
        x = rng.standard_normal(4)
        y = rng.standard_normal(4)
        x -= (x @ q.wxyz) * q.wxyz
        y -= (y @ q.wxyz) * q.wxyz
        a, b = 1.7, -0.4
        combined = quat_rate_to_angular_velocity(q, a * x + b * y)
        split = a * quat_rate_to_angular_velocity(
            q, x
        ) + b * quat_rate_to_angular_velocity(q, y)
        np.testing.assert_allclose(combined, split, atol=1e-12)

    def test_non_unit_rejected(self):
        with pytest.raises(ContractViolationError):
            quat_rate_to_angular_velocity(
                np.array([1.0, 1.0, 0.0, 0.0]), np.zeros(4)
            )

    def test_non_tangent_rejected(self):
        with pytest.raises(ContractViolationError):
            quat_rate_to_angular_velocity(
                np.array([1.0, 0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0, 0.0])
            )


class TestRotationRoundTrip:
    def test_recovers_up_to_sign(self):
        rng = np.random.default_rng(41)
        for _ in range(50):
            q = random_quat(rng)
            back = rotation_to_quaternion(q.rotation_matrix())
            err = min(
                np.max(np.abs(back.wxyz - q.wxyz)),
                np.max(np.abs(back.wxyz + q.wxyz)),
            )
            assert err < 1e-10

    def test_branch_coverage(self):
        # push each Shepperd branch: rotations by pi about each axis
        for axis in np.eye(3):
            q = UnitQuaternion.from_axis_angle(axis, np.pi)
            back = rotation_to_quaternion(q.rotation_matrix())
            err = min(
                np.max(np.abs(back.wxyz - q.wxyz)),
                np.max(np.abs(back.wxyz + q.wxyz)),
            )
            assert err < 1e-10

    def test_non_rotation_rejected(self):
        with pytest.raises(ContractViolationError):
            rotation_to_quaternion(np.diag([1.0, 1.0, -1.0]))


class TestPose:
    def test_inverse_compose_identity(self):
        rng = np.random.default_rng(51)
        for _ in range(20):
            pose = Pose(random_quat(rng), rng.uniform(-1, 1, 3))
            out = pose.inverse().compose(pose)
            np.testing.assert_allclose(
                out.orientation.wxyz, [1, 0, 0, 0], atol=1e-12
            )
            np.testing.assert_allclose(out.translation, 0.0, atol=1e-12)

    def test_transform_point_matches_matrix(self):
        rng = np.random.default_rng(52)
        pose = Pose(random_quat(rng), rng.uniform(-1, 1, 3))
        p = rng.uniform(-1, 1, 3)
        expected = pose.orientation.rotation_matrix() @ p + pose.translation
        np.testing.assert_allclose(pose.transform_point(p), expected, atol=1e-14)

    def test_compose_associative(self):
        rng = np.random.default_rng(53)
        a, b, c = (
            Pose(random_quat(rng), rng.uniform(-1, 1, 3)) for _ in range(3)
        )
        left = a.compose(b).compose(c)
        right = a.compose(b.compose(c))
        np.testing.assert_allclose(left.translation, right.translation, atol=1e-12)
        np.testing.assert_allclose(
            left.orientation.rotation_matrix(),
            right.orientation.rotation_matrix(),
            atol=1e-12,
        )


class TestSpatialInertia:
    def test_valid_zero_mass(self):
        SpatialInertia(0.0, np.zeros(3), np.zeros((3, 3)))

    def test_negative_mass_rejected(self):
        with pytest.raises(ContractViolationError):
            SpatialInertia(-1.0, np.zeros(3), np.eye(3))

    def test_asymmetric_rejected(self):
        bad = np.array([[1.0, 0.1, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
        with pytest.raises(ContractViolationError):
            SpatialInertia(1.0, np.zeros(3), bad)

    def test_triangle_inequality_rejected(self):
        with pytest.raises(ContractViolationError):
            SpatialInertia(1.0, np.zeros(3), np.diag([1.0, 1.0, 3.0]))

    def test_point_mass(self):
        pm = SpatialInertia.point_mass(2.0, (0.1, 0.0, 0.0))
        assert pm.mass == 2.0
        np.testing.assert_array_equal(pm.inertia, np.zeros((3, 3)))


def test_skew_cross_product():
    rng = np.random.default_rng(61)
    a, b = rng.standard_normal(3), rng.standard_normal(3)
    np.testing.assert_allclose(skew(a) @ b, np.cross(a, b), atol=1e-15)
