"""Model parsing, validation, joint locking, mirroring, and sampling."""

import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from helpers import BIPED_PATH, naive_fk, random_configuration, random_tree
from wbokit.centroidal import forward_kinematics
from wbokit.errors import (
    BadAxisError,
    BadInertiaError,
    CycleError,
    MirrorError,
    ModelSyntaxError,
    UnknownJointError,
    UnknownLinkError,
)
from wbokit.model import (
    Configuration,
    content_hash,
    load_model,
    lock_joints,
    mirror_configuration,
    parse_model,
    sample_configurations,
)
from wbokit.spatial import Pose

UNIT_INERTIA = {"xx": 0.1, "yy": 0.1, "zz": 0.1, "xy": 0.0, "xz": 0.0, "yz": 0.0}


def link(name, mass=1.0):
    return {"name": name, "mass": mass, "com": [0.0, 0.0, 0.0],
            "inertia": dict(UNIT_INERTIA)}


def revolute(name, parent, child, axis=(0.0, 0.0, 1.0), limits=(-1.0, 1.0)):
    return {"name": name, "kind": "revolute", "parent": parent, "child": child,
            "axis": list(axis), "limits": list(limits)}


def chain_model(n_joints, fixed_names=()):
    """Serial chain with n_joints revolute joints, some converted to fixed."""
    links = [link("base")] + [link(f"link{i}") for i in range(1, n_joints + 1)]
    joints = []
    for i in range(1, n_joints + 1):
        j = revolute(f"j{i}", f"link{i-1}" if i > 1 else "base", f"link{i}")
        j["origin"] = {"translation": [0.1, 0.0, 0.0]}
        if j["name"] in fixed_names:
            j["kind"] = "fixed"
            del j["axis"]
            del j["limits"]
        joints.append(j)
    return {"root": "base", "links": links, "joints": joints}


class TestParse:
    def test_minimal_two_link(self):
        doc = {"root": "base", "links": [link("base"), link("arm")],
               "joints": [revolute("shoulder", "base", "arm")]}
        model = parse_model(json.dumps(doc))
        assert model.n_q == 1
        assert model.joint("shoulder").kind == "revolute"

    def test_unknown_parent_link(self):
        doc = {"root": "base", "links": [link("base"), link("arm")],
               "joints": [revolute("shoulder", "ghost", "arm")]}
        with pytest.raises(UnknownLinkError):
            parse_model(json.dumps(doc))

    def test_cycle_detected(self):
        doc = {"root": "base", "links": [link("base"), link("a"), link("b")],
               "joints": [revolute("j1", "base", "a"),
                          revolute("j2", "a", "b"),
                          revolute("j3", "b", "a")]}
        with pytest.raises(CycleError):
            parse_model(json.dumps(doc))

    def test_non_unit_axis(self):
        doc = {"root": "base", "links": [link("base"), link("arm")],
               "joints": [revolute("j", "base", "arm", axis=(0, 0, 2))]}
        with pytest.raises(BadAxisError):
            parse_model(json.dumps(doc))

    def test_bad_inertia(self):
        bad = link("base")
        bad["inertia"] = {"xx": 1.0, "yy": 1.0, "zz": 3.0,
                          "xy": 0.0, "xz": 0.0, "yz": 0.0}  # violates triangle
        doc = {"root": "base", "links": [bad], "joints": []}
        with pytest.raises(BadInertiaError):
            parse_model(json.dumps(doc))

    def test_syntax_error_carries_location(self):
        with pytest.raises(ModelSyntaxError) as info:
            parse_model('{"root": "base",')
        assert "line" in str(info.value)

    def test_massless_model_rejected(self):
        doc = {"root": "base", "links": [link("base", mass=0.0)], "joints": []}
        with pytest.raises(BadInertiaError):
            parse_model(json.dumps(doc))

    def test_sixteen_joints_four_fixed(self):
        doc = chain_model(16, fixed_names=("j4", "j8", "j12", "j16"))
        model = parse_model(json.dumps(doc))
        assert len(model.joints) == 16
        assert model.n_q == 12


class TestLockJoints:
    def test_lock_twelve_of_thirtyone(self):
        model = parse_model(json.dumps(chain_model(31)))
        locked = lock_joints(model, [f"j{i}" for i in range(1, 13)])
        assert locked.n_q == 19

    def test_lock_none_is_noop(self):
        model = parse_model(json.dumps(chain_model(5)))
        assert content_hash(lock_joints(model, [])) == content_hash(model)

    def test_lock_all_still_valid(self):
        model = parse_model(json.dumps(chain_model(4)))
        locked = lock_joints(model, [f"j{i}" for i in range(1, 5)])
        assert locked.n_q == 0
        forward_kinematics(locked, Configuration(Pose.identity(), np.zeros(0)))

    def test_unknown_name(self):
        model = parse_model(json.dumps(chain_model(3)))
        with pytest.raises(UnknownJointError):
            lock_joints(model, ["nope"])

    def test_locked_kinematics_match_substitution(self):
        """FK of the locked model equals FK of the original at those values."""
        rng = np.random.default_rng(2)
        model = parse_model(json.dumps(chain_model(6)))
        values = {"j2": 0.4, "j5": -0.7}
        locked = lock_joints(model, list(values), values)
        q_locked = rng.uniform(-1, 1, locked.n_q)

        q_full = np.zeros(model.n_q)
        for joint in model.actuated_joints:
            if joint.name in values:
                q_full[model.q_index(joint.name)] = values[joint.name]
            else:
                q_full[model.q_index(joint.name)] = q_locked[
                    locked.q_index(joint.name)
                ]
        pose = Pose.identity()
        full = forward_kinematics(model, Configuration(pose, q_full))
        sub = forward_kinematics(locked, Configuration(pose, q_locked))
        for name in full:
            np.testing.assert_allclose(
                full[name].translation, sub[name].translation, atol=1e-12
            )
            np.testing.assert_allclose(
                full[name].orientation.rotation_matrix(),
                sub[name].orientation.rotation_matrix(),
                atol=1e-12,
            )


class TestMirror:
    def test_involution_on_biped(self):
        model = load_model(BIPED_PATH)
        rng = np.random.default_rng(3)
        for _ in range(20):
            q = random_configuration(rng, model, world_pose=False).q
            np.testing.assert_array_equal(
                mirror_configuration(model, mirror_configuration(model, q)), q
            )

    def test_mirror_without_metadata(self):
        model = parse_model(json.dumps(chain_model(2)))
        with pytest.raises(MirrorError):
            mirror_configuration(model, np.zeros(2))
        with pytest.raises(MirrorError):
            sample_configurations(model, 4, seed=0, mirror=True)

    def test_asymmetric_pair_limits_rejected(self):
        doc = chain_model(2)
        doc["joints"][0]["limits"] = [-0.5, 0.2]
        doc["joints"][1]["limits"] = [-0.5, 0.2]  # sign -1 needs [-0.2, 0.5]
        doc["mirror"] = {"pairs": [["j1", "j2", -1]]}
        with pytest.raises(MirrorError):
            parse_model(json.dumps(doc))

    def test_mirrored_samples_stay_in_limits(self):
        model = load_model(BIPED_PATH)
        limits = model.limits_array()
        for cfg in sample_configurations(model, 100, seed=9, mirror=True):
            assert np.all(cfg.q >= limits[:, 0] - 1e-12)
            assert np.all(cfg.q <= limits[:, 1] + 1e-12)


class TestSampling:
    def test_mirror_doubles_count(self):
        model = load_model(BIPED_PATH)
        assert len(sample_configurations(model, 1000, seed=0, mirror=True)) == 2000

    def test_degenerate_limits(self):
        doc = chain_model(2)
        for j in doc["joints"]:
            j["limits"] = [0.0, 0.0]
        model = parse_model(json.dumps(doc))
        (cfg,) = sample_configurations(model, 1, seed=5)
        np.testing.assert_array_equal(cfg.q, np.zeros(2))

    @given(st.integers(0, 2**32 - 1))
    def test_same_seed_bit_identical(self, seed):
        model = parse_model(json.dumps(chain_model(3)))
        a = sample_configurations(model, 5, seed=seed)
        b = sample_configurations(model, 5, seed=seed)
        for ca, cb in zip(a, b):
            np.testing.assert_array_equal(ca.q, cb.q)

    def test_limits_respected(self):
        rng = np.random.default_rng(4)
        model = random_tree(rng)
        limits = model.limits_array()
        for cfg in sample_configurations(model, 200, seed=1):
            assert np.all(cfg.q >= limits[:, 0])
            assert np.all(cfg.q <= limits[:, 1])


class TestContentHash:
    def test_stable_across_reparse(self):
        text = json.dumps(chain_model(4))
        assert content_hash(parse_model(text)) == content_hash(parse_model(text))

    def test_sensitive_to_mass(self):
        doc = chain_model(2)
        a = content_hash(parse_model(json.dumps(doc)))
        doc["links"][1]["mass"] = 2.5
        b = content_hash(parse_model(json.dumps(doc)))
        assert a != b


def test_biped_model_file():
    model = load_model(BIPED_PATH)
    assert model.n_q == 12
    assert model.mirror is not None
    assert len(model.links) == 13
    # sanity: the naive transform chain agrees on the shipped model too
    rng = np.random.default_rng(6)
    cfg = random_configuration(rng, model)
    frames = naive_fk(model, cfg)
    poses = forward_kinematics(model, cfg)
    for name in frames:
        np.testing.assert_allclose(
            poses[name].translation, frames[name][:3, 3], atol=1e-12
        )
