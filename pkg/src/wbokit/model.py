"""Kinematic tree models: parsing, validation, joint locking, and sampling.

Models are UTF-8 JSON with top-level keys ``links``, ``joints``, ``root``,
and optionally ``mirror``:

* each link has ``name``, ``mass``, ``com`` (3-vector), and ``inertia``
  given by its six unique entries ``xx, yy, zz, xy, xz, yz`` about the CoM;
* each joint has ``name``, ``parent``, ``child``, ``kind`` (``revolute``,
  ``prismatic``, or ``fixed``), a unit ``axis`` in the joint frame, an
  optional ``origin`` (``translation`` plus scalar-first ``orientation``
  quaternion, default identity), explicit ``limits`` ``[lo, hi]`` for
  non-fixed joints, and an optional ``neutral`` value used when locking;
* ``mirror`` lists sagittal symmetry as ``pairs`` ``[left, right, sign]``
  plus ``self`` entries ``[name, sign]`` for joints on the symmetry plane.

Joint coordinates are ordered by declaration order of the non-fixed joints.
Parsed models are immutable; ``lock_joints`` returns a new model.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadAxisError,
    BadInertiaError,
    ContractViolationError,
    CycleError,
    MirrorError,
    ModelSchemaError,
    ModelSyntaxError,
    UnknownJointError,
    UnknownLinkError,
)
from .spatial import Pose, SpatialInertia, UnitQuaternion

__all__ = [
    "Joint",
    "MirrorTable",
    "RobotModel",
    "Configuration",
    "parse_model",
    "load_model",
    "lock_joints",
    "sample_configurations",
    "mirror_configuration",
    "canonical_dict",
    "content_hash",
]

JOINT_KINDS = ("revolute", "prismatic", "fixed")


@dataclass(frozen=True, eq=False)
class Joint:
    name: str
    parent: str
    child: str
    kind: str
    axis: np.ndarray | None
    origin: Pose
    limits: tuple[float, float] | None
    neutral: float = 0.0

    def __post_init__(self):
        if self.kind not in JOINT_KINDS:
            raise ModelSchemaError(
                f"joint {self.name!r}: kind must be one of {JOINT_KINDS}, "
                f"got {self.kind!r}"
            )
        if self.kind == "fixed":
            object.__setattr__(self, "axis", None)
            object.__setattr__(self, "limits", None)
            return
        if self.axis is None:
            raise BadAxisError(f"joint {self.name!r}: non-fixed joints need an axis")
        axis = np.array(self.axis, dtype=float).reshape(3)
        norm = np.linalg.norm(axis)
        if abs(norm - 1.0) > 1e-9:
            raise BadAxisError(
                f"joint {self.name!r}: axis norm is {norm!r}, must be 1 within 1e-9"
            )
        axis = axis / norm
        axis.setflags(write=False)
        object.__setattr__(self, "axis", axis)
        if self.limits is None:
            raise ModelSchemaError(
                f"joint {self.name!r}: non-fixed joints need explicit limits"
            )
        lo, hi = (float(self.limits[0]), float(self.limits[1]))
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo > hi:
            raise ModelSchemaError(f"joint {self.name!r}: bad limits [{lo}, {hi}]")
        object.__setattr__(self, "limits", (lo, hi))
        object.__setattr__(self, "neutral", float(self.neutral))

    def motion(self, value):
        """Pose of the outboard frame for a joint coordinate value."""
        if self.kind == "revolute":
            return Pose(UnitQuaternion.from_axis_angle(self.axis, value), np.zeros(3))
        if self.kind == "prismatic":
            return Pose(UnitQuaternion.identity(), self.axis * float(value))
        return Pose.identity()


@dataclass(frozen=True, eq=False)
class MirrorTable:
    """Sagittal symmetry: swapped joint pairs and sign-flipped self joints."""

    pairs: tuple[tuple[str, str, float], ...] = ()
    self_signed: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True, eq=False)
class Configuration:
    """Base pose plus joint coordinates in declaration order."""

    base_pose: Pose
    q: np.ndarray

    def __post_init__(self):
        arr = np.array(self.q, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "q", arr)


@dataclass(frozen=True, eq=False)
class RobotModel:
    links: tuple[tuple[str, SpatialInertia], ...]
    joints: tuple[Joint, ...]
    root: str
    mirror: MirrorTable | None = None

    def __post_init__(self):
        object.__setattr__(self, "links", tuple(self.links))
        object.__setattr__(self, "joints", tuple(self.joints))
        self._validate()
        # Joints in parent-before-child order for single-pass propagation.
        order = []
        seen = {self.root}
        pending = list(self.joints)
        while pending:
            progressed = False
            rest = []
            for joint in pending:
                if joint.parent in seen:
                    order.append(joint)
                    seen.add(joint.child)
                    progressed = True
                else:
                    rest.append(joint)
            pending = rest
            if not progressed:
                raise CycleError(
                    "joints form a loop or reference an unreachable subtree: "
                    + ", ".join(sorted(j.name for j in pending))
                )
        object.__setattr__(self, "_topo", tuple(order))
        actuated = tuple(j for j in self.joints if j.kind != "fixed")
        object.__setattr__(self, "_actuated", actuated)
        object.__setattr__(
            self, "_q_index", {j.name: i for i, j in enumerate(actuated)}
        )
        children = {name: [] for name, _ in self.links}
        for joint in self.joints:
            children[joint.parent].append(joint)
        object.__setattr__(self, "_children", children)
        subtrees = {}
        for joint in reversed(self._topo):
            names = [joint.child]
            for sub in children[joint.child]:
                names.extend(subtrees[sub.name])
            subtrees[joint.name] = tuple(names)
        object.__setattr__(self, "_subtree", subtrees)

    def _validate(self):
        if not self.links:
            raise ModelSchemaError("model has no links")
        names = [name for name, _ in self.links]
        if len(set(names)) != len(names):
            raise ModelSchemaError("duplicate link names")
        if self.root not in names:
            raise UnknownLinkError(f"root link {self.root!r} is not defined")
        jnames = [j.name for j in self.joints]
        if len(set(jnames)) != len(jnames):
            raise ModelSchemaError("duplicate joint names")
        link_set = set(names)
        parents = {}
        for joint in self.joints:
            for end, role in ((joint.parent, "parent"), (joint.child, "child")):
                if end not in link_set:
                    raise UnknownLinkError(
                        f"joint {joint.name!r} references unknown {role} link {end!r}"
                    )
            if joint.child == self.root:
                raise CycleError(f"joint {joint.name!r} makes the root a child")
            if joint.child in parents:
                raise CycleError(
                    f"link {joint.child!r} has two parent joints "
                    f"({parents[joint.child]!r} and {joint.name!r})"
                )
            parents[joint.child] = joint.name
        floating = link_set - {self.root} - set(parents)
        if floating:
            raise CycleError(
                "links not connected to the root: " + ", ".join(sorted(floating))
            )
        if sum(inertia.mass for _, inertia in self.links) <= 0.0:
            raise BadInertiaError("total model mass must be positive")
        if self.mirror is not None:
            self._validate_mirror()

    def _validate_mirror(self):
        limits = {j.name: j.limits for j in self.joints if j.kind != "fixed"}
        used = set()

        def claim(name):
            if name not in limits:
                raise MirrorError(f"mirror references unknown or fixed joint {name!r}")
            if name in used:
                raise MirrorError(f"joint {name!r} appears twice in mirror metadata")
            used.add(name)

        def check_range(name_a, name_b, sign):
            lo_b, hi_b = limits[name_b]
            expect = (sign * hi_b, sign * lo_b) if sign < 0 else (lo_b, hi_b)
            lo_a, hi_a = limits[name_a]
            if not np.allclose((lo_a, hi_a), expect, rtol=0.0, atol=1e-12):
                raise MirrorError(
                    f"mirror pair {name_a!r}/{name_b!r} with sign {sign} needs "
                    "matching limits so mirrored samples stay in range"
                )

        for a, b, sign in self.mirror.pairs:
            if sign not in (-1.0, 1.0):
                raise MirrorError(f"mirror sign must be +-1, got {sign!r}")
            claim(a)
            claim(b)
            check_range(a, b, sign)
            check_range(b, a, sign)
        for name, sign in self.mirror.self_signed:
            if sign not in (-1.0, 1.0):
                raise MirrorError(f"mirror sign must be +-1, got {sign!r}")
            claim(name)
            if sign < 0:
                check_range(name, name, sign)

    @property
    def n_q(self):
        return len(self._actuated)

    @property
    def actuated_joints(self):
        return self._actuated

    @property
    def topological_joints(self):
        return self._topo

    def q_index(self, joint_name):
        try:
            return self._q_index[joint_name]
        except KeyError:
            raise UnknownJointError(
                f"no non-fixed joint named {joint_name!r}"
            ) from None

    def children_of(self, link_name):
        return tuple(self._children[link_name])

    def subtree_links(self, joint_name):
        """Names of every link at or below the joint's child."""
        return self._subtree[joint_name]

    def inertia_of(self, link_name):
        for name, inertia in self.links:
            if name == link_name:
                return inertia
        raise UnknownLinkError(f"no link named {link_name!r}")

    def joint(self, name):
        for joint in self.joints:
            if joint.name == name:
                return joint
        raise UnknownJointError(f"no joint named {name!r}")

    def limits_array(self):
        """(n_q, 2) array of [lo, hi] rows in joint order."""
        return np.array([j.limits for j in self._actuated], dtype=float).reshape(
            -1, 2
        )


def _require(mapping, key, context):
    if key not in mapping:
        raise ModelSchemaError(f"{context}: missing required field {key!r}")
    return mapping[key]


def _parse_inertia(entry, link_name):
    context = f"link {link_name!r}"
    if not isinstance(entry, dict):
        raise ModelSchemaError(f"{context}: inertia must be an object")
    vals = {}
    for key in ("xx", "yy", "zz", "xy", "xz", "yz"):
        vals[key] = float(_require(entry, key, f"{context} inertia"))
    return np.array(
        [
            [vals["xx"], vals["xy"], vals["xz"]],
            [vals["xy"], vals["yy"], vals["yz"]],
            [vals["xz"], vals["yz"], vals["zz"]],
        ]
    )


def _parse_origin(entry, joint_name):
    if entry is None:
        return Pose.identity()
    if not isinstance(entry, dict):
        raise ModelSchemaError(f"joint {joint_name!r}: origin must be an object")
    translation = np.asarray(entry.get("translation", (0.0, 0.0, 0.0)), dtype=float)
    orientation = entry.get("orientation", (1.0, 0.0, 0.0, 0.0))
    try:
        quat = UnitQuaternion(np.asarray(orientation, dtype=float))
    except (ValueError, ContractViolationError) as exc:
        raise ModelSchemaError(f"joint {joint_name!r}: bad origin orientation") from exc
    if translation.shape != (3,):
        raise ModelSchemaError(f"joint {joint_name!r}: origin translation must be 3D")
    return Pose(quat, translation)


def parse_model(text):
    """Parse and validate a model from JSON text (str or UTF-8 bytes)."""
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelSyntaxError(
            f"model is not valid JSON at line {exc.lineno}, column {exc.colno}: "
            f"{exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc
    if not isinstance(doc, dict):
        raise ModelSchemaError("model document must be a JSON object")
    root = _require(doc, "root", "model")
    links = []
    for entry in _require(doc, "links", "model"):
        name = _require(entry, "name", "link")
        try:
            inertia = SpatialInertia(
                float(_require(entry, "mass", f"link {name!r}")),
                np.asarray(_require(entry, "com", f"link {name!r}"), dtype=float),
                _parse_inertia(_require(entry, "inertia", f"link {name!r}"), name),
            )
        except ContractViolationError as exc:
            raise BadInertiaError(f"link {name!r}: {exc}") from exc
        links.append((str(name), inertia))
    joints = []
    for entry in _require(doc, "joints", "model"):
        name = str(_require(entry, "name", "joint"))
        kind = str(_require(entry, "kind", f"joint {name!r}"))
        axis = entry.get("axis")
        limits = entry.get("limits")
        joints.append(
            Joint(
                name=name,
                parent=str(_require(entry, "parent", f"joint {name!r}")),
                child=str(_require(entry, "child", f"joint {name!r}")),
                kind=kind,
                axis=None if axis is None else np.asarray(axis, dtype=float),
                origin=_parse_origin(entry.get("origin"), name),
                limits=None if limits is None else (limits[0], limits[1]),
                neutral=float(entry.get("neutral", 0.0)),
            )
        )
    mirror = None
    if "mirror" in doc and doc["mirror"] is not None:
        entry = doc["mirror"]
        if not isinstance(entry, dict):
            raise ModelSchemaError("mirror must be an object")
        mirror = MirrorTable(
            pairs=tuple(
                (str(a), str(b), float(s)) for a, b, s in entry.get("pairs", ())
            ),
            self_signed=tuple(
                (str(n), float(s)) for n, s in entry.get("self", ())
            ),
        )
    return RobotModel(tuple(links), tuple(joints), str(root), mirror)


def load_model(path):
    with open(path, "rb") as handle:
        return parse_model(handle.read())


def lock_joints(model, names, values=None):
    """Convert the named joints to fixed at their neutral (or given) value.

    Returns a new model whose forward kinematics match the original with the
    locked coordinates substituted.  Mirror entries touching a locked joint
    are dropped.
    """
    names = list(names)
    values = dict(values or {})
    for name in names:
        joint = model.joint(name)
        if joint.kind == "fixed":
            raise UnknownJointError(f"joint {name!r} is already fixed")
    unknown_values = set(values) - set(names)
    if unknown_values:
        raise UnknownJointError(
            "lock values given for joints not being locked: "
            + ", ".join(sorted(unknown_values))
        )
    locked = set(names)
    new_joints = []
    for joint in model.joints:
        if joint.name not in locked:
            new_joints.append(joint)
            continue
        value = values.get(joint.name, joint.neutral)
        new_joints.append(
            Joint(
                name=joint.name,
                parent=joint.parent,
                child=joint.child,
                kind="fixed",
                axis=None,
                origin=joint.origin.compose(joint.motion(value)),
                limits=None,
            )
        )
    mirror = model.mirror
    if mirror is not None:
        pairs = tuple(
            p for p in mirror.pairs if p[0] not in locked and p[1] not in locked
        )
        self_signed = tuple(s for s in mirror.self_signed if s[0] not in locked)
        mirror = MirrorTable(pairs, self_signed) if (pairs or self_signed) else None
    return RobotModel(model.links, tuple(new_joints), model.root, mirror)


def mirror_configuration(model, q):
    """Reflect joint coordinates through the sagittal plane."""
    if model.mirror is None:
        raise MirrorError("model carries no mirror metadata")
    q = np.asarray(q, dtype=float)
    if q.shape != (model.n_q,):
        raise ContractViolationError(
            f"expected {model.n_q} joint values, got shape {q.shape}"
        )
    out = q.copy()
    for a, b, sign in model.mirror.pairs:
        ia, ib = model.q_index(a), model.q_index(b)
        out[ia] = sign * q[ib]
        out[ib] = sign * q[ia]
    for name, sign in model.mirror.self_signed:
        idx = model.q_index(name)
        out[idx] = sign * q[idx]
    return out


def sample_configurations(model, n, seed, mirror=False):
    """Draw n i.i.d. uniform configurations within the joint limits.

    The stream is a PCG64 generator seeded with ``seed``; each base sample
    consumes one block of n_q uniform draws in joint declaration order, so
    the sequence is reproducible across platforms.  With ``mirror`` each base
    sample is followed by its sagittal reflection (derived, no extra draws),
    doubling the output length to 2n.  Base poses are identity.
    """
    if n < 1:
        raise ContractViolationError(f"need at least one sample, got n={n}")
    if mirror and model.mirror is None:
        raise MirrorError("mirrored sampling requested but model has no mirror data")
    limits = model.limits_array()
    lo, span = limits[:, 0], limits[:, 1] - limits[:, 0]
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    identity = Pose.identity()
    for _ in range(n):
        q = lo + span * rng.random(model.n_q)
        out.append(Configuration(identity, q))
        if mirror:
            out.append(Configuration(identity, mirror_configuration(model, q)))
    return out


def canonical_dict(model):
    """Deterministic JSON-ready form of a model, for hashing and demos."""
    links = []
    for name, inertia in model.links:
        m = inertia.inertia
        links.append(
            {
                "name": name,
                "mass": float(inertia.mass),
                "com": [float(v) for v in inertia.com],
                "inertia": {
                    "xx": float(m[0, 0]),
                    "yy": float(m[1, 1]),
                    "zz": float(m[2, 2]),
                    "xy": float(m[0, 1]),
                    "xz": float(m[0, 2]),
                    "yz": float(m[1, 2]),
                },
            }
        )
    joints = []
    for joint in model.joints:
        entry = {
            "name": joint.name,
            "parent": joint.parent,
            "child": joint.child,
            "kind": joint.kind,
            "origin": {
                "translation": [float(v) for v in joint.origin.translation],
                "orientation": [float(v) for v in joint.origin.orientation.wxyz],
            },
        }
        if joint.kind != "fixed":
            entry["axis"] = [float(v) for v in joint.axis]
            entry["limits"] = [float(joint.limits[0]), float(joint.limits[1])]
            entry["neutral"] = float(joint.neutral)
        joints.append(entry)
    doc = {"root": model.root, "links": links, "joints": joints}
    if model.mirror is not None:
        doc["mirror"] = {
            "pairs": [[a, b, float(s)] for a, b, s in model.mirror.pairs],
            "self": [[n, float(s)] for n, s in model.mirror.self_signed],
        }
    return doc


def content_hash(model):
    """sha256 over the canonical form; stable across file formatting."""
    payload = json.dumps(canonical_dict(model), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(payload.encode("utf-8")).hexdigest()
