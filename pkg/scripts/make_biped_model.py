#!/usr/bin/env python3
"""Generate the synthetic 12-DoF biped model used by demos and tests.

The proportions are loosely humanoid-robot scale (a 28 kg pelvis-plus-
two-legs machine) but every number here is invented; the point is a
mirrored floating-base tree big enough to exercise the full pipeline:
12 revolute joints, degree-3 basis of 454 terms, left/right mirror
metadata with both sign conventions.

Joint ranges are kept modest on purpose.  The fitted quaternion must
hold its scalar part above 0.5, and wide hip ranges would push the
base-relative whole-body rotation toward that floor.

Run from the repository root:

    python scripts/make_biped_model.py [--out models/biped12.json]
"""

import argparse
import json
import os


def box_inertia(mass, dx, dy, dz):
    return {
        "xx": mass / 12.0 * (dy * dy + dz * dz),
        "yy": mass / 12.0 * (dx * dx + dz * dz),
        "zz": mass / 12.0 * (dx * dx + dy * dy),
        "xy": 0.0,
        "xz": 0.0,
        "yz": 0.0,
    }


def link(name, mass, com, dims):
    return {"name": name, "mass": mass, "com": list(com),
            "inertia": box_inertia(mass, *dims)}


def leg(side, sign):
    """Six joints: hip roll/yaw/pitch, knee, ankle, toe. sign: +1 left."""
    s = side
    links = [
        link(f"{s}_hip_roll_link", 1.5, (0.0, 0.0, -0.03), (0.10, 0.10, 0.10)),
        link(f"{s}_hip_yaw_link", 1.2, (0.0, 0.0, -0.04), (0.09, 0.09, 0.10)),
        link(f"{s}_thigh", 3.0, (0.01, 0.0, -0.18), (0.10, 0.10, 0.40)),
        link(f"{s}_shank", 2.0, (0.0, 0.0, -0.17), (0.08, 0.08, 0.40)),
        link(f"{s}_tarsus", 0.8, (0.03, 0.0, -0.05), (0.06, 0.06, 0.14)),
        link(f"{s}_foot", 0.4, (0.05, 0.0, -0.02), (0.16, 0.06, 0.04)),
    ]
    joints = [
        {"name": f"{s}_hip_roll", "kind": "revolute",
         "parent": "pelvis", "child": f"{s}_hip_roll_link",
         "axis": [1.0, 0.0, 0.0],
         "origin": {"translation": [0.0, sign * 0.12, -0.05]},
         "limits": [-0.35, 0.35]},
        {"name": f"{s}_hip_yaw", "kind": "revolute",
         "parent": f"{s}_hip_roll_link", "child": f"{s}_hip_yaw_link",
         "axis": [0.0, 0.0, 1.0],
         "origin": {"translation": [0.0, 0.0, -0.06]},
         "limits": [-0.3, 0.3]},
        {"name": f"{s}_hip_pitch", "kind": "revolute",
         "parent": f"{s}_hip_yaw_link", "child": f"{s}_thigh",
         "axis": [0.0, 1.0, 0.0],
         "origin": {"translation": [0.02, 0.0, -0.04]},
         "limits": [-0.8, 0.6]},
        {"name": f"{s}_knee", "kind": "revolute",
         "parent": f"{s}_thigh", "child": f"{s}_shank",
         "axis": [0.0, 1.0, 0.0],
         "origin": {"translation": [0.0, 0.0, -0.40]},
         "limits": [-1.2, 0.2]},
        {"name": f"{s}_ankle", "kind": "revolute",
         "parent": f"{s}_shank", "child": f"{s}_tarsus",
         "axis": [0.0, 1.0, 0.0],
         "origin": {"translation": [0.0, 0.0, -0.40]},
         "limits": [-0.6, 0.8]},
        {"name": f"{s}_toe", "kind": "revolute",
         "parent": f"{s}_tarsus", "child": f"{s}_foot",
         "axis": [0.0, 1.0, 0.0],
         "origin": {"translation": [0.10, 0.0, -0.05]},
         "limits": [-0.7, 0.7]},
    ]
    return links, joints


def biped_dict():
    pelvis = link("pelvis", 10.0, (-0.02, 0.0, 0.05), (0.25, 0.30, 0.20))
    left_links, left_joints = leg("left", +1)
    right_links, right_joints = leg("right", -1)
    return {
        "root": "pelvis",
        "links": [pelvis] + left_links + right_links,
        "joints": left_joints + right_joints,
        "mirror": {
            # roll and yaw flip sign across the sagittal plane
            "pairs": [
                ["left_hip_roll", "right_hip_roll", -1],
                ["left_hip_yaw", "right_hip_yaw", -1],
                ["left_hip_pitch", "right_hip_pitch", 1],
                ["left_knee", "right_knee", 1],
                ["left_ankle", "right_ankle", 1],
                ["left_toe", "right_toe", 1],
            ],
            "self": [],
        },
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="models/biped12.json")
    args = parser.parse_args()
    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as handle:
        json.dump(biped_dict(), handle, indent=2)
        handle.write("\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
