#!/usr/bin/env python3
"""Regenerates the skeleton and correspondence fixtures in this directory.

Conventions: meters, right-handed, +Y up, characters face +Z, their left is
+X. Every zero pose is a T-pose. The robot skeletons are simplified
approximations of the Unitree H1 (19 DoF) and G1 (21 DoF) kinematic layouts;
link lengths and limits are illustrative, not vendor data.
"""

import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent

X = [1.0, 0.0, 0.0]
Y = [0.0, 1.0, 0.0]
Z = [0.0, 0.0, 1.0]


def joint(name, parent, offset, dof="fixed", axis=None, limits=None):
    j = {"name": name, "offset": [float(c) for c in offset], "dof": dof}
    if parent is not None:
        j["parent"] = parent
    if axis is not None:
        j["axis"] = [float(c) for c in axis]
    if limits is not None:
        j["limits"] = [[float(lo), float(hi)] for lo, hi in limits]
    return j


def marker(name, joint_name, offset):
    return {"name": name, "joint": joint_name, "offset": [float(c) for c in offset]}


def skeleton(name, joints, markers=()):
    doc = {"format": "retarget_kit.skeleton", "version": 1, "name": name, "joints": joints}
    if markers:
        doc["markers"] = list(markers)
    return doc


def human24():
    j = [joint("pelvis", None, [0, 0, 0])]

    def sph(name, parent, offset):
        j.append(joint(name, parent, offset, "spherical"))

    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_hip", "pelvis", [s * 0.06, -0.09, 0.0])
    sph("spine1", "pelvis", [0.0, 0.11, -0.02])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_knee", f"{side}_hip", [s * 0.04, -0.38, 0.0])
    sph("spine2", "spine1", [0.0, 0.13, 0.01])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_ankle", f"{side}_knee", [s * -0.01, -0.40, -0.04])
    sph("spine3", "spine2", [0.0, 0.05, 0.0])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_foot", f"{side}_ankle", [s * 0.02, -0.06, 0.12])
    sph("neck", "spine3", [0.0, 0.21, -0.03])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_collar", "spine3", [s * 0.07, 0.11, -0.01])
    sph("head", "neck", [0.0, 0.09, 0.05])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_shoulder", f"{side}_collar", [s * 0.12, 0.03, -0.01])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_elbow", f"{side}_shoulder", [s * 0.26, 0.0, 0.0])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_wrist", f"{side}_elbow", [s * 0.25, 0.0, 0.0])
    for side, s in (("left", 1.0), ("right", -1.0)):
        sph(f"{side}_hand", f"{side}_wrist", [s * 0.08, 0.0, 0.0])
    assert len(j) == 24
    return skeleton("human24", j)


def h1():
    j = [joint("pelvis", None, [0, 0, 0])]
    for side, s in (("left", 1.0), ("right", -1.0)):
        j += [
            joint(f"{side}_hip_yaw", "pelvis", [s * 0.09, -0.06, 0.0], "revolute", Y, [(-0.43, 0.43)]),
            joint(f"{side}_hip_roll", f"{side}_hip_yaw", [0.0, -0.04, 0.0], "revolute", Z, [(-0.43, 0.43)]),
            joint(f"{side}_hip_pitch", f"{side}_hip_roll", [0.0, 0.0, 0.0], "revolute", X, [(-3.14, 2.53)]),
            joint(f"{side}_knee", f"{side}_hip_pitch", [0.0, -0.40, 0.0], "revolute", X, [(-0.26, 2.05)]),
            joint(f"{side}_ankle", f"{side}_knee", [0.0, -0.40, 0.0], "revolute", X, [(-0.87, 0.52)]),
        ]
    j.append(joint("torso", "pelvis", [0.0, 0.0, 0.0], "revolute", Y, [(-2.35, 2.35)]))
    for side, s in (("left", 1.0), ("right", -1.0)):
        roll = (-2.0, 1.5) if s > 0 else (-1.5, 2.0)
        elbow_axis = [0.0, -s, 0.0]
        j += [
            joint(f"{side}_shoulder_pitch", "torso", [s * 0.155, 0.43, 0.0], "revolute", X, [(-2.87, 2.87)]),
            joint(f"{side}_shoulder_roll", f"{side}_shoulder_pitch", [s * 0.02, 0.0, 0.0], "revolute", Z, [roll]),
            joint(f"{side}_shoulder_yaw", f"{side}_shoulder_roll", [0.0, 0.0, 0.0], "revolute", X, [(-2.0, 2.0)]),
            joint(f"{side}_elbow", f"{side}_shoulder_yaw", [s * 0.30, 0.0, 0.0], "revolute", elbow_axis,
                  [(-1.25, 2.61)]),
        ]
    markers = []
    for side, s in (("left", 1.0), ("right", -1.0)):
        markers += [
            marker(f"{side}_toe", f"{side}_ankle", [0.0, -0.07, 0.14]),
            marker(f"{side}_wrist", f"{side}_elbow", [s * 0.28, 0.0, 0.0]),
        ]
    markers.append(marker("head", "torso", [0.0, 0.65, 0.0]))
    return skeleton("h1", j, markers)


def g1():
    j = [joint("pelvis", None, [0, 0, 0])]
    for side, s in (("left", 1.0), ("right", -1.0)):
        roll = (-0.52, 2.97) if s > 0 else (-2.97, 0.52)
        j += [
            joint(f"{side}_hip_pitch", "pelvis", [s * 0.064, -0.10, 0.0], "revolute", X, [(-2.53, 2.88)]),
            joint(f"{side}_hip_roll", f"{side}_hip_pitch", [0.0, -0.05, 0.0], "revolute", Z, [roll]),
            joint(f"{side}_hip_yaw", f"{side}_hip_roll", [0.0, -0.08, 0.0], "revolute", Y, [(-2.76, 2.76)]),
            joint(f"{side}_knee", f"{side}_hip_yaw", [0.0, -0.17, 0.0], "revolute", X, [(-0.087, 2.88)]),
            joint(f"{side}_ankle_pitch", f"{side}_knee", [0.0, -0.30, 0.0], "revolute", X, [(-0.87, 0.52)]),
            joint(f"{side}_ankle_roll", f"{side}_ankle_pitch", [0.0, 0.0, 0.0], "revolute", Z, [(-0.26, 0.26)]),
        ]
    j.append(joint("waist_yaw", "pelvis", [0.0, 0.0, 0.0], "revolute", Y, [(-2.62, 2.62)]))
    for side, s in (("left", 1.0), ("right", -1.0)):
        roll = (-1.59, 2.25) if s > 0 else (-2.25, 1.59)
        elbow_axis = [0.0, -s, 0.0]
        j += [
            joint(f"{side}_shoulder_pitch", "waist_yaw", [s * 0.10, 0.30, 0.0], "revolute", X, [(-3.09, 2.67)]),
            joint(f"{side}_shoulder_roll", f"{side}_shoulder_pitch", [0.0, 0.0, 0.0], "revolute", Z, [roll]),
            joint(f"{side}_shoulder_yaw", f"{side}_shoulder_roll", [s * 0.08, 0.0, 0.0], "revolute", X,
                  [(-2.62, 2.62)]),
            joint(f"{side}_elbow", f"{side}_shoulder_yaw", [s * 0.10, 0.0, 0.0], "revolute", elbow_axis,
                  [(-1.05, 2.09)]),
        ]
    markers = []
    for side, s in (("left", 1.0), ("right", -1.0)):
        markers += [
            marker(f"{side}_toe", f"{side}_ankle_roll", [0.0, -0.04, 0.10]),
            marker(f"{side}_wrist", f"{side}_elbow", [s * 0.19, 0.0, 0.0]),
        ]
    markers.append(marker("head", "waist_yaw", [0.0, 0.45, 0.0]))
    return skeleton("g1", j, markers)


def robot_map(names, chain):
    pairs = [{"human": h, "robot": r} for h, r in names]
    return {
        "format": "retarget_kit.map",
        "version": 1,
        "pairs": pairs,
        "leg_chain": {
            "human_hip": "left_hip",
            "human_ankle": "left_ankle",
            "robot_hip": chain[0],
            "robot_ankle": chain[1],
        },
    }


def h1_map():
    names = [("pelvis", "pelvis"), ("head", "head")]
    for side in ("left", "right"):
        names += [
            (f"{side}_hip", f"{side}_hip_pitch"),
            (f"{side}_knee", f"{side}_knee"),
            (f"{side}_ankle", f"{side}_ankle"),
            (f"{side}_foot", f"{side}_toe"),
            (f"{side}_shoulder", f"{side}_shoulder_pitch"),
            (f"{side}_elbow", f"{side}_elbow"),
            (f"{side}_wrist", f"{side}_wrist"),
        ]
    return robot_map(names, ("left_hip_yaw", "left_ankle"))


def g1_map():
    names = [("pelvis", "pelvis"), ("head", "head")]
    for side in ("left", "right"):
        names += [
            (f"{side}_hip", f"{side}_hip_pitch"),
            (f"{side}_knee", f"{side}_knee"),
            (f"{side}_ankle", f"{side}_ankle_pitch"),
            (f"{side}_foot", f"{side}_toe"),
            (f"{side}_shoulder", f"{side}_shoulder_pitch"),
            (f"{side}_elbow", f"{side}_elbow"),
            (f"{side}_wrist", f"{side}_wrist"),
        ]
    return robot_map(names, ("left_hip_pitch", "left_ankle_pitch"))


def identity_map(skel):
    # Orientation terms on every joint pin down the twist the positions
    # cannot see; regularizers off so the exact solution is the optimum.
    pairs = [
        {"human": j["name"], "robot": j["name"], "position_weight": 1.0, "orientation_weight": 1.0}
        for j in skel["joints"]
    ]
    return {
        "format": "retarget_kit.map",
        "version": 1,
        "pairs": pairs,
        "scale": 1.0,
        "options": {"joint_limit_weight": 0.0, "smoothness_weight": 0.0, "reference_weight": 0.0},
    }


def dump(value, indent=0):
    """Same layout as the library's canonical writer."""
    pad = " " * (indent + 2)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dump(value[k], indent + 2)}" for k in sorted(value)]
        return "{\n" + ",\n".join(items) + "\n" + " " * indent + "}"
    if isinstance(value, list):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in value):
            return "[" + ", ".join(json.dumps(v) for v in value) + "]"
        return "[\n" + ",\n".join(pad + dump(v, indent + 2) for v in value) + "\n" + " " * indent + "]"
    return json.dumps(value)


def write(path, doc):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump(doc) + "\n")


def main():
    human = human24()
    write(HERE / "skeletons" / "human24.skel", human)
    write(HERE / "skeletons" / "h1.skel", h1())
    write(HERE / "skeletons" / "g1.skel", g1())
    write(HERE / "maps" / "human24_identity.map", identity_map(human))
    write(HERE / "maps" / "h1.map", h1_map())
    write(HERE / "maps" / "g1.map", g1_map())
    dofs = {name: sum(1 for j in sk()["joints"] if j["dof"] == "revolute") for name, sk in (("h1", h1), ("g1", g1))}
    assert dofs == {"h1": 19, "g1": 21}, dofs


if __name__ == "__main__":
    main()
