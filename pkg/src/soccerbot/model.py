"""Kinematic/dynamic model of the humanoid.

Loads a link/joint tree from a YAML model file, runs forward kinematics,
recursive Newton-Euler inverse dynamics and center-of-mass computation.
All joints are revolute; the trunk is the unactuated root. Angles are in
radians, lengths in meters, masses in kilograms.
"""

from __future__ import annotations

import importlib.resources
import math
from dataclasses import dataclass, field

import numpy as np
import yaml

from .geometry import make_tf, rot_axis, rot_rpy


class ModelError(Exception):
    """Model file failed validation; message names the offending element."""


@dataclass
class Link:
    name: str
    mass: float
    com: np.ndarray            # COM offset in link frame, m
    inertia: np.ndarray        # 3x3 inertia tensor about COM, kg m^2


@dataclass
class JointSpec:
    name: str
    parent: str
    child: str
    origin: np.ndarray         # fixed 4x4 transform parent -> joint frame
    axis: np.ndarray           # unit rotation axis in joint frame
    lower: float = -math.pi
    upper: float = math.pi
    velocity: float = 6.0      # rad/s
    acceleration: float = 50.0  # rad/s^2
    torque: float = 10.0       # N m


@dataclass
class JointStateVector:
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray
    tau: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "JointStateVector":
        return cls(np.zeros(n), np.zeros(n), np.zeros(n), np.zeros(n))

    def validate(self) -> None:
        n = len(self.q)
        for name in ("qdot", "qddot", "tau"):
            v = getattr(self, name)
            if len(v) != n:
                raise ModelError(f"JointStateVector: {name} length {len(v)} != {n}")
        for name in ("q", "qdot", "qddot", "tau"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ModelError(f"JointStateVector: non-finite {name}")


@dataclass
class RobotModel:
    name: str
    links: dict[str, Link]
    joints: list[JointSpec]
    root: str = ""
    children: dict[str, list[int]] = field(default_factory=dict)  # link -> joint idx

    @property
    def joint_count(self) -> int:
        return len(self.joints)

    @property
    def joint_names(self) -> list[str]:
        return [j.name for j in self.joints]

    def joint_index(self, name: str) -> int:
        for i, j in enumerate(self.joints):
            if j.name == name:
                return i
        raise ModelError(f"unknown joint {name!r}")

    def total_mass(self) -> float:
        return sum(l.mass for l in self.links.values())


def _as_vec(value, n, what) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.shape != (n,):
        raise ModelError(f"{what}: expected {n} numbers, got {value!r}")
    return v


def parse_model(tree: dict) -> RobotModel:
    if not isinstance(tree, dict) or "links" not in tree or "joints" not in tree:
        raise ModelError("model file must define 'links' and 'joints'")
    links: dict[str, Link] = {}
    for name, spec in tree["links"].items():
        mass = float(spec["mass"])
        if mass <= 0:
            raise ModelError(f"link {name}: nonpositive mass {mass}")
        com = _as_vec(spec.get("com", [0, 0, 0]), 3, f"link {name} com")
        ivals = spec.get("inertia", [1e-4, 1e-4, 1e-4, 0, 0, 0])
        iv = _as_vec(ivals, 6, f"link {name} inertia")
        inertia = np.array([[iv[0], iv[3], iv[4]],
                            [iv[3], iv[1], iv[5]],
                            [iv[4], iv[5], iv[2]]])
        links[name] = Link(name, mass, com, inertia)

    joints: list[JointSpec] = []
    seen = set()
    child_links = set()
    for spec in tree["joints"]:
        name = spec["name"]
        if name in seen:
            raise ModelError(f"joint {name}: duplicated joint name")
        seen.add(name)
        parent, child = spec["parent"], spec["child"]
        for link in (parent, child):
            if link not in links:
                raise ModelError(f"joint {name}: unknown link {link!r}")
        if child in child_links:
            raise ModelError(f"joint {name}: link {child} already has a parent")
        child_links.add(child)
        origin = spec.get("origin", {})
        xyz = _as_vec(origin.get("xyz", [0, 0, 0]), 3, f"joint {name} origin xyz")
        rpy = _as_vec(origin.get("rpy", [0, 0, 0]), 3, f"joint {name} origin rpy")
        axis = _as_vec(spec["axis"], 3, f"joint {name} axis")
        if abs(np.linalg.norm(axis) - 1.0) > 1e-9:
            raise ModelError(f"joint {name}: axis {axis} is not unit length")
        limits = spec.get("limits", {})
        lower = float(limits.get("lower", -math.pi))
        upper = float(limits.get("upper", math.pi))
        if lower >= upper:
            raise ModelError(f"joint {name}: lower limit {lower} >= upper {upper}")
        joints.append(JointSpec(
            name=name, parent=parent, child=child,
            origin=make_tf(rot_rpy(*rpy), xyz), axis=axis,
            lower=lower, upper=upper,
            velocity=float(limits.get("velocity", 6.0)),
            acceleration=float(limits.get("acceleration", 50.0)),
            torque=float(limits.get("torque", 10.0))))

    roots = [n for n in links if n not in child_links]
    if len(roots) != 1:
        raise ModelError(f"link tree must have exactly one root, found {roots}")
    root = roots[0]

    children: dict[str, list[int]] = {n: [] for n in links}
    for i, j in enumerate(joints):
        children[j.parent].append(i)

    # connectivity check (acyclicity is implied by unique parents + one root)
    reached = {root}
    stack = [root]
    while stack:
        link = stack.pop()
        for i in children[link]:
            reached.add(joints[i].child)
            stack.append(joints[i].child)
    unreached = set(links) - reached
    if unreached:
        raise ModelError(f"links not connected to root {root}: {sorted(unreached)}")

    return RobotModel(name=tree.get("name", "robot"), links=links,
                      joints=joints, root=root, children=children)


def load_model(filename) -> RobotModel:
    with open(filename, "r", encoding="utf-8") as f:
        try:
            tree = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ModelError(f"model file parse error: {e}") from None
    return parse_model(tree)


def default_model() -> RobotModel:
    """The 20-DOF humanoid model shipped with the package."""
    ref = importlib.resources.files("soccerbot.data").joinpath("robot_default.yaml")
    return parse_model(yaml.safe_load(ref.read_text(encoding="utf-8")))


# -- kinematics ---------------------------------------------------------


def joint_transform(joint: JointSpec, q: float) -> np.ndarray:
    """Transform parent link frame -> child link frame at joint angle q."""
    return joint.origin @ make_tf(rot_axis(joint.axis, q), np.zeros(3))


def forward_kinematics(model: RobotModel, q: np.ndarray,
                       base: np.ndarray | None = None) -> dict[str, np.ndarray]:
    """World 4x4 pose of every link; base is the trunk pose (default identity)."""
    q = np.asarray(q, dtype=float)
    if q.shape != (model.joint_count,):
        raise ModelError(
            f"forward_kinematics: expected {model.joint_count} angles, got {q.shape}")
    poses = {model.root: np.eye(4) if base is None else base}
    stack = [model.root]
    while stack:
        link = stack.pop()
        for i in model.children[link]:
            j = model.joints[i]
            poses[j.child] = poses[link] @ joint_transform(j, q[i])
            stack.append(j.child)
    return poses


def center_of_mass(model: RobotModel, q: np.ndarray,
                   base: np.ndarray | None = None) -> np.ndarray:
    poses = forward_kinematics(model, q, base)
    total = 0.0
    weighted = np.zeros(3)
    for name, link in model.links.items():
        T = poses[name]
        weighted += link.mass * (T[:3, :3] @ link.com + T[:3, 3])
        total += link.mass
    return weighted / total


# -- inverse dynamics ---------------------------------------------------


def inverse_dynamics(model: RobotModel, q, qdot, qddot,
                     gravity=(0.0, 0.0, -9.81)) -> np.ndarray:
    """Joint torques realizing qddot at state (q, qdot) under gravity.

    Recursive Newton-Euler: outward velocity/acceleration pass, inward
    force/torque pass. Gravity enters as a fictitious base acceleration.
    The trunk is a free unactuated base treated as fixed (no floating-base
    wrench is computed); torques are exact for the supported-trunk case.
    """
    n = model.joint_count
    q, qdot, qddot = (np.asarray(v, dtype=float) for v in (q, qdot, qddot))
    for name, v in (("q", q), ("qdot", qdot), ("qddot", qddot)):
        if v.shape != (n,):
            raise ModelError(f"inverse_dynamics: {name} has shape {v.shape}, "
                             f"expected ({n},)")
    gravity = np.asarray(gravity, dtype=float)

    # per-link spatial state, all in the link's own frame
    omega = {model.root: np.zeros(3)}
    alpha = {model.root: np.zeros(3)}
    accel = {model.root: -gravity}  # fictitious acceleration trick

    order: list[int] = []
    stack = [model.root]
    while stack:
        link = stack.pop()
        for i in model.children[link]:
            order.append(i)
            stack.append(model.joints[i].child)

    E = {}   # rotation parent -> child frame (applied as E @ parent_vec)
    r = {}   # child origin in parent frame
    for i in order:
        j = model.joints[i]
        X = joint_transform(j, q[i])
        E[i] = X[:3, :3].T
        r[i] = X[:3, 3]
        a = j.axis
        w_p, al_p, ac_p = omega[j.parent], alpha[j.parent], accel[j.parent]
        w = E[i] @ w_p + a * qdot[i]
        al = E[i] @ al_p + a * qddot[i] + np.cross(E[i] @ w_p, a * qdot[i])
        ac = E[i] @ (ac_p + np.cross(al_p, r[i]) + np.cross(w_p, np.cross(w_p, r[i])))
        omega[j.child], alpha[j.child], accel[j.child] = w, al, ac

    # inward pass: net force/torque per link, then joint torques
    f = {name: np.zeros(3) for name in model.links}
    nt = {name: np.zeros(3) for name in model.links}
    tau = np.zeros(n)
    for i in reversed(order):
        j = model.joints[i]
        link = model.links[j.child]
        w, al, ac = omega[j.child], alpha[j.child], accel[j.child]
        c = link.com
        a_com = ac + np.cross(al, c) + np.cross(w, np.cross(w, c))
        F = link.mass * a_com
        N = link.inertia @ al + np.cross(w, link.inertia @ w)
        f_child = F + f[j.child]
        n_child = N + np.cross(c, F) + nt[j.child]
        tau[i] = j.axis @ n_child
        # accumulate into parent (rotate child-frame wrench into parent frame)
        f[j.parent] = f[j.parent] + E[i].T @ f_child
        nt[j.parent] = nt[j.parent] + E[i].T @ n_child + np.cross(r[i], E[i].T @ f_child)
    return tau
