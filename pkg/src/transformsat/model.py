"""Rigid multibody tree of flat panels connected by single-axis hinges.

Body 0 is the main body; its CoM is the origin of the body frame in which
every kinematic quantity below is expressed. Joint ``k`` connects body ``k``
to its inner neighbour, and the outer group of joint ``k`` is the subtree
rooted at body ``k``. Child-local frames coincide with the parent-local frame
when the joint angle is zero.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

from .attitude import skew

_UNIT_TOL = 1e-12
_OPTICS_TOL = 1e-12

# Optical coefficient triples (specular, diffuse, absorbed).
MATERIALS: dict[str, tuple[float, float, float]] = {
    "MLI": (0.375, 0.255, 0.370),
    "SAP": (0.086, 0.060, 0.854),
    "Mirror": (1.0, 0.0, 0.0),
}

CANONICAL_PITCH = 1.1
CANONICAL_PANEL = (1.0, 1.0, 0.1)
CANONICAL_MASS = 10.0
CANONICAL_BOUNDS_DEG = (-60.0, 60.0)
# Front-face material of bodies 0..8 in the canonical preset.
CANONICAL_MATERIALS = ("MLI", "SAP", "Mirror", "MLI", "SAP", "Mirror", "SAP", "MLI", "Mirror")


class ModelError(ValueError):
    """Invalid spacecraft model configuration."""


@dataclass(frozen=True)
class OpticalProperties:
    c_spe: float
    c_dif: float
    c_abs: float

    def __post_init__(self):
        vals = (self.c_spe, self.c_dif, self.c_abs)
        if any(not 0.0 <= v <= 1.0 for v in vals):
            raise ModelError(f"optical coefficients must lie in [0, 1], got {vals}")
        if abs(sum(vals) - 1.0) > _OPTICS_TOL:
            raise ModelError(f"optical coefficients sum to {sum(vals):.12g}, expected 1")

    @classmethod
    def from_material(cls, name: str, table: Mapping[str, Sequence[float]] | None = None):
        table = MATERIALS if table is None else table
        if name not in table:
            raise ModelError(f"unknown material {name!r}")
        return cls(*(float(v) for v in table[name]))

    def as_array(self) -> np.ndarray:
        return np.array([self.c_spe, self.c_dif, self.c_abs])


@dataclass(frozen=True, eq=False)
class SurfaceSpec:
    owner_body: int
    offset_from_body_com: np.ndarray
    normal_local: np.ndarray
    area: float
    optics: OpticalProperties
    is_front: bool


@dataclass(frozen=True, eq=False)
class PanelSpec:
    mass: float
    dimensions: np.ndarray
    com_inertia: np.ndarray
    surfaces: tuple[SurfaceSpec, ...]


@dataclass(frozen=True, eq=False)
class JointSpec:
    index: int
    parent_body: int
    child_body: int
    hinge_point_parent: np.ndarray
    hinge_point_child: np.ndarray
    axis_local: np.ndarray
    bounds: tuple[float, float]


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpacecraftModel:
    """Validated, immutable panel tree.

    Surface data are flattened into arrays (``surf_*``) so the SRP routines
    can evaluate every face with vectorised numpy operations.
    """

    bodies: tuple[PanelSpec, ...]
    joints: tuple[JointSpec, ...]
    outer_groups: tuple[tuple[int, ...], ...]
    surf_owner: np.ndarray = field(repr=False)
    surf_offset: np.ndarray = field(repr=False)
    surf_normal: np.ndarray = field(repr=False)
    surf_area: np.ndarray = field(repr=False)
    surf_optics: np.ndarray = field(repr=False)
    surf_front: np.ndarray = field(repr=False)
    # membership[k, b] is True when body b belongs to the outer group of joint k
    membership: np.ndarray = field(repr=False)

    @property
    def n_bodies(self) -> int:
        return len(self.bodies)

    @property
    def n_joints(self) -> int:
        return len(self.joints)

    @property
    def masses(self) -> np.ndarray:
        return np.array([b.mass for b in self.bodies])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @property
    def front_area(self) -> float:
        return float(self.surf_area[self.surf_front].sum())

    @property
    def theta_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lb = np.array([j.bounds[0] for j in self.joints])
        ub = np.array([j.bounds[1] for j in self.joints])
        return lb, ub

    def bounding_radius(self) -> float:
        """Largest body-centre distance plus half-diagonal, at zero joint angles."""
        kin = forward_kinematics(self, np.zeros(self.n_joints))
        half = np.array([0.5 * np.linalg.norm(b.dimensions) for b in self.bodies])
        return float(np.max(np.linalg.norm(kin.body_com - kin.com_total, axis=1) + half))


@dataclass(frozen=True, eq=False)
class KinematicState:
    theta: np.ndarray
    body_rotation: np.ndarray  # (n, 3, 3), body-0 frame <- body-local
    body_com: np.ndarray  # (n, 3)
    hinge_point: np.ndarray  # (m, 3)
    joint_axis: np.ndarray  # (m, 3)
    surface_center: np.ndarray  # (n_s, 3)
    surface_normal: np.ndarray  # (n_s, 3)
    com_total: np.ndarray
    total_mass: float
    total_inertia: np.ndarray
    group_mass: np.ndarray  # (m,)
    group_com: np.ndarray  # (m, 3)
    group_inertia: np.ndarray  # (m, 3, 3)
    body_inertia: np.ndarray  # (n, 3, 3), about own CoM, body-0 frame


def box_inertia(mass: float, dimensions) -> np.ndarray:
    """Inertia of a homogeneous cuboid about its centre, in its own axes."""
    a, b, c = (float(d) for d in dimensions)
    if mass <= 0 or min(a, b, c) <= 0:
        raise ModelError(f"box_inertia needs positive mass and dimensions, got {mass}, {dimensions}")
    return np.diag([
        mass * (b * b + c * c) / 12.0,
        mass * (a * a + c * c) / 12.0,
        mass * (a * a + b * b) / 12.0,
    ])


def axis_rotation(axis, angle: float) -> np.ndarray:
    """Active rotation by ``angle`` about unit ``axis`` (Rodrigues)."""
    k = skew(axis)
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def canonical9_config(materials: Sequence[str] | None = None) -> dict[str, Any]:
    """Explicit config dict of the nine-panel, eight-joint layout.

    Bodies 1-4 hang off the +x, +y, -x, -y edges of body 0 and bodies 5-8 off
    the +y, -x, -y, +x edges of bodies 1-4. Hinge lines sit mid-gap in the
    panel mid-plane; a positive joint angle lifts the outer group toward +z.
    """
    mats = tuple(CANONICAL_MATERIALS if materials is None else materials)
    if len(mats) != 9:
        raise ModelError("canonical9 needs exactly 9 body materials")
    ex, ey = np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    edges = {1: (0, ex), 2: (0, ey), 3: (0, -ex), 4: (0, -ey),
             5: (1, ey), 6: (2, -ex), 7: (3, -ey), 8: (4, ex)}
    half = 0.5 * CANONICAL_PITCH
    joints = []
    for child, (parent, d) in edges.items():
        axis = np.cross(d, [0.0, 0.0, 1.0])
        joints.append({
            "parent": parent,
            "child": child,
            "hinge_parent_m": (half * d).tolist(),
            "hinge_child_m": (-half * d).tolist(),
            "axis": axis.tolist(),
            "bounds_deg": list(CANONICAL_BOUNDS_DEG),
        })
    bodies = [
        {"mass_kg": CANONICAL_MASS, "dimensions_m": list(CANONICAL_PANEL), "material": m}
        for m in mats
    ]
    return {"bodies": bodies, "joints": joints}


def _optics(entry: Mapping[str, Any], table, key_mat: str, key_opt: str, where: str):
    try:
        if key_opt in entry:
            o = entry[key_opt]
            return OpticalProperties(float(o["spe"]), float(o["dif"]), float(o["abs"]))
        if key_mat in entry:
            return OpticalProperties.from_material(entry[key_mat], table)
    except ModelError as exc:
        raise ModelError(f"{where}: {exc}") from None
    return None


def _unit(v, what: str) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1.0) > _UNIT_TOL:
        raise ModelError(f"{what} must be a unit 3-vector, got {v.tolist()}")
    return v


def _panel_surfaces(body_idx: int, entry, dims, table) -> tuple[SurfaceSpec, ...]:
    where = f"body {body_idx}"
    if "surfaces" in entry:
        out = []
        for j, s in enumerate(entry["surfaces"]):
            opt = _optics(s, table, "material", "optics", f"{where} surface {j}")
            if opt is None:
                raise ModelError(f"{where} surface {j}: material or optics required")
            area = float(s["area_m2"])
            if area <= 0:
                raise ModelError(f"{where} surface {j}: area must be positive")
            out.append(SurfaceSpec(
                owner_body=body_idx,
                offset_from_body_com=_frozen(s["offset_m"]),
                normal_local=_frozen(_unit(s["normal"], f"{where} surface {j} normal")),
                area=area,
                optics=opt,
                is_front=bool(s.get("front", False)),
            ))
        n_front = sum(s.is_front for s in out)
        if n_front != 1:
            raise ModelError(f"{where}: expected exactly one front surface, found {n_front}")
        return tuple(out)

    front = _optics(entry, table, "material", "optics", f"{where} front surface")
    if front is None:
        raise ModelError(f"{where}: material or optics required")
    back = _optics(entry, table, "back_material", "back_optics", f"{where} back surface") or front
    area = float(dims[0] * dims[1])
    hz = 0.5 * float(dims[2])
    return (
        SurfaceSpec(body_idx, _frozen([0, 0, hz]), _frozen([0, 0, 1.0]), area, front, True),
        SurfaceSpec(body_idx, _frozen([0, 0, -hz]), _frozen([0, 0, -1.0]), area, back, False),
    )


def build_model(config: Mapping[str, Any]) -> SpacecraftModel:
    """Validate a model config and precompute outer groups.

    ``config`` is either ``{"preset": "canonical9", ...}`` (optionally with
    ``body_materials``/``bounds_deg`` overrides) or an explicit
    ``{"bodies": [...], "joints": [...], "materials": {...}}`` tree.
    """
    config = copy.deepcopy(dict(config))
    if config.get("preset") is not None:
        if config["preset"] != "canonical9":
            raise ModelError(f"unknown model preset {config['preset']!r}")
        explicit = canonical9_config(config.get("body_materials"))
        if "bounds_deg" in config:
            for j in explicit["joints"]:
                j["bounds_deg"] = list(config["bounds_deg"])
        explicit["materials"] = config.get("materials", {})
        config = explicit

    table = dict(MATERIALS)
    for name, vals in config.get("materials", {}).items():
        if isinstance(vals, Mapping):
            vals = (vals["spe"], vals["dif"], vals["abs"])
        try:
            OpticalProperties(*(float(v) for v in vals))
        except ModelError as exc:
            raise ModelError(f"material {name!r}: {exc}") from None
        table[name] = tuple(float(v) for v in vals)

    body_entries = config.get("bodies", [])
    if not body_entries:
        raise ModelError("model needs at least one body")
    bodies = []
    for i, b in enumerate(body_entries):
        mass = float(b["mass_kg"])
        dims = np.asarray(b["dimensions_m"], dtype=float)
        if mass <= 0 or dims.shape != (3,) or np.any(dims <= 0):
            raise ModelError(f"body {i}: mass and dimensions must be positive")
        if "inertia_kgm2" in b:
            inertia = np.asarray(b["inertia_kgm2"], dtype=float)
            if inertia.shape != (3, 3) or not np.allclose(inertia, inertia.T, rtol=0, atol=1e-12):
                raise ModelError(f"body {i}: inertia must be a symmetric 3x3 matrix")
            if np.min(np.linalg.eigvalsh(inertia)) <= 0:
                raise ModelError(f"body {i}: inertia must be positive definite")
        else:
            inertia = box_inertia(mass, dims)
        bodies.append(PanelSpec(mass, _frozen(dims), _frozen(inertia),
                                _panel_surfaces(i, b, dims, table)))

    n = len(bodies)
    parent_of: dict[int, int] = {}
    raw_joints = config.get("joints", [])
    for j in raw_joints:
        p, c = int(j["parent"]), int(j["child"])
        if not (0 <= p < n and 0 <= c < n):
            raise ModelError(f"joint {p}->{c} references a missing body")
        if c == 0 or c in parent_of:
            raise ModelError(f"cyclic joint graph: body {c} has more than one inner joint")
        parent_of[c] = p
    # walk to the root from every body; a revisit means a loop
    for c in parent_of:
        seen, b = {c}, c
        while b in parent_of:
            b = parent_of[b]
            if b in seen:
                raise ModelError(f"cyclic joint graph through body {c}")
            seen.add(b)
    for j in raw_joints:
        if int(j["child"]) <= int(j["parent"]):
            raise ModelError(
                f"non-serial numbering: joint child={j['child']} must exceed parent={j['parent']}"
            )
    missing = [b for b in range(1, n) if b not in parent_of]
    if missing:
        raise ModelError(f"bodies {missing} are not connected to the tree")

    joints = []
    for j in sorted(raw_joints, key=lambda e: int(e["child"])):
        c = int(j["child"])
        lb, ub = np.deg2rad(np.asarray(j.get("bounds_deg", (-180.0, 180.0)), dtype=float))
        if not lb < ub:
            raise ModelError(f"joint {c}: lower bound must be below upper bound")
        joints.append(JointSpec(
            index=c,
            parent_body=int(j["parent"]),
            child_body=c,
            hinge_point_parent=_frozen(j["hinge_parent_m"]),
            hinge_point_child=_frozen(j["hinge_child_m"]),
            axis_local=_frozen(_unit(j["axis"], f"joint {c} axis")),
            bounds=(float(lb), float(ub)),
        ))

    children: dict[int, list[int]] = {b: [] for b in range(n)}
    for c, p in parent_of.items():
        children[p].append(c)
    groups = []
    for jt in joints:
        stack, group = [jt.child_body], []
        while stack:
            b = stack.pop()
            group.append(b)
            stack.extend(children[b])
        group = tuple(sorted(group))
        assert min(group) >= jt.index
        groups.append(group)
    membership = np.zeros((len(joints), n), dtype=bool)
    for k, g in enumerate(groups):
        membership[k, list(g)] = True

    surfs = [s for b in bodies for s in b.surfaces]
    return SpacecraftModel(
        bodies=tuple(bodies),
        joints=tuple(joints),
        outer_groups=tuple(groups),
        surf_owner=np.array([s.owner_body for s in surfs], dtype=int),
        surf_offset=_frozen([s.offset_from_body_com for s in surfs]),
        surf_normal=_frozen([s.normal_local for s in surfs]),
        surf_area=_frozen([s.area for s in surfs]),
        surf_optics=_frozen([s.optics.as_array() for s in surfs]),
        surf_front=np.array([s.is_front for s in surfs], dtype=bool),
        membership=membership,
    )


# ---------------------------------------------------------------------------
# kinematics
# ---------------------------------------------------------------------------


def _aggregate(masses, coms, inertias):
    m = masses.sum()
    r = masses @ coms / m
    d = coms - r
    dd = np.einsum("bi,bi->b", d, d)
    parallel = masses[:, None, None] * (dd[:, None, None] * np.eye(3) - np.einsum("bi,bj->bij", d, d))
    return m, r, (inertias + parallel).sum(axis=0)


def forward_kinematics(model: SpacecraftModel, theta) -> KinematicState:
    """Positions, orientations and mass aggregates for joint angles ``theta``."""
    theta = np.asarray(theta)
    # long double input propagates, which the finite-difference oracle relies on
    dtype = np.result_type(theta.dtype, np.float64)
    theta = theta.astype(dtype)
    m = model.n_joints
    if theta.shape != (m,) or not np.all(np.isfinite(theta)):
        raise ValueError(f"theta must be a finite vector of length {m}")
    n = model.n_bodies
    rot = np.empty((n, 3, 3), dtype=dtype)
    com = np.empty((n, 3), dtype=dtype)
    rot[0] = np.eye(3)
    com[0] = 0.0
    hinge = np.empty((m, 3), dtype=dtype)
    axis = np.empty((m, 3), dtype=dtype)
    for k, jt in enumerate(model.joints):
        rp = rot[jt.parent_body]
        axis[k] = rp @ jt.axis_local
        hinge[k] = com[jt.parent_body] + rp @ jt.hinge_point_parent
        rc = rp @ axis_rotation(jt.axis_local, theta[k])
        rot[jt.child_body] = rc
        com[jt.child_body] = hinge[k] - rc @ jt.hinge_point_child

    owner = model.surf_owner
    centers = com[owner] + np.einsum("sij,sj->si", rot[owner], model.surf_offset)
    normals = np.einsum("sij,sj->si", rot[owner], model.surf_normal)

    masses = model.masses
    local_inertia = np.array([b.com_inertia for b in model.bodies])
    inertia = np.einsum("bij,bjk,blk->bil", rot, local_inertia, rot)
    m_c, r_c, i_c = _aggregate(masses, com, inertia)

    g_mass = np.empty(m, dtype=dtype)
    g_com = np.empty((m, 3), dtype=dtype)
    g_inertia = np.empty((m, 3, 3), dtype=dtype)
    for k in range(m):
        sel = model.membership[k]
        g_mass[k], g_com[k], g_inertia[k] = _aggregate(masses[sel], com[sel], inertia[sel])

    return KinematicState(
        theta=theta,
        body_rotation=rot,
        body_com=com,
        hinge_point=hinge,
        joint_axis=axis,
        surface_center=centers,
        surface_normal=normals,
        com_total=r_c,
        total_mass=m_c,
        total_inertia=i_c,
        group_mass=g_mass,
        group_com=g_com,
        group_inertia=g_inertia,
        body_inertia=inertia,
    )
