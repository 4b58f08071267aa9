"""Explicit systems built from oblique projections.

For a splitting R^d = U + V the operator A_{U,V} sends u + v to -v. Its flow
contracts the V-component and fixes U, so trajectories slide toward U along
V. Families of such operators, one per boundary point of a body, keep the
body invariant and reach all of it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull

from .core import ControlSet, InvalidInputError


@dataclass(frozen=True)
class SubspacePair:
    """Complementary subspaces U and V, each given by a list of basis vectors."""

    U_basis: np.ndarray
    V_basis: np.ndarray
    d: int
    condition: float

    def __init__(self, U_basis, V_basis):
        u = np.atleast_2d(np.asarray(U_basis, dtype=float))
        v = np.atleast_2d(np.asarray(V_basis, dtype=float))
        if u.size == 0 or v.size == 0:
            raise InvalidInputError("both subspaces must be nontrivial")
        if u.shape[1] != v.shape[1]:
            raise InvalidInputError("basis vectors differ in length")
        d = u.shape[1]
        if len(u) + len(v) != d:
            raise InvalidInputError(
                f"dim U + dim V = {len(u) + len(v)} but the ambient dimension is {d}")
        basis = np.vstack([u, v]).T
        s = np.linalg.svd(basis, compute_uv=False)
        cond = float(s[0] / s[-1]) if s[-1] > 0 else math.inf
        if not cond < 1e12:
            raise InvalidInputError(f"U and V do not form a direct sum (condition {cond:.3g})")
        object.__setattr__(self, "U_basis", u)
        object.__setattr__(self, "V_basis", v)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "condition", cond)


def projector_operator(pair: SubspacePair) -> np.ndarray:
    """The matrix sending u + v to -v (u in U, v in V)."""
    basis = np.vstack([pair.U_basis, pair.V_basis]).T
    k = len(pair.U_basis)
    diag = np.concatenate([np.zeros(k), -np.ones(pair.d - k)])
    a = basis @ np.diag(diag) @ np.linalg.inv(basis)
    return a


def _complement(normal: np.ndarray) -> np.ndarray:
    """Rows spanning the orthogonal complement of a nonzero vector."""
    _, _, vt = np.linalg.svd(normal[None, :])
    return vt[1:]


@dataclass(frozen=True)
class BodySpec:
    """A convex body: a polytope by vertices, or boundary samples with outward normals."""

    kind: str
    vertices: np.ndarray | None = None
    points: np.ndarray | None = None
    normals: np.ndarray | None = None
    symmetric: bool = False

    @classmethod
    def polytope(cls, vertices) -> "BodySpec":
        v = np.atleast_2d(np.asarray(vertices, dtype=float))
        if len(v) < v.shape[1] + 1:
            raise InvalidInputError("a full-dimensional polytope needs at least d+1 vertices")
        return cls("polytope", vertices=v, symmetric=_is_symmetric(v))

    @classmethod
    def sampled(cls, points, normals) -> "BodySpec":
        p = np.atleast_2d(np.asarray(points, dtype=float))
        n = np.atleast_2d(np.asarray(normals, dtype=float))
        if p.shape != n.shape:
            raise InvalidInputError("points and normals must have the same shape")
        nrm = np.linalg.norm(n, axis=1)
        if np.any(nrm == 0):
            raise InvalidInputError("zero normal")
        return cls("sampled", points=p, normals=n / nrm[:, None], symmetric=_is_symmetric(p))

    @property
    def d(self) -> int:
        return (self.vertices if self.kind == "polytope" else self.points).shape[1]

    def boundary_points(self) -> np.ndarray:
        return self.vertices if self.kind == "polytope" else self.points


def _is_symmetric(pts: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(pts).max()))
    diff = np.linalg.norm(pts[:, None, :] + pts[None, :, :], axis=2)
    return bool(np.all(diff.min(axis=1) <= 1e-12 * scale))


def square_body(half: float = 1.0) -> BodySpec:
    return BodySpec.polytope([[half, half], [-half, half], [-half, -half], [half, -half]])


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> BodySpec:
    ang = phase + 2 * np.pi * np.arange(n) / n
    return BodySpec.polytope(radius * np.column_stack([np.cos(ang), np.sin(ang)]))


def disc_body(n: int = 64, radius: float = 1.0) -> BodySpec:
    """Boundary samples of a disc with their outward normals."""
    ang = 2 * np.pi * np.arange(n) / n
    u = np.column_stack([np.cos(ang), np.sin(ang)])
    return BodySpec.sampled(radius * u, u)


def regular_tetrahedron(radius: float = 1.0) -> np.ndarray:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return radius * v / math.sqrt(3)


def _polytope_samples(vertices: np.ndarray, n_samples: int):
    """Boundary points of a polytope paired with supporting facet normals.

    Every vertex appears once per adjacent facet; the remaining budget goes
    to evenly spread points inside facets.
    """
    hull = ConvexHull(vertices)
    eq = hull.equations
    if np.any(eq[:, -1] >= 0):
        raise InvalidInputError("the origin must be interior to the polytope")
    # merge coplanar simplices into facets
    facets: list[tuple[np.ndarray, set]] = []
    for row, simplex in zip(eq, hull.simplices):
        for normal, members in facets:
            if np.allclose(normal, row, atol=1e-10):
                members.update(simplex.tolist())
                break
        else:
            facets.append((row, set(simplex.tolist())))
    samples, normals = [], []
    for row, members in facets:
        for k in sorted(members):
            samples.append(vertices[k])
            normals.append(row[:-1])
    extra = n_samples - len(samples)
    if extra > 0:
        d = vertices.shape[1]
        per_facet = math.ceil(extra / len(facets))
        for row, members in facets:
            pts = vertices[sorted(members)]
            if d == 2:
                a, b = pts
                for s in np.arange(1, per_facet + 1) / (per_facet + 1):
                    samples.append((1 - s) * a + s * b)
                    normals.append(row[:-1])
            else:
                rng = np.random.default_rng(len(samples))
                for _ in range(per_facet):
                    w = rng.dirichlet(np.ones(len(pts)))
                    samples.append(w @ pts)
                    normals.append(row[:-1])
    return np.array(samples), np.array(normals)


def _support_projection_system(body: BodySpec, n_samples: int, require_symmetry: bool,
                               report: list | None = None) -> ControlSet:
    d = body.d
    if n_samples < 2 * d:
        raise InvalidInputError(f"n_samples must be at least {2 * d}")
    if require_symmetry and not body.symmetric:
        raise InvalidInputError("the body is not symmetric about the origin")
    if body.kind == "polytope":
        zs, ns = _polytope_samples(body.vertices, n_samples)
    elif body.kind == "sampled":
        idx = np.unique(np.linspace(0, len(body.points) - 1, min(n_samples, len(body.points))).round().astype(int))
        zs, ns = body.points[idx], body.normals[idx]
    else:
        raise InvalidInputError(f"unknown body kind {body.kind!r}")
    gens, labels = [], []
    for z, n in zip(zs, ns):
        n = n / np.linalg.norm(n)
        if abs(n @ z) <= 1e-12 * max(1.0, np.linalg.norm(z)):
            if report is not None:
                report.append(f"skipped z={z.tolist()}: the line through z lies in its support plane")
            continue
        a = projector_operator(SubspacePair([z], _complement(n)))
        gens.append(a)
        labels.append("z=(" + ",".join(f"{c:.6g}" for c in z) + ")")
    if not gens:
        raise InvalidInputError("no usable boundary samples")
    return ControlSet(gens, labels)


def symmetric_body_system(body: BodySpec, n_samples: int = 32, report: list | None = None) -> ControlSet:
    """Support-projection system of an origin-symmetric convex body.

    Each sampled boundary point z contributes the operator with kernel span(z)
    that contracts along the supporting hyperplane at z. Samples whose line
    lies in the supporting plane are skipped and noted in `report`.
    """
    return _support_projection_system(body, n_samples, True, report)


def simplex_system(vertices) -> ControlSet:
    """One projection operator per simplex edge.

    For the edge (i, j) the kernel is spanned by the other vertices and the
    contracted direction is v_j - v_i. The origin must be strictly inside.
    """
    v = np.atleast_2d(np.asarray(vertices, dtype=float))
    n, d = v.shape
    if d < 2:
        raise InvalidInputError("simplex_system needs dimension at least 2")
    if n != d + 1:
        raise InvalidInputError(f"a simplex in dimension {d} needs {d + 1} vertices, got {n}")
    lifted = np.vstack([v.T, np.ones(n)])
    if abs(np.linalg.det(lifted)) <= 1e-12 * max(1.0, float(np.abs(v).max())) ** d:
        raise InvalidInputError("the vertices are affinely dependent")
    bary = np.linalg.solve(lifted, np.concatenate([np.zeros(d), [1.0]]))
    if np.any(bary <= 1e-12):
        raise InvalidInputError(
            "the origin must lie strictly inside the simplex (boundary case unsupported)")
    gens, labels = [], []
    for i in range(n):
        for j in range(i + 1, n):
            others = [v[k] for k in range(n) if k not in (i, j)]
            try:
                pair = SubspacePair(others, [v[j] - v[i]])
            except InvalidInputError as exc:
                raise InvalidInputError(f"edge ({i}, {j}): {exc}") from None
            gens.append(projector_operator(pair))
            labels.append(f"A{i + 1}{j + 1}")
    return ControlSet(gens, labels)


def example20_system(p: float = 0.5) -> ControlSet:
    """The two-matrix family {[[-1, p], [0, 0]], [[0, 0], [-1, -p]]}, 0 < p < 1."""
    if not 0 < p < 1:
        raise InvalidInputError(f"p must lie in (0, 1), got {p}")
    return ControlSet([[[-1.0, p], [0.0, 0.0]], [[0.0, 0.0], [-1.0, -p]]], ["A1", "A2"])


def kernel_lines(p: float) -> np.ndarray:
    """Unit directions of the kernels of the two generators of example20_system(p)."""
    r = np.array([[p, 1.0], [-p, 1.0]])
    return r / np.linalg.norm(r, axis=1)[:, None]


def trapezoid_fixture():
    """A trapezoid around the origin whose vertex rays obstruct realizability.

    The origin is interior, v1v4 is the longer base, and the line through the
    origin and v3 crosses the leg v1v2 at its midpoint (-1.25, -0.5).
    """
    vertices = np.array([[-1.75, -1.5], [-0.75, 0.5], [1.25, 0.5], [2.25, -1.5]])
    note = ("trapezoid v1=(-1.75,-1.5) v2=(-0.75,0.5) v3=(1.25,0.5) v4=(2.25,-1.5); "
            "bases v1v4 (length 4) and v2v3 (length 2); origin interior; "
            "line O-v3 meets leg v1v2 at (-1.25,-0.5)")
    return vertices, note


def trapezoid_candidates(n_samples: int = 48) -> dict[str, ControlSet]:
    """Candidate systems against which the trapezoid is tested.

    None of them should make the trapezoid an eigenset.
    """
    verts, _ = trapezoid_fixture()
    body = BodySpec.polytope(verts)
    return {
        "example20_p0.5": example20_system(0.5),
        "support_projection_vertices": _support_projection_system(body, 4, False),
        "support_projection_dense": _support_projection_system(body, n_samples, False),
    }


def body_from_dict(data: dict) -> BodySpec:
    kind = data.get("kind")
    if kind == "polytope":
        return BodySpec.polytope(data["vertices"])
    if kind == "sampled":
        return BodySpec.sampled(data["points"], data["normals"])
    raise InvalidInputError(f"unknown body kind {kind!r}")
