"""Compact-set dynamics on epsilon-grid point clouds.

A compact set is represented by a finite cloud of points that is dense at
resolution epsilon. The one-step map sends every point through every step
exponential exp(h A_j) and prunes the union on the epsilon grid.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError, cKDTree

from ._kernels import apply_maps, cell_bounds, cell_extremes, dense_extremes
from .core import ControlSet, InvalidInputError, ResourceError, mat_exp, point_in_hull

MAX_CLOUD = 10_000_000
MAX_DENSE_CELLS = 20_000_000


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    epsilon: float
    metadata: str = ""

    def __init__(self, points, epsilon, metadata=""):
        pts = np.array(points, dtype=float)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1) if pts.size else pts.reshape(0, 1)
        if pts.ndim != 2:
            raise InvalidInputError("points must be an (n, d) array")
        if not np.all(np.isfinite(pts)):
            raise InvalidInputError("cloud has non-finite points")
        if not epsilon > 0:
            raise InvalidInputError("epsilon must be positive")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "metadata", str(metadata))

    @property
    def d(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def scaled(self, factor: float) -> "PointCloud":
        return PointCloud(self.points * factor, self.epsilon, self.metadata)

    def diameter(self) -> float:
        if len(self) < 2:
            return 0.0
        pts = self.points
        if len(self) > 2000:
            try:
                pts = pts[ConvexHull(pts).vertices]
            except (QhullError, ValueError):
                pass
        if len(pts) > 5000:
            pts = pts[:: len(pts) // 5000 + 1]
        diff = pts[:, None, :] - pts[None, :, :]
        return float(np.sqrt(np.max(np.einsum("ijk,ijk->ij", diff, diff))))

    @classmethod
    def from_points(cls, points, epsilon, metadata="") -> "PointCloud":
        """Build a pruned cloud."""
        pts = np.asarray(points, dtype=float)
        return cls(prune(pts, epsilon), epsilon, metadata)


def prune_directions(d: int) -> np.ndarray:
    """Unit vectors +-e_i and (+-e_i +- e_j)/sqrt(2) used to pick cell representatives."""
    eye = np.eye(d)
    dirs = [eye, -eye]
    for i, j in itertools.combinations(range(d), 2):
        for si, sj in itertools.product((1, -1), repeat=2):
            dirs.append(((si * eye[i] + sj * eye[j]) / math.sqrt(2))[None, :])
    return np.vstack(dirs)


_DIRS = {d: prune_directions(d) for d in range(1, 7)}
_OFFSETS = {d: np.sign(np.round(v, 12)).astype(np.int64) for d, v in _DIRS.items()}


def prune(points: np.ndarray, eps: float) -> np.ndarray:
    """Thin a point set on the eps grid.

    Every occupied cell keeps one point. Cells on the boundary of the
    occupied region also keep their extreme points along the coordinate axes
    and pairwise diagonals that face empty neighbours. Kept points are members
    of the input, so pruning never moves a point; the extra boundary points
    stop the set from eroding and let slowly moving fronts advance.
    """
    pts = np.ascontiguousarray(points, dtype=float)
    if pts.ndim != 2:
        pts = pts.reshape(len(pts), -1)
    if len(pts) == 0:
        return pts
    dirs, offsets = _DIRS[pts.shape[1]], _OFFSETS[pts.shape[1]]
    lo, hi = cell_bounds(pts, eps)
    span = hi - lo + 1
    if np.prod(span.astype(float)) <= MAX_DENSE_CELLS:
        keep = dense_extremes(pts, eps, lo, span, dirs, offsets)
    else:
        k = np.floor(pts * (1.0 / eps)).astype(np.int64)
        _, cells = np.unique(k, axis=0, return_inverse=True)
        cells = cells.ravel().astype(np.int64)
        keep = cell_extremes(np.ascontiguousarray(pts @ dirs.T), cells, int(cells.max()) + 1)
    return pts[keep]


def _step_exponentials(sys: ControlSet, h: float) -> np.ndarray:
    return np.stack([mat_exp(g, h) for g in sys.generators])


def _apply(points: np.ndarray, exps: np.ndarray, eps: float) -> np.ndarray:
    n, m = len(points), len(exps)
    if n * m > MAX_CLOUD:
        raise ResourceError(f"step would create {n * m} points (limit {MAX_CLOUD})")
    return prune(apply_maps(np.ascontiguousarray(points), exps), eps)


def _check_dim(cloud: PointCloud, sys: ControlSet):
    if cloud.d != sys.d:
        raise InvalidInputError(f"cloud dimension {cloud.d} != system dimension {sys.d}")


def step_map(M: PointCloud, sys: ControlSet, h: float) -> PointCloud:
    """Union of exp(h A_j) M over generators, pruned at M's resolution."""
    if not h > 0:
        raise InvalidInputError("h must be positive")
    _check_dim(M, sys)
    pts = _apply(M.points, _step_exponentials(sys, h), M.epsilon)
    return PointCloud(pts, M.epsilon, f"step_map h={h!r}")


def _step_count(t: float, h: float) -> tuple[int, float]:
    if t < 0 or not h > 0:
        raise InvalidInputError("need t >= 0 and h > 0")
    if t == 0:
        return 0, h
    ratio = t / h
    n = round(ratio)
    if n >= 1 and abs(ratio - n) <= 1e-12 * max(1.0, ratio) + 1e-9:
        return n, h
    n = math.ceil(ratio)
    return n, t / n


def reach_set(M0: PointCloud, sys: ControlSet, t: float, h: float = 0.01) -> PointCloud:
    """Approximate M_t by ceil(t/h) compositions of step_map.

    When t is not a multiple of h the step is reduced to t / ceil(t/h); the
    step actually used is recorded in the metadata.
    """
    return reach_sets(M0, sys, [t], h)[0]


def reach_sets(M0: PointCloud, sys: ControlSet, times, h: float = 0.01) -> list[PointCloud]:
    """reach_set at several times, sharing the propagation."""
    _check_dim(M0, sys)
    times = [float(t) for t in times]
    counts = {}
    for t in times:
        n, h_used = _step_count(t, h)
        if h_used != h:
            return [reach_set_adjusted(M0, sys, t, h) for t in times]
        counts[t] = n
    exps = _step_exponentials(sys, h)
    out, pts, done = {}, M0.points, 0
    for t in sorted(set(times)):
        for _ in range(counts[t] - done):
            pts = _apply(pts, exps, M0.epsilon)
        done = counts[t]
        out[t] = PointCloud(
            pts, M0.epsilon,
            f"reach_set t={t!r} h={h!r} steps={done} "
            f"error~O(h)+O(eps), h={h!r}, eps={M0.epsilon!r}")
    return [out[t] for t in times]


def reach_set_adjusted(M0: PointCloud, sys: ControlSet, t: float, h: float) -> PointCloud:
    n, h_used = _step_count(t, h)
    pts = M0.points
    exps = _step_exponentials(sys, h_used)
    for _ in range(n):
        pts = _apply(pts, exps, M0.epsilon)
    return PointCloud(pts, M0.epsilon,
                      f"reach_set t={t!r} h={h_used!r} steps={n} (h adjusted from {h!r})")


def hausdorff(M1, M2) -> float:
    """Symmetric Hausdorff distance between two finite clouds."""
    a = M1.points if isinstance(M1, PointCloud) else np.atleast_2d(np.asarray(M1, float))
    b = M2.points if isinstance(M2, PointCloud) else np.atleast_2d(np.asarray(M2, float))
    if len(a) == 0 or len(b) == 0:
        raise InvalidInputError("Hausdorff distance needs nonempty clouds")
    if a.shape[1] != b.shape[1]:
        raise InvalidInputError("clouds differ in dimension")
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def directed_hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    """max over a of the distance to the nearest point of b."""
    dist, _ = cKDTree(b).query(a)
    return float(np.max(dist))


def _union(blocks: list[np.ndarray], eps: float) -> np.ndarray:
    return prune(np.vstack(blocks), eps)


def omega_limit(seed: PointCloud, sys_normed: ControlSet, h: float = 0.01,
                window: int = 20, max_steps: int = 50_000, tol: float | None = None,
                return_info: bool = False):
    """Numerical eigenset as the stabilized tail of the orbit of `seed`.

    Iterates are grouped into blocks of `window` steps. After b blocks the
    tail estimate is the union of the last half of the blocks, i.e. of the
    points reached in time at least half the elapsed time. Iteration stops
    once the tail estimate is within tol (default: epsilon) of the estimate
    at half as many blocks. Checks happen at geometrically spaced b, so the
    total cost stays linear in the number of steps.
    """
    if window < 2:
        raise InvalidInputError("window must be at least 2")
    _check_dim(seed, sys_normed)
    eps = seed.epsilon
    tol = eps if tol is None else tol
    exps = _step_exponentials(sys_normed, h)
    pts = seed.points
    blocks: list[np.ndarray] = []
    block_union = pts
    converged = False
    residual = np.inf
    steps = 0
    next_check = 4
    tail = None
    while steps < max_steps:
        pts = _apply(pts, exps, eps)
        steps += 1
        block_union = prune(np.vstack([block_union, pts]), eps)
        if steps % window:
            continue
        blocks.append(block_union)
        block_union = pts
        b = len(blocks)
        if b < next_check:
            continue
        next_check = max(b + 2, int(math.ceil(b * 1.25)))
        tail = _union(blocks[b // 2:], eps)
        earlier = _union(blocks[b // 4:b // 2], eps)
        residual = hausdorff(tail, earlier)
        if residual <= tol:
            converged = True
            break
    if not blocks:
        tail = prune(np.vstack([seed.points, block_union]), eps)
    elif tail is None or not converged:
        tail = _union(blocks[len(blocks) // 2:], eps)
    cloud = PointCloud(tail, eps,
                       f"omega_limit converged={converged} steps={steps} "
                       f"residual={residual!r} h={h!r} window={window}")
    if return_info:
        return cloud, {"converged": converged, "steps": steps, "residual": float(residual)}
    return cloud


def ivy(stem: PointCloud, sys: ControlSet, h: float = 0.01, t_max: float = 10.0) -> PointCloud:
    """Union of reach_set(stem, t) for t = 0, h, ..., t_max."""
    if len(stem) == 0:
        raise InvalidInputError("stem is empty")
    if not t_max > 0:
        raise InvalidInputError("t_max must be positive")
    _check_dim(stem, sys)
    n, h_used = _step_count(t_max, h)
    exps = _step_exponentials(sys, h_used)
    eps = stem.epsilon
    pts = stem.points
    union = prune(pts, eps)
    for _ in range(n):
        pts = _apply(pts, exps, eps)
        union = prune(np.vstack([union, pts]), eps)
    return PointCloud(union, eps, f"ivy t_max={t_max!r} h={h_used!r}")


# Convex hull sampling


def _lattice_in_hull(hull_pts: np.ndarray, eps: float) -> np.ndarray:
    """Grid points eps*Z^r inside the convex hull of full-dimensional points."""
    r = hull_pts.shape[1]
    lo = np.floor(hull_pts.min(axis=0) / eps).astype(int)
    hi = np.ceil(hull_pts.max(axis=0) / eps).astype(int)
    count = np.prod((hi - lo + 1).astype(float))
    if count > MAX_CLOUD:
        raise ResourceError(f"hull sampling needs {int(count)} grid points")
    axes = [np.arange(a, b + 1) * eps for a, b in zip(lo, hi)]
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, r)
    if r == 1:
        return grid[(grid[:, 0] >= hull_pts.min() - 1e-12) & (grid[:, 0] <= hull_pts.max() + 1e-12)]
    eq = ConvexHull(hull_pts).equations
    inside = np.all(grid @ eq[:, :-1].T + eq[:, -1] <= 1e-12, axis=1)
    return grid[inside]


def _simplex_samples(vertices: np.ndarray, eps: float) -> np.ndarray:
    """Barycentric lattice on a simplex with spacing at most eps."""
    k = len(vertices)
    longest = max(np.linalg.norm(a - b) for a, b in itertools.combinations(vertices, 2))
    n = max(1, math.ceil(longest / eps))
    combos = [c for c in itertools.product(range(n + 1), repeat=k - 1) if sum(c) <= n]
    bary = np.array([list(c) + [n - sum(c)] for c in combos], dtype=float) / n
    return bary @ vertices


def sample_convex_hull(points, eps: float) -> np.ndarray:
    """Points sampling co(points): interior lattice plus boundary facets.

    Degenerate (lower-dimensional) hulls are sampled inside their affine span.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    center = pts.mean(axis=0)
    centered = pts - center
    if len(pts) == 1:
        return pts.copy()
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(pts).max()))
    rank = int(np.sum(s > 1e-10 * scale * math.sqrt(len(pts))))
    if rank == 0:
        return pts[:1].copy()
    basis = vt[:rank]
    coords = centered @ basis.T
    if rank == 1:
        a, b = coords.min(), coords.max()
        n = max(1, math.ceil((b - a) / eps))
        local = np.linspace(a, b, n + 1)[:, None]
        return center + local @ basis
    hull = ConvexHull(coords)
    parts = [coords[hull.vertices], _lattice_in_hull(coords[hull.vertices], eps)]
    if rank <= 3:
        for simplex in hull.simplices:
            parts.append(_simplex_samples(coords[simplex], eps))
    local = np.vstack(parts)
    return center + local @ basis


def hull_cloud(M, eps: float | None = None) -> PointCloud:
    """Cloud sampling the convex hull of M."""
    pts = M.points if isinstance(M, PointCloud) else np.asarray(M, float)
    eps = M.epsilon if eps is None else eps
    return PointCloud.from_points(sample_convex_hull(pts, eps), eps, "convex hull sample")


def convexity_defect(M: PointCloud) -> float:
    """Hausdorff distance between M and an eps-sampling of co(M)."""
    if len(M) == 0:
        raise InvalidInputError("empty cloud")
    hull = sample_convex_hull(M.points, M.epsilon)
    return directed_hausdorff(hull, M.points)


def vertex_kernel_check(vertices, sys: ControlSet, tol: float = 1e-9) -> list[bool]:
    """For each vertex v: does some convex combination of generators annihilate v?

    Equivalent to 0 lying in co{A_j v}.
    """
    verts = np.atleast_2d(np.asarray(vertices, dtype=float))
    if len(verts) == 0:
        raise InvalidInputError("no vertices given")
    if verts.shape[1] != sys.d:
        raise InvalidInputError("vertex dimension mismatch")
    if np.any(np.linalg.norm(verts, axis=1) == 0):
        raise InvalidInputError("vertices must be nonzero")
    stack = sys.stack()
    out = []
    for v in verts:
        images = stack @ v
        out.append(bool(point_in_hull(np.zeros(sys.d), images, tol)))
    return out


def is_connected(M: PointCloud, radius: float | None = None) -> bool:
    """Connectivity of the graph joining points closer than `radius`."""
    if len(M) <= 1:
        return True
    radius = (2 * math.sqrt(M.d) + 0.5) * M.epsilon if radius is None else radius
    tree = cKDTree(M.points)
    graph = tree.sparse_distance_matrix(tree, radius, output_type="coo_matrix")
    ncomp, _ = connected_components(graph, directed=False)
    return ncomp == 1


@dataclass
class VerifyReport:
    alpha: float
    times: list
    hausdorff_errors: list
    contains_origin: bool
    origin_distance: float
    connected: bool
    convexity_defect: float
    vertex_kernel: list | None
    isotropic: bool
    tol: float
    verdict: bool
    failures: list = field(default_factory=list)
    h: float = 0.01
    epsilon: float = 0.0

    def to_dict(self) -> dict:
        return {
            "verdict": "pass" if self.verdict else "fail",
            "alpha": self.alpha,
            "times": list(self.times),
            "hausdorff_errors": list(self.hausdorff_errors),
            "contains_origin": self.contains_origin,
            "origin_distance": self.origin_distance,
            "connected": self.connected,
            "convexity_defect": self.convexity_defect,
            "vertex_kernel": self.vertex_kernel,
            "isotropic": self.isotropic,
            "tol": self.tol,
            "h": self.h,
            "epsilon": self.epsilon,
            "failures": list(self.failures),
        }


def eigenset_verify(M: PointCloud, sys: ControlSet, alpha: float = 0.0, times=(0.5, 1.0, 2.0),
                    h: float = 0.01, tol: float = 0.05, vertices=None) -> VerifyReport:
    """Check M_t = exp(alpha t) M at the probe times, plus necessary conditions.

    Non-isotropic systems additionally require the origin in M and
    connectedness; supplied polytope vertices must pass the kernel test.
    """
    from .spectral import isotropy_test

    times = [float(t) for t in times]
    if not times or any(t <= 0 for t in times):
        raise InvalidInputError("probe times must be nonempty and positive")
    _check_dim(M, sys)
    if len(M) == 0:
        raise InvalidInputError("empty cloud")
    failures = []
    norms = np.linalg.norm(M.points, axis=1)
    if float(norms.max()) <= tol:
        failures.append("the set is the origin alone, which is excluded as an eigenset")
    reached = reach_sets(M, sys, times, h)
    errors = []
    for t, cloud in zip(times, reached):
        target = M.points * math.exp(alpha * t)
        err = hausdorff(cloud.points, target)
        errors.append(err)
        if err > tol:
            failures.append(f"hausdorff error {err:.4g} at t={t:g} exceeds {tol:g}")
    origin_distance = float(norms.min())
    contains_origin = origin_distance <= tol
    connected = is_connected(M)
    isotropic = isotropy_test(sys) is not None
    if not isotropic:
        if not contains_origin:
            failures.append("non-isotropic system but the set misses the origin")
        if not connected:
            failures.append("non-isotropic system but the set is disconnected")
    kernel = None
    if vertices is not None:
        kernel = vertex_kernel_check(vertices, sys, tol=1e-9)
        if not all(kernel):
            failures.append("some vertex lies in no generator kernel")
    defect = convexity_defect(M)
    return VerifyReport(
        alpha=float(alpha), times=times, hausdorff_errors=errors,
        contains_origin=contains_origin, origin_distance=origin_distance,
        connected=connected, convexity_defect=defect, vertex_kernel=kernel,
        isotropic=isotropic, tol=tol, verdict=not failures, failures=failures,
        h=h, epsilon=M.epsilon)
