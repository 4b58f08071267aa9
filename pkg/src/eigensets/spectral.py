"""Growth rates, invariant norms and isotropy.

The exponent of a switching system is bracketed from below by spectral radii
of products of step exponentials and from above by induced norms: ellipsoidal
ones, and a polytope norm produced by the max-iteration that also
approximates the invariant norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from ._kernels import star_hull
from .core import ControlSet, InvalidInputError, ResourceError, mat_exp, shift

MAX_PRODUCTS = 10_000_000
_CHUNK = 1 << 16


@dataclass(frozen=True)
class ExponentBracket:
    lower: float
    upper: float
    h: float
    depth: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def to_dict(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "h": self.h, "depth": self.depth}


@dataclass(frozen=True)
class IsotropyCertificate:
    s: float
    P: np.ndarray
    T: np.ndarray
    residual: float


def spectral_abscissa(a) -> float:
    """Largest real part of the eigenvalues."""
    a = np.asarray(a, dtype=float)
    return float(np.max(np.linalg.eigvals(a).real))


# direction grids and polytope gauges


def _icosphere(subdivisions: int) -> np.ndarray:
    t = (1 + math.sqrt(5)) / 2
    verts = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t),
             (0, -1, -t), (0, 1, -t), (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4),
             (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8),
             (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    for _ in range(subdivisions):
        cache: dict = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                v = verts[i] + verts[j]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts)


def direction_grid(d: int, n: int | None = None, seed: int = 0) -> np.ndarray:
    """Unit vectors covering the sphere: angles (d=2), an icosphere (d=3), random otherwise."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        n = 720 if n is None else n
        if n < 4:
            raise InvalidInputError("grid needs at least 4 directions")
        ang = 2 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(ang), np.sin(ang)])
    if d == 3 and n is None:
        return _icosphere(4)
    if d == 3:
        level = 0
        while 10 * 4 ** level + 2 < n:
            level += 1
        return _icosphere(level)
    n = 200 * d if n is None else n
    g = np.random.default_rng(seed).standard_normal((n, d))
    g = np.vstack([g, -g])
    return g / np.linalg.norm(g, axis=1)[:, None]


def gauge_facets(points: np.ndarray) -> np.ndarray:
    """Rows a_k with gauge(x) = max_k a_k . x for the hull of points (origin interior)."""
    d = points.shape[1]
    if d == 1:
        hi, lo = points.max(), points.min()
        if not (hi > 0 > lo):
            raise InvalidInputError("origin is not interior to the point hull")
        return np.array([[1.0 / hi], [1.0 / lo]])
    try:
        eq = ConvexHull(points).equations
    except QhullError as exc:
        raise InvalidInputError(f"degenerate norm ball: {exc}") from None
    off = -eq[:, -1]
    if np.any(off <= 0):
        raise InvalidInputError("origin is not interior to the point hull")
    return eq[:, :-1] / off[:, None]


def _gauge(facets: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.max(x @ facets.T, axis=-1)


class _PlanarGauge:
    """Gauge of a polygon around the origin, evaluated by angular search."""

    def __init__(self, points: np.ndarray):
        ang = np.arctan2(points[:, 1], points[:, 0])
        order = np.argsort(ang, kind="stable")
        keep = order[star_hull(np.ascontiguousarray(points[order]))]
        keep = keep[np.argsort(ang[keep], kind="stable")]
        self.angles = ang[keep]
        verts = points[keep]
        nxt = np.roll(verts, -1, axis=0)
        # edge k joins vertex k and k+1; its line is a . x = 1
        det = verts[:, 0] * nxt[:, 1] - verts[:, 1] * nxt[:, 0]
        if np.any(det <= 0):
            raise InvalidInputError("origin is not interior to the point hull")
        self.edges = np.column_stack([nxt[:, 1] - verts[:, 1], verts[:, 0] - nxt[:, 0]]) / det[:, None]

    def __call__(self, x: np.ndarray, phi: np.ndarray | None = None) -> np.ndarray:
        if phi is None:
            phi = np.arctan2(x[:, 1], x[:, 0])
        k = (np.searchsorted(self.angles, phi, side="right") - 1) % len(self.angles)
        return np.einsum("ij,ij->i", self.edges[k], x)


def _gauge_of(points: np.ndarray):
    if points.shape[1] == 2:
        return _PlanarGauge(points)
    facets = gauge_facets(points)
    return lambda x: _gauge(facets, x)


@dataclass
class NormApprox:
    """Polytope approximation of an invariant norm.

    The unit ball is the convex hull of directions[i] / values[i]; the norm of
    any vector is its gauge with respect to that hull.
    """

    d: int
    directions: np.ndarray
    values: np.ndarray
    h: float
    converged: bool
    error_bound: float
    convexified: bool = True
    horizon: float = 1.0
    drift_rate: float = 0.0
    growth: float = 1.0
    iterations: int = 0
    _facets: np.ndarray | None = field(default=None, repr=False, compare=False)

    def facets(self) -> np.ndarray:
        if self._facets is None:
            self._facets = gauge_facets(self.ball_points())
        return self._facets

    def ball_points(self) -> np.ndarray:
        return self.directions / self.values[:, None]

    def __call__(self, x) -> np.ndarray | float:
        x = np.asarray(x, dtype=float)
        out = _gauge(self.facets(), np.atleast_2d(x))
        return float(out[0]) if x.ndim == 1 else out

    def log_norm(self, a: np.ndarray) -> float:
        """Logarithmic norm of a matrix in this polytope norm."""
        return _polytope_log_norm(self.facets(), self.ball_points(), a)

    def to_dict(self) -> dict:
        return {
            "dim": self.d,
            "directions": self.directions.tolist(),
            "values": self.values.tolist(),
            "h": self.h,
            "converged": self.converged,
            "error_bound": self.error_bound,
            "horizon": self.horizon,
            "drift_rate": self.drift_rate,
            "iterations": self.iterations,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NormApprox":
        dirs = np.asarray(data["directions"], dtype=float)
        vals = np.asarray(data["values"], dtype=float)
        d = int(data["dim"])
        if dirs.ndim != 2 or dirs.shape != (len(vals), d):
            raise InvalidInputError("directions and values do not match the dimension")
        if np.any(vals <= 0):
            raise InvalidInputError("norm values must be positive")
        return cls(d, dirs, vals, float(data["h"]), bool(data["converged"]),
                   float(data["error_bound"]), horizon=float(data.get("horizon", 1.0)),
                   drift_rate=float(data.get("drift_rate", 0.0)),
                   iterations=int(data.get("iterations", 0)))


def _polytope_log_norm(facets: np.ndarray, ball: np.ndarray, a: np.ndarray, tol: float = 1e-9) -> float:
    """max over ball vertices w and facets a_k active at w of a_k . (A w)."""
    vals = ball @ facets.T
    active = vals >= 1 - tol
    rates = (ball @ a.T) @ facets.T
    return float(np.max(np.where(active, rates, -np.inf)))


def _max_iteration(exps: np.ndarray, dirs: np.ndarray, values: np.ndarray,
                   max_iter: int, tol: float):
    """Iterate f <- max_j f(E_j .) on the grid, renormalized so min f = 1.

    Returns (values, growth, iterations, converged). Each sweep evaluates the
    current polytope norm, so the iterate is convex by construction.
    """
    m, n = len(exps), len(dirs)
    images = np.einsum("mij,nj->mni", exps, dirs).reshape(m * n, -1)
    growth = 1.0
    converged = False
    it = 0
    kwargs = {"phi": np.arctan2(images[:, 1], images[:, 0])} if dirs.shape[1] == 2 else {}
    for it in range(1, max_iter + 1):
        gauge = _gauge_of(dirs / values[:, None])
        new = gauge(images, **kwargs).reshape(m, n).max(axis=0)
        growth = float(new.min())
        new = new / growth
        change = float(np.max(np.abs(new - values)))
        values = new
        if change <= tol:
            converged = True
            break
    return values, growth, it, converged


def _convexify(dirs: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Values of the gauge of the hull of the sampled ball points."""
    return _gauge(gauge_facets(dirs / values[:, None]), dirs)


def barabanov_norm(sys_normed: ControlSet, h: float = 0.01, grid_n: int | None = None,
                   max_iter: int = 100000, tol: float = 1e-9, seed: int = 0) -> NormApprox:
    """Approximate the invariant norm by max-iteration on a direction grid.

    The result is a polytope norm. Its error bound is the worst relative
    increase it allows along any trajectory of length `horizon`, derived from
    the largest logarithmic norm of the generators.
    """
    if not h > 0:
        raise InvalidInputError("h must be positive")
    d = sys_normed.d
    dirs = direction_grid(d, grid_n, seed)
    exps = np.stack([mat_exp(g, h) for g in sys_normed.generators])
    values, growth, iters, converged = _max_iteration(exps, dirs, np.ones(len(dirs)), max_iter, tol)
    values = _convexify(dirs, values)
    values = values / values.min()
    approx = NormApprox(d, dirs, values, h, converged, 0.0, growth=growth,
                        drift_rate=math.log(growth) / h, iterations=iters)
    eta = max(approx.log_norm(g) for g in sys_normed.generators)
    approx.error_bound = math.expm1(max(eta, 0.0) * approx.horizon)
    return approx


# exponent bracketing


def _products(exps: np.ndarray, depth: int):
    """Yield (k, batch) covering every product of k step exponentials, k = 1..depth."""

    def expand(batch, k):
        yield k, batch
        if k == depth:
            return
        nxt = np.einsum("mij,njk->mnik", exps, batch).reshape(-1, *batch.shape[1:])
        for start in range(0, len(nxt), _CHUNK):
            yield from expand(nxt[start:start + _CHUNK], k + 1)

    yield from expand(exps, 1)


def _radius(batch: np.ndarray) -> np.ndarray:
    return np.max(np.abs(np.linalg.eigvals(batch)), axis=-1)


def _chol_norms(batch: np.ndarray, l: np.ndarray, linv: np.ndarray) -> np.ndarray:
    """Induced norms ||L B L^-1||_2 for the ellipsoidal norm x -> ||L x||."""
    return np.linalg.norm(l @ batch @ linv, ord=2, axis=(-2, -1))


def _ellipsoid_candidates(sys: ControlSet, exps: np.ndarray) -> list[np.ndarray]:
    d = sys.d
    cands = [np.eye(d)]
    mats = list(sys.generators) + [np.mean(sys.stack(), axis=0)]
    for a in mats:
        vals, vecs = np.linalg.eig(a)
        if np.linalg.cond(vecs) > 1e8:
            continue
        w = np.linalg.inv(vecs)
        p = np.real(w.conj().T @ w)
        cands.append(0.5 * (p + p.T))
    p = np.eye(d)
    for _ in range(200):
        q = sum(e.T @ p @ e for e in exps)
        q = 0.5 * (q + q.T)
        p = q / np.trace(q) * d + 1e-9 * np.eye(d)
    cands.append(p)
    return cands


def _factor(p: np.ndarray):
    try:
        c = np.linalg.cholesky(p)
    except np.linalg.LinAlgError:
        return None
    l = c.T
    return l, np.linalg.inv(l)


def _greedy_lower(exps: np.ndarray, approx: NormApprox, h: float, steps: int) -> float:
    """Lower bound from spectral radii of products picked greedily in the polytope norm."""
    facets = approx.facets()
    x = approx.directions[0] / approx.values[0]
    burn = steps // 2
    best = -np.inf
    prod = np.eye(exps.shape[1])
    log_scale = 0.0
    for k in range(steps):
        imgs = np.einsum("mij,j->mi", exps, x)
        j = int(np.argmax(_gauge(facets, imgs)))
        x = imgs[j] / np.linalg.norm(imgs[j])
        if k < burn:
            continue
        prod = exps[j] @ prod
        nrm = np.linalg.norm(prod)
        if nrm == 0:
            break
        prod /= nrm
        log_scale += math.log(nrm)
        n = k - burn + 1
        rho = float(np.max(np.abs(np.linalg.eigvals(prod))))
        if rho > 0:
            best = max(best, (math.log(rho) + log_scale) / (n * h))
    return best


def lyapunov_exponent(sys: ControlSet, h: float = 0.01, depth: int = 8,
                      refine: bool = True, grid_n: int | None = None) -> ExponentBracket:
    """Bracket the exponent of the system.

    The lower bound maximizes spectral radii over all products of at most
    `depth` step exponentials, plus long products chosen greedily. The upper
    bound minimizes induced step norms over several ellipsoidal norms and, for
    planar systems, the polytope norm from the max-iteration. Both bound the exponent of the
    discretized system; the continuous one differs by O(h).
    """
    if not h > 0:
        raise InvalidInputError("h must be positive")
    if depth < 1:
        raise InvalidInputError("depth must be at least 1")
    m, d = sys.m, sys.d
    if float(m) ** depth > MAX_PRODUCTS:
        raise ResourceError(f"{m}^{depth} products exceed the limit {MAX_PRODUCTS}")
    exps = np.stack([mat_exp(g, h) for g in sys.generators])

    factors = [f for f in (_factor(p) for p in _ellipsoid_candidates(sys, exps)) if f is not None]
    upper = min(math.log(float(_chol_norms(exps, l, li).max())) / h for l, li in factors)
    best_factor = min(factors, key=lambda f: _chol_norms(exps, *f).max())

    lower = -np.inf
    top_norm = 0.0
    for k, batch in _products(exps, depth):
        rho = float(_radius(batch).max())
        if rho > 0:
            lower = max(lower, math.log(rho) / (k * h))
        if k == depth:
            top_norm = max(top_norm, float(_chol_norms(batch, *best_factor).max()))
    if top_norm > 0:
        upper = min(upper, math.log(top_norm) / (depth * h))

    if refine and m > 1 and d == 2 and upper - lower > 1e-6:
        approx = barabanov_norm(sys, h, grid_n=grid_n, max_iter=30000, tol=1e-10)
        facets, ball = approx.facets(), approx.ball_points()
        step_norm = max(float(_gauge(facets, ball @ e.T).max()) for e in exps)
        upper = min(upper, math.log(step_norm) / h)
        steps = max(200, int(round(20.0 / h)))
        lower = max(lower, _greedy_lower(exps, approx, h, steps))

    if not np.isfinite(lower):
        lower = upper
    if lower > upper:
        # both bounds are exact up to rounding here
        upper = lower
    return ExponentBracket(float(lower), float(upper), float(h), int(depth))


def normalize(sys: ControlSet, h: float = 0.01, depth: int = 8, **kwargs):
    """Shift the system by the bracket midpoint; returns (shifted system, estimate)."""
    br = lyapunov_exponent(sys, h, depth, **kwargs)
    return shift(sys, br.mid), br.mid


def dominant_regimes(sys: ControlSet, sigma_hat: float, tol: float = 1e-3) -> list[int]:
    """Generators whose spectral abscissa matches the system exponent."""
    return [j for j, g in enumerate(sys.generators) if abs(spectral_abscissa(g) - sigma_hat) <= tol]


# isotropy


def _sym_basis(d: int) -> list[np.ndarray]:
    out = []
    for i in range(d):
        for j in range(i, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = 1.0 if i == j else 1 / math.sqrt(2)
            out.append(e)
    return out


def _lyapunov_null_space(mats, tol: float) -> list[np.ndarray]:
    """Symmetric P (orthonormal basis) with B^T P + P B = 0 for every B."""
    d = mats[0].shape[0]
    basis = _sym_basis(d)
    cols = [np.concatenate([(b.T @ e + e @ b).ravel() for b in mats]) for e in basis]
    op = np.column_stack(cols)
    _, s, vt = np.linalg.svd(op)
    scale = max(1.0, s[0] if s.size else 1.0)
    rank = int(np.sum(s > tol * scale))
    null = vt[rank:]
    return [sum(c * e for c, e in zip(row, basis)) for row in null]


def _find_pd(null: list[np.ndarray], rng) -> np.ndarray | None:
    d = null[0].shape[0]
    stacked = np.stack(null)

    def is_pd(p):
        return np.linalg.eigvalsh(p)[0] > 1e-10 * max(1.0, np.abs(p).max())

    for p in null:
        for cand in (p, -p):
            if is_pd(cand):
                return cand
    # alternating projection between the null space and {P >= I}
    p = stacked.sum(axis=0)
    for _ in range(200):
        w, v = np.linalg.eigh(p)
        q = (v * np.maximum(w, 1.0)) @ v.T
        coef = np.tensordot(stacked, q, axes=([1, 2], [0, 1]))
        p = np.tensordot(coef, stacked, axes=1)
        if is_pd(p):
            return p
    for _ in range(1000):
        c = rng.standard_normal(len(null))
        p = np.tensordot(c, stacked, axes=1)
        for cand in (p, -p):
            if is_pd(cand):
                return cand
    return None


def isotropy_test(sys: ControlSet, tol: float = 1e-8, seed: int = 0) -> IsotropyCertificate | None:
    """Certificate that every generator is sI plus a skew matrix in some basis.

    Returns None when the traces disagree or no positive definite solution
    of the joint Lyapunov equations is found.
    """
    d = sys.d
    traces = np.array([np.trace(g) / d for g in sys.generators])
    scale = max(1.0, float(np.max(np.abs(sys.stack()))))
    if np.ptp(traces) > tol * scale:
        return None
    s = float(traces.mean())
    mats = [g - s * np.eye(d) for g in sys.generators]
    null = _lyapunov_null_space(mats, 1e-10)
    if not null:
        return None
    p = _find_pd(null, np.random.default_rng(seed))
    if p is None:
        return None
    p = 0.5 * (p + p.T)
    p = p * d / np.trace(p)
    residual = max(float(np.linalg.norm(b.T @ p + p @ b, 2)) for b in mats)
    if residual > tol * scale:
        return None
    t = np.linalg.cholesky(p).T
    return IsotropyCertificate(s, p, t, residual)
