"""Small dense linear algebra for switching systems.

A control set is stored as a finite list of generator matrices; the set it
represents is their convex hull. All propagation uses exponentials of convex
combinations of generators over piecewise-constant schedules.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
from scipy.optimize import lsq_linear

MAX_DIM = 6
DEFAULT_TOL = 1e-9


class InvalidInputError(ValueError):
    """Malformed or inconsistent numerical input."""


class ResourceError(RuntimeError):
    """A computation would exceed its size guard."""


def _as_matrix(a, d: int | None = None) -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if d is not None and a.shape[0] != d:
        raise InvalidInputError(f"expected a {d}x{d} matrix, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix has non-finite entries")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ControlSet:
    """Generators whose convex hull is the control set."""

    generators: tuple
    labels: tuple = ()

    def __init__(self, generators, labels=None):
        mats = [np.array(g, dtype=float) for g in generators]
        if not mats:
            raise InvalidInputError("a control set needs at least one generator")
        d = mats[0].shape[0] if mats[0].ndim == 2 else -1
        if not 1 <= d <= MAX_DIM:
            raise InvalidInputError(f"dimension must be in [1, {MAX_DIM}], got {d}")
        mats = tuple(_as_matrix(g, d) for g in mats)
        if labels is None:
            labels = tuple(f"A{i + 1}" for i in range(len(mats)))
        labels = tuple(str(s) for s in labels)
        if len(labels) != len(mats):
            raise InvalidInputError("labels and generators differ in length")
        object.__setattr__(self, "generators", mats)
        object.__setattr__(self, "labels", labels)

    @property
    def d(self) -> int:
        return self.generators[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.generators)

    def stack(self) -> np.ndarray:
        return np.stack(self.generators)

    def combine(self, weights) -> np.ndarray:
        """The matrix sum_j w_j A_j."""
        w = np.asarray(weights, dtype=float)
        if w.shape != (self.m,):
            raise InvalidInputError(
                f"weights have length {w.size}, system has {self.m} generators")
        return np.tensordot(w, self.stack(), axes=1)

    def __eq__(self, other):
        if not isinstance(other, ControlSet):
            return NotImplemented
        return self.m == other.m and self.labels == other.labels and all(
            np.array_equal(a, b) for a, b in zip(self.generators, other.generators))

    def __hash__(self):
        return hash((self.labels, tuple(g.tobytes() for g in self.generators)))


@dataclass(frozen=True)
class Schedule:
    """Piecewise-constant switching law: a list of (weights, duration)."""

    segments: tuple = field(default_factory=tuple)

    def __init__(self, segments=()):
        segs = []
        for weights, duration in segments:
            w = np.array(weights, dtype=float).ravel()
            if w.size == 0 or np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
                raise InvalidInputError(
                    f"segment weights must be a convex combination, got {w}")
            if not np.isfinite(duration) or duration <= 0:
                raise InvalidInputError(f"segment duration must be > 0, got {duration}")
            w.setflags(write=False)
            segs.append((w, float(duration)))
        object.__setattr__(self, "segments", tuple(segs))

    @classmethod
    def stationary(cls, index: int, duration: float, m: int) -> "Schedule":
        w = np.zeros(m)
        w[index] = 1.0
        return cls([(w, duration)])

    @property
    def duration(self) -> float:
        return float(sum(t for _, t in self.segments))

    def __add__(self, other: "Schedule") -> "Schedule":
        return Schedule(self.segments + other.segments)


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    points: np.ndarray


def mat_exp(a, t: float = 1.0) -> np.ndarray:
    """Return exp(t A).

    Backed by scipy's scaling-and-squaring Pade approximant.
    """
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)) or not np.isfinite(t):
        raise InvalidInputError("mat_exp needs finite input")
    if a.ndim == 0:
        return np.array([[np.exp(t * a)]])
    return scipy.linalg.expm(t * a)


def _check_schedule(sys: ControlSet, sched: Schedule):
    for w, _ in sched.segments:
        if w.size != sys.m:
            raise InvalidInputError(
                f"schedule weights have length {w.size}, system has {sys.m} generators")


def fundamental_matrix(sys: ControlSet, sched: Schedule) -> np.ndarray:
    """Pi(T) for the schedule; the latest segment is the leftmost factor."""
    _check_schedule(sys, sched)
    pi = np.eye(sys.d)
    for w, duration in sched.segments:
        pi = mat_exp(sys.combine(w), duration) @ pi
    return pi


def simulate(sys: ControlSet, x0, sched: Schedule, dt: float) -> Trajectory:
    """Sample x(t) = Pi(t) x0 every dt and at every segment boundary."""
    if not dt > 0:
        raise InvalidInputError("dt must be positive")
    _check_schedule(sys, sched)
    x = np.asarray(x0, dtype=float)
    if x.shape != (sys.d,):
        raise InvalidInputError(f"x0 must have length {sys.d}")
    times, points = [0.0], [x.copy()]
    t0 = 0.0
    for w, duration in sched.segments:
        a = sys.combine(w)
        n = max(1, int(np.ceil(duration / dt - 1e-12)))
        taus = np.minimum(np.arange(1, n + 1) * dt, duration)
        taus[-1] = duration
        for tau in taus:
            times.append(t0 + tau)
            points.append(mat_exp(a, tau) @ x)
        x = mat_exp(a, duration) @ x
        t0 += duration
    return Trajectory(np.array(times), np.array(points))


def shift(sys: ControlSet, beta: float) -> ControlSet:
    """The system A - beta I."""
    eye = np.eye(sys.d)
    return ControlSet([g - beta * eye for g in sys.generators], sys.labels)


def _orth(vectors: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal basis (columns) of the span of the given columns."""
    if vectors.size == 0:
        return vectors.reshape(vectors.shape[0], 0)
    u, s, _ = np.linalg.svd(vectors, full_matrices=False)
    scale = max(1.0, s[0]) if s.size else 1.0
    return u[:, s > tol * scale]


def invariant_closure(generators: Sequence[np.ndarray], vectors, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the smallest common invariant subspace containing `vectors`."""
    vectors = np.asarray(vectors, dtype=float)
    if vectors.ndim == 1:
        vectors = vectors[:, None]
    basis = _orth(vectors, tol)
    d = basis.shape[0]
    while 0 < basis.shape[1] < d:
        images = np.hstack([basis] + [g @ basis for g in generators])
        grown = _orth(images, tol)
        if grown.shape[1] == basis.shape[1]:
            break
        basis = grown
    return basis


def _matrix_algebra(generators: Sequence[np.ndarray], tol: float) -> list[np.ndarray]:
    """Basis of the unital algebra generated by the matrices."""
    d = generators[0].shape[0]
    basis = [np.eye(d) / np.sqrt(d)]
    flat = np.eye(d).reshape(1, -1) / np.sqrt(d)
    frontier = list(basis)
    while frontier and len(basis) < d * d:
        new = []
        for b in frontier:
            for g in generators:
                c = (g @ b).ravel()
                c = c - flat.T @ (flat @ c)
                nrm = np.linalg.norm(c)
                if nrm > tol * max(1.0, np.linalg.norm(g @ b)):
                    c = c / nrm
                    flat = np.vstack([flat, c])
                    mat = c.reshape(d, d)
                    basis.append(mat)
                    new.append(mat)
        frontier = new
    return basis


def irreducibility_test(sys: ControlSet, tol: float = DEFAULT_TOL, seed: int = 0):
    """Look for a proper common invariant subspace of the generators.

    Returns ``None`` when the system is irreducible, otherwise an orthonormal
    basis (d x k array, 0 < k < d) of a common invariant subspace.

    Probes are the seeded random vectors plus the real eigenvectors (and
    real/imaginary pairs) of a random element of the generated algebra:
    every common invariant subspace contains such an eigen-direction.
    """
    if not 0 < tol <= 1e-4:
        raise InvalidInputError("tol must lie in (0, 1e-4]")
    d = sys.d
    if d == 1:
        return None
    rng = np.random.default_rng(seed)
    probes = [rng.standard_normal(d) for _ in range(d)]
    algebra = _matrix_algebra(sys.generators, tol)
    coeffs = rng.standard_normal(len(algebra))
    element = sum(c * b for c, b in zip(coeffs, algebra))
    vals, vecs = np.linalg.eig(element)
    for k in range(d):
        v = vecs[:, k]
        if abs(vals[k].imag) <= tol * max(1.0, abs(vals[k])):
            probes.append(np.real(v))
        elif vals[k].imag > 0:
            probes.append(np.column_stack([v.real, v.imag]))
    best = None
    for p in probes:
        basis = invariant_closure(sys.generators, p, tol)
        if 0 < basis.shape[1] < d and (best is None or basis.shape[1] < best.shape[1]):
            best = basis
    return best


def point_in_hull(q, pts, tol: float = DEFAULT_TOL) -> bool:
    """True iff q lies within Euclidean distance tol of co(pts)."""
    return hull_distance(q, pts) <= tol


def hull_distance(q, pts) -> float:
    """Euclidean distance from q to the convex hull of the rows of pts.

    Solves the weight-augmented bounded least squares problem
    min ||P^T lam - q|| with sum(lam) = 1 enforced by a heavy penalty row,
    then measures the distance to the resulting hull point exactly.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    q = np.asarray(q, dtype=float)
    if pts.shape[0] == 0:
        raise InvalidInputError("point set is empty")
    if pts.shape[0] == 1:
        return float(np.linalg.norm(pts[0] - q))
    scale = max(1.0, float(np.abs(pts).max()), float(np.abs(q).max()))
    best = np.inf
    for weight in (1e3, 1e6):
        a = np.vstack([pts.T / scale, weight * np.ones(pts.shape[0])])
        b = np.concatenate([q / scale, [weight]])
        # bvls rather than nnls: scipy 1.15's nnls can return a wrong
        # solution with zero reported residual
        lam = lsq_linear(a, b, bounds=(0.0, np.inf), method="bvls", tol=1e-14).x
        if lam.sum() <= 0:
            continue
        lam = lam / lam.sum()
        best = min(best, float(np.linalg.norm(pts.T @ lam - q)))
    nearest_vertex = float(np.min(np.linalg.norm(pts - q, axis=1)))
    return min(best, nearest_vertex)
