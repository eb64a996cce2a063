"""Polytopic credal sets: construction, vertex/facet conversion, membership.

A credal set over a variable with ``dim`` values lives in the probability
simplex.  It is stored either by its vertices (:class:`Polytope`) or by
linear rows ``a . p <= b`` on top of the implicit simplex constraints
(:class:`LinearConstraintSet`); the two forms convert into each other by
brute-force active-set enumeration, which is exact and adequate for the
small local structures credal networks attach to single nodes.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, InfeasibleCredalSetError, InvalidNetworkError
from .lp import LinearProgram, simplex_solve

TOL = 1e-9
ENUMERATION_DIM_CAP = 12
SUBSET_DIM_CAP = 16
#: Upper limit on the number of linear systems vertex enumeration may solve.
SYSTEM_CAP = 5_000_000


def _as_distribution(p, name="p") -> np.ndarray:
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or np.any(p < -TOL) or abs(p.sum() - 1.0) > TOL:
        raise ValueError(f"{name} must be a probability vector, got {p.tolist()}")
    return p


def dedupe(points: np.ndarray, tol: float = TOL) -> np.ndarray:
    """Drop points within ``tol`` (per coordinate) of an earlier point."""
    kept: list[np.ndarray] = []
    for x in points:
        if not any(np.max(np.abs(x - k)) <= tol for k in kept):
            kept.append(x)
    if not kept:
        return np.zeros((0, points.shape[1] if points.ndim == 2 else 0))
    return np.array(kept)


@dataclass(eq=False)
class LinearConstraintSet:
    """Rows ``A @ p <= b`` plus the implicit ``p >= 0, sum(p) == 1``."""

    dim: int
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.dim)
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.size:
            raise ValueError("constraint rows and bounds disagree in length")

    @classmethod
    def from_rows(cls, dim: int, rows: Iterable[tuple[Sequence[float], float]]):
        rows = list(rows)
        if any(len(a) != dim for a, _ in rows):
            raise ValueError(f"coefficient vectors must have length {dim}")
        A = np.array([a for a, _ in rows], dtype=float).reshape(-1, dim)
        return cls(dim, A, np.array([b for _, b in rows], dtype=float))

    @property
    def rows(self) -> list[tuple[np.ndarray, float]]:
        return [(a, float(b)) for a, b in zip(self.A, self.b)]

    def satisfied_by(self, p, tol: float = TOL) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(np.all(self.A @ p <= self.b + tol))

    def check_feasible(self) -> "LinearConstraintSet":
        if vertex_array(self).shape[0] == 0:
            raise InfeasibleCredalSetError("constraint set is empty")
        return self


@dataclass(eq=False)
class Polytope:
    """Convex hull of finitely many probability vectors."""

    dim: int
    vertices: np.ndarray
    constraints: LinearConstraintSet | None = field(default=None, repr=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float).reshape(-1, self.dim)
        if V.shape[0] == 0:
            raise InfeasibleCredalSetError("a polytope needs at least one vertex")
        if np.any(V < -TOL) or np.any(np.abs(V.sum(axis=1) - 1.0) > TOL):
            raise ValueError("vertices must be probability vectors")
        V = np.clip(V, 0.0, None)
        self.vertices = dedupe(V / V.sum(axis=1, keepdims=True))

    @classmethod
    def from_constraints(cls, c: LinearConstraintSet) -> "Polytope":
        return enumerate_polytope_vertices(c)

    @property
    def size(self) -> int:
        return self.vertices.shape[0]

    def facets(self) -> LinearConstraintSet:
        """Linear description; the defining rows when known, else computed facets."""
        if self.constraints is None:
            self.constraints = facets_from_vertices(self)
        return self.constraints

    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def same_vertices(self, other: "Polytope", tol: float = TOL) -> bool:
        return _same_point_sets(self.vertices, other.vertices, tol)


def _same_point_sets(X: np.ndarray, Y: np.ndarray, tol: float) -> bool:
    if X.shape != Y.shape:
        return False
    return (all(np.any(np.max(np.abs(Y - x), axis=1) <= tol) for x in X)
            and all(np.any(np.max(np.abs(X - y), axis=1) <= tol) for y in Y))


# ---------------------------------------------------------------------------
# Classes of credal sets
# ---------------------------------------------------------------------------


def vertices_from_eps_contamination(p, eps: float) -> Polytope:
    """Vertices ``(1 - eps) p + eps * delta_k`` for every outcome k."""
    p = _as_distribution(p)
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    V = (p - eps * p)[None, :] + eps * np.eye(p.size)
    return Polytope(p.size, V)


def _subset(outcomes: int, s) -> frozenset[int]:
    s = frozenset(int(x) for x in s)
    if not s or any(not 0 <= x < outcomes for x in s):
        raise ValueError(f"bad focal set {sorted(s)} for {outcomes} outcomes")
    return s


def vertices_from_belief_function(outcomes: int, masses: Mapping[Iterable[int], float]) -> Polytope:
    """Credal set of a basic mass assignment.

    Each vertex moves the whole mass of every focal set onto one of its
    elements.  Disjoint focal sets give the sub-sigma class.
    """
    focal = {}
    for s, m in masses.items():
        s = _subset(outcomes, s)
        if m < 0:
            raise ValueError("masses must be nonnegative")
        focal[s] = focal.get(s, 0.0) + float(m)
    if abs(sum(focal.values()) - 1.0) > TOL:
        raise ValueError(f"masses sum to {sum(focal.values())}, not 1")
    items = [(sorted(s), m) for s, m in focal.items() if m > 0]
    points = []
    for choice in itertools.product(*(s for s, _ in items)):
        v = np.zeros(outcomes)
        for x, (_, m) in zip(choice, items):
            v[x] += m
        points.append(v)
    return Polytope(outcomes, dedupe(np.array(points)))


def belief(masses: Mapping[Iterable[int], float], event: Iterable[int]) -> float:
    """Bel(A) = total mass of focal sets contained in A."""
    event = set(event)
    return float(sum(m for s, m in masses.items() if set(s) <= event))


def constraints_from_density_bounds(lower, upper) -> LinearConstraintSet:
    lower = np.asarray(lower, dtype=float).ravel()
    upper = np.asarray(upper, dtype=float).ravel()
    if lower.shape != upper.shape:
        raise ValueError("lower and upper bounds differ in length")
    if np.any(lower < 0) or np.any(lower > upper + TOL):
        raise ValueError("density bounds need 0 <= lower <= upper")
    if lower.sum() > 1.0 + TOL or upper.sum() < 1.0 - TOL:
        raise InfeasibleCredalSetError(
            f"density bounds are infeasible: sum(lower)={lower.sum()}, sum(upper)={upper.sum()}")
    dim = lower.size
    rows = []
    for x in range(dim):
        unit = np.eye(dim)[x]
        rows.append((-unit, -lower[x]))
        rows.append((unit, upper[x]))
    return LinearConstraintSet.from_rows(dim, rows)


def _nonempty_subsets(dim: int, proper: bool = True):
    top = (1 << dim) - 1
    for mask in range(1, top if proper else top + 1):
        yield np.array([(mask >> x) & 1 for x in range(dim)], dtype=float)


def constraints_from_total_variation(r, eps: float) -> LinearConstraintSet:
    """Rows ``|p(A) - r(A)| <= eps`` for every nonempty proper event A."""
    r = _as_distribution(r, "r")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if r.size > SUBSET_DIM_CAP:
        raise CapExceededError(f"total variation needs dim <= {SUBSET_DIM_CAP}")
    rows = []
    for ind in _nonempty_subsets(r.size):
        rA = float(ind @ r)
        rows.append((ind, rA + eps))
        rows.append((-ind, -(rA - eps)))
    return LinearConstraintSet.from_rows(r.size, rows)


def constraints_from_density_ratio(lower_measure, upper_measure) -> LinearConstraintSet:
    """Odds bounds ``l'(A)/l''(B) <= p(A)/p(B)`` over all disjoint event pairs.

    Each ordered pair (A, B) contributes ``l'(A) p(B) - l''(B) p(A) <= 0``;
    the upper odds of (A, B) is the lower odds of (B, A).
    """
    lo = np.asarray(lower_measure, dtype=float).ravel()
    hi = np.asarray(upper_measure, dtype=float).ravel()
    if lo.shape != hi.shape:
        raise ValueError("measures differ in length")
    if np.any(lo <= 0) or np.any(hi <= 0):
        raise ValueError("density ratio measures must be positive")
    if np.any(lo > hi + TOL):
        raise ValueError("density ratio needs lower measure <= upper measure")
    dim = lo.size
    if dim > ENUMERATION_DIM_CAP:
        raise CapExceededError(f"density ratio needs dim <= {ENUMERATION_DIM_CAP}")
    rows = []
    # each outcome goes to A, B or neither; both A and B nonempty
    for labels in itertools.product((0, 1, 2), repeat=dim):
        A = np.array([lab == 1 for lab in labels], dtype=float)
        B = np.array([lab == 2 for lab in labels], dtype=float)
        if A.any() and B.any():
            rows.append((float(lo @ A) * B - float(hi @ B) * A, 0.0))
    return LinearConstraintSet.from_rows(dim, rows)


# ---------------------------------------------------------------------------
# Vertex and facet enumeration
# ---------------------------------------------------------------------------


def _normalized_rows(c: LinearConstraintSet):
    A = np.vstack([c.A, -np.eye(c.dim)])
    b = np.concatenate([c.b, np.zeros(c.dim)])
    norms = np.linalg.norm(A, axis=1)
    zero = norms <= 1e-14
    if np.any(b[zero] < -TOL):
        return None
    A, b, norms = A[~zero], b[~zero], norms[~zero]
    A = A / norms[:, None]
    b = b / norms
    _, idx = np.unique(np.round(np.hstack([A, b[:, None]]), 12), axis=0, return_index=True)
    idx = np.sort(idx)
    return A[idx], b[idx]


def vertex_array(c: LinearConstraintSet, tol: float = TOL, chunk: int = 20000) -> np.ndarray:
    """All vertices of ``{p in simplex : A p <= b}``; an empty array when infeasible.

    Every choice of ``dim - 1`` active rows (including the nonnegativity
    facets) is solved together with ``sum(p) == 1``; feasible solutions are
    kept and deduplicated.
    """
    d = c.dim
    if d > ENUMERATION_DIM_CAP:
        raise CapExceededError(f"vertex enumeration supports dim <= {ENUMERATION_DIM_CAP}")
    normalized = _normalized_rows(c)
    if normalized is None:
        return np.zeros((0, d))
    A, b = normalized
    if d == 1:
        x = np.ones((1, 1))
        return x if np.all(A @ x[0] <= b + tol) else np.zeros((0, 1))
    k = d - 1
    total = math.comb(A.shape[0], k)
    if total > SYSTEM_CAP:
        raise CapExceededError(f"vertex enumeration would solve {total} systems")
    found = []
    combos = itertools.combinations(range(A.shape[0]), k)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=int)
        if block.size == 0:
            break
        M = np.empty((block.shape[0], d, d))
        M[:, :k, :] = A[block]
        M[:, k, :] = 1.0
        rhs = np.empty((block.shape[0], d))
        rhs[:, :k] = b[block]
        rhs[:, k] = 1.0
        ok = np.abs(np.linalg.det(M)) > 1e-10
        if not ok.any():
            continue
        X = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        feasible = np.all(X @ A.T <= b + tol, axis=1)
        found.append(X[feasible])
    if not found or sum(f.shape[0] for f in found) == 0:
        return np.zeros((0, d))
    X = np.vstack(found)
    X = np.clip(X, 0.0, None)
    X = X / X.sum(axis=1, keepdims=True)
    # coarse hash first; the tolerance pass only sees distinct candidates
    _, idx = np.unique(np.round(X, 10), axis=0, return_index=True)
    return dedupe(X[np.sort(idx)], tol)


def enumerate_polytope_vertices(c: LinearConstraintSet) -> Polytope:
    V = vertex_array(c)
    if V.shape[0] == 0:
        raise InfeasibleCredalSetError("constraint set is empty")
    return Polytope(c.dim, V, constraints=c)


def facets_from_vertices(poly: Polytope, tol: float = TOL) -> LinearConstraintSet:
    """Irredundant-up-to-duplicates rows describing ``conv(vertices)``.

    Works in the affine hull of the vertices: directions orthogonal to the
    hull (other than the all-ones direction, fixed by normalization) become
    pairs of opposite rows, and hull facets are found by testing every
    hyperplane through ``r`` vertices, ``r`` the hull dimension.
    """
    V = poly.vertices
    d = poly.dim
    v0 = V[0]
    D = V - v0
    _, s, vt = np.linalg.svd(D, full_matrices=True) if D.shape[0] > 1 else (None, np.zeros(0), None)
    rank = int(np.sum(s > 1e-10)) if s.size else 0
    U = vt[:rank].T if rank else np.zeros((d, 0))
    # orthogonal complement of span(U, ones)
    basis = np.hstack([U, np.ones((d, 1)) / math.sqrt(d)])
    q, _ = np.linalg.qr(basis, mode="complete")
    W = q[:, rank + 1:]
    rows: list[tuple[np.ndarray, float]] = []
    for w in W.T:
        rows.append((w, float(w @ v0)))
        rows.append((-w, float(-w @ v0)))
    if rank:
        Y = D @ U
        normals = []
        for S in itertools.combinations(range(V.shape[0]), rank):
            P = Y[list(S)]
            if rank == 1:
                n = np.ones(1)
            else:
                _, sv, nvt = np.linalg.svd(P[1:] - P[0])
                if np.sum(sv > 1e-10) != rank - 1:
                    continue
                n = nvt[-1]
            off = Y @ n - n @ P[0]
            if np.all(off <= tol):
                pass
            elif np.all(off >= -tol):
                n = -n
            else:
                continue
            normals.append((n, float(n @ P[0])))
        seen = []
        for n, beta in normals:
            key = np.append(n, beta)
            if any(np.max(np.abs(key - k)) <= 1e-9 for k in seen):
                continue
            seen.append(key)
            a = U @ n
            rows.append((a, beta + float(a @ v0)))
    return LinearConstraintSet.from_rows(d, rows)


def contains_distribution(c: LinearConstraintSet | Polytope, p) -> bool:
    """Membership test; convex-combination feasibility LP for vertex form."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size != c.dim:
        raise ValueError(f"distribution has {p.size} entries, credal set has dim {c.dim}")
    _as_distribution(p)
    if isinstance(c, LinearConstraintSet):
        return c.satisfied_by(p)
    V = c.vertices
    A_eq = np.vstack([V.T, np.ones((1, V.shape[0]))])
    b_eq = np.append(p, 1.0)
    sol = simplex_solve(LinearProgram.from_blocks(np.zeros(V.shape[0]), A_eq=A_eq, b_eq=b_eq))
    return sol.optimal


# ---------------------------------------------------------------------------
# Credal sets attached to network nodes
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CredalSpec:
    """Credal set for one node, per parent configuration or jointly.

    ``columns == "separate"``: one :class:`Polytope` per parent configuration,
    varying independently.  ``columns == "joint"``: ``tables`` holds whole
    conditional tables, shape ``(m, cardinality, n_configs)``, each one a
    vertex of a set spanning all columns at once.  Roots have one
    configuration, where the two modes coincide.
    """

    node: int
    cardinality: int
    n_configs: int
    columns: str = "separate"
    polytopes: tuple[Polytope, ...] = ()
    tables: np.ndarray | None = None

    def __post_init__(self):
        if self.columns == "separate":
            self.polytopes = tuple(self.polytopes)
            if len(self.polytopes) != self.n_configs:
                raise ValueError(f"node {self.node}: {len(self.polytopes)} polytopes for "
                                 f"{self.n_configs} parent configurations")
            if any(p.dim != self.cardinality for p in self.polytopes):
                raise ValueError(f"node {self.node}: polytope dimension != cardinality")
        elif self.columns == "joint":
            T = np.asarray(self.tables, dtype=float)
            T = T.reshape(-1, self.cardinality, self.n_configs)
            if T.shape[0] == 0:
                raise InfeasibleCredalSetError(f"node {self.node}: no vertices")
            if np.any(T < -TOL) or np.any(np.abs(T.sum(axis=1) - 1.0) > TOL):
                raise ValueError(f"node {self.node}: vertex tables must be conditional distributions")
            T = np.clip(T, 0.0, None)
            flat = dedupe(T.reshape(T.shape[0], -1))
            self.tables = flat.reshape(-1, self.cardinality, self.n_configs)
        else:
            raise ValueError(f"columns must be 'separate' or 'joint', got {self.columns!r}")

    @classmethod
    def separate(cls, node: int, polytopes: Sequence[Polytope]) -> "CredalSpec":
        polytopes = list(polytopes)
        return cls(node, polytopes[0].dim, len(polytopes), "separate", tuple(polytopes))

    @classmethod
    def root(cls, node: int, polytope: Polytope) -> "CredalSpec":
        return cls.separate(node, [polytope])

    @classmethod
    def joint(cls, node: int, tables) -> "CredalSpec":
        T = np.asarray(tables, dtype=float)
        if T.ndim == 2:
            T = T[:, :, None]
        return cls(node, T.shape[1], T.shape[2], "joint", tables=T)

    @property
    def arity(self) -> int:
        """Number of vertex conditional tables (values of the transparent variable)."""
        if self.columns == "joint":
            return self.tables.shape[0]
        return int(np.prod([p.size for p in self.polytopes], dtype=int))

    def choices(self, j: int) -> tuple[int, ...]:
        """Per-configuration vertex indices encoded by table index ``j`` (separate mode)."""
        sizes = [p.size for p in self.polytopes]
        return tuple(int(i) for i in np.unravel_index(j, sizes))

    def vertex_table(self, j: int) -> np.ndarray:
        if not 0 <= j < self.arity:
            raise ValueError(f"vertex table index {j} out of range for arity {self.arity}")
        if self.columns == "joint":
            return self.tables[j]
        picks = self.choices(j)
        return np.stack([p.vertices[k] for p, k in zip(self.polytopes, picks)], axis=1)

    def vertex_tables(self) -> np.ndarray:
        """All vertex tables, shape ``(arity, cardinality, n_configs)``."""
        if self.columns == "joint":
            return self.tables.copy()
        return np.stack([self.vertex_table(j) for j in range(self.arity)])

    def column_polytopes(self) -> list[Polytope]:
        """Per-configuration sets; in joint mode, projections of the joint set."""
        if self.columns == "separate":
            return list(self.polytopes)
        return [Polytope(self.cardinality, self.tables[:, :, k]) for k in range(self.n_configs)]

    def centroid_table(self) -> np.ndarray:
        """Mean of all vertex tables (per-column vertex means in separate mode)."""
        if self.columns == "joint":
            return self.tables.mean(axis=0)
        return np.stack([p.vertices.mean(axis=0) for p in self.polytopes], axis=1)


def check_specs(net, specs: Sequence[CredalSpec]) -> None:
    """Raise :class:`InvalidNetworkError` if ``specs`` do not fit ``net``."""
    problems = []
    seen = set()
    for spec in specs:
        if not 0 <= spec.node < net.n:
            problems.append(f"credal spec for unknown node {spec.node}")
            continue
        name = net.variables[spec.node].name
        if spec.node in seen:
            problems.append(f"node {name} has two credal specs")
        seen.add(spec.node)
        if spec.cardinality != net.variables[spec.node].cardinality:
            problems.append(f"credal spec for {name} has dimension {spec.cardinality}, "
                            f"node has {net.variables[spec.node].cardinality} values")
        if spec.n_configs != net.parent_configurations(spec.node):
            problems.append(f"credal spec for {name} covers {spec.n_configs} parent "
                            f"configurations, node has {net.parent_configurations(spec.node)}")
    if problems:
        raise InvalidNetworkError(problems)
