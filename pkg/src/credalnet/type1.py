"""Exact posterior bounds under the type-1 (strong extension) combination.

The type-1 joint set is the convex hull of the joints obtained by picking
one vertex table per credal node.  Posterior probabilities and expectations
are linear-fractional in the joint, so their extrema are attained at those
vertex combinations; we visit them through the transparent variables.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .ccm import TransformedNetwork, instantiate_transparent
from .errors import (CapExceededError, CredalNetError, IterationLimitError,
                     ZeroProbabilityEvidenceError)
from .network import JOINT_CAP, Evidence, check_evidence, eliminate

ENUMERATION_CAP = 10**6


class CrossCheckError(CredalNetError, RuntimeError):
    """Two independent routes to the same quantity disagree."""


@dataclass
class BoundsResult:
    """Lower/upper values with the transparent assignments attaining them."""

    lower: float
    upper: float
    argmin: tuple[int, ...] | None = None
    argmax: tuple[int, ...] | None = None
    method: str = ""
    work: dict = field(default_factory=dict)
    label: str = ""
    detail: dict = field(default_factory=dict)

    def __post_init__(self):
        self.lower = float(self.lower)
        self.upper = float(self.upper)
        if self.lower > self.upper + 1e-12:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower


@dataclass(eq=False)
class UtilityFunction:
    """Real-valued function of the joint values of ``targets``."""

    targets: tuple[int, ...]
    values: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.targets = tuple(int(v) for v in self.targets)
        self.values = np.asarray(self.values, dtype=float)
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("utility targets must be distinct")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("utility values must be finite")

    @classmethod
    def indicator(cls, q: int, values: Iterable[int], cardinality: int) -> "UtilityFunction":
        u = np.zeros(cardinality)
        u[list(values)] = 1.0
        return cls((q,), u)

    def shaped(self, cardinalities: Sequence[int]) -> np.ndarray:
        shape = tuple(cardinalities[v] for v in self.targets)
        return self.values.reshape(shape)


def event_values(cardinality: int, a) -> tuple[int, ...]:
    """Normalize a single value or a collection of values to a sorted tuple."""
    values = (int(a),) if np.isscalar(a) else tuple(sorted({int(v) for v in a}))
    if not values or any(not 0 <= v < cardinality for v in values):
        raise ValueError(f"event {a!r} is not a nonempty set of values below {cardinality}")
    return values


def complement_values(cardinality: int, a) -> tuple[int, ...]:
    event = set(event_values(cardinality, a))
    rest = tuple(v for v in range(cardinality) if v not in event)
    if not rest:
        raise ValueError("the complement of the whole sample space is empty")
    return rest


@dataclass(eq=False)
class VertexMasses:
    """p(x_q in a, e) and p(e) at every transparent assignment."""

    assignments: list[tuple[int, ...]]
    joint: np.ndarray
    evidence: np.ndarray

    @property
    def valid(self) -> np.ndarray:
        return self.evidence > 0.0

    @property
    def zero_mass(self) -> list[tuple[int, ...]]:
        return [a for a, ok in zip(self.assignments, self.valid) if not ok]

    def ratios(self) -> np.ndarray:
        out = np.full(self.joint.shape, np.nan)
        ok = self.valid
        out[ok] = self.joint[ok] / self.evidence[ok]
        return out


def _check_cap(t: TransformedNetwork, cap: int):
    if t.n_combinations > cap:
        raise CapExceededError(f"{t.n_combinations} transparent combinations exceed cap {cap}")


def vertex_masses(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                  cap: int = ENUMERATION_CAP) -> VertexMasses:
    """One variable-elimination run per transparent assignment."""
    e = check_evidence(t.base, e or {}, query=q)
    event = list(event_values(t.base.variables[q].cardinality, a))
    _check_cap(t, cap)
    assignments, joint, evidence = [], [], []
    for assignment in t.assignments():
        net = instantiate_transparent(t, assignment)
        marginal = eliminate(net, (q,), e).values
        assignments.append(assignment)
        joint.append(marginal[event].sum())
        evidence.append(marginal.sum())
    return VertexMasses(assignments, np.array(joint), np.array(evidence))


def _extremes(values: np.ndarray, valid: np.ndarray):
    if not valid.any():
        raise ZeroProbabilityEvidenceError("evidence has zero probability at every vertex")
    masked_lo = np.where(valid, values, np.inf)
    masked_hi = np.where(valid, values, -np.inf)
    return int(np.argmin(masked_lo)), int(np.argmax(masked_hi))


def bounds_by_enumeration(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                          cap: int = ENUMERATION_CAP) -> BoundsResult:
    """Exact bounds by one standard inference per transparent combination."""
    vm = vertex_masses(t, q, a, e, cap)
    r = vm.ratios()
    i, j = _extremes(r, vm.valid)
    return BoundsResult(r[i], r[j], vm.assignments[i], vm.assignments[j], "enum",
                        {"inferences": len(vm.assignments), "zero_mass": len(vm.zero_mass)})


def bounds_by_joint_max(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                        cap: int = JOINT_CAP) -> BoundsResult:
    """Exact bounds from a single elimination keeping every transparent variable.

    With uniform transparent priors p(a, e, z') and p(e, z') share the prior
    factor, so their ratio is the posterior of the instantiated network.
    """
    e = check_evidence(t.base, e or {}, query=q)
    event = list(event_values(t.base.variables[q].cardinality, a))
    size = t.n_combinations * t.base.variables[q].cardinality
    if size > cap:
        raise CapExceededError(f"joint over transparents has {size} entries, cap is {cap}")
    keep = (q, *t.transparent_ids)
    table = eliminate(t.net, keep, e).aligned(keep)
    joint = table[event].sum(axis=0).ravel()
    evidence = table.sum(axis=0).ravel()
    valid = evidence > 0.0
    ratios = np.where(valid, joint / np.where(valid, evidence, 1.0), np.nan)
    i, j = _extremes(ratios, valid)
    shape = t.arities
    argmin = tuple(int(v) for v in np.unravel_index(i, shape))
    argmax = tuple(int(v) for v in np.unravel_index(j, shape))
    return BoundsResult(ratios[i], ratios[j], argmin, argmax, "joint",
                        {"inferences": 1, "zero_mass": int((~valid).sum())})


# ---------------------------------------------------------------------------
# Expected utility and variance
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class VertexPosteriors:
    """Posterior over the free utility targets at each valid vertex.

    ``utility`` is the utility restricted to the evidence and flattened in
    the same order as each row of ``posteriors``.
    """

    assignments: list[tuple[int, ...]]
    posteriors: np.ndarray
    utility: np.ndarray
    zero_mass: int

    def expectations(self, w: np.ndarray | None = None) -> np.ndarray:
        """Expected value of ``w`` (default: the utility) under each vertex posterior."""
        return self.posteriors @ (self.utility if w is None else w)


def vertex_posteriors(t: TransformedNetwork, u: UtilityFunction, e: Evidence | None = None,
                      cap: int = ENUMERATION_CAP) -> VertexPosteriors:
    e = check_evidence(t.base, e or {})
    _check_cap(t, cap)
    cards = t.base.cardinalities
    values = u.shaped(cards)
    index = tuple(e[v] if v in e else slice(None) for v in u.targets)
    free = [v for v in u.targets if v not in e]
    restricted = values[index]
    utility = np.transpose(restricted, np.argsort(free)).ravel() if free else restricted.ravel()
    keep = sorted(free)
    assignments, rows, zero = [], [], 0
    for assignment in t.assignments():
        joint = eliminate(instantiate_transparent(t, assignment), keep, e).values.ravel()
        total = joint.sum()
        if total <= 0.0:
            zero += 1
            continue
        assignments.append(assignment)
        rows.append(joint / total)
    if not rows:
        raise ZeroProbabilityEvidenceError("evidence has zero probability at every vertex")
    return VertexPosteriors(assignments, np.array(rows), utility, zero)


def expectation_bounds(t: TransformedNetwork, u: UtilityFunction, e: Evidence | None = None,
                       cap: int = ENUMERATION_CAP) -> BoundsResult:
    vp = vertex_posteriors(t, u, e, cap)
    m = vp.expectations()
    i, j = int(np.argmin(m)), int(np.argmax(m))
    return BoundsResult(m[i], m[j], vp.assignments[i], vp.assignments[j], "enum",
                        {"inferences": len(vp.assignments) + vp.zero_mass,
                         "zero_mass": vp.zero_mass}, label=u.name)


def _max_concave_over_hull(means: np.ndarray, seconds: np.ndarray):
    """Max of ``s - m**2`` over conv{(m_j, s_j)}; returns (value, j, k, weight on j)."""
    var = seconds - means**2
    best = (float(var.max()), int(var.argmax()), int(var.argmax()), 1.0)
    for j, k in itertools.combinations(range(means.size), 2):
        dm = means[j] - means[k]
        ds = seconds[j] - seconds[k]
        if dm == 0.0:
            continue
        lam = min(1.0, max(0.0, (ds - 2.0 * means[k] * dm) / (2.0 * dm * dm)))
        m = means[k] + lam * dm
        value = seconds[k] + lam * ds - m * m
        if value > best[0]:
            best = (float(value), j, k, lam)
    return best


def variance_bounds(t: TransformedNetwork, u: UtilityFunction, e: Evidence | None = None,
                    cap: int = ENUMERATION_CAP, cross_check: bool = True,
                    tol: float = 1e-6) -> BoundsResult:
    """Lower and upper posterior variance of ``u``.

    Variance is concave along mixtures, so the lower value is attained at a
    vertex posterior while the upper value can sit on an edge between two
    of them; both are computed exactly from the vertex moments.  With
    ``cross_check`` the result is compared against the iterative
    expected-utility scheme of :func:`variance_bounds_iterative`.
    """
    vp = vertex_posteriors(t, u, e, cap)
    means = vp.expectations()
    seconds = vp.expectations(vp.utility**2)
    var = np.maximum(seconds - means**2, 0.0)
    i = int(np.argmin(var))
    upper, j, k, lam = _max_concave_over_hull(means, seconds)
    if j == k or lam == 1.0:
        argmax = vp.assignments[j]
    elif lam == 0.0:
        argmax = vp.assignments[k]
    else:
        argmax = None
    detail = {"upper_mixture": {"vertices": [vp.assignments[j], vp.assignments[k]],
                                "weight": lam}}
    if cross_check:
        lo_it, hi_it = _iterative_from_posteriors(vp)
        detail["iterative"] = (lo_it, hi_it)
        if abs(lo_it - var[i]) > tol or abs(hi_it - upper) > tol:
            raise CrossCheckError(f"variance bounds [{var[i]}, {upper}] disagree with the "
                                  f"iterative scheme [{lo_it}, {hi_it}]")
    return BoundsResult(var[i], max(upper, var[i]), vp.assignments[i], argmax, "enum",
                        {"inferences": len(vp.assignments) + vp.zero_mass,
                         "zero_mass": vp.zero_mass}, label=u.name, detail=detail)


def _ternary_min(f, lo: float, hi: float, tol: float, max_iter: int):
    it = 0
    while hi - lo > tol:
        it += 1
        if it > max_iter:
            raise IterationLimitError(f"mu search did not converge in {max_iter} iterations")
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if f(m1) <= f(m2):
            hi = m2
        else:
            lo = m1
    mu = 0.5 * (lo + hi)
    return mu, f(mu)


def _iterative_from_posteriors(vp: VertexPosteriors, tol: float = 1e-9, max_iter: int = 1000,
                               grid: int = 2**14 + 1):
    u = vp.utility
    lo, hi = float(u.min()), float(u.max())
    if hi - lo <= 0.0:
        return 0.0, 0.0

    def upper_exp(mu):
        return float(vp.expectations((u - mu) ** 2).max())

    # upper variance: min over mu of the upper expectation of (u - mu)^2 (convex in mu)
    _, upper = _ternary_min(upper_exp, lo, hi, tol, max_iter)

    # lower variance: min over mu of the lower expectation of (u - mu)^2, which is
    # not convex; iterate mu <- E_P[u] with P the minimizing vertex, from a grid of starts
    mu = np.linspace(lo, hi, grid)
    means = vp.expectations()
    for it in range(max_iter + 1):
        if it == max_iter:
            raise IterationLimitError(f"mu iteration did not converge in {max_iter} steps")
        E = vp.posteriors @ ((u[:, None] - mu[None, :]) ** 2)
        new = means[np.argmin(E, axis=0)]
        if np.max(np.abs(new - mu)) <= tol:
            mu = new
            break
        mu = new
    E = vp.posteriors @ ((u[:, None] - mu[None, :]) ** 2)
    lower = float(E.min())
    return lower, upper


def variance_bounds_iterative(t: TransformedNetwork, u: UtilityFunction,
                              e: Evidence | None = None, cap: int = ENUMERATION_CAP,
                              tol: float = 1e-9, max_iter: int = 1000) -> BoundsResult:
    """Variance bounds through repeated lower/upper expectations of ``(u - mu)^2``."""
    vp = vertex_posteriors(t, u, e, cap)
    lower, upper = _iterative_from_posteriors(vp, tol, max_iter)
    return BoundsResult(lower, max(lower, upper), method="iterative", label=u.name,
                        work={"inferences": len(vp.assignments) + vp.zero_mass})
