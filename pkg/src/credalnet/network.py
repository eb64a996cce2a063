"""Discrete Bayesian networks, factor algebra and exact variable elimination.

Factors are dense numpy arrays with one axis per variable in ``scope``.
Products keep their scope in ascending variable-id order so that results
can be compared entrywise against the brute-force joint.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import CapExceededError, InvalidNetworkError, ZeroProbabilityEvidenceError

#: Normalization tolerance for CPT columns.
CPT_TOLERANCE = 1e-9

#: Default cap on the number of entries of a brute-force joint table.
JOINT_CAP = 2**22

Evidence = Mapping[int, int]


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    cardinality: int
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.cardinality < 1:
            raise ValueError(f"variable {self.name!r} needs a positive cardinality")
        if self.labels and len(self.labels) != self.cardinality:
            raise ValueError(f"variable {self.name!r}: {len(self.labels)} labels for "
                             f"cardinality {self.cardinality}")

    def label(self, value: int) -> str:
        return self.labels[value] if self.labels else str(value)


@dataclass(frozen=True, eq=False)
class Factor:
    """A nonnegative table over an ordered scope of variable ids.

    ``values`` has one axis per scope entry; its row-major flattening is the
    table indexed by joint assignment of the scope.
    """

    scope: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        scope = tuple(int(v) for v in self.scope)
        if values.ndim != len(scope):
            raise ValueError(f"factor with scope {scope} has {values.ndim} axes")
        if len(set(scope)) != len(scope):
            raise ValueError(f"repeated variable in scope {scope}")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise ValueError("factor entries must be finite and nonnegative")
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "values", values)

    @property
    def cardinalities(self) -> dict[int, int]:
        return dict(zip(self.scope, self.values.shape))

    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def aligned(self, scope: Sequence[int]) -> np.ndarray:
        """Values transposed to the order of ``scope`` (a permutation of ours)."""
        if sorted(scope) != sorted(self.scope):
            raise ValueError(f"{tuple(scope)} is not a permutation of {self.scope}")
        return np.transpose(self.values, [self.scope.index(v) for v in scope])

    def allclose(self, other: "Factor", atol: float = 1e-12) -> bool:
        if sorted(self.scope) != sorted(other.scope):
            return False
        return bool(np.allclose(self.values, other.aligned(self.scope), rtol=0.0, atol=atol))

    def __repr__(self):
        return f"Factor(scope={self.scope}, values={self.values.tolist()})"


def scalar_factor(value: float) -> Factor:
    return Factor((), np.asarray(float(value)))


def _broadcast(f: Factor, scope: Sequence[int]) -> np.ndarray:
    order = sorted(f.scope)
    arr = f.aligned(order)
    shape = [f.values.shape[f.scope.index(v)] if v in f.scope else 1 for v in scope]
    return arr.reshape(shape)


def factor_product(f: Factor, g: Factor) -> Factor:
    """Pointwise product over the union of both scopes (ascending id order)."""
    cf, cg = f.cardinalities, g.cardinalities
    for v in set(cf) & set(cg):
        if cf[v] != cg[v]:
            raise ValueError(f"cardinality mismatch on variable {v}: {cf[v]} vs {cg[v]}")
    scope = tuple(sorted(set(f.scope) | set(g.scope)))
    return Factor(scope, _broadcast(f, scope) * _broadcast(g, scope))


def factor_marginalize(f: Factor, var: int) -> Factor:
    if var not in f.scope:
        raise ValueError(f"variable {var} not in scope {f.scope}")
    axis = f.scope.index(var)
    return Factor(f.scope[:axis] + f.scope[axis + 1:], f.values.sum(axis=axis))


def restrict_evidence(f: Factor, e: Evidence) -> Factor:
    """Slice out the entries consistent with ``e``; evidence variables leave the scope."""
    index = []
    scope = []
    for var, card in zip(f.scope, f.values.shape):
        if var in e:
            value = int(e[var])
            if not 0 <= value < card:
                raise ValueError(f"evidence value {value} out of range for variable {var}")
            index.append(value)
        else:
            index.append(slice(None))
            scope.append(var)
    return Factor(tuple(scope), f.values[tuple(index)])


@dataclass(frozen=True, eq=False)
class DiscreteNetwork:
    """Variables, parent lists and one CPT per variable.

    The CPT of variable ``i`` has scope ``(i, *parents[i])``; its values are
    indexed ``[x_i, pa_1, ..., pa_k]``.
    """

    variables: tuple[Variable, ...]
    parents: tuple[tuple[int, ...], ...]
    cpts: tuple[Factor, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        object.__setattr__(self, "parents", tuple(tuple(int(p) for p in ps) for ps in self.parents))
        object.__setattr__(self, "cpts", tuple(self.cpts))
        if not (len(self.variables) == len(self.parents) == len(self.cpts)):
            raise ValueError("variables, parents and cpts must have equal length")
        object.__setattr__(self, "_index", {v.name: v.id for v in self.variables})

    @property
    def n(self) -> int:
        return len(self.variables)

    @property
    def cardinalities(self) -> tuple[int, ...]:
        return tuple(v.cardinality for v in self.variables)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise KeyError(f"unknown variable {name!r}") from None

    def children(self, var: int) -> list[int]:
        return [i for i, ps in enumerate(self.parents) if var in ps]

    def parent_configurations(self, var: int) -> int:
        return int(np.prod([self.variables[p].cardinality for p in self.parents[var]], dtype=int))

    def cpt_table(self, var: int) -> np.ndarray:
        """CPT as a ``(cardinality, parent configurations)`` matrix (row-major parents)."""
        return self.cpts[var].values.reshape(self.variables[var].cardinality, -1)

    def topological_order(self) -> list[int]:
        order = _topological_order(self.parents)
        if order is None:
            raise InvalidNetworkError("cycle detected")
        return order

    def descendants(self, var: int) -> set[int]:
        seen: set[int] = set()
        stack = [var]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def with_cpt(self, var: int, values: np.ndarray) -> "DiscreteNetwork":
        cpts = list(self.cpts)
        cpts[var] = Factor(self.cpts[var].scope, np.asarray(values, dtype=float).reshape(
            self.cpts[var].values.shape))
        return DiscreteNetwork(self.variables, self.parents, cpts)

    def check(self) -> "DiscreteNetwork":
        violations = validate_network(self)
        if violations:
            raise InvalidNetworkError(violations)
        return self


def make_network(cardinalities: Sequence[int], parents: Sequence[Sequence[int]],
                 tables: Sequence[np.ndarray], names: Sequence[str] | None = None,
                 labels: Sequence[Sequence[str]] | None = None) -> DiscreteNetwork:
    """Build a network from plain arrays.

    ``tables[i]`` must reshape to ``(cardinalities[i], *parent cardinalities)``.
    """
    n = len(cardinalities)
    names = list(names) if names is not None else [f"x{i}" for i in range(n)]
    labels = list(labels) if labels is not None else [()] * n
    variables = [Variable(i, names[i], int(cardinalities[i]), tuple(labels[i])) for i in range(n)]
    cpts = []
    for i in range(n):
        shape = (cardinalities[i], *(cardinalities[p] for p in parents[i]))
        cpts.append(Factor((i, *parents[i]), np.asarray(tables[i], dtype=float).reshape(shape)))
    return DiscreteNetwork(tuple(variables), tuple(tuple(p) for p in parents), tuple(cpts))


def _topological_order(parents: Sequence[Sequence[int]]) -> list[int] | None:
    n = len(parents)
    indegree = [len(set(ps)) for ps in parents]
    children: list[list[int]] = [[] for _ in range(n)]
    for i, ps in enumerate(parents):
        for p in set(ps):
            if 0 <= p < n:
                children[p].append(i)
    ready = [i for i in range(n) if indegree[i] == 0]
    order = []
    while ready:
        i = min(ready)
        ready.remove(i)
        order.append(i)
        for c in children[i]:
            indegree[c] -= 1
            if indegree[c] == 0:
                ready.append(c)
    return order if len(order) == n else None


def validate_network(net: DiscreteNetwork) -> list[str]:
    """Return a list of human-readable violations; empty means well formed."""
    violations = []
    n = net.n
    names = [v.name for v in net.variables]
    if [v.id for v in net.variables] != list(range(n)):
        violations.append("variable ids are not dense 0..n-1")
    if len(set(names)) != len(names):
        violations.append("duplicate variable names")
    for i, ps in enumerate(net.parents):
        if any(not 0 <= p < n for p in ps):
            violations.append(f"variable {names[i]} has an unknown parent")
        elif i in ps or len(set(ps)) != len(ps):
            violations.append(f"variable {names[i]} has a repeated or self parent")
    if violations:
        return violations
    if _topological_order(net.parents) is None:
        violations.append("cycle detected")
    for i, (var, cpt) in enumerate(zip(net.variables, net.cpts)):
        scope = (i, *net.parents[i])
        shape = tuple(net.variables[v].cardinality for v in scope)
        if cpt.scope != scope:
            violations.append(f"cpt {var.name} has scope {cpt.scope}, expected {scope}")
            continue
        if cpt.values.shape != shape:
            violations.append(f"cpt {var.name} has shape {cpt.values.shape}, expected {shape}")
            continue
        sums = net.cpt_table(i).sum(axis=0)
        for k, s in enumerate(sums):
            if abs(s - 1.0) > CPT_TOLERANCE:
                violations.append(f"cpt {var.name} not normalized at pa={k}")
    return violations


def check_evidence(net: DiscreteNetwork, e: Evidence, query: int | None = None) -> dict[int, int]:
    out = {}
    for var, value in e.items():
        var, value = int(var), int(value)
        if not 0 <= var < net.n:
            raise ValueError(f"evidence on unknown variable {var}")
        if not 0 <= value < net.variables[var].cardinality:
            raise ValueError(f"evidence value {value} out of range for {net.variables[var].name}")
        out[var] = value
    if query is not None and query in out:
        raise ValueError(f"query variable {net.variables[query].name} is also evidence")
    return out


def min_degree_order(scopes: Iterable[Sequence[int]], to_eliminate: Iterable[int]) -> list[int]:
    """Greedy min-degree elimination order; ties go to the lowest id."""
    scopes = [set(s) for s in scopes]
    remaining = set(to_eliminate)
    order = []
    while remaining:
        def degree(v):
            nb = set()
            for s in scopes:
                if v in s:
                    nb |= s
            return len(nb - {v})
        best = min(remaining, key=lambda v: (degree(v), v))
        merged = set()
        rest = []
        for s in scopes:
            if best in s:
                merged |= s
            else:
                rest.append(s)
        rest.append(merged - {best})
        scopes = rest
        remaining.discard(best)
        order.append(best)
    return order


def eliminate(net: DiscreteNetwork, keep: Iterable[int], e: Evidence | None = None,
              order: Sequence[int] | None = None) -> Factor:
    """Unnormalized factor p(keep, e) by variable elimination.

    The result scope is ``keep`` in ascending order.  ``order`` overrides
    the min-degree heuristic; it must list every variable outside ``keep``
    and ``e`` exactly once.
    """
    e = dict(e or {})
    keep = sorted(set(int(k) for k in keep))
    if set(keep) & set(e):
        raise ValueError("kept variables may not be evidence")
    factors = [restrict_evidence(cpt, e) for cpt in net.cpts]
    hidden = set(range(net.n)) - set(keep) - set(e)
    if order is None:
        order = min_degree_order([f.scope for f in factors], hidden)
    elif sorted(order) != sorted(hidden):
        raise ValueError("elimination order must cover exactly the hidden variables")
    for var in order:
        involved = [f for f in factors if var in f.scope]
        factors = [f for f in factors if var not in f.scope]
        if involved:
            factors.append(factor_marginalize(reduce(factor_product, involved), var))
    result = reduce(factor_product, factors, scalar_factor(1.0))
    # kept variables absent from every restricted factor cannot occur: each has its own CPT
    return Factor(tuple(keep), result.aligned(keep)) if keep else result


def joint_prob_of_evidence(net: DiscreteNetwork, e: Evidence | None = None) -> float:
    e = check_evidence(net, e or {})
    return float(eliminate(net, (), e).values)


def posterior_marginal(net: DiscreteNetwork, q: int, e: Evidence | None = None,
                       order: Sequence[int] | None = None) -> np.ndarray:
    e = check_evidence(net, e or {}, query=q)
    joint = eliminate(net, (q,), e, order=order).values
    total = joint.sum()
    if total <= 0.0:
        raise ZeroProbabilityEvidenceError("evidence has zero probability")
    return joint / total


def brute_force_joint(net: DiscreteNetwork, cap: int = JOINT_CAP) -> Factor:
    """Full joint by literal evaluation of the product of CPT entries."""
    shape = net.cardinalities
    size = int(np.prod(shape, dtype=object))
    if size > cap:
        raise CapExceededError(f"joint has {size} entries, cap is {cap}")
    grids = [np.arange(c).reshape([-1 if k == j else 1 for k in range(net.n)])
             for j, c in enumerate(shape)]
    joint = np.ones(shape)
    for cpt in net.cpts:
        joint = joint * cpt.values[tuple(grids[v] for v in cpt.scope)]
    return Factor(tuple(range(net.n)), joint)
