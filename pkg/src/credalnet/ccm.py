"""Transparent-variable rewriting of a credal network.

Every credal node ``z`` gets a parentless transparent variable ``z'`` whose
value selects one vertex table of the node's credal set; ``z`` keeps its id
and gains ``z'`` as its last parent.  Transparent ids follow the original
variables, in the order of the credal specs.
"""

from __future__ import annotations

import itertools
from collections.abc import Iterator, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .credal import CredalSpec, check_specs
from .network import DiscreteNetwork, Factor, Variable


@dataclass(frozen=True)
class TransparentVariable:
    id: int
    source: int
    arity: int


@dataclass(frozen=True, eq=False)
class TransformedNetwork:
    """A precise network with transparent variables, plus where it came from.

    ``net`` holds uniform placeholder priors on the transparents.  ``base`` is
    the untouched input network and ``origin`` maps every id of ``net`` to
    the source variable id (a transparent maps to the node it controls).
    """

    net: DiscreteNetwork
    transparents: tuple[TransparentVariable, ...]
    origin: dict[int, int]
    base: DiscreteNetwork
    specs: tuple[CredalSpec, ...]

    @property
    def arities(self) -> tuple[int, ...]:
        return tuple(t.arity for t in self.transparents)

    @property
    def transparent_ids(self) -> tuple[int, ...]:
        return tuple(t.id for t in self.transparents)

    @property
    def n_combinations(self) -> int:
        return int(np.prod(self.arities, dtype=object))

    def assignments(self) -> Iterator[tuple[int, ...]]:
        """Every transparent assignment, first transparent most significant."""
        return itertools.product(*(range(m) for m in self.arities))

    def as_mapping(self, assignment: Sequence[int]) -> dict[int, int]:
        return {t.id: int(v) for t, v in zip(self.transparents, assignment)}

    def describe(self, assignment: Sequence[int]) -> dict[str, int]:
        """Assignment keyed by source-node name, for reporting."""
        return {self.base.variables[t.source].name: int(v)
                for t, v in zip(self.transparents, assignment)}


def apply_ccm(net: DiscreteNetwork, specs: Sequence[CredalSpec]) -> TransformedNetwork:
    specs = tuple(specs)
    check_specs(net, specs)
    variables = list(net.variables)
    parents = [list(ps) for ps in net.parents]
    cpts = list(net.cpts)
    transparents = []
    origin = {i: i for i in range(net.n)}
    for k, spec in enumerate(specs):
        tid = net.n + k
        m = spec.arity
        node = net.variables[spec.node]
        transparents.append(TransparentVariable(tid, spec.node, m))
        variables.append(Variable(tid, f"{node.name}'", m))
        parents.append([])
        cpts.append(Factor((tid,), np.full(m, 1.0 / m)))
        origin[tid] = spec.node
        # tables: (m, card, configs) -> (card, *parent cards, m)
        pa_shape = [net.variables[p].cardinality for p in net.parents[spec.node]]
        values = np.moveaxis(spec.vertex_tables(), 0, -1).reshape(
            node.cardinality, *pa_shape, m)
        parents[spec.node] = list(net.parents[spec.node]) + [tid]
        cpts[spec.node] = Factor((spec.node, *net.parents[spec.node], tid), values)
    transformed = DiscreteNetwork(tuple(variables), tuple(tuple(p) for p in parents), tuple(cpts))
    return TransformedNetwork(transformed, tuple(transparents), origin, net, specs)


def _assignment_tuple(t: TransformedNetwork, assignment) -> tuple[int, ...]:
    if isinstance(assignment, Mapping):
        missing = [tv.id for tv in t.transparents if tv.id not in assignment]
        if missing:
            raise ValueError(f"assignment misses transparent variables {missing}")
        values = tuple(int(assignment[tv.id]) for tv in t.transparents)
    else:
        values = tuple(int(v) for v in assignment)
        if len(values) != len(t.transparents):
            raise ValueError("assignment length differs from the number of transparents")
    for tv, v in zip(t.transparents, values):
        if not 0 <= v < tv.arity:
            raise ValueError(f"value {v} out of range for transparent {tv.id} (arity {tv.arity})")
    return values


def instantiate_transparent(t: TransformedNetwork, assignment) -> DiscreteNetwork:
    """The precise network obtained by fixing every transparent variable.

    ``assignment`` maps transparent ids to 0-based vertex-table indices (or
    is a sequence in transparent order).  Non-credal CPTs are shared with
    the base network.
    """
    values = _assignment_tuple(t, assignment)
    cpts = list(t.base.cpts)
    for spec, j in zip(t.specs, values):
        shape = t.base.cpts[spec.node].values.shape
        cpts[spec.node] = Factor(t.base.cpts[spec.node].scope,
                                 spec.vertex_table(j).reshape(shape))
    return DiscreteNetwork(t.base.variables, t.base.parents, tuple(cpts))


def with_transparent_priors(t: TransformedNetwork, theta: Sequence[np.ndarray]) -> DiscreteNetwork:
    """Transformed network with ``theta[i]`` as the prior of transparent ``i``.

    Entries are used as given (no renormalization), which keeps
    derivatives with respect to single entries meaningful.
    """
    if len(theta) != len(t.transparents):
        raise ValueError("one distribution per transparent variable is required")
    cpts = list(t.net.cpts)
    for tv, th in zip(t.transparents, theta):
        th = np.asarray(th, dtype=float).ravel()
        if th.size != tv.arity:
            raise ValueError(f"theta for transparent {tv.id} has {th.size} entries, arity {tv.arity}")
        cpts[tv.id] = Factor((tv.id,), th)
    return DiscreteNetwork(t.net.variables, t.net.parents, tuple(cpts))
