"""Random credal networks and queries for testing and benchmarks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .credal import CredalSpec, Polytope, vertices_from_eps_contamination
from .network import DiscreteNetwork, make_network


@dataclass(eq=False)
class RandomInstance:
    net: DiscreteNetwork
    specs: list[CredalSpec]
    q: int
    a: int
    evidence: dict[int, int]


def _dirichlet(rng: np.random.Generator, k: int, size=None, conc: float = 1.0) -> np.ndarray:
    return rng.dirichlet(np.full(k, conc), size=size)


def random_polytope(rng: np.random.Generator, card: int, n_vertices: int) -> Polytope:
    """Hull of Dirichlet points, or now and then an eps-contaminated class."""
    if n_vertices >= card and rng.random() < 0.3:
        return vertices_from_eps_contamination(_dirichlet(rng, card), float(rng.uniform(0.05, 0.5)))
    return Polytope(card, _dirichlet(rng, card, size=n_vertices))


def random_network(rng: np.random.Generator, n_vars: int, max_card: int = 3,
                   max_parents: int = 2) -> DiscreteNetwork:
    cards = [int(rng.integers(2, max_card + 1)) for _ in range(n_vars)]
    parents = []
    for i in range(n_vars):
        k = int(rng.integers(0, min(i, max_parents) + 1))
        parents.append(sorted(int(p) for p in rng.choice(i, size=k, replace=False)) if k else [])
    tables = []
    for i in range(n_vars):
        configs = int(np.prod([cards[p] for p in parents[i]], dtype=int))
        tables.append(_dirichlet(rng, cards[i], size=configs).T)
    return make_network(cards, parents, tables)


def random_spec(rng: np.random.Generator, net: DiscreteNetwork, node: int,
                max_vertices: int = 4, max_arity: int = 16) -> CredalSpec:
    card = net.variables[node].cardinality
    configs = net.parent_configurations(node)
    if configs == 1:
        return CredalSpec.root(node, random_polytope(rng, card, int(rng.integers(1, max_vertices + 1))))
    if rng.random() < 0.5:
        m = int(rng.integers(1, max_vertices + 1))
        return CredalSpec.joint(node, _dirichlet(rng, card, size=(m, configs)).transpose(0, 2, 1))
    # keep the separate-mode table count small: at most max_arity combinations
    sizes, arity = [], 1
    for _ in range(configs):
        s = int(rng.integers(1, max_vertices + 1))
        while arity * s > max_arity:
            s -= 1
        sizes.append(s)
        arity *= s
    return CredalSpec.separate(node, [random_polytope(rng, card, s) for s in sizes])


def random_instance(rng: np.random.Generator, max_vars: int = 10, max_credal: int = 3,
                    max_vertices: int = 4, max_card: int = 3, max_evidence: int = 2,
                    min_vars: int = 2) -> RandomInstance:
    n = int(rng.integers(min_vars, max_vars + 1))
    net = random_network(rng, n, max_card=max_card)
    k = int(rng.integers(1, min(max_credal, n) + 1))
    credal = sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    specs = [random_spec(rng, net, v, max_vertices) for v in credal]
    q = int(rng.integers(n))
    a = int(rng.integers(net.variables[q].cardinality))
    others = [v for v in range(n) if v != q]
    n_ev = int(rng.integers(0, min(max_evidence, len(others)) + 1))
    ev_vars = rng.choice(others, size=n_ev, replace=False) if n_ev else []
    evidence = {int(v): int(rng.integers(net.variables[v].cardinality)) for v in ev_vars}
    return RandomInstance(net, specs, q, a, evidence)


def random_corpus(seed: int, size: int, **kwargs) -> list[RandomInstance]:
    rng = np.random.default_rng(seed)
    return [random_instance(rng, **kwargs) for _ in range(size)]
