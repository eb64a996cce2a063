"""Reference computations written independently of the package internals.

Only plain attribute access on networks and credal specs is used: the
joint is the product of CPT lookups over an explicit list of all joint
assignments, with no factor algebra and no elimination.
"""

import itertools
from pathlib import Path

import numpy as np

from credalnet.credal import CredalSpec, Polytope, vertices_from_eps_contamination
from credalnet.fileformat import (
    CredalBlock,
    CredalEntry,
    NetworkDocument,
    UtilityBlock,
    document_from_network,
)
from credalnet.generate import random_network
from credalnet.network import DiscreteNetwork, Variable, make_network

ROOT = Path(__file__).resolve().parent.parent
NETWORKS = ROOT / "networks"
DATA = Path(__file__).resolve().parent / "data"


def net_b():
    net = make_network([2, 2], [[], [0]], [[0.75, 0.25], [[0.1, 0.8], [0.9, 0.2]]],
                       names=["x", "y"])
    spec = CredalSpec.root(0, vertices_from_eps_contamination([0.75, 0.25], 0.2))
    return net, [spec]


def and_gate():
    """Two credal roots with p(1) in [0.6, 0.8] feeding z = x AND y."""
    poly = Polytope(2, np.array([[0.4, 0.6], [0.2, 0.8]]))
    table = np.zeros((2, 2, 2))
    for i, j in itertools.product(range(2), repeat=2):
        table[i & j, i, j] = 1.0
    net = make_network([2, 2, 2], [[], [], [0, 1]],
                       [[0.5, 0.5], [0.5, 0.5], table.reshape(2, 4)], names=["x", "y", "z"])
    return net, [CredalSpec.root(0, poly), CredalSpec.root(1, poly)]


def joint_by_lookup(cards, parents, tables):
    """Joint probability of every assignment (rows of ``assign``)."""
    assign = np.array(list(itertools.product(*(range(c) for c in cards))), dtype=int)
    prob = np.ones(len(assign))
    for i in range(len(cards)):
        config = np.zeros(len(assign), dtype=int)
        for p in parents[i]:
            config = config * cards[p] + assign[:, p]
        prob *= tables[i][assign[:, i], config]
    return assign, prob


def spec_tables(spec):
    """Every vertex conditional table of ``spec`` as a (card, configs) array."""
    if spec.columns == "joint":
        return [np.asarray(t) for t in spec.tables]
    columns = [p.vertices for p in spec.polytopes]
    return [np.stack(choice, axis=1) for choice in itertools.product(*columns)]


def oracle_bounds(net, specs, q, a, evidence):
    """Min and max of p(x_q = a | e) over every vertex combination."""
    cards = [v.cardinality for v in net.variables]
    parents = [list(p) for p in net.parents]
    base = [net.cpts[i].values.reshape(cards[i], -1) for i in range(len(cards))]
    ratios = []
    for combo in itertools.product(*(spec_tables(s) for s in specs)):
        tables = list(base)
        for spec, table in zip(specs, combo):
            tables[spec.node] = table
        assign, prob = joint_by_lookup(cards, parents, tables)
        keep = np.ones(len(assign), dtype=bool)
        for v, val in evidence.items():
            keep &= assign[:, v] == val
        den = prob[keep].sum()
        num = prob[keep & (assign[:, q] == a)].sum()
        if den > 0:
            ratios.append(num / den)
    return min(ratios), max(ratios)


def random_bounded_lp(rng, n):
    """Random LP in (c, A_ub, b_ub, A_eq, b_eq) form, bounded by ``sum x <= 5``."""
    m_ub = int(rng.integers(1, 5))
    A_ub = np.vstack([rng.uniform(-1, 1, size=(m_ub, n)), np.ones((1, n))])
    b_ub = np.append(rng.uniform(-0.5, 2.0, size=m_ub), 5.0)
    if rng.random() < 0.5:
        A_eq = rng.uniform(-1, 1, size=(1, n))
        b_eq = rng.uniform(-1, 1, size=1)
    else:
        A_eq = b_eq = None
    return rng.normal(size=n), A_ub, b_ub, A_eq, b_eq


def basic_feasible_solutions(A_ub, b_ub, A_eq=None, b_eq=None, tol=1e-9):
    """Every basic feasible solution of ``A_ub x <= b_ub, A_eq x = b_eq, x >= 0``.

    The system is put in equality form with one slack per inequality; every
    choice of linearly independent basis columns is solved directly.
    Returns the ``x`` part of each solution.
    """
    n = A_ub.shape[1]
    m_ub = A_ub.shape[0]
    rows = [np.hstack([A_ub, np.eye(m_ub)])]
    rhs = [b_ub]
    if A_eq is not None:
        rows.append(np.hstack([A_eq, np.zeros((A_eq.shape[0], m_ub))]))
        rhs.append(b_eq)
    A, b = np.vstack(rows), np.concatenate(rhs)
    m, N = A.shape
    out = []
    for basis in itertools.combinations(range(N), m):
        B = A[:, basis]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b)
        if np.all(xb >= -tol):
            x = np.zeros(N)
            x[list(basis)] = xb
            out.append(x[:n])
    return out


def bfs_optimum(c, A_ub, b_ub, A_eq=None, b_eq=None, tol=1e-9):
    """Minimum of c.x over all basic feasible solutions, or None when there are none."""
    points = basic_feasible_solutions(A_ub, b_ub, A_eq, b_eq, tol)
    return min(float(np.dot(c, x)) for x in points) if points else None


_WORDS = ("lo", "hi", "mid", "on", "off", "yes", "no", "a", "b", "c", "t0", "t1", "x-1", "y.2", "z'")


def _credal_block(rng, name, labels, configs):
    """A random valid credal block for a node with the given value labels."""
    card = len(labels)
    tag = rng.choice(["vertices", "eps-contaminated", "belief-function", "density-bounded",
                      "total-variation", "density-ratio", "constraints"])

    def dist():
        return tuple(float(x) for x in np.round(rng.dirichlet(np.ones(card)), 6)[:-1]) + (0.0,)

    def fixed(p):
        p = list(p)
        p[-1] = round(1.0 - sum(p[:-1]), 12)
        return tuple(p)

    entries = []
    for cfg in configs:
        base = fixed(dist())
        if tag == "vertices":
            entries += [CredalEntry(f"v{k + 1}", fixed(dist()), cfg)
                        for k in range(int(rng.integers(1, 4)))]
        elif tag in ("eps-contaminated", "total-variation"):
            entries += [CredalEntry("base", base, cfg),
                        CredalEntry("eps", (float(np.round(rng.uniform(0.05, 0.5), 4)),), cfg)]
        elif tag == "belief-function":
            subsets = [tuple(labels[i] for i in range(card) if (m >> i) & 1)
                       for m in range(1, 2 ** card)]
            chosen = rng.choice(len(subsets), size=min(2, len(subsets)), replace=False)
            w = float(np.round(rng.uniform(0.1, 0.9), 4))
            entries += [CredalEntry("m", (w,), cfg, subsets[chosen[0]]),
                        CredalEntry("m", (round(1.0 - w, 12),), cfg, subsets[-1])]
        elif tag == "density-bounded":
            entries += [CredalEntry("lower", tuple(float(np.round(x * 0.5, 6)) for x in base), cfg),
                        CredalEntry("upper", tuple(min(1.0, float(np.round(x + 0.2, 6))) for x in base),
                                    cfg)]
        elif tag == "density-ratio":
            lo = tuple(float(np.round(x + 0.1, 6)) for x in base)
            entries += [CredalEntry("lower", lo, cfg),
                        CredalEntry("upper", tuple(round(2 * x, 6) for x in lo), cfg)]
        else:
            k = int(rng.integers(card))
            entries.append(CredalEntry("row", tuple(float(i == k) for i in range(card)), cfg,
                                       relation=">=", rhs=float(np.round(base[k] / 2, 6))))
    return CredalBlock(name, str(tag), entries)


def random_document(rng, max_vars=5):
    """A random valid network document mixing CPTs and every credal class."""
    net = random_network(rng, int(rng.integers(1, max_vars + 1)))
    variables = tuple(
        Variable(v.id, f"n{v.id}_{rng.choice(_WORDS)}", v.cardinality,
                 tuple(str(w) for w in rng.choice(_WORDS, size=v.cardinality, replace=False)))
        for v in net.variables)
    net = DiscreteNetwork(variables, net.parents, net.cpts)
    doc: NetworkDocument = document_from_network(net)
    credal = set(int(v) for v in rng.choice(net.n, size=int(rng.integers(0, net.n + 1)),
                                             replace=False))
    cpts = []
    for block in doc.cpts:
        node = net.index(block.name)
        if node in credal:
            configs = [row.config for row in block.rows]
            doc.credals.append(_credal_block(rng, block.name, variables[node].labels, configs))
        else:
            cpts.append(block)
    doc.cpts = cpts
    if rng.random() < 0.5:
        on = variables[int(rng.integers(net.n))]
        doc.utilities.append(UtilityBlock(
            "u", (on.name,), tuple(float(x) for x in np.round(rng.normal(size=on.cardinality), 3))))
    return doc
