import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from credalnet.credal import (
    CredalSpec,
    LinearConstraintSet,
    Polytope,
    belief,
    constraints_from_density_bounds,
    constraints_from_density_ratio,
    constraints_from_total_variation,
    contains_distribution,
    enumerate_polytope_vertices,
    facets_from_vertices,
    vertex_array,
    vertices_from_belief_function,
    vertices_from_eps_contamination,
)
from credalnet.errors import CapExceededError, InfeasibleCredalSetError


def same(poly, expected):
    return poly.same_vertices(Polytope(poly.dim, np.array(expected, dtype=float)))


def test_eps_contamination_vertices():
    poly = vertices_from_eps_contamination([0.75, 0.25], 0.2)
    assert same(poly, [[0.8, 0.2], [0.6, 0.4]])
    assert same(vertices_from_eps_contamination([1.0, 0.0], 0.5), [[1, 0], [0.5, 0.5]])


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.1])
def test_eps_out_of_range(eps):
    with pytest.raises(ValueError):
        vertices_from_eps_contamination([0.5, 0.5], eps)


def test_eps_rejects_unnormalized_base():
    with pytest.raises(ValueError):
        vertices_from_eps_contamination([0.5, 0.6], 0.1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dim=st.integers(2, 5), eps=st.floats(0.01, 0.99))
def test_eps_contamination_is_lower_density_bound(seed, dim, eps):
    p = np.random.default_rng(seed).dirichlet(np.ones(dim))
    poly = vertices_from_eps_contamination(p, eps)
    # the base is the p-weighted average of the vertices
    assert np.allclose(p @ poly.vertices, p)
    lower = enumerate_polytope_vertices(constraints_from_density_bounds((1 - eps) * p, np.ones(dim)))
    assert poly.same_vertices(lower)


def test_belief_function_examples():
    poly = vertices_from_belief_function(3, {(0,): 0.5, (0, 1, 2): 0.5})
    assert same(poly, [[1, 0, 0], [0.5, 0.5, 0], [0.5, 0, 0.5]])
    assert same(vertices_from_belief_function(2, {(0,): 1.0}), [[1, 0]])
    assert same(vertices_from_belief_function(3, {(0,): 0.3, (1, 2): 0.7}),
                [[0.3, 0.7, 0], [0.3, 0, 0.7]])
    with pytest.raises(ValueError):
        vertices_from_belief_function(2, {(0,): 0.5})


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), dim=st.integers(2, 6))
def test_belief_function_vertices_dominate_belief(seed, dim):
    rng = np.random.default_rng(seed)
    subsets = [s for r in range(1, dim + 1) for s in itertools.combinations(range(dim), r)]
    chosen = rng.choice(len(subsets), size=min(3, len(subsets)), replace=False)
    weights = rng.dirichlet(np.ones(len(chosen)))
    masses = {subsets[k]: float(w) for k, w in zip(chosen, weights)}
    poly = vertices_from_belief_function(dim, masses)
    for event in subsets:
        assert np.all(poly.vertices[:, list(event)].sum(axis=1) >= belief(masses, event) - 1e-12)


def test_density_bounds_examples():
    poly = enumerate_polytope_vertices(constraints_from_density_bounds([0.2, 0.3], [0.7, 0.8]))
    assert same(poly, [[0.2, 0.8], [0.7, 0.3]])
    p = [0.2, 0.5, 0.3]
    assert same(enumerate_polytope_vertices(constraints_from_density_bounds(p, p)), [p])
    assert same(enumerate_polytope_vertices(constraints_from_density_bounds(np.zeros(3), np.ones(3))),
                np.eye(3))
    with pytest.raises(InfeasibleCredalSetError):
        constraints_from_density_bounds([0.6, 0.6], [0.9, 0.9])


def test_total_variation_examples():
    c = constraints_from_total_variation([0.5, 0.5], 0.1)
    assert same(enumerate_polytope_vertices(c), [[0.4, 0.6], [0.6, 0.4]])
    assert len(constraints_from_total_variation([0.2, 0.3, 0.5], 0.1).rows) == 2 * (2**3 - 2)
    vacuous = enumerate_polytope_vertices(constraints_from_total_variation([0.2, 0.3, 0.5], 1.0))
    assert same(vacuous, np.eye(3))
    assert contains_distribution(c, [0.5, 0.5])
    with pytest.raises(CapExceededError):
        constraints_from_total_variation(np.full(17, 1 / 17), 0.1)


def test_density_ratio_examples():
    c = constraints_from_density_ratio([1, 1], [2, 2])
    assert same(enumerate_polytope_vertices(c), [[1 / 3, 2 / 3], [2 / 3, 1 / 3]])
    pinned = enumerate_polytope_vertices(constraints_from_density_ratio([1, 2, 1], [1, 2, 1]))
    assert same(pinned, [[0.25, 0.5, 0.25]])
    lo, hi = np.array([1.0, 2.0, 3.0]), np.array([2.0, 3.0, 5.0])
    mid = (lo + hi) / (lo + hi).sum()
    assert contains_distribution(constraints_from_density_ratio(lo, hi), mid)
    with pytest.raises(ValueError):
        constraints_from_density_ratio([0, 1], [1, 1])


def test_enumeration_edge_cases():
    assert same(enumerate_polytope_vertices(LinearConstraintSet.from_rows(3, [])), np.eye(3))
    rows = [([1.0, 0.0], 0.2), ([-1.0, 0.0], -0.5)]
    empty = LinearConstraintSet(2, np.array([r[0] for r in rows]), np.array([r[1] for r in rows]))
    assert vertex_array(empty).shape[0] == 0
    with pytest.raises(InfeasibleCredalSetError):
        enumerate_polytope_vertices(empty)


def test_enumeration_invariant_under_row_permutation_and_duplicates():
    c = constraints_from_total_variation([0.2, 0.3, 0.5], 0.15)
    rows = c.rows
    shuffled = [rows[k] for k in np.random.default_rng(0).permutation(len(rows))] + rows[:3]
    a = enumerate_polytope_vertices(c)
    b = enumerate_polytope_vertices(LinearConstraintSet.from_rows(3, shuffled))
    assert a.same_vertices(b)


@pytest.mark.parametrize("make", [
    lambda: constraints_from_total_variation([0.1, 0.2, 0.3, 0.4], 0.12),
    lambda: constraints_from_density_bounds([0.1, 0.2, 0.0, 0.1], [0.5, 0.4, 0.3, 0.6]),
    lambda: constraints_from_density_ratio([1.0, 2.0, 1.0], [1.5, 3.0, 2.0]),
])
def test_vertices_satisfy_rows_and_facets_round_trip(make):
    c = make()
    poly = enumerate_polytope_vertices(c)
    for v in poly.vertices:
        assert c.satisfied_by(v, tol=1e-9)
    again = enumerate_polytope_vertices(facets_from_vertices(poly))
    assert poly.same_vertices(again)


def test_membership_examples():
    poly = Polytope(2, np.array([[0.8, 0.2], [0.6, 0.4]]))
    assert contains_distribution(poly, [0.7, 0.3])
    assert not contains_distribution(poly, [0.5, 0.5])
    assert contains_distribution(poly, [0.6, 0.4])
    with pytest.raises(ValueError):
        contains_distribution(poly, [0.2, 0.3, 0.5])


def test_polytope_invariants():
    poly = Polytope(2, np.array([[0.5, 0.5], [0.5, 0.5 + 1e-12], [1.0, 0.0]]))
    assert poly.size == 2
    with pytest.raises(ValueError):
        Polytope(2, np.array([[0.5, 0.6]]))


def test_credal_spec_separate_and_joint():
    a = Polytope(2, np.array([[0.8, 0.2], [0.6, 0.4]]))
    b = Polytope(2, np.array([[0.1, 0.9], [0.3, 0.7], [0.2, 0.8]]))
    spec = CredalSpec.separate(1, [a, b])
    assert spec.arity == 6
    tables = spec.vertex_tables()
    assert tables.shape == (6, 2, 2)
    # configuration 0 is the most significant digit
    assert np.allclose(tables[1][:, 0], a.vertices[0]) and np.allclose(tables[1][:, 1], b.vertices[1])
    joint = CredalSpec.joint(1, [[[0.8, 0.0], [0.2, 1.0]], [[0.944444, 0.0], [0.055556, 1.0]]])
    assert joint.arity == 2 and joint.n_configs == 2
    assert joint.column_polytopes()[1].size == 1
    with pytest.raises(ValueError):
        CredalSpec(1, 2, 2, "separate", (a,))
