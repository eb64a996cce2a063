import numpy as np
import pytest

from credalnet.ccm import apply_ccm
from credalnet.credal import CredalSpec, Polytope
from credalnet.errors import CapExceededError, ZeroProbabilityEvidenceError
from credalnet.generate import random_corpus, random_network
from credalnet.lp import LinearProgram, simplex_solve
from credalnet.natural import (
    FractionalProgram,
    build_ne_program,
    charnes_cooper,
    ne_bounds,
    solve_fractional,
)
from credalnet.network import brute_force_joint, make_network, posterior_marginal
from credalnet.type1 import bounds_by_enumeration

from helpers import and_gate


def test_net_b_program_shape(netb):
    net, specs = netb
    fp = build_ne_program(net, specs, 0, 0, {1: 1})
    assert fp.n == 4
    assert fp.eq_kinds.count("normalization") == 1
    assert fp.eq_kinds.count("precise:y") == 4
    assert fp.G.shape[0] == 2  # 0.6 <= p(x=0) <= 0.8
    assert np.all(fp.numerator <= fp.denominator)
    assert np.allclose(fp.denominator, [0, 1, 0, 1])
    assert np.allclose(fp.numerator, [0, 1, 0, 0])


def test_net_b_bounds(netb):
    net, specs = netb
    r = ne_bounds(net, specs, 0, 0, {1: 1})
    assert abs(r.lower - 0.54 / 0.62) <= 1e-7 and abs(r.upper - 0.72 / 0.76) <= 1e-7
    assert r.method == "ne-lp"


def test_all_precise_network_pins_the_joint():
    rng = np.random.default_rng(4)
    net = random_network(rng, 4, max_card=2)
    fp = build_ne_program(net, [], 3, 0, {0: 1})
    sol = solve_fractional(fp, "min")
    assert np.allclose(sol.p, brute_force_joint(net).values.ravel(), atol=1e-9)
    r = ne_bounds(net, [], 3, 0, {0: 1})
    expected = posterior_marginal(net, 3, {0: 1})[0]
    assert r.lower == pytest.approx(expected, abs=1e-9)
    assert r.upper == pytest.approx(expected, abs=1e-9)


def test_vacuous_credal_root_spans_the_simplex():
    net = make_network([3], [[]], [[1 / 3, 1 / 3, 1 / 3]])
    spec = CredalSpec.root(0, Polytope(3, np.eye(3)))
    r = ne_bounds(net, [spec], 0, 1)
    assert (r.lower, r.upper) == pytest.approx((0.0, 1.0), abs=1e-12)


def test_strict_containment_on_and_gate():
    net, specs = and_gate()
    ne = ne_bounds(net, specs, 2, 1)
    t1 = bounds_by_enumeration(apply_ccm(net, specs), 2, 1)
    assert (t1.lower, t1.upper) == pytest.approx((0.36, 0.64))
    # without independence between the roots, p(x=1, y=1) ranges over [0.2, 0.6]... bounded by marginals
    assert ne.lower < t1.lower - 1e-3 and ne.upper >= t1.upper - 1e-7
    assert ne.lower == pytest.approx(0.2, abs=1e-9)
    assert ne.upper == pytest.approx(0.8, abs=1e-9)


def test_containment_and_single_root_equality():
    corpus = random_corpus(17, 30, max_vars=5, max_credal=2, max_vertices=3, max_card=2)
    for inst in corpus:
        ne = ne_bounds(inst.net, inst.specs, inst.q, inst.a, inst.evidence)
        t1 = bounds_by_enumeration(apply_ccm(inst.net, inst.specs), inst.q, inst.a, inst.evidence)
        assert ne.lower <= t1.lower + 1e-7 and ne.upper >= t1.upper - 1e-7
        single_root = len(inst.specs) == 1 and not inst.net.parents[inst.specs[0].node]
        if single_root:
            assert abs(ne.lower - t1.lower) <= 1e-7 and abs(ne.upper - t1.upper) <= 1e-7


def test_charnes_cooper_examples():
    # min x1 / (x1 + 2 x2) over the simplex in R^2
    fp = FractionalProgram((2,), np.array([1.0, 0.0]), np.array([1.0, 2.0]), np.zeros((0, 2)),
                           np.zeros(0), np.ones((1, 2)), np.ones(1))
    sol = solve_fractional(fp, "min")
    assert sol.value == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(sol.p, [0.0, 1.0])
    lp = charnes_cooper(fp, "min")
    assert lp.n == 3 and lp.senses.count("=") == 2
    # constant denominator: the LP is the original objective with t = 1
    fp1 = FractionalProgram((3,), np.array([0.2, 0.5, 0.9]), np.ones(3), np.zeros((0, 3)),
                            np.zeros(0), np.ones((1, 3)), np.ones(1))
    s = solve_fractional(fp1, "max")
    assert s.value == pytest.approx(0.9) and s.lp.x[-1] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        charnes_cooper(fp, "median")


@pytest.mark.parametrize("seed", range(25))
def test_charnes_cooper_matches_vertex_evaluation(seed):
    # random linear-fractional programs over the simplex with box rows:
    # a linear-fractional optimum sits at a vertex of the feasible polytope
    from credalnet.credal import enumerate_polytope_vertices, LinearConstraintSet
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    lo = rng.uniform(0, 0.5 / n, size=n)
    hi = lo + rng.uniform(1.0 / n, 1.0, size=n)
    rows = [(-np.eye(n)[k], -lo[k]) for k in range(n)] + [(np.eye(n)[k], hi[k]) for k in range(n)]
    feasible = enumerate_polytope_vertices(LinearConstraintSet.from_rows(n, rows)).vertices
    c, d = rng.uniform(0, 1, size=n), rng.uniform(0.5, 2, size=n)
    G = np.array([r[0] for r in rows])
    h = np.array([r[1] for r in rows])
    fp = FractionalProgram((n,), c, d, G, h, np.ones((1, n)), np.ones(1))
    ratios = (feasible @ c) / (feasible @ d)
    assert solve_fractional(fp, "min").value == pytest.approx(ratios.min(), abs=1e-8)
    assert solve_fractional(fp, "max").value == pytest.approx(ratios.max(), abs=1e-8)


def test_zero_probability_evidence_is_signalled():
    net = make_network([2, 2], [[], [0]], [[0.5, 0.5], np.eye(2)])
    spec = CredalSpec.root(0, Polytope(2, np.array([[1.0, 0.0]])))
    with pytest.raises(ZeroProbabilityEvidenceError):
        ne_bounds(net, [spec], 0, 1, {1: 1})


def test_cap(netb):
    net, specs = netb
    with pytest.raises(CapExceededError):
        build_ne_program(net, specs, 0, 0, {1: 1}, cap=3)


def test_lp_dump_round_trip(netb):
    net, specs = netb
    lp = charnes_cooper(build_ne_program(net, specs, 0, 0, {1: 1}), "min")
    lines = lp.dump().splitlines()
    c = np.array([float(v) for v in lines[0].split()[1:]])
    rows = [line.split() for line in lines[1:]]
    A = np.array([[float(v) for v in r[:-2]] for r in rows])
    senses = [r[-2] for r in rows]
    b = np.array([float(r[-1]) for r in rows])
    again = simplex_solve(LinearProgram(c, A, senses, b))
    assert again.value == pytest.approx(0.54 / 0.62, abs=1e-9)
