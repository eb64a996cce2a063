import math

import numpy as np
import pytest

from credalnet.approx import (
    anneal_search,
    gradient_bounds,
    gradient_theta,
    log_posterior_likelihood,
    project_simplex,
    projected_gradient_ascent,
    qem_bounds,
    qem_run,
    random_theta,
)
from credalnet.ccm import apply_ccm
from credalnet.credal import CredalSpec, Polytope
from credalnet.type1 import bounds_by_enumeration

HALF = [np.array([0.5, 0.5])]


def test_log_likelihood_examples(netb_t):
    # uniform theta mixes the prior to (0.7, 0.3): p(x=0, y=1) = 0.63, p(y=1) = 0.69
    assert log_posterior_likelihood(netb_t, HALF, 0, 0, {1: 1}) == pytest.approx(
        math.log(0.63 / 0.69), abs=1e-12)
    at_vertex = log_posterior_likelihood(netb_t, [np.array([1.0, 0.0])], 0, 0, {1: 1})
    assert at_vertex == pytest.approx(math.log(0.72 / 0.76), abs=1e-12)
    assert at_vertex == pytest.approx(-0.054067, abs=1e-6)


def test_likelihood_engines_agree(netb_t):
    theta = [np.array([0.3, 0.7])]
    a = log_posterior_likelihood(netb_t, theta, 0, 0, {1: 1}, engine="table")
    b = log_posterior_likelihood(netb_t, theta, 0, 0, {1: 1}, engine="elimination")
    assert a == pytest.approx(b, abs=1e-14)


def test_gradient_example(netb_t):
    g = gradient_theta(netb_t, HALF, 0, 0, {1: 1})
    expected = (4 / 7 - 0.38 / 0.69) / 0.5
    assert g == pytest.approx([expected, -expected], abs=1e-12)
    assert g[0] == pytest.approx(0.041408, abs=1e-6)


def test_point_set_has_flat_likelihood(netb):
    net, _ = netb
    t = apply_ccm(net, [CredalSpec.root(0, Polytope(2, np.array([[0.75, 0.25]])))])
    assert np.allclose(gradient_theta(t, [np.array([1.0])], 0, 0, {1: 1}), 0.0)
    report = projected_gradient_ascent(t, 0, 0, {1: 1}, theta0=[np.array([1.0])])
    assert report.steps == 1
    assert report.bound == pytest.approx(0.675 / 0.725, abs=1e-12)


def finite_difference(t, theta, q, a, e, h=1e-5):
    flat = np.concatenate(theta)
    sizes = np.cumsum([len(th) for th in theta])[:-1]
    out = np.empty_like(flat)
    for k in range(flat.size):
        up, down = flat.copy(), flat.copy()
        up[k] += h
        down[k] -= h
        f_up = log_posterior_likelihood(t, np.split(up, sizes), q, a, e)
        f_down = log_posterior_likelihood(t, np.split(down, sizes), q, a, e)
        out[k] = (f_up - f_down) / (2 * h)
    return out


def test_gradient_matches_finite_differences(small_corpus):
    rng = np.random.default_rng(5)
    nontrivial = 0
    for inst in small_corpus:
        t = apply_ccm(inst.net, inst.specs)
        theta = [0.1 + 0.8 * th for th in random_theta(t, rng)]  # interior, away from the floor
        theta = [th / th.sum() for th in theta]
        g = gradient_theta(t, theta, inst.q, inst.a, inst.evidence)
        fd = finite_difference(t, theta, inst.q, inst.a, inst.evidence)
        scale = np.linalg.norm(fd)
        if scale < 1e-6:  # query independent of the transparents: both sides vanish
            assert np.linalg.norm(g) <= 1e-12 and scale <= 1e-9
        else:
            assert np.linalg.norm(g - fd) <= 1e-4 * scale
            nontrivial += 1
    assert nontrivial >= 10


def test_projection_onto_simplex():
    p = project_simplex(np.array([0.8, 0.6, -0.5]))
    assert p.sum() == pytest.approx(1.0) and np.all(p >= 0)
    assert np.allclose(p, [0.6, 0.4, 0.0])
    assert np.allclose(project_simplex(np.array([0.2, 0.3, 0.5])), [0.2, 0.3, 0.5])


def test_gradient_ascent_net_b(netb_t):
    hi = projected_gradient_ascent(netb_t, 0, 0, {1: 1}, sense="max", theta0=HALF)
    lo = projected_gradient_ascent(netb_t, 0, 0, {1: 1}, sense="min", theta0=HALF)
    assert hi.bound == pytest.approx(0.72 / 0.76, abs=1e-6)
    assert lo.bound == pytest.approx(0.54 / 0.62, abs=1e-6)
    assert hi.theta[0][0] > 0.999


def test_qem_net_b(netb_t):
    r = qem_run(netb_t, 0, 0, {1: 1}, theta0=HALF)
    assert r.bound == pytest.approx(0.72 / 0.76, abs=1e-6)
    assert all(b >= a - 1e-12 for a, b in zip(r.trajectory, r.trajectory[1:]))
    bounds = qem_bounds(netb_t, 0, 0, {1: 1})
    assert (bounds.lower, bounds.upper) == pytest.approx((0.54 / 0.62, 0.72 / 0.76), abs=1e-6)


def test_inner_approximation_and_monotonicity(small_corpus):
    for inst in small_corpus:
        t = apply_ccm(inst.net, inst.specs)
        exact = bounds_by_enumeration(t, inst.q, inst.a, inst.evidence)
        for sense in ("max", "min"):
            r = qem_run(t, inst.q, inst.a, inst.evidence, sense=sense, restarts=3, seed=1)
            for traj in r.run_trajectories:
                assert all(b >= a - 1e-12 for a, b in zip(traj, traj[1:]))
            assert exact.lower - 1e-9 <= r.bound <= exact.upper + 1e-9
        g = gradient_bounds(t, inst.q, inst.a, inst.evidence, restarts=2, seed=1)
        a = anneal_search(t, inst.q, inst.a, inst.evidence, steps=300, seed=1)
        for r in (g, a):
            assert exact.lower - 1e-9 <= r.lower <= r.upper <= exact.upper + 1e-9


def test_determinism(netb_t):
    a = qem_run(netb_t, 0, 0, {1: 1}, restarts=3, seed=42)
    b = qem_run(netb_t, 0, 0, {1: 1}, restarts=3, seed=42)
    assert a.trajectory == b.trajectory and a.run_bounds == b.run_bounds
    c = projected_gradient_ascent(netb_t, 0, 0, {1: 1}, restarts=3, seed=42)
    d = projected_gradient_ascent(netb_t, 0, 0, {1: 1}, restarts=3, seed=42)
    assert c.trajectory == d.trajectory


def test_anneal_net_b(netb_t):
    r = anneal_search(netb_t, 0, 0, {1: 1}, seed=3)
    assert r.upper == 0.72 / 0.76 or r.upper == pytest.approx(0.72 / 0.76, abs=1e-15)
    assert r.argmax == (0,) and r.argmin == (1,)


def test_anneal_matches_exact_on_three_credal_nodes():
    from credalnet.generate import random_corpus
    corpus = random_corpus(99, 20, min_vars=5, max_vars=7, max_credal=3, max_vertices=4)
    hits = total = 0
    for inst in corpus:
        t = apply_ccm(inst.net, inst.specs)
        exact = bounds_by_enumeration(t, inst.q, inst.a, inst.evidence)
        r = anneal_search(t, inst.q, inst.a, inst.evidence, seed=0)
        total += 2
        hits += abs(r.lower - exact.lower) <= 1e-12
        hits += abs(r.upper - exact.upper) <= 1e-12
    assert hits >= 0.95 * total
