"""Interior-point and combinatorial approximations of type-1 bounds.

Transparent variables are treated as random with priors ``theta[i]``; the
posterior ratio p(a, e) / p(e) under those priors is a mixture of vertex
posteriors, so every value reached here is an inner approximation of the
exact interval.  ``L(theta) = log p(a, e) - log p(e)`` is maximized by
projected gradient ascent or by the QEM iteration; lower bounds use the
sign-flipped objective (gradient) or the complementary event (QEM).
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .ccm import TransformedNetwork, instantiate_transparent, with_transparent_priors
from .errors import ZeroLikelihoodError, ZeroProbabilityEvidenceError
from .network import Evidence, check_evidence, eliminate
from .type1 import BoundsResult, complement_values, event_values

#: Interior floor keeping every theta entry strictly positive.
FLOOR = 1e-9
#: Largest transparent joint handled by the precomputed-table engine.
TABLE_ENGINE_CAP = 4096

Theta = list  # list of 1-d arrays, one distribution per transparent variable


def uniform_theta(t: TransformedNetwork) -> Theta:
    return [np.full(m, 1.0 / m) for m in t.arities]


def random_theta(t: TransformedNetwork, rng: np.random.Generator) -> Theta:
    return [_floor(rng.dirichlet(np.ones(m))) for m in t.arities]


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, v.size + 1)
    rho = np.count_nonzero(u - css / idx > 0)
    shift = css[rho - 1] / rho
    return np.maximum(v - shift, 0.0)


def _floor(th: np.ndarray) -> np.ndarray:
    th = np.maximum(th, FLOOR)
    return th / th.sum()


def _check_theta(t: TransformedNetwork, theta: Sequence) -> Theta:
    if len(theta) != len(t.transparents):
        raise ValueError("theta needs one distribution per transparent variable")
    out = []
    for tv, th in zip(t.transparents, theta):
        th = np.asarray(th, dtype=float).ravel()
        if th.size != tv.arity:
            raise ValueError(f"theta for transparent {tv.id} has {th.size} entries, "
                             f"arity is {tv.arity}")
        if np.any(th < 0) or not np.all(np.isfinite(th)):
            raise ValueError("theta entries must be finite and nonnegative")
        out.append(th)
    return out


class _TableEngine:
    """Masses and transparent posteriors from one precomputed transparent joint."""

    def __init__(self, t: TransformedNetwork, q: int, event, e: dict):
        keep = (q, *t.transparent_ids)
        table = eliminate(t.net, keep, e).aligned(keep)
        scale = float(np.prod(t.arities))  # undo the uniform placeholder priors
        self.joint = table[list(event)].sum(axis=0) * scale
        self.evidence = table.sum(axis=0) * scale
        self.k = len(t.arities)

    def _weights(self, theta):
        w = np.ones(())
        for th in theta:
            w = np.multiply.outer(w, th)
        return w

    def masses(self, theta):
        w = self._weights(theta)
        return float((w * self.joint).sum()), float((w * self.evidence).sum())

    def posteriors(self, theta):
        w = self._weights(theta)
        num = w * self.joint
        den = w * self.evidence
        a_tot, e_tot = num.sum(), den.sum()
        alphas, betas = [], []
        for i in range(self.k):
            axes = tuple(j for j in range(self.k) if j != i)
            alphas.append(num.sum(axis=axes) / a_tot)
            betas.append(den.sum(axis=axes) / e_tot)
        return alphas, betas


class _EliminationEngine:
    """Masses and transparent posteriors by variable elimination with priors theta."""

    def __init__(self, t: TransformedNetwork, q: int, event, e: dict):
        self.t, self.q, self.event, self.e = t, q, list(event), e

    def masses(self, theta):
        net = with_transparent_priors(self.t, theta)
        m = eliminate(net, (self.q,), self.e).values
        return float(m[self.event].sum()), float(m.sum())

    def posteriors(self, theta):
        net = with_transparent_priors(self.t, theta)
        alphas, betas = [], []
        for tv in self.t.transparents:
            tab = eliminate(net, (self.q, tv.id), self.e).aligned((self.q, tv.id))
            num = tab[self.event].sum(axis=0)
            den = tab.sum(axis=0)
            alphas.append(num / num.sum())
            betas.append(den / den.sum())
        return alphas, betas


def _engine(t: TransformedNetwork, q: int, event, e: dict, engine: str):
    if engine == "auto":
        engine = "table" if t.n_combinations <= TABLE_ENGINE_CAP else "elimination"
    if engine == "table":
        return _TableEngine(t, q, event, e)
    if engine == "elimination":
        return _EliminationEngine(t, q, event, e)
    raise ValueError(f"unknown engine {engine!r}")


def _log_ratio(eng, theta) -> float:
    pa, pe = eng.masses(theta)
    if pe <= 0.0:
        raise ZeroProbabilityEvidenceError("p(e) = 0 under theta")
    if pa <= 0.0:
        return -math.inf
    return math.log(pa) - math.log(pe)


def log_posterior_likelihood(t: TransformedNetwork, theta, q: int, a, e: Evidence | None = None,
                             engine: str = "elimination") -> float:
    """``log p(x_q = a, e) - log p(e)`` with transparent priors ``theta``."""
    e = check_evidence(t.base, e or {}, query=q)
    theta = _check_theta(t, theta)
    eng = _engine(t, q, event_values(t.base.variables[q].cardinality, a), e, engine)
    value = _log_ratio(eng, theta)
    if value == -math.inf:
        raise ZeroLikelihoodError("p(x_q = a, e) = 0 under theta")
    return value


def _gradient(eng, theta) -> Theta:
    alphas, betas = eng.posteriors(theta)
    return [(al - be) / th for al, be, th in zip(alphas, betas, theta)]


def gradient_theta(t: TransformedNetwork, theta, q: int, a, e: Evidence | None = None,
                   engine: str = "elimination") -> np.ndarray:
    """Gradient of the log posterior ratio with respect to every theta entry.

    Component (i, j) is ``[p(z'_i = j | a, e) - p(z'_i = j | e)] / theta_ij``;
    the result concatenates the transparents in order.
    """
    e = check_evidence(t.base, e or {}, query=q)
    theta = _check_theta(t, theta)
    if any(np.any(th <= 0) for th in theta):
        raise ValueError("gradient needs a strictly interior theta")
    eng = _engine(t, q, event_values(t.base.variables[q].cardinality, a), e, engine)
    pa, pe = eng.masses(theta)
    if pe <= 0.0:
        raise ZeroProbabilityEvidenceError("p(e) = 0 under theta")
    if pa <= 0.0:
        raise ZeroLikelihoodError("p(x_q = a, e) = 0 under theta")
    return np.concatenate(_gradient(eng, theta))


@dataclass
class AscentReport:
    theta: Theta
    trajectory: list[float]
    converged: bool
    steps: int
    bound: float
    sense: str = "max"
    method: str = ""
    restarts: int = 1
    run_bounds: list[float] = field(default_factory=list)
    run_trajectories: list[list[float]] = field(default_factory=list)


def _starts(t, theta0, restarts, seed):
    if theta0 is not None:
        return [[_floor(th) for th in _check_theta(t, theta0)]]
    rng = np.random.default_rng(seed)
    return [random_theta(t, rng) for _ in range(restarts)]


def _best(reports: list[AscentReport], sense: str) -> AscentReport:
    pick = max if sense == "max" else min
    best = pick(reports, key=lambda r: r.bound)
    best.restarts = len(reports)
    best.run_bounds = [r.bound for r in reports]
    best.run_trajectories = [r.trajectory for r in reports]
    return best


def _ascend(eng, theta, sign: float, max_steps: int, tol: float):
    """Projected gradient ascent on ``sign * L`` with halving line search."""
    value = _log_ratio(eng, theta)
    trajectory = [value]
    step = 1.0
    steps = 0
    converged = False
    while steps < max_steps:
        grad = _gradient(eng, theta)
        steps += 1
        if max(float(np.max(np.abs(g))) for g in grad) == 0.0:
            converged = True
            break
        while True:
            cand = [_floor(project_simplex(th + sign * step * g)) for th, g in zip(theta, grad)]
            cand_value = _log_ratio(eng, cand)
            if sign * cand_value > sign * value:
                break
            step /= 2.0
            if step < 1e-12:
                break
        if step < 1e-12:
            converged = True
            break
        delta = abs(cand_value - value)
        theta, value = cand, cand_value
        trajectory.append(value)
        step = min(step * 2.0, 1e6)
        if delta < tol:
            converged = True
            break
    return theta, trajectory, converged, steps


def projected_gradient_ascent(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                              sense: str = "max", theta0=None, restarts: int = 8, seed: int = 0,
                              max_steps: int = 10000, tol: float = 1e-10,
                              engine: str = "auto") -> AscentReport:
    """Maximize (``sense="max"``) or minimize the posterior ratio over theta.

    Each step moves along the gradient, projects every theta block back to
    the simplex and halves the step until the objective improves.  Without
    ``theta0`` the best of ``restarts`` Dirichlet(1) starts is returned.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    e = check_evidence(t.base, e or {}, query=q)
    eng = _engine(t, q, event_values(t.base.variables[q].cardinality, a), e, engine)
    sign = 1.0 if sense == "max" else -1.0
    reports = []
    for start in _starts(t, theta0, restarts, seed):
        theta, traj, conv, steps = _ascend(eng, start, sign, max_steps, tol)
        reports.append(AscentReport(theta, traj, conv, steps, math.exp(traj[-1]), sense,
                                    "gradient"))
    return _best(reports, sense)


def _q_value(c, theta) -> float:
    return float(sum(np.dot(ci, np.log(th)) for ci, th in zip(c, theta)))


def _m_step(theta, c, inner_steps: int):
    """Inner projected gradient ascent on sum_ij c_ij log theta_ij from ``theta``."""
    current = theta
    q_cur = _q_value(c, current)
    step = 1.0
    for _ in range(inner_steps):
        grad = [ci / th for ci, th in zip(c, current)]
        cand = [_floor(project_simplex(th + step * g)) for th, g in zip(current, grad)]
        q_cand = _q_value(c, cand)
        if q_cand > q_cur:
            current, q_cur = cand, q_cand
            step *= 2.0
        else:
            step /= 2.0
            if step < 1e-12:
                break
    return current


def _qem(eng, theta, max_iter: int, tol: float, inner_steps: int):
    value = _log_ratio(eng, theta)
    trajectory = [value]
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        alphas, betas = eng.posteriors(theta)  # E-step
        c = [al - be for al, be in zip(alphas, betas)]
        q_old = _q_value(c, theta)
        cand = _m_step(theta, c, inner_steps)
        if not _q_value(c, cand) > q_old:
            converged = True
            break
        # Q-increase alone does not bound the change of L for this objective;
        # shrink toward theta until L does not decrease either
        tau = 1.0
        mix = cand
        mix_value = _log_ratio(eng, mix)
        while not (mix_value >= value and _q_value(c, mix) > q_old):
            tau /= 2.0
            if tau < 1e-12:
                break
            mix = [th + tau * (ca - th) for th, ca in zip(theta, cand)]
            mix_value = _log_ratio(eng, mix)
        if tau < 1e-12:
            converged = True
            break
        delta = mix_value - value
        theta, value = mix, mix_value
        trajectory.append(value)
        if delta < tol:
            converged = True
            break
    return theta, trajectory, converged, it


def qem_run(t: TransformedNetwork, q: int, a, e: Evidence | None = None, sense: str = "max",
            theta0=None, restarts: int = 8, seed: int = 0, max_iter: int = 1000,
            tol: float = 1e-10, inner_steps: int = 50, engine: str = "auto") -> AscentReport:
    """Quasi-Bayesian EM on the posterior log ratio.

    E-step: posteriors of every transparent given (a, e) and given e under
    the current theta.  M-step: gradient ascent on
    ``sum p(z'|a,e) log theta - sum p(z'|e) log theta`` from the current
    theta, accepted only if that objective strictly increases.  A lower
    bound is obtained as one minus the upper bound of the complement
    event; the reported trajectory is then the complement's ``L``.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    e = check_evidence(t.base, e or {}, query=q)
    card = t.base.variables[q].cardinality
    event = event_values(card, a) if sense == "max" else complement_values(card, a)
    eng = _engine(t, q, event, e, engine)
    reports = []
    for start in _starts(t, theta0, restarts, seed):
        theta, traj, conv, steps = _qem(eng, start, max_iter, tol, inner_steps)
        ratio = math.exp(traj[-1])
        bound = ratio if sense == "max" else 1.0 - ratio
        reports.append(AscentReport(theta, traj, conv, steps, bound, sense, "qem"))
    return _best(reports, sense)


def _as_bounds(lo: AscentReport, hi: AscentReport, method: str) -> BoundsResult:
    return BoundsResult(min(lo.bound, hi.bound), hi.bound, method=method,
                        work={"steps": lo.steps + hi.steps,
                              "converged": bool(lo.converged and hi.converged),
                              "restarts": hi.restarts})


def gradient_bounds(t, q, a, e=None, **opts) -> BoundsResult:
    lo = projected_gradient_ascent(t, q, a, e, sense="min", **opts)
    hi = projected_gradient_ascent(t, q, a, e, sense="max", **opts)
    return _as_bounds(lo, hi, "gradient")


def qem_bounds(t, q, a, e=None, **opts) -> BoundsResult:
    lo = qem_run(t, q, a, e, sense="min", **opts)
    hi = qem_run(t, q, a, e, sense="max", **opts)
    return _as_bounds(lo, hi, "qem")


# ---------------------------------------------------------------------------
# Simulated annealing over transparent assignments
# ---------------------------------------------------------------------------


def anneal_search(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                  T0: float = 1.0, alpha: float = 0.995, steps: int = 5000,
                  seed: int = 0) -> BoundsResult:
    """Simulated annealing for both bounds over vertex combinations.

    Moves change one transparent variable; a move with change ``delta`` in
    the objective is accepted with probability ``min(1, exp(delta / T))``
    under ``T_k = T0 * alpha**k``.  Every visited state is a vertex, so the
    best values found lie inside the exact interval.
    """
    e = check_evidence(t.base, e or {}, query=q)
    event = list(event_values(t.base.variables[q].cardinality, a))
    cache: dict[tuple[int, ...], float] = {}

    def ratio(state):
        if state not in cache:
            m = eliminate(instantiate_transparent(t, state), (q,), e).values
            total = m.sum()
            cache[state] = m[event].sum() / total if total > 0 else math.nan
        return cache[state]

    rng = np.random.default_rng(seed)
    movable = [i for i, m in enumerate(t.arities) if m > 1]
    results = {}
    for sense, sign in (("max", 1.0), ("min", -1.0)):
        state = tuple(int(rng.integers(m)) for m in t.arities)

        def score(s):
            r = ratio(s)
            return -math.inf if math.isnan(r) else sign * r

        current = score(state)
        best_state, best = (state, current)
        for k in range(steps if movable else 0):
            temp = T0 * alpha**k
            i = movable[int(rng.integers(len(movable)))]
            shift = int(rng.integers(1, t.arities[i]))
            proposal = list(state)
            proposal[i] = (proposal[i] + shift) % t.arities[i]
            proposal = tuple(proposal)
            new = score(proposal)
            delta = new - current
            if current == -math.inf or delta >= 0 or (
                    temp > 0 and rng.random() < math.exp(delta / temp)):
                state, current = proposal, new
                if current > best:
                    best_state, best = state, current
        if best == -math.inf:
            raise ZeroProbabilityEvidenceError("no visited vertex gives the evidence positive mass")
        results[sense] = (best_state, sign * best)
    (lo_state, lo), (hi_state, hi) = results["min"], results["max"]
    return BoundsResult(lo, hi, lo_state, hi_state, "anneal",
                        {"steps": 2 * steps if movable else 0, "inferences": len(cache)})
