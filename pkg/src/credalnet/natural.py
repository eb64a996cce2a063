"""Posterior bounds under natural extension via linear-fractional programming.

The decision vector is the full joint table (row-major over all variables).
Constraints:

* normalization, ``sum p = 1``;
* for each credal node and parent configuration ``pa``, every row
  ``a . p(x_i | pa) <= b`` of its local set, lifted to
  ``a . p(x_i, pa) - b p(pa) <= 0`` (for roots simply ``a . p(x_i) <= b``);
* for each precise node, ``p(x_j, nd) = p_j(x_j | pa_j) p(nd)`` over its
  non-descendants ``nd``, i.e. its local Markov condition.  Credal nodes
  get no independence constraints.

The posterior ratio is minimized/maximized after the Charnes-Cooper
change of variables turns the ratio into a linear objective.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from .credal import CredalSpec, check_specs
from .errors import CapExceededError, ZeroProbabilityEvidenceError
from .lp import LinearProgram, SimplexSolution, simplex_solve
from .network import DiscreteNetwork, Evidence, check_evidence
from .type1 import BoundsResult, event_values

NE_CAP = 2**14


@dataclass(eq=False)
class FractionalProgram:
    """``min numerator.p / denominator.p`` s.t. ``G p <= h``, ``E p = f``, ``p >= 0``."""

    shape: tuple[int, ...]
    numerator: np.ndarray
    denominator: np.ndarray
    G: np.ndarray
    h: np.ndarray
    E: np.ndarray
    f: np.ndarray
    ineq_kinds: list[str] = field(default_factory=list)
    eq_kinds: list[str] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.numerator.size

    def ratio(self, p: np.ndarray) -> float:
        return float(self.numerator @ p) / float(self.denominator @ p)

    def feasible(self, p: np.ndarray, tol: float = 1e-8) -> bool:
        return bool(np.all(p >= -tol) and np.all(self.G @ p <= self.h + tol)
                    and np.all(np.abs(self.E @ p - self.f) <= tol))


def _config_index(assign: np.ndarray, vars_: Sequence[int], cards: Sequence[int]) -> np.ndarray:
    if not vars_:
        return np.zeros(assign.shape[1], dtype=int)
    return np.ravel_multi_index(tuple(assign[list(vars_)]), [cards[v] for v in vars_])


def build_ne_program(net: DiscreteNetwork, specs: Sequence[CredalSpec], q: int, a,
                     e: Evidence | None = None, cap: int = NE_CAP) -> FractionalProgram:
    check_specs(net, specs)
    e = check_evidence(net, e or {}, query=q)
    event = event_values(net.variables[q].cardinality, a)
    cards = net.cardinalities
    n = int(np.prod(cards, dtype=object))
    if n > cap:
        raise CapExceededError(f"joint has {n} terms, natural-extension cap is {cap}")
    assign = np.indices(cards).reshape(net.n, -1)

    consistent = np.ones(n, dtype=bool)
    for var, value in e.items():
        consistent &= assign[var] == value
    denominator = consistent.astype(float)
    numerator = (consistent & np.isin(assign[q], event)).astype(float)

    G_rows, h, ineq_kinds = [], [], []
    credal = {spec.node: spec for spec in specs}
    for node, spec in sorted(credal.items()):
        parents = net.parents[node]
        pa_idx = _config_index(assign, parents, cards)
        for k, poly in enumerate(spec.column_polytopes()):
            rows = poly.facets()
            mask = (pa_idx == k).astype(float)
            for coef, bound in rows.rows:
                if parents:
                    G_rows.append((coef[assign[node]] - bound) * mask)
                    h.append(0.0)
                else:
                    G_rows.append(coef[assign[node]].astype(float))
                    h.append(bound)
                ineq_kinds.append(f"credal:{net.variables[node].name}")

    E_rows = [np.ones(n)]
    f = [1.0]
    eq_kinds = ["normalization"]
    for j in range(net.n):
        if j in credal:
            continue
        nd = sorted(set(range(net.n)) - net.descendants(j) - {j})
        nd_idx = _config_index(assign, nd, cards)
        n_nd = int(np.prod([cards[v] for v in nd], dtype=int))
        pa_idx = _config_index(assign, net.parents[j], cards)
        table = net.cpt_table(j)
        block = np.zeros((cards[j] * n_nd, n))
        cols = np.arange(n)
        for v in range(cards[j]):
            block[v * n_nd + nd_idx, cols] = (assign[j] == v) - table[v, pa_idx]
        E_rows.extend(block)
        f.extend([0.0] * block.shape[0])
        eq_kinds.extend([f"precise:{net.variables[j].name}"] * block.shape[0])

    G = np.array(G_rows).reshape(-1, n)
    return FractionalProgram(tuple(cards), numerator, denominator, G, np.array(h, dtype=float),
                             np.array(E_rows), np.array(f), ineq_kinds, eq_kinds)


def charnes_cooper(fp: FractionalProgram, sense: str = "min") -> LinearProgram:
    """Linear program over ``(y, t)`` with ``y = t p`` and ``denominator . y = 1``.

    ``sense="max"`` negates the objective; the LP optimum is then minus the
    fractional maximum.
    """
    if sense not in ("min", "max"):
        raise ValueError("sense must be 'min' or 'max'")
    sign = 1.0 if sense == "min" else -1.0
    c = np.append(sign * fp.numerator, 0.0)
    A_eq = np.vstack([np.append(fp.denominator, 0.0)[None, :],
                      np.hstack([fp.E, -fp.f[:, None]])])
    b_eq = np.zeros(A_eq.shape[0])
    b_eq[0] = 1.0
    A_ub = np.hstack([fp.G, -fp.h[:, None]]) if fp.G.shape[0] else None
    b_ub = np.zeros(fp.G.shape[0]) if fp.G.shape[0] else None
    return LinearProgram.from_blocks(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq)


@dataclass
class FractionalSolution:
    value: float
    p: np.ndarray
    lp: SimplexSolution


def solve_fractional(fp: FractionalProgram, sense: str = "min") -> FractionalSolution:
    lp = charnes_cooper(fp, sense)
    sol = simplex_solve(lp)
    if sol.status == "infeasible":
        raise ZeroProbabilityEvidenceError(
            "the denominator vanishes on the whole feasible set (or the set is empty)")
    if sol.status == "unbounded":  # cannot happen for numerator <= denominator
        raise ZeroProbabilityEvidenceError("fractional program is unbounded")
    y, t = sol.x[:-1], sol.x[-1]
    p = y / t if t > 0 else y
    value = sol.value if sense == "min" else -sol.value
    return FractionalSolution(float(value), p, sol)


def ne_bounds(net: DiscreteNetwork, specs: Sequence[CredalSpec], q: int, a,
              e: Evidence | None = None, cap: int = NE_CAP) -> BoundsResult:
    fp = build_ne_program(net, specs, q, a, e, cap)
    lo = solve_fractional(fp, "min")
    hi = solve_fractional(fp, "max")
    return BoundsResult(lo.value, max(hi.value, lo.value), method="ne-lp",
                        work={"terms": fp.n, "rows": int(fp.G.shape[0] + fp.E.shape[0]) + 1,
                              "pivots": lo.lp.iterations + hi.lp.iterations},
                        detail={"argmin_joint": lo.p, "argmax_joint": hi.p})
