"""Bisection for the lower posterior bound with an exact sign oracle.

The lower posterior of ``x_q = a`` exceeds ``k`` exactly when
``min p(x_q = a, e) - k p(e)`` over the credal set is positive.  That
objective is multilinear in the vertex choices, so its minimum over the
type-1 set is found by enumerating vertex combinations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ccm import TransformedNetwork
from .errors import ZeroProbabilityEvidenceError
from .network import Evidence
from .type1 import ENUMERATION_CAP, VertexMasses, complement_values, vertex_masses


@dataclass
class BracketState:
    lo: float = 0.0
    hi: float = 1.0
    evaluations: int = 0
    history: list[tuple[float, int]] = field(default_factory=list)
    zero_mass: list[tuple[int, ...]] = field(default_factory=list)

    @property
    def estimate(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _signed_min(vm: VertexMasses, k: float):
    ok = vm.valid
    if not ok.any():
        raise ZeroProbabilityEvidenceError("evidence has zero probability at every vertex")
    values = np.where(ok, vm.joint - k * vm.evidence, np.inf)
    i = int(np.argmin(values))
    return float(values[i]), vm.assignments[i]


def signed_objective(t: TransformedNetwork, q: int, a, e: Evidence | None, k: float,
                     cap: int = ENUMERATION_CAP):
    """Minimum of ``p(x_q = a, e) - k p(e)`` over vertex combinations, with its argmin.

    Zero-mass vertices (``p(e) = 0``) are left out, matching the posterior
    bound definition used by the enumeration methods.
    """
    return _signed_min(vertex_masses(t, q, a, e, cap), k)


def bisection_count(tol: float) -> int:
    if tol <= 0:
        raise ValueError("tol must be positive")
    return max(0, math.ceil(math.log2(1.0 / tol)))


def lavine_bracket(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                   tol: float = 1e-6, cap: int = ENUMERATION_CAP) -> BracketState:
    """Bracket the lower posterior bound of ``x_q = a`` in ``[0, 1]``.

    The vertex masses are computed once; each bisection step then queries
    the sign oracle at the midpoint.
    """
    vm = vertex_masses(t, q, a, e, cap)
    state = BracketState(zero_mass=vm.zero_mass)
    for _ in range(bisection_count(tol)):
        k = state.estimate
        value, _ = _signed_min(vm, k)
        state.evaluations += 1
        sign = 1 if value > 0 else -1
        state.history.append((k, sign))
        if sign > 0:
            state.lo = k
        else:
            state.hi = k
    return state


def lavine_lower_bound(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                       tol: float = 1e-6, cap: int = ENUMERATION_CAP) -> float:
    return lavine_bracket(t, q, a, e, tol, cap).estimate


def lavine_upper_bound(t: TransformedNetwork, q: int, a, e: Evidence | None = None,
                       tol: float = 1e-6, cap: int = ENUMERATION_CAP) -> float:
    """Upper bound by conjugacy: one minus the lower bound of the complement."""
    rest = complement_values(t.base.variables[q].cardinality, a)
    return 1.0 - lavine_lower_bound(t, q, rest, e, tol, cap)
