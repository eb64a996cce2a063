"""Dense two-phase simplex method with a Bland's-rule anti-cycling fallback.

Problems are ``min c.x`` subject to rows ``A_i.x (<= | =) b_i`` and
``x >= 0``.  The tableau is dense; problem sizes in this package are
capped well below the point where that matters.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .errors import IterationLimitError

FEASIBILITY_TOL = 1e-9
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-9

Sense = Literal["<=", "="]


@dataclass(eq=False)
class LinearProgram:
    c: np.ndarray
    A: np.ndarray
    senses: list[str]
    b: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        self.A = np.asarray(self.A, dtype=float).reshape(-1, self.c.size)
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.senses = list(self.senses)
        if self.A.shape[0] != self.b.size or len(self.senses) != self.b.size:
            raise ValueError("A, senses and b disagree on the number of rows")
        if any(s not in ("<=", "=") for s in self.senses):
            raise ValueError("row senses must be '<=' or '='")
        if not (np.all(np.isfinite(self.c)) and np.all(np.isfinite(self.A))
                and np.all(np.isfinite(self.b))):
            raise ValueError("LP coefficients must be finite")

    @property
    def n(self) -> int:
        return self.c.size

    @classmethod
    def from_blocks(cls, c, A_ub=None, b_ub=None, A_eq=None, b_eq=None) -> "LinearProgram":
        c = np.asarray(c, dtype=float).ravel()
        blocks, senses, rhs = [], [], []
        for A, b, sense in ((A_ub, b_ub, "<="), (A_eq, b_eq, "=")):
            if A is None:
                continue
            A = np.asarray(A, dtype=float).reshape(-1, c.size)
            blocks.append(A)
            senses += [sense] * A.shape[0]
            rhs.append(np.asarray(b, dtype=float).ravel())
        A = np.vstack(blocks) if blocks else np.zeros((0, c.size))
        b = np.concatenate(rhs) if rhs else np.zeros(0)
        return cls(c, A, senses, b)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        """Constraint violations at ``x`` (zero when satisfied)."""
        lhs = self.A @ x - self.b
        eq = np.array([s == "=" for s in self.senses], dtype=bool)
        viol = np.where(eq, np.abs(lhs), np.maximum(lhs, 0.0))
        return np.concatenate([viol, np.maximum(-x, 0.0)])

    def dump(self) -> str:
        """Plain-text form: objective row, then ``coeffs... sense rhs`` per row."""
        lines = ["min " + " ".join(repr(float(v)) for v in self.c)]
        for row, sense, rhs in zip(self.A, self.senses, self.b):
            lines.append(" ".join(repr(float(v)) for v in row) + f" {sense} {float(rhs)!r}")
        return "\n".join(lines) + "\n"


@dataclass
class SimplexSolution:
    status: Literal["optimal", "infeasible", "unbounded"]
    value: float = float("nan")
    x: np.ndarray | None = None
    iterations: int = 0
    basis: list[int] = field(default_factory=list)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


class _Tableau:
    """Rows ``0..m-1`` hold constraints, the last row holds reduced costs."""

    def __init__(self, T: np.ndarray, basis: list[int], max_iter: int):
        self.T = T
        self.basis = basis
        self.max_iter = max_iter
        self.iterations = 0

    @property
    def m(self) -> int:
        return self.T.shape[0] - 1

    def pivot(self, r: int, j: int):
        T = self.T
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        rows = np.flatnonzero(col)
        T[rows] -= np.outer(col[rows], T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        # round-off must not push basic values below zero
        rhs = T[:-1, -1]
        rhs[(rhs < 0.0) & (rhs > -FEASIBILITY_TOL)] = 0.0
        self.basis[r] = j

    def run(self, allowed: np.ndarray) -> str:
        """Pivot until optimal or unbounded, over columns where ``allowed`` is set.

        Entering columns follow the most negative reduced cost.  While the
        objective stalls, visited bases are remembered; a repeat switches to
        Bland's smallest-index rule until the objective moves again, which
        rules out cycling.
        """
        T = self.T
        bland = False
        seen: set[tuple[int, ...]] = set()
        while True:
            costs = T[-1, :-1]
            candidates = np.flatnonzero((costs < -OPTIMALITY_TOL) & allowed)
            if candidates.size == 0:
                return "optimal"
            j = int(candidates[0] if bland else candidates[np.argmin(costs[candidates])])
            column = T[:-1, j]
            rows = np.flatnonzero(column > PIVOT_TOL)
            if rows.size == 0:
                return "unbounded"
            rhs = T[rows, -1]
            if bland:
                ratios = rhs / column[rows]
                best = ratios.min()
                ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                # Harris: widen the step by the feasibility tolerance, then take
                # the largest pivot among rows that block within it
                bound = ((rhs + FEASIBILITY_TOL) / column[rows]).min()
                ties = rows[rhs / column[rows] <= bound]
                r = int(ties[np.argmax(column[ties])])
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise IterationLimitError(f"simplex exceeded {self.max_iter} pivots")
            before = T[-1, -1]
            self.pivot(r, j)
            if abs(T[-1, -1] - before) > 1e-12 * max(1.0, abs(before)):
                bland = False
                seen.clear()
            elif not bland:
                key = tuple(sorted(self.basis))
                if key in seen:
                    bland = True
                seen.add(key)


def independent_rows(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Indices of a maximal linearly independent subset of the rows of ``A``.

    Rows are scanned in order and kept when they are not (numerically) in
    the span of the rows kept so far.
    """
    A = np.asarray(A, dtype=float)
    basis = np.zeros((min(A.shape), A.shape[1]))
    k = 0
    keep = []
    for i, row in enumerate(A):
        norm = np.linalg.norm(row)
        if norm == 0.0:
            continue
        r = row / norm
        for _ in range(2):  # second pass restores orthogonality
            r = r - basis[:k].T @ (basis[:k] @ r)
        rn = np.linalg.norm(r)
        if rn > np.sqrt(tol):
            basis[k] = r / rn
            k += 1
            keep.append(i)
            if k == basis.shape[0]:
                break
    return np.array(keep, dtype=int)


def _prune_equalities(lp: LinearProgram) -> LinearProgram | None:
    """Copy of ``lp`` without redundant equality rows; None if they are inconsistent."""
    eq = np.flatnonzero([s == "=" for s in lp.senses])
    if eq.size < 2:
        return lp
    A_eq, b_eq = lp.A[eq], lp.b[eq]
    keep = independent_rows(A_eq)
    if keep.size == eq.size:
        return lp
    drop = np.setdiff1d(np.arange(eq.size), keep)
    if keep.size == 0:
        if np.any(np.abs(b_eq[drop]) > FEASIBILITY_TOL):
            return None
    else:
        coef, *_ = np.linalg.lstsq(A_eq[keep].T, A_eq[drop].T, rcond=None)
        scale = max(1.0, np.abs(b_eq).max())
        if np.any(np.abs(coef.T @ b_eq[keep] - b_eq[drop]) > 1e-8 * scale):
            return None
    rows = np.concatenate([np.flatnonzero([s != "=" for s in lp.senses]), eq[keep]])
    rows.sort()
    return LinearProgram(lp.c, lp.A[rows], [lp.senses[r] for r in rows], lp.b[rows])


def simplex_solve(lp: LinearProgram, max_iter: int = 10**6) -> SimplexSolution:
    """Solve ``lp`` with the two-phase dense simplex method.

    Linearly dependent equality rows are removed first (or reported as
    infeasible when their right-hand sides disagree).
    """
    reduced = _prune_equalities(lp)
    if reduced is None:
        return SimplexSolution("infeasible")
    lp = reduced
    m, n = lp.A.shape
    A = lp.A.copy()
    b = lp.b.copy()
    is_le = np.array([s == "<=" for s in lp.senses], dtype=bool)
    n_slack = int(is_le.sum())
    slack_cols = np.zeros((m, n_slack))
    slack_cols[np.flatnonzero(is_le), np.arange(n_slack)] = 1.0
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    slack_cols[flip] *= -1.0

    # a row can start with its slack basic when the slack keeps a +1 coefficient
    basis = [-1] * m
    for k, row in enumerate(np.flatnonzero(is_le)):
        if not flip[row]:
            basis[row] = n + k
    needs_art = [i for i in range(m) if basis[i] < 0]
    n_art = len(needs_art)
    N = n + n_slack + n_art
    T = np.zeros((m + 1, N + 1))
    T[:m, :n] = A
    T[:m, n:n + n_slack] = slack_cols
    T[:m, -1] = b
    for k, row in enumerate(needs_art):
        T[row, n + n_slack + k] = 1.0
        basis[row] = n + n_slack + k
    art_start = n + n_slack

    tab = _Tableau(T, basis, max_iter)
    if n_art:
        # phase 1: minimize the sum of artificials
        T[-1, :] = 0.0
        T[-1, art_start:N] = 1.0
        for row in needs_art:
            T[-1] -= T[row]
        tab.run(np.ones(N, dtype=bool))
        infeas = -T[-1, -1]
        if infeas > FEASIBILITY_TOL * max(1.0, np.abs(b).max(initial=0.0)):
            return SimplexSolution("infeasible", iterations=tab.iterations)
        # drive remaining artificials out of the basis, dropping redundant rows
        r = 0
        while r < tab.m:
            if tab.basis[r] >= art_start:
                row = tab.T[r, :art_start]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    tab.pivot(r, int(nz[0]))
                else:
                    tab.T = np.delete(tab.T, r, axis=0)
                    del tab.basis[r]
                    continue
            r += 1
        tab.T = np.delete(tab.T, np.s_[art_start:N], axis=1)
        T = tab.T
    N = art_start
    cost = np.zeros(N)
    cost[:n] = lp.c
    T[-1, :] = 0.0
    T[-1, :N] = cost
    for r, j in enumerate(tab.basis):
        T[-1] -= cost[j] * T[r]
    status = tab.run(np.ones(N, dtype=bool))
    if status == "unbounded":
        return SimplexSolution("unbounded", iterations=tab.iterations)
    x = np.zeros(N)
    for r, j in enumerate(tab.basis):
        x[j] = T[r, -1]
    x = np.maximum(x[:n], 0.0)
    return SimplexSolution("optimal", float(lp.c @ x), x, tab.iterations, list(tab.basis))
