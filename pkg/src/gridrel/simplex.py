"""Self-contained dense two-phase simplex for small linear programs.

Solves  min c.x  subject to  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0.
Problem sizes in this package stay below a few hundred variables, so a
dense tableau with Bland's rule (no cycling, deterministic pivots) is
both simple and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_PIVOT_TOL = 1e-10
_FEAS_TOL = 1e-8


class LpError(Exception):
    """Raised when the LP is infeasible, unbounded or numerically stuck."""


@dataclass
class LpResult:
    x: np.ndarray
    objective: float
    iterations: int


def solve_lp(
    c: np.ndarray,
    a_ub: np.ndarray | None = None,
    b_ub: np.ndarray | None = None,
    a_eq: np.ndarray | None = None,
    b_eq: np.ndarray | None = None,
    max_iter: int = 10_000,
) -> LpResult:
    """Exact optimum of a small LP in standard >=0 variable form."""
    c = np.asarray(c, dtype=float)
    n = c.size
    rows: list[np.ndarray] = []
    rhs: list[float] = []
    n_slack = 0
    if a_ub is not None:
        a_ub = np.atleast_2d(np.asarray(a_ub, dtype=float))
        b_ub = np.atleast_1d(np.asarray(b_ub, dtype=float))
        n_slack = a_ub.shape[0]
        for i in range(n_slack):
            rows.append(a_ub[i])
            rhs.append(float(b_ub[i]))
    n_ub = n_slack
    if a_eq is not None:
        a_eq = np.atleast_2d(np.asarray(a_eq, dtype=float))
        b_eq = np.atleast_1d(np.asarray(b_eq, dtype=float))
        for i in range(a_eq.shape[0]):
            rows.append(a_eq[i])
            rhs.append(float(b_eq[i]))

    m = len(rows)
    if m == 0:
        if np.any(c < -_PIVOT_TOL):
            raise LpError("unbounded: negative cost with no constraints")
        return LpResult(x=np.zeros(n), objective=0.0, iterations=0)

    # assemble [A | slacks | artificials] with nonnegative rhs
    a_full = np.zeros((m, n + n_slack + m))
    b = np.zeros(m)
    for i, (row, val) in enumerate(zip(rows, rhs)):
        sign = 1.0 if val >= 0 else -1.0
        a_full[i, :n] = sign * row
        if i < n_ub:
            a_full[i, n + i] = sign
        b[i] = sign * val
    art0 = n + n_slack
    for i in range(m):
        a_full[i, art0 + i] = 1.0
    basis = [art0 + i for i in range(m)]

    # phase 1: drive the artificials to zero
    c1 = np.zeros(n + n_slack + m)
    c1[art0:] = 1.0
    it1 = _simplex_core(a_full, b, c1, basis, max_iter)
    if float(np.array([c1[j] for j in basis]) @ b) > _FEAS_TOL:
        raise LpError("infeasible problem")
    a_full, b, basis = _clear_artificials(a_full, b, basis, art0)

    # phase 2: original objective on the structural + slack columns
    a2 = np.ascontiguousarray(a_full[:, :art0])
    c2 = np.zeros(art0)
    c2[:n] = c
    it2 = _simplex_core(a2, b, c2, basis, max_iter)

    x = np.zeros(art0)
    for i, col in enumerate(basis):
        x[col] = b[i]
    return LpResult(x=x[:n], objective=float(c @ x[:n]), iterations=it1 + it2)


def _simplex_core(
    a: np.ndarray,
    b: np.ndarray,
    c: np.ndarray,
    basis: list[int],
    max_iter: int,
) -> int:
    """Tableau simplex with Bland's rule; mutates a, b and basis in place."""
    m, n_cols = a.shape
    for iteration in range(max_iter):
        in_basis = set(basis)
        cb = np.array([c[j] for j in basis])
        reduced = c - cb @ a
        entering = -1
        for j in range(n_cols):
            if j not in in_basis and reduced[j] < -_PIVOT_TOL:
                entering = j  # Bland: lowest improving index
                break
        if entering < 0:
            return iteration
        col = a[:, entering]
        best_ratio = np.inf
        leaving = -1
        for i in range(m):
            if col[i] > _PIVOT_TOL:
                ratio = b[i] / col[i]
                if ratio < best_ratio - _PIVOT_TOL or (
                    ratio <= best_ratio + _PIVOT_TOL
                    and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    best_ratio = min(best_ratio, ratio)
                    leaving = i
        if leaving < 0:
            raise LpError("unbounded problem")
        _pivot(a, b, leaving, entering)
        basis[leaving] = entering
    raise LpError(f"simplex did not terminate in {max_iter} iterations")


def _pivot(a: np.ndarray, b: np.ndarray, row: int, col: int) -> None:
    piv = a[row, col]
    a[row] /= piv
    b[row] /= piv
    factors = a[:, col].copy()
    factors[row] = 0.0
    a -= np.outer(factors, a[row])
    b -= factors * b[row]


def _clear_artificials(
    a: np.ndarray, b: np.ndarray, basis: list[int], art0: int
) -> tuple[np.ndarray, np.ndarray, list[int]]:
    """Pivot zero-level artificials out; drop rows that are redundant."""
    keep = []
    for i in range(a.shape[0]):
        if basis[i] < art0:
            keep.append(i)
            continue
        pivot_col = -1
        for j in range(art0):
            if j not in basis and abs(a[i, j]) > _PIVOT_TOL:
                pivot_col = j
                break
        if pivot_col >= 0:
            _pivot(a, b, i, pivot_col)
            basis[i] = pivot_col
            keep.append(i)
        # else: redundant constraint row, drop it
    new_basis = [basis[i] for i in keep]
    return a[keep, :], b[keep], new_basis
