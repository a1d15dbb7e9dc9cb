"""Dense primal simplex for small LPs in standard inequality form.

maximize c.x  subject to  A x <= b, x >= 0, with b >= 0, so the slack
basis is feasible and no phase-1 is needed.  Bland's rule (lowest
eligible index enters and leaves) prevents cycling on the degenerate
zero-rhs rows these factor LPs are full of.
"""

from __future__ import annotations

import numpy as np

from .errors import SolverError

PIVOT_TOL = 1e-9


def maximize(c, A, b, max_iters: int = 100000) -> tuple[float, np.ndarray]:
    """Optimal value and a maximizer; raises SolverError when unbounded
    or out of iterations (never fails silently)."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape
    if b.shape != (m,) or c.shape != (n,):
        raise SolverError("inconsistent LP dimensions")
    if (b < 0).any():
        raise SolverError("negative right-hand side; standard slack basis infeasible")

    # tableau: columns = structural vars, slacks, rhs; last row = reduced costs
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -c
    basis = list(range(n, n + m))

    for _ in range(max_iters):
        reduced = T[-1, :-1]
        entering = -1
        for j in range(n + m):  # Bland: first improving column
            if reduced[j] < -PIVOT_TOL:
                entering = j
                break
        if entering < 0:
            x = np.zeros(n + m)
            for i, var in enumerate(basis):
                x[var] = T[i, -1]
            return float(T[-1, -1]), x[:n]
        # ratio test, ties broken by lowest basis variable index (Bland)
        leaving = -1
        best = np.inf
        for i in range(m):
            a = T[i, entering]
            if a > PIVOT_TOL:
                ratio = T[i, -1] / a
                if ratio < best - 1e-12:
                    best = ratio
                    leaving = i
                elif ratio <= best + 1e-12 and leaving >= 0 and basis[i] < basis[leaving]:
                    leaving = i
        if leaving < 0:
            raise SolverError("LP is unbounded")
        pivot = T[leaving, entering]
        T[leaving] /= pivot
        for i in range(m + 1):
            if i != leaving and T[i, entering] != 0.0:
                T[i] -= T[i, entering] * T[leaving]
        basis[leaving] = entering
    raise SolverError("simplex iteration limit reached")
