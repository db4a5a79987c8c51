"""Self-contained dense linear-programming solver.

Two-phase primal simplex on a dense tableau.  Dantzig pricing with
lowest-index tie breaking; permanent switch to Bland's rule after a stall
threshold, which guarantees termination on the heavily degenerate
transportation problems produced by equilateral spaces.

Problems whose row count dwarfs the variable count (Lipschitz-ball
constraint systems have O(n^2) rows over O(n) variables) are solved through
their dual and the primal optimizer is recovered from the dual solve's own
dual vector.  Every optimal solution is re-verified against the original
data (primal feasibility, dual feasibility, duality gap); the dualized path
falls back to a direct solve if its certificate does not check out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tolerances import lp_tol

LE = "<="
EQ = "="
GE = ">="

_SENSES = (LE, EQ, GE)

_MAX_ITER = 50_000
_STALL_LIMIT = 80


class LpError(Exception):
    """Malformed problem or solver breakdown."""


@dataclass(frozen=True)
class LpProblem:
    """min/max  c.x  s.t.  A x {<=,=,>=} b,  lb <= x <= ub."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False

    @staticmethod
    def build(c, A, senses, b, lb=None, ub=None, maximize=False) -> "LpProblem":
        c = np.asarray(c, dtype=float)
        A = np.atleast_2d(np.asarray(A, dtype=float))
        b = np.asarray(b, dtype=float)
        m, n = A.shape
        if c.shape != (n,) or b.shape != (m,) or len(senses) != m:
            raise LpError("inconsistent problem dimensions")
        if lb is None:
            lb = np.full(n, -np.inf)
        if ub is None:
            ub = np.full(n, np.inf)
        lb = np.asarray(lb, dtype=float)
        ub = np.asarray(ub, dtype=float)
        if lb.shape != (n,) or ub.shape != (n,):
            raise LpError("bad bound shapes")
        for arr in (c, A, b):
            if np.isnan(arr).any():
                raise LpError("NaN in problem data")
        bad = [s for s in senses if s not in _SENSES]
        if bad:
            raise LpError(f"unknown row sense {bad[0]!r}")
        return LpProblem(c, A, tuple(senses), b, lb, ub, maximize)


@dataclass
class LpSolution:
    status: str                     # "optimal" | "infeasible" | "unbounded"
    value: float = np.nan
    x: np.ndarray | None = None
    y: np.ndarray | None = None     # one dual per constraint row
    primal_residual: float = np.nan
    dual_residual: float = np.nan
    gap: float = np.nan
    cs_residual: float = np.nan


# ---------------------------------------------------------------------------
# standard-form core: min c.z  s.t.  A z {<=,=,>=} b,  z >= 0
# ---------------------------------------------------------------------------

def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    colv = T[:, col].copy()
    colv[row] = 0.0
    T -= np.outer(colv, T[row])
    # kill roundoff in the pivot column
    T[:, col] = 0.0
    T[row, col] = 1.0
    basis[row] = col


def _iterate(T, basis, cvec, blocked, tol):
    """Run simplex iterations in place.  Returns 'optimal' or 'unbounded'."""
    m = T.shape[0]
    bland = False
    stall = 0
    prev_obj = np.inf
    for _ in range(_MAX_ITER):
        r = cvec - cvec[basis] @ T[:, :-1]
        r[basis] = 0.0
        r[blocked] = np.inf
        if bland:
            cand = np.nonzero(r < -tol)[0]
            if cand.size == 0:
                return "optimal"
            j = int(cand[0])
        else:
            j = int(np.argmin(r))
            if r[j] >= -tol:
                return "optimal"
        col = T[:m, j]
        pos = col > tol
        if not pos.any():
            return "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = T[pos, -1] / col[pos]
        best = ratios.min()
        rows = np.nonzero(ratios <= best + tol * (1.0 + abs(best)))[0]
        # leaving tie break: lowest basic-variable index (Bland-compatible)
        row = int(rows[np.argmin(basis[rows])])
        _pivot(T, basis, row, j)
        obj = float(cvec[basis] @ T[:, -1])
        if obj >= prev_obj - tol * (1.0 + abs(obj)):
            stall += 1
            if stall > _STALL_LIMIT:
                bland = True
        else:
            stall = 0
        prev_obj = obj
    raise LpError("simplex iteration limit exceeded")


def _solve_cf(c, A, senses, b, tol):
    """Two-phase simplex for min c.z, A z {<=,=,>=} b, z >= 0.

    Returns (status, value, z, y) where y holds one dual per row with the
    min-problem sign convention: y <= 0 on '<=' rows, y >= 0 on '>=' rows.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, n = A.shape

    n_slack = sum(1 for s in senses if s != EQ)
    S = np.zeros((m, n_slack))
    slack_of_row = np.full(m, -1, dtype=int)
    k = 0
    for i, s in enumerate(senses):
        if s == LE:
            S[i, k] = 1.0
            slack_of_row[i] = n + k
            k += 1
        elif s == GE:
            S[i, k] = -1.0
            slack_of_row[i] = n + k
            k += 1
    A2 = np.hstack([A, S])
    row_sign = np.ones(m)
    neg = b < 0
    A2[neg] *= -1.0
    b[neg] *= -1.0
    row_sign[neg] = -1.0

    basis = np.empty(m, dtype=int)
    art_rows = []
    for i in range(m):
        j = slack_of_row[i]
        if j >= 0 and A2[i, j] > 0:
            basis[i] = j
        else:
            art_rows.append(i)
    n2 = A2.shape[1]
    n_art = len(art_rows)
    Aart = np.zeros((m, n_art))
    for t, i in enumerate(art_rows):
        Aart[i, t] = 1.0
        basis[i] = n2 + t
    A_std = np.hstack([A2, Aart])
    total = A_std.shape[1]
    T = np.hstack([A_std, b[:, None]])
    keep_rows = np.arange(m)

    blocked = np.zeros(total, dtype=bool)
    if n_art:
        c1 = np.zeros(total)
        c1[n2:] = 1.0
        status = _iterate(T, basis, c1, blocked, tol)
        phase1 = float(c1[basis] @ T[:, -1])
        if phase1 > 1e-7 * (1.0 + abs(b).max(initial=0.0)):
            return "infeasible", np.nan, None, None
        # drive remaining artificials out of the basis
        drop = []
        for i in range(T.shape[0]):
            if basis[i] >= n2:
                cand = np.nonzero(np.abs(T[i, :n2]) > tol)[0]
                cand = [j for j in cand if j not in set(basis)]
                if cand:
                    _pivot(T, basis, i, int(cand[0]))
                else:
                    drop.append(i)  # redundant row
        if drop:
            mask = np.ones(T.shape[0], dtype=bool)
            mask[drop] = False
            T = T[mask]
            basis = basis[mask]
            keep_rows = keep_rows[mask]
    blocked[n2:] = True

    c2 = np.zeros(total)
    c2[:n] = c
    status = _iterate(T, basis, c2, blocked, tol)
    if status == "unbounded":
        return "unbounded", np.nan, None, None

    # refine from original data to shed accumulated tableau error
    B = A_std[np.ix_(keep_rows, basis)]
    try:
        xB = np.linalg.solve(B, b[keep_rows])
        yk = np.linalg.solve(B.T, c2[basis])
    except np.linalg.LinAlgError:
        xB = T[:, -1].copy()
        yk = None
    z = np.zeros(total)
    z[basis] = xB
    y = np.zeros(m)
    if yk is not None:
        y[keep_rows] = yk
    else:  # fallback: duals via tableau reduced costs on slack columns
        r = c2 - c2[basis] @ T[:, :-1]
        for i in range(m):
            j = slack_of_row[i]
            if j >= 0:
                y[i] = -r[j] * (1.0 if senses[i] == LE else -1.0)
    y *= row_sign
    return "optimal", float(c @ z[:n]), z[:n], y


# ---------------------------------------------------------------------------
# general solve with canonicalization and optional dualization
# ---------------------------------------------------------------------------

@dataclass
class _MidForm:
    """min c.x, rows {<=,=,>=}, each var either free or >= 0."""

    c: np.ndarray
    A: np.ndarray
    senses: tuple
    b: np.ndarray
    free: np.ndarray            # bool per var
    shift: np.ndarray           # x_orig = sign * x_mid + shift
    sign: np.ndarray
    const: float                # objective constant from shifting
    n_orig_rows: int


def _to_midform(p: LpProblem) -> _MidForm:
    c = -p.c.copy() if p.maximize else p.c.copy()
    A = p.A.copy()
    n = A.shape[1]
    shift = np.zeros(n)
    sign = np.ones(n)
    free = np.zeros(n, dtype=bool)
    extra_rows = []
    extra_b = []
    for j in range(n):
        lo, hi = p.lb[j], p.ub[j]
        if np.isinf(lo) and np.isinf(hi):
            free[j] = True
        elif not np.isinf(lo):
            shift[j] = lo
            if not np.isinf(hi):
                row = np.zeros(n)
                row[j] = 1.0
                extra_rows.append(row)
                extra_b.append(hi - lo)
        else:  # finite ub only: flip the variable
            sign[j] = -1.0
            shift[j] = hi
    senses = list(p.senses)
    b = p.b - A @ shift
    A = A * sign
    if extra_rows:
        E = (np.array(extra_rows) * sign)
        A = np.vstack([A, E])
        b = np.concatenate([b, np.array(extra_b)])
        senses += [LE] * len(extra_rows)
    const = float((-p.c if p.maximize else p.c) @ shift)
    return _MidForm(c * sign, A, tuple(senses), b, free, shift, sign, const,
                    p.A.shape[0])


def _solve_mid_direct(mf: _MidForm, tol):
    """Split free variables and run the standard-form core."""
    n = mf.A.shape[1]
    free_idx = np.nonzero(mf.free)[0]
    A = np.hstack([mf.A, -mf.A[:, free_idx]])
    c = np.concatenate([mf.c, -mf.c[free_idx]])
    status, val, z, y = _solve_cf(c, A, mf.senses, mf.b, tol)
    if status != "optimal":
        return status, np.nan, None, None
    x = z[:n].copy()
    x[free_idx] -= z[n:]
    return status, val, x, y


def _solve_mid_dual(mf: _MidForm, tol):
    """Solve through the dual; recover the primal from the dual's duals."""
    m, n = mf.A.shape
    # y = Y u with u >= 0; equality rows keep a free dual variable
    col_row = []
    col_sgn = []
    u_free = []
    for i, s in enumerate(mf.senses):
        col_row.append(i)
        col_sgn.append(-1.0 if s == LE else 1.0)
        u_free.append(s == EQ)
    col_row = np.array(col_row)
    col_sgn = np.array(col_sgn)
    u_free = np.array(u_free, dtype=bool)
    # dual rows: A_j . y {<= c_j if x_j >= 0, = c_j if x_j free}
    D_A = (mf.A[col_row] * col_sgn[:, None]).T        # n x m
    D_b = mf.c
    D_c = -(mf.b[col_row] * col_sgn)
    d_senses = tuple(EQ if f else LE for f in mf.free)
    free_u = np.nonzero(u_free)[0]
    A2 = np.hstack([D_A, -D_A[:, free_u]])
    c2 = np.concatenate([D_c, -D_c[free_u]])
    status, val2, u2, w = _solve_cf(c2, A2, d_senses, D_b, tol)
    if status == "unbounded":
        return "infeasible", np.nan, None, None
    if status != "optimal":
        return "fallback", np.nan, None, None
    u = u2[:m].copy()
    u[free_u] -= u2[m:]
    y = np.zeros(m)
    np.add.at(y, col_row, col_sgn * u)
    x = -w
    return "optimal", float(mf.c @ x), x, y


def solve(problem: LpProblem, tol: float | None = None) -> LpSolution:
    """Solve an LP; optimal solutions carry verified certificates."""
    if tol is None:
        tol = lp_tol()
    mf = _to_midform(problem)
    m, n = mf.A.shape
    dualize = m > 2 * n + 20
    if dualize:
        status, val, x, y = _solve_mid_dual(mf, tol)
        if status == "fallback" or (
                status == "optimal"
                and not _certified(problem, mf, val, x, y, tol)):
            status, val, x, y = _solve_mid_direct(mf, tol)
    else:
        status, val, x, y = _solve_mid_direct(mf, tol)
    if status != "optimal":
        return LpSolution(status=status)
    x_orig = mf.sign * x + mf.shift
    y_orig = y[:mf.n_orig_rows].copy()
    value = val + mf.const
    if problem.maximize:
        value = -value
        y_orig = -y_orig
    sol = LpSolution(status="optimal", value=value, x=x_orig, y=y_orig)
    _fill_residuals(problem, sol, tol)
    if max(sol.primal_residual, sol.dual_residual) > tol or \
            sol.gap > tol * (1.0 + abs(sol.value)):
        raise LpError(
            f"certificate check failed: primal={sol.primal_residual:.3e} "
            f"dual={sol.dual_residual:.3e} gap={sol.gap:.3e}")
    return sol


def _certified(problem, mf, val, x, y, tol) -> bool:
    """Quick validity check for the dualized path, in mid-form coordinates."""
    r = mf.A @ x - mf.b
    pr = 0.0
    for i, s in enumerate(mf.senses):
        if s == LE:
            pr = max(pr, r[i])
        elif s == GE:
            pr = max(pr, -r[i])
        else:
            pr = max(pr, abs(r[i]))
    pr = max(pr, float(np.max(-x[~mf.free], initial=0.0)))
    rc = mf.c - mf.A.T @ y
    dr = float(np.max(np.abs(rc[mf.free]), initial=0.0))
    dr = max(dr, float(np.max(-rc[~mf.free], initial=0.0)))
    gap = abs(val - float(mf.b @ y))
    scale = 10.0 * (1.0 + abs(val))
    return pr <= tol * scale and dr <= tol * scale and gap <= tol * scale


def _fill_residuals(problem: LpProblem, sol: LpSolution, tol) -> None:
    x, y = sol.x, sol.y
    r = problem.A @ x - problem.b
    pr = 0.0
    cs = 0.0
    for i, s in enumerate(problem.senses):
        if s == LE:
            pr = max(pr, r[i])
        elif s == GE:
            pr = max(pr, -r[i])
        else:
            pr = max(pr, abs(r[i]))
        cs = max(cs, abs(y[i] * r[i]))
    pr = max(pr, float(np.max(problem.lb - x, initial=0.0)))
    pr = max(pr, float(np.max(x - problem.ub, initial=0.0)))
    # reduced costs in min orientation
    sgn = -1.0 if problem.maximize else 1.0
    rc = sgn * problem.c - problem.A.T @ (sgn * y)
    dr = 0.0
    dual_obj = float(problem.b @ (sgn * y))
    for j in range(x.size):
        lo, hi = problem.lb[j], problem.ub[j]
        at_lo = not np.isinf(lo) and x[j] <= lo + 1e-7 * (1 + abs(lo))
        at_hi = not np.isinf(hi) and x[j] >= hi - 1e-7 * (1 + abs(hi))
        if at_lo and at_hi:
            dual_obj += lo * rc[j]
            continue
        if at_lo:
            dr = max(dr, -rc[j])
            dual_obj += lo * max(rc[j], 0.0)
            cs = max(cs, abs(min(rc[j], 0.0)))
        elif at_hi:
            dr = max(dr, rc[j])
            dual_obj += hi * min(rc[j], 0.0)
            cs = max(cs, abs(max(rc[j], 0.0)))
        else:
            dr = max(dr, abs(rc[j]))
    primal_obj = float(problem.c @ x)
    gap = abs(primal_obj - sgn * dual_obj)
    sol.primal_residual = float(pr)
    sol.dual_residual = float(dr)
    sol.gap = float(gap)
    sol.cs_residual = float(cs)
