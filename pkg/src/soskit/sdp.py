"""Block-structured SDP data model, PSD tests, duality, and SDPA file I/O.

A problem holds PSD variable blocks X_b, free scalar variables u, scalar
rows  sum_b <A_kb, X_b> + d_k.u  (<= or ==)  b_k, and matrix inequalities
G0 + sum_j u_j G_j >= 0 over the free scalars.  This mixed form is closed
under Lagrangian duality: blocks dualize to matrix inequalities and rows to
free scalars, so ``dual_of`` is an involution up to sign normalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

import numpy as np

from soskit import ipm

OPTIMAL = "optimal"
PRIMAL_INFEASIBLE = "primal_infeasible_cert"
DUAL_INFEASIBLE = "dual_infeasible_cert"
MAX_ITER = "max_iter"
NUMERICAL_FAILURE = "numerical_failure"


def _sym(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    return (m + m.T) / 2.0


@dataclass
class LinearRow:
    """sum_b <blocks[b], X_b> + sum_j free[j]*u_j  rel  rhs."""

    blocks: Dict[int, np.ndarray] = field(default_factory=dict)
    free: Dict[int, float] = field(default_factory=dict)
    rhs: float = 0.0
    rel: str = "=="
    label: Optional[str] = None

    def __post_init__(self):
        if self.rel not in ("==", "<="):
            raise ValueError(f"unknown relation {self.rel!r}")
        self.blocks = {b: _sym(a) for b, a in self.blocks.items()}
        self.free = {j: float(c) for j, c in self.free.items() if c != 0.0}
        self.rhs = float(self.rhs)


@dataclass
class MatrixIneq:
    """const + sum_j coeffs[j]*u_j >= 0 (positive semidefinite)."""

    dim: int
    const: np.ndarray
    coeffs: Dict[int, np.ndarray] = field(default_factory=dict)
    diag: bool = False
    label: Optional[str] = None

    def __post_init__(self):
        self.const = _sym(self.const)
        if self.const.shape != (self.dim, self.dim):
            raise ValueError("const has wrong shape")
        self.coeffs = {j: _sym(g) for j, g in self.coeffs.items()}
        for g in self.coeffs.values():
            if g.shape != (self.dim, self.dim):
                raise ValueError("coefficient matrix has wrong shape")

    def value(self, u: Sequence[float]) -> np.ndarray:
        out = self.const.copy()
        for j, g in self.coeffs.items():
            out += u[j] * g
        return out


@dataclass
class SdpProblem:
    block_dims: List[int] = field(default_factory=list)
    C: List[np.ndarray] = field(default_factory=list)
    n_free: int = 0
    free_obj: np.ndarray = None
    rows: List[LinearRow] = field(default_factory=list)
    lmis: List[MatrixIneq] = field(default_factory=list)
    sense: str = "min"
    free_names: Optional[List[str]] = None

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"unknown sense {self.sense!r}")
        self.C = [_sym(c) for c in self.C]
        if len(self.C) != len(self.block_dims):
            raise ValueError("one objective matrix per block required")
        for d, c in zip(self.block_dims, self.C):
            if c.shape != (d, d):
                raise ValueError("objective block has wrong shape")
        if self.free_obj is None:
            self.free_obj = np.zeros(self.n_free)
        self.free_obj = np.asarray(self.free_obj, dtype=float)
        if self.free_obj.shape != (self.n_free,):
            raise ValueError("free objective has wrong length")

    def objective_value(self, X: Sequence[np.ndarray], u: Sequence[float]) -> float:
        val = float(np.dot(self.free_obj, u)) if self.n_free else 0.0
        for c, x in zip(self.C, X):
            val += float(np.sum(c * x))
        return val

    def negated(self) -> "SdpProblem":
        """Same constraints, objective negated, sense flipped."""
        return SdpProblem(
            block_dims=list(self.block_dims),
            C=[-c for c in self.C],
            n_free=self.n_free,
            free_obj=-self.free_obj,
            rows=self.rows,
            lmis=self.lmis,
            sense="max" if self.sense == "min" else "min",
            free_names=self.free_names,
        )


@dataclass
class SdpSolution:
    status: str
    primal_obj: float
    dual_obj: float
    gap: float
    iterations: int
    X: List[np.ndarray]
    free: np.ndarray
    y: np.ndarray
    Z: List[np.ndarray]
    marginal: bool = False
    primal_residual: float = 0.0
    dual_residual: float = 0.0

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "primal_obj": self.primal_obj,
            "dual_obj": self.dual_obj,
            "gap": self.gap,
            "iterations": self.iterations,
        }


# -- PSD tests ---------------------------------------------------------------

def is_psd(M, mode: str = "float", sym_tol: float = 1e-9):
    """PSD test. Float mode thresholds the minimum eigenvalue at
    -1e-8*||M||; exact mode decides over the rationals.  Returns
    (verdict, witness) where witness is a vector x with x'Mx < 0 when the
    verdict is False."""
    if mode == "exact":
        return is_psd_exact(M)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix must be square")
    scale = np.linalg.norm(M)
    if np.max(np.abs(M - M.T)) > sym_tol * max(1.0, scale):
        raise ValueError("matrix is not symmetric")
    if M.shape[0] == 0:
        return True, None
    vals, vecs = np.linalg.eigh(_sym(M))
    eps = 1e-8 * scale
    if vals[0] >= -eps:
        return True, None
    return False, vecs[:, 0]


def is_psd_exact(M):
    """Exact PSD decision for a symmetric rational matrix via pivoted
    symmetric elimination; witness is rational with x'Mx < 0."""
    n = len(M)
    A = [[Fraction(M[i][j]) for j in range(n)] for i in range(n)]
    for i in range(n):
        for j in range(i):
            if A[i][j] != A[j][i]:
                raise ValueError("matrix is not symmetric")
    active = list(range(n))
    steps = []  # (pivot index, {j: col_j/pivot}) for witness lifting

    def lift(w):
        for piv, mults in reversed(steps):
            x = -sum(m * w.get(j, Fraction(0)) for j, m in mults.items())
            if x:
                w[piv] = x
        return [w.get(i, Fraction(0)) for i in range(n)]

    while active:
        neg = next((i for i in active if A[i][i] < 0), None)
        if neg is not None:
            return False, lift({neg: Fraction(1)})
        piv = next((i for i in active if A[i][i] > 0), None)
        if piv is None:
            for i in active:
                for j in active:
                    if A[i][j] != 0:
                        sgn = Fraction(-1) if A[i][j] > 0 else Fraction(1)
                        return False, lift({i: Fraction(1), j: sgn})
            return True, None
        p = A[piv][piv]
        col = {j: A[j][piv] for j in active if j != piv and A[j][piv] != 0}
        active.remove(piv)
        for i in col:
            for j in col:
                A[i][j] -= col[i] * col[j] / p
        steps.append((piv, {j: c / p for j, c in col.items()}))
    return True, None


# -- duality -----------------------------------------------------------------

def dual_of(p: SdpProblem, simplify: bool = True) -> SdpProblem:
    """Lagrangian dual in the same mixed form.

    Blocks become matrix inequalities over the row multipliers, matrix
    inequalities become PSD variable blocks, rows become free scalars, and
    free scalars become equality rows.  A min problem dualizes to max (dual
    <= primal) and vice versa.  With simplify, sign-constrained slack
    scalars left over from dualizing inequality rows are folded back into
    inequality rows, which makes dualizing twice return the original
    problem.
    """
    q = p if p.sense == "min" else p.negated()
    m = len(q.rows)

    # dual variables: w_k per row of q (free scalars), Z_l per LMI (blocks)
    d_block_dims = [l.dim for l in q.lmis]
    d_C = [-l.const for l in q.lmis]       # objective: b.w - sum <G0, Z>
    d_free_obj = np.array([r.rhs for r in q.rows], dtype=float)

    d_rows: List[LinearRow] = []
    for j in range(q.n_free):  # one equality per primal free scalar
        blocks = {}
        for li, l in enumerate(q.lmis):
            if j in l.coeffs:
                blocks[li] = l.coeffs[j]
        free = {k: r.free[j] for k, r in enumerate(q.rows) if j in r.free}
        d_rows.append(LinearRow(blocks=blocks, free=free, rhs=float(q.free_obj[j]),
                                rel="==", label=f"free[{j}]"))
    for k, r in enumerate(q.rows):  # sign constraint for inequality rows
        if r.rel == "<=":
            d_rows.append(LinearRow(free={k: 1.0}, rhs=0.0, rel="<=",
                                    label=f"sign[{k}]"))

    d_lmis: List[MatrixIneq] = []
    for b, dim in enumerate(q.block_dims):  # C_b - sum_k w_k A_kb >= 0
        coeffs = {k: -r.blocks[b] for k, r in enumerate(q.rows) if b in r.blocks}
        d_lmis.append(MatrixIneq(dim=dim, const=q.C[b].copy(), coeffs=coeffs,
                                 label=f"block[{b}]"))

    dual = SdpProblem(
        block_dims=d_block_dims,
        C=d_C,
        n_free=m,
        free_obj=d_free_obj,
        rows=d_rows,
        lmis=d_lmis,
        sense="max",
    )
    if simplify:
        dual = _eliminate_slack_scalars(dual)
    return dual if p.sense == "min" else dual.negated()


def _eliminate_slack_scalars(p: SdpProblem) -> SdpProblem:
    """Fold out free scalars that act as pure inequality slacks: zero
    objective, no matrix-inequality coefficients, one equality row and one
    sign row.  The equality becomes an inequality in the surviving data."""
    eq_hits: Dict[int, List[int]] = {}
    sign_hits: Dict[int, List[int]] = {}
    for k, r in enumerate(p.rows):
        for j in r.free:
            if r.rel == "<=" and not r.blocks and len(r.free) == 1 and r.rhs == 0.0:
                sign_hits.setdefault(j, []).append(k)
            else:
                eq_hits.setdefault(j, []).append(k)
    lmi_vars = {j for l in p.lmis for j in l.coeffs}

    slacks = {}
    for j in range(p.n_free):
        if p.free_obj[j] != 0.0 or j in lmi_vars:
            continue
        eqs, signs = eq_hits.get(j, []), sign_hits.get(j, [])
        if len(eqs) == 1 and len(signs) == 1 and p.rows[eqs[0]].rel == "==":
            slacks[j] = (eqs[0], signs[0])
    if not slacks:
        return p

    drop_rows = {s for _, s in slacks.values()}
    rewrite = {k: j for j, (k, _) in slacks.items()}
    keep_vars = [j for j in range(p.n_free) if j not in slacks]
    remap = {j: i for i, j in enumerate(keep_vars)}

    rows = []
    for k, r in enumerate(p.rows):
        if k in drop_rows:
            continue
        blocks = {b: a.copy() for b, a in r.blocks.items()}
        free = dict(r.free)
        rhs, rel = r.rhs, r.rel
        if k in rewrite:
            j = rewrite[k]
            gamma = free.pop(j)
            sign_row = p.rows[slacks[j][1]]
            flip = (sign_row.free[j] / gamma) > 0  # slack bounded above by zero
            rel = "<="
            if flip:
                blocks = {b: -a for b, a in blocks.items()}
                free = {jj: -c for jj, c in free.items()}
                rhs = -rhs
        rows.append(LinearRow(blocks=blocks,
                              free={remap[jj]: c for jj, c in free.items()},
                              rhs=rhs, rel=rel, label=r.label))
    lmis = [MatrixIneq(dim=l.dim, const=l.const.copy(),
                       coeffs={remap[j]: g.copy() for j, g in l.coeffs.items()},
                       diag=l.diag, label=l.label) for l in p.lmis]
    return SdpProblem(
        block_dims=list(p.block_dims),
        C=[c.copy() for c in p.C],
        n_free=len(keep_vars),
        free_obj=p.free_obj[keep_vars],
        rows=rows,
        lmis=lmis,
        sense=p.sense,
    )


def _canonical_signs(p: SdpProblem) -> SdpProblem:
    """Flip each free variable so its first nonzero appearance (objective,
    then rows in order, then matrix-inequality coefficients) is positive, and
    flip equality rows so their first nonzero coefficient is positive."""
    flip = np.ones(p.n_free)
    for j in range(p.n_free):
        lead = p.free_obj[j]
        if lead == 0.0:
            for r in p.rows:
                if r.free.get(j, 0.0) != 0.0:
                    lead = r.free[j]
                    break
        if lead == 0.0:
            for l in p.lmis:
                g = l.coeffs.get(j)
                if g is not None and np.any(g):
                    lead = g.flatten()[np.flatnonzero(g.flatten())[0]]
                    break
        if lead < 0.0:
            flip[j] = -1.0
    rows = []
    for r in p.rows:
        free = {j: flip[j] * c for j, c in r.free.items()}
        blocks = {b: a.copy() for b, a in r.blocks.items()}
        rhs = r.rhs
        if r.rel == "==":
            lead = 0.0
            for b in sorted(blocks):
                a = blocks[b]
                nz = np.flatnonzero(a.flatten())
                if nz.size:
                    lead = a.flatten()[nz[0]]
                    break
            if lead == 0.0:
                for j in sorted(free):
                    if free[j] != 0.0:
                        lead = free[j]
                        break
            if lead < 0.0:
                blocks = {b: -a for b, a in blocks.items()}
                free = {j: -c for j, c in free.items()}
                rhs = -rhs
        rows.append(LinearRow(blocks=blocks, free=free, rhs=rhs, rel=r.rel, label=r.label))
    lmis = [MatrixIneq(dim=l.dim, const=l.const.copy(),
                       coeffs={j: flip[j] * g for j, g in l.coeffs.items()},
                       diag=l.diag, label=l.label) for l in p.lmis]
    return SdpProblem(block_dims=list(p.block_dims), C=[c.copy() for c in p.C],
                      n_free=p.n_free, free_obj=flip * p.free_obj, rows=rows,
                      lmis=lmis, sense=p.sense)


def structurally_equal(p: SdpProblem, q: SdpProblem, tol: float = 0.0) -> bool:
    """Structural equality up to sense normalization and variable/row sign
    flips (dualizing twice returns the original problem in this sense)."""
    a = _canonical_signs(p if p.sense == "min" else p.negated())
    b = _canonical_signs(q if q.sense == "min" else q.negated())
    if a.block_dims != b.block_dims or a.n_free != b.n_free:
        return False
    if len(a.rows) != len(b.rows) or len(a.lmis) != len(b.lmis):
        return False

    def close(x, y):
        return np.allclose(x, y, rtol=0.0, atol=tol) if tol else np.array_equal(x, y)

    if not all(close(x, y) for x, y in zip(a.C, b.C)):
        return False
    if not close(a.free_obj, b.free_obj):
        return False
    for ra, rb in zip(a.rows, b.rows):
        if ra.rel != rb.rel or set(ra.blocks) != set(rb.blocks):
            return False
        if abs(ra.rhs - rb.rhs) > tol:
            return False
        if not all(close(ra.blocks[k], rb.blocks[k]) for k in ra.blocks):
            return False
        fa, fb = np.zeros(a.n_free), np.zeros(b.n_free)
        for j, c in ra.free.items():
            fa[j] = c
        for j, c in rb.free.items():
            fb[j] = c
        if not close(fa, fb):
            return False
    for la, lb in zip(a.lmis, b.lmis):
        if la.dim != lb.dim or set(la.coeffs) != set(lb.coeffs):
            return False
        if not close(la.const, lb.const):
            return False
        if not all(close(la.coeffs[j], lb.coeffs[j]) for j in la.coeffs):
            return False
    return True


# -- feasibility reports -------------------------------------------------------

@dataclass
class FeasibilityReport:
    objective: float
    row_residuals: List[float]       # signed violation per row (positive = violated)
    block_min_eigs: List[float]
    lmi_min_eigs: List[float]

    def max_violation(self) -> float:
        worst = 0.0
        for r in self.row_residuals:
            worst = max(worst, r)
        for e in self.block_min_eigs + self.lmi_min_eigs:
            worst = max(worst, -e)
        return worst

    def feasible(self, tol: float = 1e-8) -> bool:
        return self.max_violation() <= tol


def check_feasible(p: SdpProblem, X: Sequence[np.ndarray] = (),
                   u: Sequence[float] = ()) -> FeasibilityReport:
    """Residual report for a candidate point (regression harness for
    handcrafted analytic solutions)."""
    X = [_sym(x) for x in X]
    if len(X) != len(p.block_dims):
        raise ValueError(f"expected {len(p.block_dims)} blocks, got {len(X)}")
    u = np.asarray(list(u), dtype=float)
    if u.shape != (p.n_free,):
        raise ValueError(f"expected {p.n_free} free scalars, got {u.shape}")

    row_res = []
    for r in p.rows:
        lhs = sum(float(np.sum(a * X[b])) for b, a in r.blocks.items())
        lhs += sum(c * u[j] for j, c in r.free.items())
        row_res.append(lhs - r.rhs if r.rel == "<=" else abs(lhs - r.rhs))
    block_eigs = [float(np.linalg.eigvalsh(x)[0]) if x.size else 0.0 for x in X]
    lmi_eigs = [float(np.linalg.eigvalsh(l.value(u))[0]) for l in p.lmis]
    return FeasibilityReport(
        objective=p.objective_value(X, u),
        row_residuals=row_res,
        block_min_eigs=block_eigs,
        lmi_min_eigs=lmi_eigs,
    )


# -- solving -------------------------------------------------------------------

def solve(p: SdpProblem, tol: float = 1e-8, max_iter: int = 200,
          warm_start: Optional[SdpSolution] = None) -> SdpSolution:
    """Solve with the primal-dual interior-point method.

    Matrix inequalities are lifted into slack blocks; when the problem is
    dominated by matrix inequalities (few rows in its dual), the dual is
    solved instead and the solution mapped back, which keeps the Schur
    complement full rank.  Weak duality is checked as a postcondition on
    optimal solutions; a violation beyond 10*tol downgrades the status to
    numerical_failure.
    """
    q = p if p.sense == "min" else p.negated()
    sign = 1.0 if p.sense == "min" else -1.0

    n_ineq = sum(1 for r in q.rows if r.rel == "<=")
    cost_direct = len(q.rows) + sum(l.dim * (l.dim + 1) // 2 for l in q.lmis)
    cost_dual = q.n_free + sum(d * (d + 1) // 2 for d in q.block_dims) + 2 * n_ineq

    dual_sol = None
    if warm_start is None and cost_dual < cost_direct:
        dual_sol = _solve_via_dual(q, tol, max_iter)
        if dual_sol is not None and dual_sol.status == OPTIMAL:
            dual_sol.primal_obj *= sign
            dual_sol.dual_obj *= sign
            return _weak_duality_postcheck(dual_sol, p.sense, tol)

    std, mp = _standardize(q)
    warm = None
    if warm_start is not None:
        warm = _warm_std(std, mp, q, warm_start)
    res = ipm.solve_std(std, tol=tol, max_iter=max_iter, warm=warm)

    nb = len(q.block_dims)
    sol = SdpSolution(
        status=res.status,
        primal_obj=res.pobj,
        dual_obj=res.dobj,
        gap=res.relgap,
        iterations=res.iterations,
        X=[res.X[i] for i in range(nb)],
        free=res.u.copy(),
        y=res.y[: len(q.rows)].copy(),
        Z=[res.S[mp.lmi_slack_block[li]] for li in range(len(q.lmis))],
        marginal=res.marginal,
        primal_residual=res.pres,
        dual_residual=res.dres,
    )
    # a sub-tolerance dual-orientation run may still beat the direct one
    if dual_sol is not None and _solution_error(dual_sol) < _solution_error(sol):
        sol = dual_sol
    sol.primal_obj *= sign
    sol.dual_obj *= sign
    return _weak_duality_postcheck(sol, p.sense, tol)


def _solution_error(sol: SdpSolution) -> float:
    vals = [sol.primal_residual, sol.dual_residual, sol.gap]
    if any(v != v for v in vals):
        return np.inf
    return max(vals)


def _weak_duality_postcheck(sol: SdpSolution, sense: str, tol: float) -> SdpSolution:
    if sol.status == OPTIMAL:
        slack = 10.0 * tol * (1.0 + abs(sol.primal_obj) + abs(sol.dual_obj))
        violated = (sol.dual_obj - sol.primal_obj > slack) if sense == "min" \
            else (sol.primal_obj - sol.dual_obj > slack)
        if violated:
            sol.status = NUMERICAL_FAILURE
    return sol


def _solve_via_dual(q: SdpProblem, tol: float, max_iter: int) -> Optional[SdpSolution]:
    """Solve the Lagrangian dual of a min-sense problem and map back: the
    dual's row multipliers are -u, its matrix-inequality multipliers are the
    primal blocks, and vice versa.  The mapped status stays optimal only if
    the solution also certifies the primal pair at the tolerance."""
    dmin = dual_of(q, simplify=False).negated()  # keep row/multiplier indexing
    std, mp = _standardize(dmin)
    res = ipm.solve_std(std, tol=tol, max_iter=max_iter, warm=None)
    if res.pobj != res.pobj:  # hard failure before any iterate
        return None
    if res.marginal:
        # facial reduction or a Slater pathology inside the dual changes its
        # dual, so the mapping back to the primal is not trustworthy
        return None

    u = -res.y[: q.n_free].copy()
    X = [res.S[mp.lmi_slack_block[b]] for b in range(len(q.block_dims))]
    y = res.u[: len(q.rows)].copy()
    Z = [res.X[l] for l in range(len(q.lmis))]

    pobj = q.objective_value(X, u)
    dobj = -res.pobj
    relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
    status = res.status
    if status == PRIMAL_INFEASIBLE:
        status = DUAL_INFEASIBLE
    elif status == DUAL_INFEASIBLE:
        status = PRIMAL_INFEASIBLE
    if status == OPTIMAL and (relgap > 10.0 * tol or res.marginal):
        status = MAX_ITER
    return SdpSolution(
        status=status,
        primal_obj=pobj,
        dual_obj=dobj,
        gap=relgap,
        iterations=res.iterations,
        X=X,
        free=u,
        y=y,
        Z=Z,
        marginal=res.marginal,
        primal_residual=res.dres,
        dual_residual=res.pres,
    )


@dataclass
class _StdMaps:
    lmi_slack_block: List[int]
    lmi_entry_rows: List[List[int]]
    ineq_slack_block: Dict[int, int]


def _standardize(q: SdpProblem):
    """Rewrite a min-sense mixed problem in pure equality standard form:
    matrix inequalities become slack blocks pinned entrywise, inequality rows
    gain 1x1 slack blocks."""
    dims = list(q.block_dims)
    C = [c.copy() for c in q.C]
    rows: List[ipm.StdRow] = []
    for r in q.rows:
        rows.append(ipm.StdRow(dict(r.blocks), dict(r.free), r.rhs))

    maps = _StdMaps(lmi_slack_block=[], lmi_entry_rows=[], ineq_slack_block={})

    for li, l in enumerate(q.lmis):
        bidx = len(dims)
        dims.append(l.dim)
        C.append(np.zeros((l.dim, l.dim)))
        maps.lmi_slack_block.append(bidx)
        entry_rows = []
        for i in range(l.dim):
            for j in range(i, l.dim):
                a = np.zeros((l.dim, l.dim))
                if i == j:
                    a[i, i] = 1.0
                else:
                    a[i, j] = a[j, i] = 0.5
                free = {jj: -g[i, j] for jj, g in l.coeffs.items() if g[i, j] != 0.0}
                entry_rows.append(len(rows))
                rows.append(ipm.StdRow({bidx: a}, free, float(l.const[i, j])))
        maps.lmi_entry_rows.append(entry_rows)

    for k, r in enumerate(q.rows):
        if r.rel == "<=":
            bidx = len(dims)
            dims.append(1)
            C.append(np.zeros((1, 1)))
            maps.ineq_slack_block[k] = bidx
            rows[k].blocks[bidx] = np.ones((1, 1))

    std = ipm.StdForm(
        dims=dims,
        C=C,
        rows=rows,
        n_free=q.n_free,
        free_obj=q.free_obj.copy(),
        b=np.array([r.rhs for r in rows], dtype=float),
    )
    return std, maps


def _warm_std(std, mp: _StdMaps, q: SdpProblem, w: SdpSolution):
    """Map a previous solution of the same problem onto the standard form."""
    nb = len(q.block_dims)
    X = [w.X[i].copy() for i in range(nb)]
    S = [np.zeros_like(x) for x in X]
    # dual slack on the variable blocks: C_b - sum y_k A_kb
    for b in range(nb):
        S[b] = q.C[b].copy()
        for k, r in enumerate(q.rows):
            if b in r.blocks:
                S[b] -= w.y[k] * r.blocks[b]
    # entry-row multipliers come after the original rows in _standardize order;
    # the slack block's dual slack is the LMI multiplier, so y_ij = -(2-d_ij)*Z_ij
    y_full = list(w.y)
    for li, l in enumerate(q.lmis):
        X.append(l.value(w.free))
        S.append(w.Z[li].copy())
        for i in range(l.dim):
            for j in range(i, l.dim):
                y_full.append(-w.Z[li][i, j] * (1.0 if i == j else 2.0))
    for k, r in enumerate(q.rows):
        if r.rel == "<=":
            lhs = sum(float(np.sum(a * w.X[b])) for b, a in r.blocks.items())
            lhs += sum(c * w.free[j] for j, c in r.free.items())
            X.append(np.array([[max(r.rhs - lhs, 0.0)]]))
            S.append(np.array([[max(-w.y[k], 0.0)]]))
    return ipm.WarmStart(X=X, S=S, y=np.array(y_full), u=np.asarray(w.free, dtype=float))


# -- SDPA sparse format --------------------------------------------------------

def to_sdpa_form(p: SdpProblem) -> SdpProblem:
    """Equivalent problem in the SDPA variable/LMI shape: free scalars and
    matrix inequalities only (min sense).

    PSD variable blocks are vectorized into their upper-triangle entries with
    an LMI reconstituting the matrix; equality rows split into opposing
    inequalities; all scalar inequalities collect into one diagonal LMI.
    A max problem is negated first, so its exported optimum is the negative
    of the original.
    """
    q = p if p.sense == "min" else p.negated()
    names = list(q.free_names) if q.free_names else [f"u{j}" for j in range(q.n_free)]
    entry_idx: Dict[tuple, int] = {}
    for b, dim in enumerate(q.block_dims):
        for i in range(dim):
            for j in range(i, dim):
                entry_idx[(b, i, j)] = q.n_free + len(entry_idx)
                names.append(f"X{b}[{i},{j}]")
    nf = q.n_free + len(entry_idx)

    free_obj = np.zeros(nf)
    free_obj[: q.n_free] = q.free_obj
    for b, c in enumerate(q.C):
        for i in range(q.block_dims[b]):
            for j in range(i, q.block_dims[b]):
                if c[i, j] != 0.0:
                    free_obj[entry_idx[(b, i, j)]] += (1.0 if i == j else 2.0) * c[i, j]

    lmis: List[MatrixIneq] = []
    for b, dim in enumerate(q.block_dims):
        coeffs = {}
        for i in range(dim):
            for j in range(i, dim):
                g = np.zeros((dim, dim))
                if i == j:
                    g[i, i] = 1.0
                else:
                    g[i, j] = g[j, i] = 1.0
                coeffs[entry_idx[(b, i, j)]] = g
        lmis.append(MatrixIneq(dim=dim, const=np.zeros((dim, dim)), coeffs=coeffs,
                               label=f"psd_block[{b}]"))
    for l in q.lmis:
        lmis.append(MatrixIneq(dim=l.dim, const=l.const.copy(),
                               coeffs={j: g.copy() for j, g in l.coeffs.items()},
                               diag=l.diag, label=l.label))

    # scalar rows -> one diagonal LMI holding b_k - lhs_k >= 0 slots
    slots = []
    for r in q.rows:
        fr = dict(r.free)
        for b, a in r.blocks.items():
            for i in range(q.block_dims[b]):
                for j in range(i, q.block_dims[b]):
                    if a[i, j] != 0.0:
                        jj = entry_idx[(b, i, j)]
                        fr[jj] = fr.get(jj, 0.0) + (1.0 if i == j else 2.0) * a[i, j]
        slots.append((fr, r.rhs))
        if r.rel == "==":
            slots.append(({j: -c for j, c in fr.items()}, -r.rhs))
    if slots:
        dim = len(slots)
        const = np.zeros((dim, dim))
        coeffs: Dict[int, np.ndarray] = {}
        for k, (fr, rhs) in enumerate(slots):
            const[k, k] = rhs
            for j, c in fr.items():
                coeffs.setdefault(j, np.zeros((dim, dim)))[k, k] = -c
        lmis.append(MatrixIneq(dim=dim, const=const, coeffs=coeffs, diag=True,
                               label="scalar_rows"))

    return SdpProblem(n_free=nf, free_obj=free_obj, lmis=lmis, sense="min",
                      free_names=names)


def export_sdpa(p: SdpProblem) -> str:
    """Serialize a problem in SDPA variable/LMI shape as a .dat-s string.

    The file encodes min c.x with sum_i x_i F_i - F0 >= 0 per block, so
    F_j = G_j and F0 = -G0 for each inequality G0 + sum x_j G_j >= 0.
    """
    if p.block_dims or p.rows or p.sense != "min":
        raise ValueError("export requires SDPA form; call to_sdpa_form first")
    lines = [f"{p.n_free}", f"{len(p.lmis)}"]
    lines.append(" ".join(str(-l.dim if l.diag else l.dim) for l in p.lmis))
    lines.append(" ".join(repr(float(v)) for v in p.free_obj))

    def emit(matno: int, blk: int, mat: np.ndarray, diag: bool):
        out = []
        n = mat.shape[0]
        for i in range(n):
            for j in (range(i, i + 1) if diag else range(i, n)):
                if mat[i, j] != 0.0:
                    out.append(f"{matno} {blk} {i+1} {j+1} {repr(float(mat[i, j]))}")
        return out

    for blk, l in enumerate(p.lmis, start=1):
        lines.extend(emit(0, blk, -l.const, l.diag))
    for j in range(p.n_free):
        for blk, l in enumerate(p.lmis, start=1):
            if j in l.coeffs:
                lines.extend(emit(j + 1, blk, l.coeffs[j], l.diag))
    return "\n".join(lines) + "\n"


def import_sdpa(text: str) -> SdpProblem:
    """Parse a .dat-s string into a problem in SDPA variable/LMI shape."""
    rows = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(("*", '"')):
            continue
        rows.append(line.replace(",", " ").replace("{", " ").replace("}", " ")
                    .replace("(", " ").replace(")", " "))
    if len(rows) < 4:
        raise ValueError("truncated SDPA file")
    m = int(rows[0].split()[0])
    nblocks = int(rows[1].split()[0])
    sizes = [int(t) for t in rows[2].split()]
    if len(sizes) != nblocks:
        raise ValueError(f"expected {nblocks} block sizes, found {len(sizes)}")
    cvec = [float(t) for t in rows[3].split()]
    if len(cvec) != m:
        raise ValueError(f"expected {m} objective entries, found {len(cvec)}")

    lmis = [MatrixIneq(dim=abs(s), const=np.zeros((abs(s), abs(s))), diag=s < 0)
            for s in sizes]
    mats: Dict[tuple, np.ndarray] = {}
    for line in rows[4:]:
        toks = line.split()
        if len(toks) != 5:
            raise ValueError(f"bad entry line: {line!r}")
        matno, blk, i, j = (int(t) for t in toks[:4])
        val = float(toks[4])
        if not (0 <= matno <= m and 1 <= blk <= nblocks):
            raise ValueError(f"entry indices out of range: {line!r}")
        dim = abs(sizes[blk - 1])
        if not (1 <= i <= j <= dim):
            raise ValueError(f"expected upper-triangle 1-based indices: {line!r}")
        key = (matno, blk)
        if key not in mats:
            mats[key] = np.zeros((dim, dim))
        mats[key][i - 1, j - 1] = val
        mats[key][j - 1, i - 1] = val
    for (matno, blk), mat in mats.items():
        if matno == 0:
            lmis[blk - 1].const = -mat
        else:
            lmis[blk - 1].coeffs[matno - 1] = mat
    for l in lmis:
        l.__post_init__()
    return SdpProblem(n_free=m, free_obj=np.array(cvec), lmis=lmis, sense="min")
