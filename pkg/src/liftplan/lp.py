"""Linear programs: representation, reference solver, text interchange.

The built-in solver is a dense two-phase simplex (Dantzig pricing with a
Bland fallback against cycling). Programs with free variables, inequality
rows only, and far more rows than variables are solved through their dual
so the tableau stays small; very large programs are handed to SciPy's HiGHS
backend behind the same interface.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GE = ">="
LE = "<="
EQ = "="

FEASIBILITY_TOL = 1e-7
OPTIMALITY_TOL = 1e-9
PIVOT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Dense-tableau cell budget before auto mode hands off to the sparse backend.
_TABLEAU_CELL_LIMIT = 2_000_000


class LpError(RuntimeError):
    """Numeric failure or malformed program; never a silently wrong answer."""


@dataclass
class LpSolution:
    status: str
    values: dict[str, float] = field(default_factory=dict)
    objective: float | None = None


class LinearProgram:
    """Minimization LP over named variables with >=, <=, = row constraints."""

    def __init__(self, name: str = "lp"):
        self.name = name
        self.variable_names: list[str] = []
        self._index: dict[str, int] = {}
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.objective: dict[int, float] = {}
        # rows: (((var_index, coef), ...), sense, rhs)
        self.rows: list[tuple[tuple[tuple[int, float], ...], str, float]] = []

    # -- construction ------------------------------------------------------

    def add_variable(self, name: str, lower: float | None = None,
                     upper: float | None = None) -> int:
        if name in self._index:
            raise LpError(f"duplicate variable {name}")
        index = len(self.variable_names)
        self.variable_names.append(name)
        self._index[name] = index
        self.lower.append(-np.inf if lower is None else float(lower))
        self.upper.append(np.inf if upper is None else float(upper))
        return index

    def variable_index(self, name: str) -> int:
        return self._index[name]

    def set_objective(self, coeffs: dict) -> None:
        self.objective = {self._resolve(k): float(v) for k, v in coeffs.items()}

    def add_constraint(self, coeffs, sense: str, rhs: float) -> None:
        if sense not in (GE, LE, EQ):
            raise LpError(f"unknown sense {sense!r}")
        items = coeffs.items() if isinstance(coeffs, dict) else coeffs
        merged: dict[int, float] = {}
        for key, value in items:
            idx = self._resolve(key)
            merged[idx] = merged.get(idx, 0.0) + float(value)
        for idx, value in merged.items():
            if not np.isfinite(value):
                raise LpError(f"non-finite coefficient on {self.variable_names[idx]}")
        row = tuple(sorted(merged.items()))
        self.rows.append((row, sense, float(rhs)))

    def _resolve(self, key) -> int:
        if isinstance(key, int):
            if not 0 <= key < len(self.variable_names):
                raise LpError(f"variable index {key} out of range")
            return key
        if key not in self._index:
            raise LpError(f"unknown variable {key}")
        return self._index[key]

    # -- stats -------------------------------------------------------------

    @property
    def num_variables(self) -> int:
        return len(self.variable_names)

    @property
    def num_constraints(self) -> int:
        return len(self.rows)


# ---------------------------------------------------------------------------
# Reference simplex (dense, deterministic)
# ---------------------------------------------------------------------------

def _simplex_standard(A: np.ndarray, b: np.ndarray, c: np.ndarray,
                      max_iter: int = 200_000):
    """min c'x s.t. Ax = b, x >= 0 by two-phase tableau simplex.

    Returns (status, x, info) with info = (basis, sign, kept_rows).
    Deterministic: Dantzig pricing with lowest-index ties, leaving row by
    lowest basic variable index, Bland's rule after stalling.
    """
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign

    # Tableau with artificial columns appended.
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n : n + m] = np.eye(m)
    T[:m, -1] = b
    basis = list(range(n, n + m))
    kept_rows = list(range(m))

    def pivot(row: int, col: int):
        T[row] /= T[row, col]
        factors = T[:, col].copy()
        factors[row] = 0.0
        T[:] -= np.outer(factors, T[row])
        basis[row] = col

    def run_phase(cost: np.ndarray, allowed: int, iter_budget: int) -> str:
        rows = len(basis)
        T[rows, :] = 0.0
        T[rows, : len(cost)] = cost
        for row, col in enumerate(basis):
            T[rows] -= T[rows, col] * T[row]
        degenerate_streak = 0
        use_bland = False
        for _ in range(iter_budget):
            reduced = T[rows, :allowed]
            if use_bland:
                candidates = np.nonzero(reduced < -OPTIMALITY_TOL)[0]
                if candidates.size == 0:
                    return OPTIMAL
                col = int(candidates[0])
            else:
                col = int(np.argmin(reduced))
                if reduced[col] >= -OPTIMALITY_TOL:
                    return OPTIMAL
            column = T[:rows, col]
            positive = column > PIVOT_TOL
            if not positive.any():
                return UNBOUNDED
            ratios = np.full(rows, np.inf)
            ratios[positive] = T[:rows, -1][positive] / column[positive]
            best = ratios.min()
            tied = np.nonzero(ratios <= best + 1e-12)[0]
            row = int(min(tied, key=lambda r: basis[r]))
            if best < 1e-12:
                degenerate_streak += 1
                if degenerate_streak > 200:
                    use_bland = True
            else:
                degenerate_streak = 0
            pivot(row, col)
        raise LpError("simplex iteration limit exceeded")

    # Phase 1: minimize the artificial total.
    phase1_cost = np.zeros(n + m)
    phase1_cost[n:] = 1.0
    status = run_phase(phase1_cost, n + m, max_iter)
    if status != OPTIMAL:
        raise LpError("phase 1 did not terminate cleanly")
    if -T[len(basis), -1] > FEASIBILITY_TOL:
        return INFEASIBLE, None, None

    # Drive leftover artificials out of the basis where possible.
    drop = []
    for row, col in enumerate(basis):
        if col >= n:
            pivot_col = -1
            for j in range(n):
                if abs(T[row, j]) > PIVOT_TOL:
                    pivot_col = j
                    break
            if pivot_col >= 0:
                pivot(row, pivot_col)
            else:
                drop.append(row)
    if drop:
        keep = [r for r in range(len(basis)) if r not in set(drop)]
        T = np.vstack([T[keep], np.zeros((1, T.shape[1]))])
        basis = [basis[r] for r in keep]
        kept_rows = [kept_rows[r] for r in keep]

    # Phase 2 on the original cost; artificial columns barred from entering.
    phase2_cost = np.zeros(T.shape[1] - 1)
    phase2_cost[:n] = c
    status = run_phase(phase2_cost, n, max_iter)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None
    x = np.zeros(n)
    for row, col in enumerate(basis):
        if col < n:
            x[col] = T[row, -1]
    return OPTIMAL, x, (list(basis), sign, kept_rows)


def _standardize(lp: LinearProgram):
    """Rewrite into min c'z, Az = b, z >= 0 plus a back-transform."""
    n = lp.num_variables
    col_of: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    offsets = np.zeros(n)
    cols = 0
    extra_rows: list[tuple[tuple[tuple[int, float], ...], str, float]] = []
    for i in range(n):
        lo, up = lp.lower[i], lp.upper[i]
        if np.isinf(lo) and np.isinf(up):
            col_of[i] = [(cols, 1.0), (cols + 1, -1.0)]
            cols += 2
        elif not np.isinf(lo):
            offsets[i] = lo
            col_of[i] = [(cols, 1.0)]
            if not np.isinf(up):
                extra_rows.append((((i, 1.0),), LE, up))
            cols += 1
        else:  # upper bound only
            offsets[i] = up
            col_of[i] = [(cols, -1.0)]
            cols += 1

    rows = list(lp.rows) + extra_rows
    m = len(rows)
    slack_count = sum(1 for _, sense, _ in rows if sense != EQ)
    A = np.zeros((m, cols + slack_count))
    b = np.zeros(m)
    slack_at = cols
    for r, (row, sense, rhs) in enumerate(rows):
        shifted = rhs
        for idx, coef in row:
            shifted -= coef * offsets[idx]
            for col, factor in col_of[idx]:
                A[r, col] += coef * factor
        b[r] = shifted
        if sense == LE:
            A[r, slack_at] = 1.0
            slack_at += 1
        elif sense == GE:
            A[r, slack_at] = -1.0
            slack_at += 1

    c = np.zeros(cols + slack_count)
    for idx, coef in lp.objective.items():
        for col, factor in col_of[idx]:
            c[col] += coef * factor

    def back(z: np.ndarray) -> np.ndarray:
        x = offsets.copy()
        for i in range(n):
            for col, factor in col_of[i]:
                x[i] += factor * z[col]
        return x

    constant = sum(coef * offsets[idx] for idx, coef in lp.objective.items())
    return A, b, c, back, constant


def _dualizable(lp: LinearProgram) -> bool:
    all_free = all(
        np.isinf(lo) and np.isinf(up) for lo, up in zip(lp.lower, lp.upper)
    )
    no_equalities = all(sense != EQ for _, sense, _ in lp.rows)
    return all_free and no_equalities and lp.num_constraints > 0


def _solve_via_dual(lp: LinearProgram) -> LpSolution:
    """Solve min c'x, Ax >= b, x free through max b'y, A'y = c, y >= 0.

    The primal solution is recovered from the simplex multipliers of the
    dual's optimal basis.
    """
    n = lp.num_variables
    m = lp.num_constraints
    M = np.zeros((n, m))
    rhs_d = np.zeros(n)
    b = np.zeros(m)
    for j, (row, sense, rhs) in enumerate(lp.rows):
        flip = 1.0 if sense == GE else -1.0
        b[j] = flip * rhs
        for idx, coef in row:
            M[idx, j] = flip * coef
    for idx, coef in lp.objective.items():
        rhs_d[idx] = coef

    status, y, info = _simplex_standard(M, rhs_d, -b)
    if status == INFEASIBLE:
        # Dual infeasibility leaves primal unbounded vs infeasible open.
        return _solve_scipy(lp)
    if status == UNBOUNDED:
        return LpSolution(status=INFEASIBLE)

    basis, sign, kept = info
    k = len(kept)
    S = np.zeros((k, k))
    t = np.zeros(k)
    for r, col in enumerate(basis):
        if col < m:
            S[r, :] = sign[kept] * M[kept, col]
            t[r] = -b[col]
        else:
            orig_row = col - m
            pos = kept.index(orig_row)
            S[r, pos] = 1.0
    try:
        multipliers = np.linalg.solve(S, t)
    except np.linalg.LinAlgError as exc:
        raise LpError("singular dual basis during primal recovery") from exc
    x = np.zeros(n)
    x[kept] = -(sign[kept] * multipliers)
    objective = float(sum(coef * x[idx] for idx, coef in lp.objective.items()))
    values = {name: float(x[i]) for i, name in enumerate(lp.variable_names)}
    return LpSolution(status=OPTIMAL, values=values, objective=objective)


def _solve_builtin(lp: LinearProgram) -> LpSolution:
    A, b, c, back, constant = _standardize(lp)
    status, z, _ = _simplex_standard(A, b, c)
    if status != OPTIMAL:
        return LpSolution(status=status)
    x = back(z)
    values = {name: float(x[i]) for i, name in enumerate(lp.variable_names)}
    objective = float(c @ z + constant)
    return LpSolution(status=OPTIMAL, values=values, objective=objective)


def _solve_scipy(lp: LinearProgram) -> LpSolution:
    from scipy import sparse
    from scipy.optimize import linprog

    n = lp.num_variables
    c = np.zeros(n)
    for idx, coef in lp.objective.items():
        c[idx] = coef

    ub_rows, ub_rhs, eq_rows, eq_rhs = [], [], [], []
    ub_data: list[float] = []
    ub_i: list[int] = []
    ub_j: list[int] = []
    eq_data: list[float] = []
    eq_i: list[int] = []
    eq_j: list[int] = []
    for row, sense, rhs in lp.rows:
        if sense == EQ:
            r = len(eq_rhs)
            eq_rhs.append(rhs)
            for idx, coef in row:
                eq_i.append(r)
                eq_j.append(idx)
                eq_data.append(coef)
        else:
            flip = -1.0 if sense == GE else 1.0
            r = len(ub_rhs)
            ub_rhs.append(flip * rhs)
            for idx, coef in row:
                ub_i.append(r)
                ub_j.append(idx)
                ub_data.append(flip * coef)
    A_ub = (
        sparse.csr_matrix((ub_data, (ub_i, ub_j)), shape=(len(ub_rhs), n))
        if ub_rhs
        else None
    )
    A_eq = (
        sparse.csr_matrix((eq_data, (eq_i, eq_j)), shape=(len(eq_rhs), n))
        if eq_rhs
        else None
    )
    bounds = [
        (None if np.isinf(lo) else lo, None if np.isinf(up) else up)
        for lo, up in zip(lp.lower, lp.upper)
    ]
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.array(ub_rhs) if ub_rhs else None,
        A_eq=A_eq,
        b_eq=np.array(eq_rhs) if eq_rhs else None,
        bounds=bounds,
        method="highs",
    )
    if res.status == 0:
        values = {name: float(res.x[i]) for i, name in enumerate(lp.variable_names)}
        return LpSolution(status=OPTIMAL, values=values, objective=float(res.fun))
    if res.status == 2:
        return LpSolution(status=INFEASIBLE)
    if res.status == 3:
        return LpSolution(status=UNBOUNDED)
    raise LpError(f"external solver failed: {res.message}")


def solve(lp: LinearProgram, backend: str = "auto") -> LpSolution:
    """Solve a program; deterministic for identical input bytes."""
    if lp.num_variables == 0:
        return LpSolution(status=OPTIMAL, values={}, objective=0.0)
    if backend == "scipy":
        return _solve_scipy(lp)

    n, m = lp.num_variables, lp.num_constraints
    primal_cells = (m + 1) * (2 * n + 2 * m + 1)
    dual_cells = (n + 1) * (2 * (m + n) + 1)
    if backend == "builtin":
        if _dualizable(lp) and dual_cells < primal_cells:
            return _solve_via_dual(lp)
        return _solve_builtin(lp)
    # auto
    if _dualizable(lp) and dual_cells < min(primal_cells, _TABLEAU_CELL_LIMIT):
        return _solve_via_dual(lp)
    if primal_cells <= _TABLEAU_CELL_LIMIT:
        return _solve_builtin(lp)
    return _solve_scipy(lp)


def check_feasible(lp: LinearProgram, values: dict[str, float],
                   tol: float = FEASIBILITY_TOL) -> list[str]:
    """Constraint violations of a candidate solution (empty when feasible)."""
    out = []
    for k, (row, sense, rhs) in enumerate(lp.rows):
        total = sum(coef * values[lp.variable_names[idx]] for idx, coef in row)
        bad = (
            (sense == GE and total < rhs - tol)
            or (sense == LE and total > rhs + tol)
            or (sense == EQ and abs(total - rhs) > tol)
        )
        if bad:
            out.append(f"row {k}: {total!r} {sense} {rhs!r} violated")
    return out


# ---------------------------------------------------------------------------
# Text interchange
# ---------------------------------------------------------------------------

def export(lp: LinearProgram, fmt: str = "mps-like") -> str:
    if fmt == "human":
        return _export_human(lp)
    if fmt != "mps-like":
        raise LpError(f"unknown format {fmt!r}")
    lines = [f"lp {lp.name}", "section variables"]
    for name, lo, up in zip(lp.variable_names, lp.lower, lp.upper):
        lo_s = "-inf" if np.isinf(lo) else repr(lo)
        up_s = "inf" if np.isinf(up) else repr(up)
        lines.append(f"{name} {lo_s} {up_s}")
    lines.append("section objective")
    for idx in sorted(lp.objective):
        lines.append(f"{lp.variable_names[idx]} {lp.objective[idx]!r}")
    lines.append("section constraints")
    for row, sense, rhs in lp.rows:
        word = {GE: "ge", LE: "le", EQ: "eq"}[sense]
        terms = " ".join(f"{lp.variable_names[i]} {coef!r}" for i, coef in row)
        lines.append(f"{word} {rhs!r} {terms}".rstrip())
    return "\n".join(lines) + "\n"


def _export_human(lp: LinearProgram) -> str:
    def term(coef, name):
        return f"{coef:+g}*{name}"

    lines = [f"minimize  " + " ".join(
        term(lp.objective[i], lp.variable_names[i]) for i in sorted(lp.objective)
    )]
    lines.append("subject to")
    for row, sense, rhs in lp.rows:
        lhs = " ".join(term(c, lp.variable_names[i]) for i, c in row)
        lines.append(f"  {lhs} {sense} {rhs:g}")
    return "\n".join(lines) + "\n"


def parse(text: str) -> LinearProgram:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("lp"):
        raise LpError("missing lp header")
    lp = LinearProgram(name=lines[0].split(None, 1)[1] if " " in lines[0] else "lp")
    section = None
    for line in lines[1:]:
        if line.startswith("section "):
            section = line.split()[1]
            continue
        parts = line.split()
        if section == "variables":
            name, lo_s, up_s = parts
            lp.add_variable(
                name,
                None if lo_s == "-inf" else float(lo_s),
                None if up_s == "inf" else float(up_s),
            )
        elif section == "objective":
            name, coef = parts
            lp.objective[lp.variable_index(name)] = float(coef)
        elif section == "constraints":
            word, rhs = parts[0], float(parts[1])
            sense = {"ge": GE, "le": LE, "eq": EQ}[word]
            terms = [
                (parts[i], float(parts[i + 1])) for i in range(2, len(parts), 2)
            ]
            lp.add_constraint(terms, sense, rhs)
        else:
            raise LpError(f"line outside a section: {line!r}")
    return lp
