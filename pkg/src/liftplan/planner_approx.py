"""Approximate lifted planning: factored LP over basis-function weights.

The value function is approximated as a weighted basis sum. Per concrete
action histogram, the Bellman residual max over states decomposes into
local functions of per-clique count variables; variable elimination turns
each max into auxiliary u-variables with equality and envelope rows.
Content-identical u-blocks are emitted once and shared across actions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import lp as lpmod
from .counting import ActionHistogram, bucket_assignments, enumerate_histograms, space
from .liftgraph import min_degree_order
from .model import ACTION, BasisFunction, RfMdpModel
from .rewards import backprojection_table

# Affine expression in the weight variables: (constant, ((name, coef), ...)).
LinExpr = tuple[float, tuple[tuple[str, float], ...]]


def expr(const: float = 0.0, terms: dict[str, float] | None = None) -> LinExpr:
    items = tuple(
        sorted((k, float(v)) for k, v in (terms or {}).items() if v != 0.0)
    )
    return (float(const), items)


def expr_add(a: LinExpr, b: LinExpr) -> LinExpr:
    terms = dict(a[1])
    for name, coef in b[1]:
        terms[name] = terms.get(name, 0.0) + coef
    return expr(a[0] + b[0], terms)


@dataclass
class MaxFunction:
    """Local function over cost-network variables with affine values."""

    name: str
    scope: tuple[str, ...]
    table: dict[tuple, LinExpr]


@dataclass
class MaxConstraintSpec:
    """One max-embedded constraint: 0 >= max over variables of a term sum."""

    variables: tuple[tuple[str, tuple], ...]  # (name, domain values)
    functions: tuple[MaxFunction, ...]
    order: tuple[str, ...]

    def domain(self, var: str) -> tuple:
        for name, dom in self.variables:
            if name == var:
                return dom
        raise KeyError(var)


@dataclass
class EliminationResult:
    """LP material produced by removing one max operator."""

    equalities: list[tuple[str, str, tuple, LinExpr]] = field(default_factory=list)
    # (function name, u name, assignment, expr)
    inequalities: list[tuple[str, str, tuple, tuple[str, ...]]] = field(default_factory=list)
    # (function name, u name, assignment, child u names)
    roots: list[str] = field(default_factory=list)
    u_names: list[str] = field(default_factory=list)


def _value_str(value) -> str:
    if isinstance(value, bool):
        return "t" if value else "f"
    if isinstance(value, tuple):
        return "-".join(map(str, value))
    return str(value)


def _assignment_str(assignment: tuple) -> str:
    return ",".join(_value_str(v) for v in assignment)


def _u_name(fname: str, assignment: tuple) -> str:
    if assignment:
        return f"u.{fname}.{_assignment_str(assignment)}"
    return f"u.{fname}"


def eliminate_max(spec: MaxConstraintSpec) -> EliminationResult:
    """Two-phase max removal: symbolic elimination, then row generation.

    Base functions become equality rows u = f(z); each elimination step
    becomes envelope rows u_z >= sum of child u's over the eliminated value;
    the final constraint is 0 >= sum of root u's.
    """
    scoped = {v for f in spec.functions for v in f.scope}
    missing = scoped - set(spec.order)
    if missing:
        raise ValueError(f"elimination order omits variables {sorted(missing)}")

    domains = dict(spec.variables)

    # Phase 1: symbolic elimination along the order.
    working: list[tuple[str, tuple[str, ...]]] = [
        (f.name, f.scope) for f in spec.functions
    ]
    steps = []  # (ename, scope, eliminated var, children)
    counter = 0
    for var in spec.order:
        relevant = [(n, s) for n, s in working if var in s]
        if not relevant:
            continue
        counter += 1
        ename = f"e{counter}"
        new_scope = tuple(
            v
            for v in dict.fromkeys(v for _, s in relevant for v in s)
            if v != var
        )
        steps.append((ename, new_scope, var, [n for n, _ in relevant]))
        working = [(n, s) for n, s in working if var not in s] + [(ename, new_scope)]

    result = EliminationResult()
    scope_of = {f.name: f.scope for f in spec.functions}
    for ename, escope, _, _ in steps:
        scope_of[ename] = escope

    # Phase 2a: equalities for the base functions.
    for f in spec.functions:
        for assignment in itertools.product(*(domains[v] for v in f.scope)):
            name = _u_name(f.name, assignment)
            result.equalities.append((f.name, name, assignment, f.table[assignment]))
            result.u_names.append(name)

    # Phase 2b: envelope inequalities along the elimination sequence.
    for ename, escope, var, children in steps:
        for assignment in itertools.product(*(domains[v] for v in escope)):
            bound = dict(zip(escope, assignment))
            name = _u_name(ename, assignment)
            result.u_names.append(name)
            for value in domains[var]:
                bound[var] = value
                child_names = tuple(
                    _u_name(child, tuple(bound[v] for v in scope_of[child]))
                    for child in children
                )
                result.inequalities.append((ename, name, assignment, child_names))

    result.roots = [_u_name(name, ()) for name, scope in working if not scope]
    return result


# ---------------------------------------------------------------------------
# Building the factored LP for a model
# ---------------------------------------------------------------------------

def weight_name(basis: BasisFunction) -> str:
    return f"w_{basis.name}"


def action_templates(model: RfMdpModel) -> list[ActionHistogram]:
    """Every action histogram admissible in at least one state."""
    sp = space(model)
    per_parfactor = []
    for info in sp.action_infos:
        cells = [
            combo
            for combo in itertools.product(
                *(range(info.n + 1) for _ in info.buckets)
            )
            if sum(combo) <= info.n
        ]
        per_parfactor.append(cells)
    return [
        ActionHistogram(cells=tuple(combo))
        for combo in itertools.product(*per_parfactor)
    ]


def _clique_var_domain(model, info, action: ActionHistogram) -> tuple:
    """Domain of one clique's count variable, restricted by the action."""
    sp = space(model)
    cells = None
    action_info = None
    for idx, ai in enumerate(sp.action_infos):
        if ai.input_clique is not None and sp.cliques[ai.input_clique] is info:
            action_info = ai
            cells = action.cells[idx]
    if info.propositional:
        return (False, True)
    histograms = enumerate_histograms(len(info.buckets), info.n)
    if len(info.members) == 1:
        values = [h[1] for h in histograms]  # true count
    else:
        values = histograms
    if action_info is None:
        return tuple(values)
    positions = [info.members.index(name) for name in action_info.state_inputs]
    admissible = []
    for h, v in zip(histograms, values):
        marg = {b: 0 for b in action_info.buckets}
        for bucket, count in zip(info.buckets, h):
            marg[tuple(bucket[p] for p in positions)] += count
        if all(marg[b] >= c for b, c in zip(action_info.buckets, cells)):
            admissible.append(v)
    return tuple(admissible)


def _entry_of_assignment(model, values: dict[int, object]):
    """Adapter: clique index -> entry, reconstructing histograms from counts."""
    sp = space(model)

    def entry(clique_idx: int):
        info = sp.cliques[clique_idx]
        value = values[clique_idx]
        if info.propositional or isinstance(value, tuple):
            return value
        return (info.n - value, value)  # singleton clique scalar

    return entry


def _marginal_of(model, clique_idx, entry, subset: tuple[str, ...]):
    sp = space(model)
    info = sp.cliques[clique_idx]
    positions = [info.members.index(name) for name in subset]
    out = {key: 0 for key in bucket_assignments(len(subset))}
    for bucket, count in zip(info.buckets, entry):
        out[tuple(bucket[p] for p in positions)] += count
    return out


def _table_scope_value(model, scope, table, entry_of) -> float:
    """Grounding-sum of a table function given per-clique entries."""
    sp = space(model)
    if not scope:
        return table[()]
    by_clique: dict[int, list[str]] = {}
    prop_names = []
    for name in scope:
        if model.prv(name).is_propositional:
            prop_names.append(name)
        else:
            by_clique.setdefault(sp.prv_clique[name], []).append(name)
    fixed = {n: entry_of(sp.prv_clique[n]) for n in prop_names}
    marginals = [
        (tuple(names), _marginal_of(model, idx, entry_of(idx), tuple(names)))
        for idx, names in by_clique.items()
    ]
    total = 0.0

    def rec(i, weight, values):
        nonlocal total
        if i == len(marginals):
            key = tuple(fixed[n] if n in fixed else values[n] for n in scope)
            total += weight * table[key]
            return
        names, marg = marginals[i]
        for bucket, count in marg.items():
            if count:
                rec(i + 1, weight * count, {**values, **dict(zip(names, bucket))})

    rec(0, 1.0, {})
    return total


def _scope_cliques(model, prv_names) -> tuple[int, ...]:
    sp = space(model)
    return tuple(sorted({sp.prv_clique[name] for name in prv_names}))


def _backprojection_term(model, basis, action: ActionHistogram):
    """Scope cliques and evaluator for the lifted backprojection of a basis."""
    sp = space(model)
    if basis.is_constant:
        return (), lambda entry_of: basis.constant
    g = model.parfactor_for_output(basis.scope[0])
    table = backprojection_table(model, basis)

    if g.aggregate is not None:
        source = g.inputs[0]
        clique_idx = sp.prv_clique[source]

        def value_agg(entry_of):
            marg = _marginal_of(model, clique_idx, entry_of(clique_idx), (source,))
            return table[((marg[(True,)],), None)]

        return (clique_idx,), value_agg

    state_inputs = tuple(n for n in g.inputs if model.prv(n).role != ACTION)
    prop_inputs = tuple(n for n in state_inputs if model.prv(n).is_propositional)
    param_inputs = tuple(n for n in state_inputs if not model.prv(n).is_propositional)

    action_cells = None
    action_info = None
    for idx, ai in enumerate(sp.action_infos):
        if ai.parfactor_name == g.name:
            action_info = ai
            action_cells = action.cells[idx]

    scope = []
    if param_inputs:
        scope.append(sp.prv_clique[param_inputs[0]])
    for n in prop_inputs:
        scope.append(sp.prv_clique[n])
    scope = tuple(sorted(dict.fromkeys(scope)))

    output_prop = model.prv(g.output).is_propositional

    def full_assignment(param_bucket, entry_of):
        values = dict(zip(param_inputs, param_bucket))
        return tuple(
            entry_of(sp.prv_clique[n]) if model.prv(n).is_propositional else values[n]
            for n in state_inputs
        )

    def value(entry_of):
        if output_prop:
            return table[(full_assignment((), entry_of), None)]
        if action_info is not None:
            clique_idx = sp.prv_clique[param_inputs[0]] if param_inputs else None
            total = 0.0
            if param_inputs:
                marg = _marginal_of(
                    model, clique_idx, entry_of(clique_idx), action_info.state_inputs
                )
                counts = [marg[b] for b in action_info.buckets]
            else:
                counts = [action_info.n]
            for bucket, k_bucket, cell in zip(action_info.buckets, counts, action_cells):
                assignment = full_assignment(bucket, entry_of)
                total += cell * table[(assignment, True)]
                total += (k_bucket - cell) * table[(assignment, False)]
            return total
        if param_inputs:
            clique_idx = sp.prv_clique[param_inputs[0]]
            marg = _marginal_of(model, clique_idx, entry_of(clique_idx), param_inputs)
            return sum(
                count * table[(full_assignment(bucket, entry_of), None)]
                for bucket, count in marg.items()
            )
        n = model.grounding_count(g.output)
        return n * table[(full_assignment((), entry_of), None)]

    return scope, value


def alp_action_spec(model: RfMdpModel, action: ActionHistogram,
                    basis: list[BasisFunction] | None = None,
                    order: tuple[str, ...] | None = None) -> MaxConstraintSpec:
    """The max constraint for one action: local functions over count variables.

    Terms sharing a scope merge into a single function; functions are named
    f1, f2, ... ordered by scope size then clique indices (constants last).
    """
    sp = space(model)
    if basis is None:
        basis = model.basis_functions
    gamma = model.gamma

    domains = {
        idx: _clique_var_domain(model, info, action)
        for idx, info in enumerate(sp.cliques)
    }

    # Collect terms as (scope cliques, evaluator, weight name or None, factor).
    terms = []
    for r in model.rewards:
        scope = _scope_cliques(model, r.scope)
        terms.append((scope, _make_table_eval(model, r.scope, r.table), None, 1.0))
    for b in basis:
        wname = weight_name(b)
        h_scope = _scope_cliques(model, b.scope) if not b.is_constant else ()
        terms.append((h_scope, _make_basis_eval(model, b), wname, -1.0))
        g_scope, g_eval = _backprojection_term(model, b, action)
        terms.append((g_scope, g_eval, wname, gamma))

    merged: dict[tuple, dict[tuple, LinExpr]] = {}
    for scope, evaluate, wname, factor in terms:
        table = merged.setdefault(scope, {})
        for assignment in itertools.product(*(domains[c] for c in scope)):
            values = dict(zip(scope, assignment))
            entry_of = _entry_of_assignment(model, values)
            v = factor * evaluate(entry_of)
            contribution = expr(v) if wname is None else expr(0.0, {wname: v})
            table[assignment] = expr_add(table.get(assignment, expr()), contribution)

    ordered_scopes = sorted(
        merged, key=lambda s: (len(s) if s else float("inf"), s)
    )
    functions = []
    used_vars: list[str] = []
    for i, scope in enumerate(ordered_scopes, start=1):
        names = tuple(sp.cliques[c].name for c in scope)
        functions.append(
            MaxFunction(
                name=f"f{i}",
                scope=names,
                table={a: e for a, e in merged[scope].items()},
            )
        )
        for c in scope:
            if sp.cliques[c].name not in used_vars:
                used_vars.append(sp.cliques[c].name)

    variables = tuple(
        (info.name, domains[idx])
        for idx, info in enumerate(sp.cliques)
        if info.name in used_vars
    )
    if order is None:
        order = tuple(
            min_degree_order(
                tuple(v for v, _ in variables), [f.scope for f in functions]
            )
        )
    return MaxConstraintSpec(variables=variables, functions=tuple(functions), order=order)


def _make_table_eval(model, scope, table):
    def evaluate(entry_of):
        return _table_scope_value(model, scope, table, entry_of)

    return evaluate


def _make_basis_eval(model, basis: BasisFunction):
    if basis.is_constant:
        return lambda entry_of: basis.constant
    return _make_table_eval(model, basis.scope, basis.table)


# ---------------------------------------------------------------------------
# LP assembly with block sharing
# ---------------------------------------------------------------------------

def assemble_alp(program: lpmod.LinearProgram,
                 blocks: list[tuple[str, MaxConstraintSpec]],
                 dedup: bool = True) -> dict:
    """Emit elimination rows for each max block into the program.

    Blocks whose generated rows are content-identical (after child-name
    resolution) share u-variables; the per-block final row is always added.
    """
    group_cache: dict = {}
    emitted_groups = 0

    for block_key, spec in blocks:
        rows = eliminate_max(spec)
        by_function: dict[str, dict] = {}
        fn_order: list[str] = []
        for fname, uname, assignment, e in rows.equalities:
            slot = by_function.setdefault(fname, {"eq": [], "ineq": []})
            if fname not in fn_order:
                fn_order.append(fname)
            slot["eq"].append((uname, assignment, e))
        for fname, uname, assignment, children in rows.inequalities:
            slot = by_function.setdefault(fname, {"eq": [], "ineq": []})
            if fname not in fn_order:
                fn_order.append(fname)
            slot["ineq"].append((uname, assignment, children))

        local_to_global: dict[str, str] = {}
        for fname in fn_order:
            slot = by_function[fname]
            content = (
                tuple(
                    (assignment, e) for _, assignment, e in slot["eq"]
                ),
                tuple(
                    (assignment, tuple(local_to_global[c] for c in children))
                    for _, assignment, children in slot["ineq"]
                ),
            )
            hit = group_cache.get(content) if dedup else None
            if hit is not None:
                # Shared group: map this block's u names onto the emitted
                # ones by assignment (function names may differ per block).
                for uname, assignment, _ in slot["eq"]:
                    local_to_global[uname] = hit[assignment]
                for uname, assignment, _ in slot["ineq"]:
                    local_to_global[uname] = hit[assignment]
                continue
            gid = emitted_groups
            emitted_groups += 1
            by_assignment: dict[tuple, str] = {}
            for uname, assignment, e in slot["eq"]:
                gname = f"u{gid}.{uname[2:]}"
                by_assignment[assignment] = gname
                local_to_global[uname] = gname
                program.add_variable(gname)
                const, wterms = e
                coeffs = [(gname, 1.0)] + [(w, -c) for w, c in wterms]
                program.add_constraint(coeffs, lpmod.EQ, const)
            for uname, assignment, children in slot["ineq"]:
                gname = by_assignment.get(assignment)
                if gname is None:
                    gname = f"u{gid}.{uname[2:]}"
                    by_assignment[assignment] = gname
                    local_to_global[uname] = gname
                    program.add_variable(gname)
                coeffs = [(gname, 1.0)]
                for child in children:
                    coeffs.append((local_to_global[child], -1.0))
                program.add_constraint(coeffs, lpmod.GE, 0.0)
            if dedup:
                group_cache[content] = by_assignment

        root_coeffs = [(local_to_global[r], 1.0) for r in rows.roots]
        program.add_constraint(root_coeffs, lpmod.LE, 0.0)

    return {"groups": emitted_groups}


@dataclass
class WeightVector:
    weights: dict[str, float]
    alpha: dict[str, float]
    diagnostics: dict


def build_alp(model: RfMdpModel, basis: list[BasisFunction] | None = None,
              alpha: dict[str, float] | None = None,
              order: tuple[str, ...] | None = None,
              dedup: bool = True) -> lpmod.LinearProgram:
    if basis is None:
        basis = model.basis_functions
    if not basis:
        raise ValueError("approximate planning needs at least one basis function")
    program = lpmod.LinearProgram(name=f"approx-{model.name}")
    for b in basis:
        program.add_variable(weight_name(b))
    weights = {
        weight_name(b): 1.0 if alpha is None else float(alpha[b.name]) for b in basis
    }
    program.set_objective(weights)

    blocks = []
    for action in action_templates(model):
        blocks.append((str(action), alp_action_spec(model, action, basis, order)))
    assemble_alp(program, blocks, dedup=dedup)
    return program


def plan_approx(model: RfMdpModel, basis: list[BasisFunction] | None = None,
                alpha: dict[str, float] | None = None,
                order: tuple[str, ...] | None = None,
                backend: str = "auto") -> WeightVector:
    if basis is None:
        basis = model.basis_functions
    program = build_alp(model, basis, alpha, order)
    solution = lpmod.solve(program, backend=backend)
    if solution.status != lpmod.OPTIMAL:
        raise lpmod.LpError(f"approximate planning LP came back {solution.status}")
    weights = {b.name: solution.values[weight_name(b)] for b in basis}
    return WeightVector(
        weights=weights,
        alpha={b.name: 1.0 if alpha is None else float(alpha[b.name]) for b in basis},
        diagnostics={
            "lp_variables": program.num_variables,
            "lp_constraints": program.num_constraints,
            "actions": len(action_templates(model)),
            "objective": solution.objective,
        },
    )


def approx_value(model: RfMdpModel, weights, state) -> float:
    """Weighted basis sum; accepts a WeightVector or a plain name->w dict."""
    from .rewards import basis_value

    table = weights.weights if isinstance(weights, WeightVector) else weights
    return sum(
        table[b.name] * basis_value(model, b, state)
        for b in model.basis_functions
        if b.name in table
    )


def weights_to_json(model: RfMdpModel, wv: WeightVector) -> dict:
    return {
        "kind": "approx-weights",
        "basis": list(wv.weights),
        "weights": wv.weights,
        "alpha": wv.alpha,
        "diagnostics": wv.diagnostics,
    }


def weights_from_json(doc: dict) -> WeightVector:
    if doc.get("kind") != "approx-weights":
        raise ValueError("not an approximate-weights document")
    return WeightVector(
        weights={k: float(v) for k, v in doc["weights"].items()},
        alpha={k: float(v) for k, v in doc.get("alpha", {}).items()},
        diagnostics=doc.get("diagnostics", {}),
    )
