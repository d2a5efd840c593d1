"""Ground brute-force oracle: propositional solving and equivalence checks.

Grounds a model to explicit Boolean variables, solves it with value
iteration (an independent code path from the lifted LP) and a ground
factored ALP, and checks every lifted quantity against aggregation over
ground states.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from . import lp as lpmod
from .counting import ActionHistogram, CountingState, space, state_of_ground
from .model import ACTION, BasisFunction, ModelError, RfMdpModel
from .planner_approx import (
    MaxConstraintSpec,
    MaxFunction,
    assemble_alp,
    expr,
    expr_add,
)
from .liftgraph import min_degree_order

GROUND_BIT_GUARD = 12


def _bit_name(prv: str, t: int) -> str:
    return f"{prv}@{t}"


@dataclass
class GroundMdp:
    model: RfMdpModel
    state_vars: list[tuple[str, int]]
    action_vars: list[tuple[str, int]]
    n_states: int
    n_actions: int
    state_bits: np.ndarray  # (n_states, n_state_vars) of 0/1
    action_bits: np.ndarray
    rewards: np.ndarray = field(default=None)

    def bit_index(self, prv: str, t: int) -> int:
        return self._state_index[(prv, t)]

    def action_bit_index(self, prv: str, t: int) -> int:
        return self._action_index[(prv, t)]


def ground(model: RfMdpModel) -> GroundMdp:
    """Explicit propositional MDP; guarded against exponential blowup."""
    state_vars = []
    for p in model.state_prvs():
        for t in range(model.grounding_count(p.name)):
            state_vars.append((p.name, t))
    action_vars = []
    for p in model.action_prvs():
        for t in range(model.grounding_count(p.name)):
            action_vars.append((p.name, t))
    if len(state_vars) > GROUND_BIT_GUARD:
        raise ModelError(
            f"grounding needs {len(state_vars)} state bits, guard is {GROUND_BIT_GUARD}"
        )

    n_states = 2 ** len(state_vars)
    n_actions = 2 ** len(action_vars)
    codes = np.arange(n_states, dtype=np.int64)
    state_bits = ((codes[:, None] >> np.arange(len(state_vars))) & 1).astype(np.int8)
    acodes = np.arange(n_actions, dtype=np.int64)
    action_bits = ((acodes[:, None] >> np.arange(max(len(action_vars), 1))) & 1).astype(
        np.int8
    )[:, : len(action_vars)]

    g = GroundMdp(
        model=model,
        state_vars=state_vars,
        action_vars=action_vars,
        n_states=n_states,
        n_actions=n_actions,
        state_bits=state_bits,
        action_bits=action_bits,
    )
    g._state_index = {v: i for i, v in enumerate(state_vars)}
    g._action_index = {v: i for i, v in enumerate(action_vars)}
    g.rewards = _ground_rewards(g)
    return g


def _reward_grounding_groups(model: RfMdpModel, scope):
    """Scope entries grouped by clique; each group shares a grounding tuple."""
    sp = space(model)
    groups: dict[int, list[str]] = {}
    for name in scope:
        groups.setdefault(sp.prv_clique[name], []).append(name)
    out = []
    for clique_idx, names in groups.items():
        info = sp.cliques[clique_idx]
        out.append((tuple(names), 1 if info.propositional else info.n))
    return out


def _ground_rewards(g: GroundMdp) -> np.ndarray:
    model = g.model
    total = np.zeros(g.n_states)
    for r in model.rewards:
        table = _table_array(r.table, len(r.scope))
        groups = _reward_grounding_groups(model, r.scope)
        for combo in itertools.product(*(range(n) for _, n in groups)):
            tuple_of = {}
            for (names, _), t in zip(groups, combo):
                for name in names:
                    tuple_of[name] = t
            positions = [
                g.bit_index(name, 0 if model.prv(name).is_propositional else tuple_of[name])
                for name in r.scope
            ]
            index = np.zeros(g.n_states, dtype=np.int64)
            for name, pos in zip(r.scope, positions):
                index = (index << 1) | g.state_bits[:, pos]
            total += table[index]
    return total


def _table_array(table: dict, width: int) -> np.ndarray:
    out = np.zeros(2 ** width)
    for key, value in table.items():
        index = 0
        for v in key:
            index = (index << 1) | int(v)
        out[index] = value
    return out


def _true_prob_columns(g: GroundMdp, a_idx: int) -> np.ndarray:
    """Per ground next-variable true-probability, vectorized over states."""
    model = g.model
    q = np.zeros((g.n_states, len(g.state_vars)))
    for j, (prv, t) in enumerate(g.state_vars):
        pf = model.parfactor_for_output(prv)
        if pf.aggregate is not None:
            source = pf.inputs[0]
            n = model.grounding_count(source)
            cols = [g.bit_index(source, k) for k in range(n)]
            counts = g.state_bits[:, cols].sum(axis=1)
            lookup = np.array(
                [pf.aggregate.prob_true(k, n) for k in range(n + 1)]
            )
            q[:, j] = lookup[counts]
            continue
        arr = _prob_true_array(pf)
        index = np.zeros(g.n_states, dtype=np.int64)
        for name in pf.inputs:
            prv_in = model.prv(name)
            if prv_in.role == ACTION:
                bit = int(g.action_bits[a_idx, g.action_bit_index(name, t)])
                index = (index << 1) | bit
            elif prv_in.is_propositional:
                index = (index << 1) | g.state_bits[:, g.bit_index(name, 0)]
            else:
                index = (index << 1) | g.state_bits[:, g.bit_index(name, t)]
        q[:, j] = arr[index]
    return q


def _prob_true_array(pf) -> np.ndarray:
    width = 0
    for key in pf.potential:
        width = len(key) - 1
        break
    out = np.zeros(2 ** width)
    for key, value in pf.potential.items():
        if key[-1]:
            index = 0
            for v in key[:-1]:
                index = (index << 1) | int(v)
            out[index] = value
    return out


def transition_matrix(g: GroundMdp, a_idx: int) -> np.ndarray:
    """P(s' | s, a) as a dense (n_states, n_states) row-stochastic matrix."""
    q = _true_prob_columns(g, a_idx)
    P = np.ones((g.n_states, g.n_states))
    for j in range(len(g.state_vars)):
        nxt = g.state_bits[:, j][None, :]
        P *= q[:, j : j + 1] * nxt + (1.0 - q[:, j : j + 1]) * (1.0 - nxt)
    return P


def ground_value_iteration(g: GroundMdp, eps: float = 1e-8,
                           max_iter: int = 100_000) -> np.ndarray:
    """Value iteration to sup-norm residual eps*(1-gamma)/(2*gamma)."""
    gamma = g.model.gamma
    V = g.rewards.copy()
    if gamma == 0.0:
        return V
    mats = [transition_matrix(g, a) for a in range(g.n_actions)]
    threshold = eps * (1.0 - gamma) / (2.0 * gamma) if gamma < 1.0 else eps
    for _ in range(max_iter):
        best = mats[0] @ V
        for P in mats[1:]:
            np.maximum(best, P @ V, out=best)
        V_new = g.rewards + gamma * best
        if np.max(np.abs(V_new - V)) <= threshold:
            return V_new
        V = V_new
    raise RuntimeError("value iteration did not converge")


def ground_q_values(g: GroundMdp, V: np.ndarray) -> np.ndarray:
    gamma = g.model.gamma
    out = np.zeros((g.n_states, g.n_actions))
    for a in range(g.n_actions):
        out[:, a] = g.rewards + gamma * (transition_matrix(g, a) @ V)
    return out


# ---------------------------------------------------------------------------
# Mapping ground objects to lifted representations
# ---------------------------------------------------------------------------

def rep_state(g: GroundMdp, s_idx: int) -> CountingState:
    assignment = {}
    for p in g.model.state_prvs():
        if p.is_propositional:
            assignment[p.name] = bool(g.state_bits[s_idx, g.bit_index(p.name, 0)])
        else:
            n = g.model.grounding_count(p.name)
            assignment[p.name] = tuple(
                bool(g.state_bits[s_idx, g.bit_index(p.name, t)]) for t in range(n)
            )
    return state_of_ground(g.model, assignment)


def rep_action(g: GroundMdp, s_idx: int, a_idx: int) -> ActionHistogram:
    """Histogram representation of a ground action in a ground state."""
    model = g.model
    sp = space(model)
    cells = []
    for info in sp.action_infos:
        counts = [0] * len(info.buckets)
        for t in range(info.n):
            if not g.action_bits[a_idx, g.action_bit_index(info.action_prv, t)]:
                continue
            values = tuple(
                bool(g.state_bits[s_idx, g.bit_index(name, t)])
                for name in info.state_inputs
            )
            counts[info.buckets.index(values)] += 1
        cells.append(tuple(counts))
    return ActionHistogram(cells=tuple(cells))


# ---------------------------------------------------------------------------
# Ground factored ALP
# ---------------------------------------------------------------------------

def ground_basis_set(model: RfMdpModel) -> list[tuple[str, BasisFunction, int | None]]:
    """Groundings of the lifted basis set: (name, lifted basis, tuple index)."""
    out = []
    for b in model.basis_functions:
        if b.is_constant:
            out.append((b.name, b, None))
        else:
            prv = b.scope[0]
            for t in range(model.grounding_count(prv)):
                out.append((f"{b.name}@{t}", b, t))
    return out


def _ground_backprojection(g: GroundMdp, basis: BasisFunction, t: int | None,
                           a_idx: int):
    """Scope bits and value table of one ground basis's backprojection."""
    model = g.model
    if basis.is_constant:
        return (), {(): basis.constant}
    prv = basis.scope[0]
    pf = model.parfactor_for_output(prv)
    h_true = basis.value((True,))
    h_false = basis.value((False,))
    if pf.aggregate is not None:
        source = pf.inputs[0]
        n = model.grounding_count(source)
        scope = tuple(_bit_name(source, k) for k in range(n))
        table = {}
        for bits in itertools.product((False, True), repeat=n):
            p = pf.aggregate.prob_true(sum(bits), n)
            table[bits] = p * h_true + (1.0 - p) * h_false
        return scope, table
    tup = 0 if model.prv(prv).is_propositional else t
    scope = []
    fixed = {}
    for name in pf.inputs:
        prv_in = model.prv(name)
        if prv_in.role == ACTION:
            fixed[name] = bool(
                g.action_bits[a_idx, g.action_bit_index(name, tup)]
            )
        elif prv_in.is_propositional:
            scope.append((name, 0))
        else:
            scope.append((name, tup))
    scope_names = tuple(_bit_name(n, k) for n, k in scope)
    table = {}
    for bits in itertools.product((False, True), repeat=len(scope)):
        values = dict(zip((n for n, _ in scope), bits))
        full = tuple(
            fixed[name] if name in fixed else values[name] for name in pf.inputs
        )
        p = pf.prob_true(full)
        table[bits] = p * h_true + (1.0 - p) * h_false
    return scope_names, table


def ground_alp(g: GroundMdp, alpha_prime: dict[str, float] | None = None,
               backend: str = "auto") -> dict[str, float]:
    """Propositional factored ALP over all ground basis functions."""
    model = g.model
    bases = ground_basis_set(model)
    program = lpmod.LinearProgram(name=f"ground-alp-{model.name}")
    for name, _, _ in bases:
        program.add_variable(f"w_{name}")
    program.set_objective(
        {
            f"w_{name}": 1.0 if alpha_prime is None else float(alpha_prime[name])
            for name, _, _ in bases
        }
    )

    var_names = tuple(_bit_name(p, t) for p, t in g.state_vars)
    gamma = model.gamma

    blocks = []
    for a_idx in range(g.n_actions):
        terms = []  # (scope bit names, table over bool assignments, weight, factor)
        for r in model.rewards:
            groups = _reward_grounding_groups(model, r.scope)
            for combo in itertools.product(*(range(n) for _, n in groups)):
                tuple_of = {}
                for (names, _), tt in zip(groups, combo):
                    for name in names:
                        tuple_of[name] = tt
                scope = tuple(
                    _bit_name(
                        name, 0 if model.prv(name).is_propositional else tuple_of[name]
                    )
                    for name in r.scope
                )
                terms.append((scope, dict(r.table), None, 1.0))
        for name, b, t in bases:
            wname = f"w_{name}"
            if b.is_constant:
                terms.append(((), {(): b.constant}, wname, -1.0))
            else:
                prv = b.scope[0]
                tup = 0 if model.prv(prv).is_propositional else t
                terms.append(((_bit_name(prv, tup),), dict(b.table), wname, -1.0))
            scope, table = _ground_backprojection(g, b, t, a_idx)
            terms.append((scope, table, wname, gamma))

        merged: dict[tuple, dict[tuple, tuple]] = {}
        for scope, table, wname, factor in terms:
            canonical = tuple(sorted(scope))
            slot = merged.setdefault(canonical, {})
            for bits in itertools.product((False, True), repeat=len(canonical)):
                values = dict(zip(canonical, bits))
                key = tuple(values[s] for s in scope)
                v = factor * table[key]
                contribution = expr(v) if wname is None else expr(0.0, {wname: v})
                slot[bits] = expr_add(slot.get(bits, expr()), contribution)

        ordered = sorted(merged, key=lambda s: (len(s) if s else float("inf"), s))
        functions = tuple(
            MaxFunction(name=f"f{i}", scope=scope, table=merged[scope])
            for i, scope in enumerate(ordered, start=1)
        )
        used = tuple(v for v in var_names if any(v in f.scope for f in functions))
        order = tuple(min_degree_order(used, [f.scope for f in functions]))
        spec = MaxConstraintSpec(
            variables=tuple((v, (False, True)) for v in used),
            functions=functions,
            order=order,
        )
        blocks.append((f"a{a_idx}", spec))

    assemble_alp(program, blocks, dedup=True)
    solution = lpmod.solve(program, backend=backend)
    if solution.status != lpmod.OPTIMAL:
        raise lpmod.LpError(f"ground ALP came back {solution.status}")
    return {name: solution.values[f"w_{name}"] for name, _, _ in bases}


# ---------------------------------------------------------------------------
# Equivalence report
# ---------------------------------------------------------------------------

def _ground_action_for(g: GroundMdp, s_idx: int, action: ActionHistogram) -> int:
    for a_idx in range(g.n_actions):
        if rep_action(g, s_idx, a_idx) == action:
            return a_idx
    raise ValueError("no ground action realizes this histogram")


def check_equivalence(model: RfMdpModel, tol: float = 1e-6,
                      check_queries: bool = True) -> dict:
    """Full lifted-vs-ground battery; deviations land in the report."""
    from . import planner_exact, queries, transition
    from .counting import action_space
    from .planner_approx import plan_approx

    g = ground(model)
    report: dict = {"tolerance": tol}

    # Transition aggregation over representative states.
    reps: dict[CountingState, int] = {}
    for s_idx in range(g.n_states):
        reps.setdefault(rep_state(g, s_idx), s_idx)
    rep_of = {s_idx: rep_state(g, s_idx) for s_idx in range(g.n_states)}

    max_dev = 0.0
    for s, s_idx in reps.items():
        for action in action_space(model, s):
            a_idx = _ground_action_for(g, s_idx, action)
            row = transition_matrix(g, a_idx)[s_idx]
            aggregated: dict[CountingState, float] = {}
            for s2_idx in range(g.n_states):
                key = rep_of[s2_idx]
                aggregated[key] = aggregated.get(key, 0.0) + row[s2_idx]
            for s2, p_ground in aggregated.items():
                p_lifted = transition.joint_transition_prob(model, s, action, s2)
                max_dev = max(max_dev, abs(p_lifted - p_ground))
    report["transition_max_deviation"] = float(max_dev)
    report["transition_ok"] = bool(max_dev <= max(tol, 1e-9))

    # Exact values: lifted LP against ground value iteration.
    try:
        vf = planner_exact.plan_exact(model)
    except Exception as exc:  # failures belong in the report, not the caller
        report["value_ok"] = False
        report["value_error"] = str(exc)
        report["policy_ok"] = False
        report["queries_ok"] = False
        report["ok"] = False
        return report
    V_ground = ground_value_iteration(g, eps=1e-8)
    value_dev = max(
        abs(vf.values[rep_of[s_idx]] - V_ground[s_idx]) for s_idx in range(g.n_states)
    )
    report["value_max_deviation"] = float(value_dev)
    report["value_ok"] = bool(value_dev <= tol)

    # Greedy policies: near-optimal action sets must agree under rep.
    Q = ground_q_values(g, V_ground)
    policy_ok = True
    for s_idx in range(g.n_states):
        s = rep_of[s_idx]
        ground_best = set()
        best = Q[s_idx].max()
        for a_idx in range(g.n_actions):
            if Q[s_idx, a_idx] >= best - tol:
                ground_best.add(rep_action(g, s_idx, a_idx))
        lifted_best = set()
        lifted_q = {
            a: planner_exact.backup(model, s, a, vf.values)
            for a in action_space(model, s)
        }
        top = max(lifted_q.values())
        for a, q in lifted_q.items():
            if q >= top - tol:
                lifted_best.add(a)
        if ground_best != lifted_best:
            policy_ok = False
    report["policy_ok"] = policy_ok

    # Approximate weights: lifted alpha_i = n_i * alpha'_i.
    if model.basis_functions:
        try:
            sizes = {
                b.name: 1 if b.is_constant else model.grounding_count(b.scope[0])
                for b in model.basis_functions
            }
            lifted = plan_approx(model, alpha={k: float(v) for k, v in sizes.items()})
            ground_w = ground_alp(g)
            weight_dev = 0.0
            for name, b, t in ground_basis_set(model):
                weight_dev = max(
                    weight_dev, abs(ground_w[name] - lifted.weights[b.name])
                )
            report["weights_max_deviation"] = float(weight_dev)
            report["weights_ok"] = bool(weight_dev <= tol)
        except Exception as exc:
            report["weights_ok"] = False
            report["weights_error"] = str(exc)

    # Conditional action queries against ground filtering.
    if check_queries:
        grid_ok = True
        pred = queries.default_half_healthy_predicate(model)
        if pred is not None:
            for s, s_idx in reps.items():
                for t_threshold in (float("-inf"), 0.0, 2.0):
                    for p_threshold in (0.0, 0.5, 0.9):
                        lifted_set = {
                            entry.action
                            for entry in queries.conditional_action_query(
                                model, vf, s, t_threshold, pred, p_threshold, "exact"
                            ).entries
                        }
                        ground_set = queries.ground_filtered_actions(
                            g, Q, s_idx, t_threshold, pred, p_threshold
                        )
                        if lifted_set != ground_set:
                            grid_ok = False
        report["queries_ok"] = grid_ok

    report["ok"] = bool(all(v for k, v in report.items() if k.endswith("_ok")))
    return report
