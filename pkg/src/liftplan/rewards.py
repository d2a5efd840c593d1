"""Parameterized rewards, basis functions, and lifted backprojections.

Rewards and table bases are sums over groundings, so on a counting state
they reduce to count-weighted table sums. A backprojection is the expected
next-step basis value given one tuple's current assignment and action; the
lifted backprojection weights those per-assignment values by the state and
action counts.
"""

from __future__ import annotations

from .counting import ActionHistogram, CountingState, space
from .model import ACTION, BasisFunction, Parfactor, RfMdpModel


def _table_function_value(model: RfMdpModel, scope, table, state: CountingState) -> float:
    """Sum of a table function over all its groundings in the given state."""
    sp = space(model)
    if not scope:
        return table[()]

    groups: list[tuple[int | None, tuple[str, ...]]] = []
    by_clique: dict[int, list[str]] = {}
    prop_names: list[str] = []
    for name in scope:
        if model.prv(name).is_propositional:
            prop_names.append(name)
        else:
            by_clique.setdefault(sp.prv_clique[name], []).append(name)
    for clique_idx, names in by_clique.items():
        groups.append((clique_idx, tuple(names)))

    fixed = {name: sp.entry(state, name) for name in prop_names}
    marginals = [
        (names, sp.marginal(state, names)) for _, names in groups
    ]

    total = 0.0

    def rec(idx: int, weight: float, values: dict):
        nonlocal total
        if idx == len(marginals):
            key = tuple(
                fixed[name] if name in fixed else values[name] for name in scope
            )
            total += weight * table[key]
            return
        names, marg = marginals[idx]
        for bucket, count in marg.items():
            if count == 0:
                continue
            rec(
                idx + 1,
                weight * count,
                {**values, **dict(zip(names, bucket))},
            )

    rec(0, 1.0, {})
    return total


def reward(model: RfMdpModel, state: CountingState) -> float:
    """Total reward of a state: sum over local rewards and their groundings."""
    return sum(
        _table_function_value(model, r.scope, r.table, state) for r in model.rewards
    )


def basis_value(model: RfMdpModel, basis: BasisFunction, state: CountingState) -> float:
    if basis.is_constant:
        return basis.constant
    return _table_function_value(model, basis.scope, basis.table, state)


# ---------------------------------------------------------------------------
# Backprojections
# ---------------------------------------------------------------------------

def _basis_parfactor(model: RfMdpModel, basis: BasisFunction) -> Parfactor | None:
    """The single parfactor a basis backprojects through (None if constant)."""
    if basis.is_constant:
        return None
    if len(basis.scope) != 1:
        raise ValueError(
            f"basis {basis.name}: scope spans multiple parfactor outputs; "
            f"backprojection needs a single output PRV"
        )
    return model.parfactor_for_output(basis.scope[0])


def _state_inputs(model: RfMdpModel, g: Parfactor) -> tuple[str, ...]:
    return tuple(n for n in g.inputs if model.prv(n).role != ACTION)


def _has_action(model: RfMdpModel, g: Parfactor) -> bool:
    return any(model.prv(n).role == ACTION for n in g.inputs)


def propositional_backprojection(model: RfMdpModel, basis: BasisFunction,
                                 state_assignment: tuple, action_value: bool | None = None) -> float:
    """Expected next basis value for one tuple: sum over output values of
    transition probability times basis value.

    ``state_assignment`` covers the parfactor's state inputs in declared
    order; for an aggregate parfactor it is the single true-count (k,).
    """
    if basis.is_constant:
        return basis.constant
    g = _basis_parfactor(model, basis)
    if g.aggregate is not None:
        (k,) = state_assignment
        n = model.grounding_count(g.inputs[0])
        p = g.aggregate.prob_true(int(k), n)
        return p * basis.value((True,)) + (1.0 - p) * basis.value((False,))
    if _has_action(model, g) and action_value is None:
        raise ValueError(f"parfactor {g.name} is action-dependent; pass an action value")
    state_inputs = _state_inputs(model, g)
    if len(state_assignment) != len(state_inputs):
        raise ValueError(
            f"expected assignment over {state_inputs}, got {len(state_assignment)} values"
        )
    values = dict(zip(state_inputs, state_assignment))
    full = tuple(
        action_value if model.prv(n).role == ACTION else values[n] for n in g.inputs
    )
    return g.prob(full, True) * basis.value((True,)) + g.prob(full, False) * basis.value(
        (False,)
    )


def backprojection_table(model: RfMdpModel, basis: BasisFunction) -> dict:
    """All propositional backprojection values of a basis, precomputed.

    Keys are (state-input assignment, action value); action value is None
    for action-independent parfactors. Cached per model and basis name.
    """
    sp = space(model)
    cache = getattr(sp, "_backprojection_tables", None)
    if cache is None:
        cache = {}
        sp._backprojection_tables = cache
    if basis.name in cache:
        return cache[basis.name]

    table: dict = {}
    if basis.is_constant:
        table[((), None)] = basis.constant
        cache[basis.name] = table
        return table
    g = _basis_parfactor(model, basis)
    if g.aggregate is not None:
        n = model.grounding_count(g.inputs[0])
        for k in range(n + 1):
            table[((k,), None)] = propositional_backprojection(model, basis, (k,))
        cache[basis.name] = table
        return table
    state_inputs = _state_inputs(model, g)
    action_values = (False, True) if _has_action(model, g) else (None,)
    from .counting import bucket_assignments

    for assignment in bucket_assignments(len(state_inputs)):
        for av in action_values:
            table[(assignment, av)] = propositional_backprojection(
                model, basis, assignment, av
            )
    cache[basis.name] = table
    return table


def lifted_backprojection(model: RfMdpModel, basis: BasisFunction,
                          state: CountingState, action: ActionHistogram) -> float:
    """Count-weighted sum of backprojections over all tuples of the state."""
    if basis.is_constant:
        return basis.constant
    sp = space(model)
    g = _basis_parfactor(model, basis)
    table = backprojection_table(model, basis)

    if g.aggregate is not None:
        marg = sp.marginal(state, (g.inputs[0],))
        return table[((marg[(True,)],), None)]

    output = model.prv(g.output)
    state_inputs = _state_inputs(model, g)
    prop_values = {
        n: sp.entry(state, n) for n in state_inputs if model.prv(n).is_propositional
    }
    param_inputs = tuple(n for n in state_inputs if not model.prv(n).is_propositional)

    if output.is_propositional:
        # Propositional output of a plain table: one grounding, weight 1.
        assignment = tuple(prop_values[n] for n in state_inputs)
        return table[(assignment, None)]

    action_info = None
    action_cells = None
    for idx, info_a in enumerate(sp.action_infos):
        if info_a.parfactor_name == g.name:
            action_info = info_a
            action_cells = action.cells[idx]

    def full_assignment(param_bucket: tuple[bool, ...]) -> tuple[bool, ...]:
        values = dict(zip(param_inputs, param_bucket))
        return tuple(
            prop_values[n] if model.prv(n).is_propositional else values[n]
            for n in state_inputs
        )

    total = 0.0
    if action_info is not None:
        bounds = sp.action_bucket_counts(state, action_info)
        for bucket, k_bucket, cell in zip(action_info.buckets, bounds, action_cells):
            assignment = full_assignment(bucket)
            total += cell * table[(assignment, True)]
            total += (k_bucket - cell) * table[(assignment, False)]
        return total

    if param_inputs:
        marg = sp.marginal(state, param_inputs)
        for bucket, count in marg.items():
            total += count * table[(full_assignment(bucket), None)]
        return total
    # Parameterized output with only propositional inputs: n identical tuples.
    n = model.grounding_count(g.output)
    return n * table[(full_assignment(()), None)]
