"""Lifted transition probabilities.

Each next-state clique is evaluated separately: the current state and action
partition a clique's ground tuples into groups with identical per-tuple
transition probabilities, so the next bucket counts follow products of
binomial (or multinomial, for joint cliques) allocations summed over all
transition vectors hitting the target counts.
"""

from __future__ import annotations

import random
from math import comb, exp, lgamma

from .counting import ActionHistogram, CliqueInfo, CountingState, space
from .model import ACTION, Parfactor, RfMdpModel

NORMALIZATION_TOL = 1e-9

_EXACT_COMB_LIMIT = 60


class _Kahan:
    """Compensated summation accumulator."""

    __slots__ = ("total", "carry")

    def __init__(self):
        self.total = 0.0
        self.carry = 0.0

    def add(self, value: float):
        y = value - self.carry
        t = self.total + y
        self.carry = (t - self.total) - y
        self.total = t


def binomial_coefficient(k: int, t: int) -> float:
    """C(k, t): exact below the factorial comfort zone, log-gamma above."""
    if k <= _EXACT_COMB_LIMIT:
        return float(comb(k, t))
    return exp(lgamma(k + 1) - lgamma(t + 1) - lgamma(k - t + 1))


def bucket_term(k: int, t: int, p_true: float, p_false: float) -> float:
    """Probability that exactly t of k tuples in one bucket go to true."""
    return binomial_coefficient(k, t) * p_true**t * p_false ** (k - t)


# ---------------------------------------------------------------------------
# Conditioning groups
# ---------------------------------------------------------------------------

def _input_assignment(model, g: Parfactor, scope: tuple[str, ...],
                      scope_values: tuple[bool, ...], prop_values: dict,
                      action_value: bool | None) -> tuple[bool, ...]:
    values = []
    for name in g.inputs:
        prv = model.prv(name)
        if prv.role == ACTION:
            values.append(action_value)
        elif prv.is_propositional:
            values.append(prop_values[name])
        else:
            values.append(scope_values[scope.index(name)])
    return tuple(values)


def _clique_groups(model, state: CountingState, action: ActionHistogram,
                   clique_idx: int) -> list[tuple[int, tuple[float, ...]]]:
    """Groups of indistinguishable tuples for one parameterized clique.

    Returns (group size, per-next-bucket probability vector) pairs; the
    vector is ordered like the clique's bucket table.
    """
    sp = space(model)
    info = sp.cliques[clique_idx]
    parfactors = [model.parfactor_for_output(m) for m in info.members]

    prop_values = {}
    for g in parfactors:
        for name in g.inputs:
            prv = model.prv(name)
            if prv.role != ACTION and prv.is_propositional:
                prop_values[name] = sp.entry(state, name)

    action_info = None
    action_cells: tuple[int, ...] | None = None
    for g in parfactors:
        for idx, info_a in enumerate(sp.action_infos):
            if info_a.parfactor_name == g.name:
                action_info = info_a
                action_cells = action.cells[idx]

    if action_info is not None:
        scope = action_info.state_inputs
        scope_buckets = action_info.buckets
        counts = sp.action_bucket_counts(state, action_info)
    else:
        scope = tuple(
            n
            for g in parfactors
            for n in g.inputs
            if model.prv(n).role != ACTION and not model.prv(n).is_propositional
        )
        seen = []
        for n in scope:
            if n not in seen:
                seen.append(n)
        scope = tuple(seen)
        if scope:
            marg = sp.marginal(state, scope)
            scope_buckets = tuple(sorted(marg, key=lambda b: tuple(map(int, b))))
            counts = tuple(marg[b] for b in scope_buckets)
        else:
            scope_buckets = ((),)
            counts = (info.n,)

    groups = []
    for bucket, k_bucket, cell in zip(
        scope_buckets,
        counts,
        action_cells if action_cells is not None else [None] * len(scope_buckets),
    ):
        variants = [(k_bucket, None)]
        if cell is not None:
            if cell < 0 or cell > k_bucket:
                raise ValueError("inadmissible action for this state")
            variants = [(cell, True), (k_bucket - cell, False)]
        for k, action_value in variants:
            if k == 0:
                continue
            # Both rows are looked up rather than complemented, so the
            # ground oracle can catch unnormalized tables.
            row_probs = []
            for g in parfactors:
                assignment = _input_assignment(
                    model, g, scope, bucket, prop_values, action_value
                )
                row_probs.append((g.prob(assignment, True), g.prob(assignment, False)))
            vector = []
            for target in info.buckets:
                p = 1.0
                for value, (phi_true, phi_false) in zip(target, row_probs):
                    p *= phi_true if value else phi_false
                vector.append(p)
            groups.append((k, tuple(vector)))
    return groups


# ---------------------------------------------------------------------------
# Per-clique distributions
# ---------------------------------------------------------------------------

def _true_count_vector(groups, n: int) -> list[float]:
    """Distribution of the total true-count for two-bucket groups."""
    sums = [_Kahan() for _ in range(n + 1)]

    def rec(idx: int, assigned: int, prob: float):
        if idx == len(groups):
            sums[assigned].add(prob)
            return
        k, vector = groups[idx]
        p_false, p_true = vector
        remaining = sum(g[0] for g in groups[idx + 1 :])
        for t in range(k + 1):
            if assigned + t + remaining < 0:
                continue
            if assigned + t > n:
                break
            rec(idx + 1, assigned + t, prob * bucket_term(k, t, p_true, p_false))

    rec(0, 0, 1.0)
    return [s.total for s in sums]


def _multinomial_allocations(k: int, probs: tuple[float, ...]):
    """(counts, probability) for distributing k tuples over buckets."""
    buckets = len(probs)
    out: list[tuple[tuple[int, ...], float]] = []

    def rec(prefix: tuple[int, ...], left: int, idx: int, weight: float):
        if idx == buckets - 1:
            out.append((prefix + (left,), weight * probs[idx] ** left))
            return
        for c in range(left + 1):
            rec(
                prefix + (c,),
                left - c,
                idx + 1,
                weight * binomial_coefficient(left, c) * probs[idx] ** c,
            )

    rec((), k, 0, 1.0)
    return out


def _histogram_distribution(info: CliqueInfo, groups) -> dict[tuple[int, ...], float]:
    """Distribution over full next histograms for a multi-PRV clique."""
    acc: dict[tuple[int, ...], _Kahan] = {(0,) * len(info.buckets): _kahan_one()}
    for k, vector in groups:
        nxt: dict[tuple[int, ...], _Kahan] = {}
        for counts, weight in _multinomial_allocations(k, vector):
            for partial, total in acc.items():
                key = tuple(a + b for a, b in zip(partial, counts))
                slot = nxt.get(key)
                if slot is None:
                    slot = _Kahan()
                    nxt[key] = slot
                slot.add(total.total * weight)
        acc = nxt
    return {key: slot.total for key, slot in acc.items()}


def _kahan_one() -> _Kahan:
    one = _Kahan()
    one.add(1.0)
    return one


def _clique_distribution(model, state, action, clique_idx):
    """Distribution over a clique's next entry; cached per conditioning."""
    sp = space(model)
    info = sp.cliques[clique_idx]
    cache = getattr(sp, "_transition_cache", None)
    if cache is None:
        cache = {}
        sp._transition_cache = cache

    if info.propositional:
        g = model.parfactor_for_output(info.name)
        p = _propositional_true_prob(model, g, state)
        return {False: 1.0 - p, True: p}

    groups = _clique_groups(model, state, action, clique_idx)
    key = (clique_idx, tuple(groups))
    hit = cache.get(key)
    if hit is not None:
        return hit
    if len(info.members) == 1:
        vector = _true_count_vector(groups, info.n)
        dist = {(info.n - x, x): vector[x] for x in range(info.n + 1)}
    else:
        dist = _histogram_distribution(info, groups)
    cache[key] = dist
    return dist


def _propositional_true_prob(model, g: Parfactor, state: CountingState) -> float:
    sp = space(model)
    if g.aggregate is not None:
        source = g.inputs[0]
        marg = sp.marginal(state, (source,))
        k = marg[(True,)]
        return g.aggregate.prob_true(k, model.grounding_count(source))
    assignment = tuple(sp.entry(state, name) for name in g.inputs)
    return g.prob_true(assignment)


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def clique_transition_prob(model: RfMdpModel, parfactor: Parfactor,
                           state: CountingState, action: ActionHistogram,
                           next_true_count: int) -> float:
    """P(output PRV has the given true-count next step | state, action).

    Sums, over all transition vectors (t_i), the product of per-bucket terms
    C(k_i, t_i) * phi_true^t_i * phi_false^(k_i - t_i).
    """
    output = model.prv(parfactor.output)
    if parfactor.aggregate is not None or output.is_propositional:
        raise ValueError(
            f"parfactor {parfactor.name}: output is propositional; use the aggregate path"
        )
    sp = space(model)
    n = model.grounding_count(parfactor.output)
    if not 0 <= next_true_count <= n:
        raise ValueError(f"next_true_count must be in 0..{n}")
    clique_idx = sp.prv_clique[parfactor.output]
    info = sp.cliques[clique_idx]
    groups = _clique_groups(model, state, action, clique_idx)
    member_pos = info.members.index(parfactor.output)

    total = _Kahan()

    def rec(idx: int, needed: int, prob: float):
        if idx == len(groups):
            if needed == 0:
                total.add(prob)
            return
        k, vector = groups[idx]
        p_true = sum(p for bucket, p in zip(info.buckets, vector) if bucket[member_pos])
        p_false = sum(
            p for bucket, p in zip(info.buckets, vector) if not bucket[member_pos]
        )
        capacity = sum(g[0] for g in groups[idx + 1 :])
        for t in range(min(k, needed) + 1):
            if needed - t > capacity:
                continue
            rec(idx + 1, needed - t, prob * bucket_term(k, t, p_true, p_false))

    rec(0, next_true_count, 1.0)
    return total.total


def aggregate_transition_prob(model: RfMdpModel, parfactor: Parfactor,
                              state: CountingState, action: ActionHistogram,
                              next_value: bool) -> float:
    """P(propositional output = next_value | state) for an aggregate parfactor."""
    if parfactor.aggregate is None:
        raise ValueError(f"parfactor {parfactor.name} is not an aggregate")
    p = _propositional_true_prob(model, parfactor, state)
    return p if next_value else 1.0 - p


def joint_transition_prob(model: RfMdpModel, state: CountingState,
                          action: ActionHistogram, next_state: CountingState) -> float:
    """P(next_state | state, action): product over per-clique factors."""
    sp = space(model)
    sp.validate_state(state)
    sp.validate_state(next_state)
    if not sp.is_admissible(state, action):
        raise ValueError("inadmissible action for this state")
    prob = 1.0
    for idx, info in enumerate(sp.cliques):
        dist = _clique_distribution(model, state, action, idx)
        prob *= dist.get(next_state.entries[idx], 0.0)
        if prob == 0.0:
            return 0.0
    return prob


def next_state_distribution(model: RfMdpModel, state: CountingState,
                            action: ActionHistogram) -> dict[CountingState, float]:
    """Full factored next-state distribution over the lifted state space."""
    sp = space(model)
    sp.validate_state(state)
    if not sp.is_admissible(state, action):
        raise ValueError("inadmissible action for this state")
    from .counting import enumerate_histograms

    per_clique: list[list[tuple[object, float]]] = []
    for idx, info in enumerate(sp.cliques):
        dist = _clique_distribution(model, state, action, idx)
        if info.propositional:
            per_clique.append([(False, dist[False]), (True, dist[True])])
        else:
            per_clique.append(
                [
                    (h, dist.get(h, 0.0))
                    for h in enumerate_histograms(len(info.buckets), info.n)
                ]
            )

    out: dict[CountingState, float] = {}

    def rec(idx: int, entries: tuple, prob: float):
        if idx == len(per_clique):
            out[CountingState(entries=entries)] = prob
            return
        for value, p in per_clique[idx]:
            rec(idx + 1, entries + (value,), prob * p)

    rec(0, (), 1.0)
    return out


def sample_next(model: RfMdpModel, state: CountingState,
                action: ActionHistogram, seed: int) -> CountingState:
    """Draw one successor state; identical seeds give identical draws."""
    sp = space(model)
    sp.validate_state(state)
    if not sp.is_admissible(state, action):
        raise ValueError("inadmissible action for this state")
    rng = random.Random(seed)
    from .counting import enumerate_histograms

    entries = []
    for idx, info in enumerate(sp.cliques):
        dist = _clique_distribution(model, state, action, idx)
        if info.propositional:
            order = [False, True]
        else:
            order = enumerate_histograms(len(info.buckets), info.n)
        u = rng.random()
        running = 0.0
        chosen = order[-1]
        for value in order:
            running += dist.get(value, 0.0)
            if u <= running:
                chosen = value
                break
        entries.append(chosen)
    return CountingState(entries=tuple(entries))
