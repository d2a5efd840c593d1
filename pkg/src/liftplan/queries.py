"""Conditional action queries: one-step lookahead filtered by a reward
threshold and a restriction probability on the next state."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .counting import ActionHistogram, CountingState, action_space, space
from .model import RfMdpModel
from .planner_approx import WeightVector
from .planner_exact import ValueFunction, backup
from .rewards import lifted_backprojection, reward
from .transition import next_state_distribution

_PREDICATE_RE = re.compile(
    r"^\s*count\(\s*(\w+)\s*,\s*(true|false)\s*\)\s*(>=|<=|=)\s*(half|\d+)\s*$"
)


@dataclass(frozen=True)
class RestrictionPredicate:
    """Count comparison over one PRV's next-state bucket."""

    prv: str
    value: bool
    cmp: str  # ">=", "<=", "="
    threshold: int | str  # integer or "half"

    def resolve_threshold(self, model: RfMdpModel) -> int:
        if self.threshold == "half":
            return math.ceil(model.grounding_count(self.prv) / 2)
        return int(self.threshold)

    def holds(self, model: RfMdpModel, state: CountingState) -> bool:
        sp = space(model)
        if self.prv not in sp.prv_clique:
            raise ValueError(f"predicate references unknown PRV {self.prv}")
        if model.prv(self.prv).is_propositional:
            count = 1 if sp.entry(state, self.prv) == self.value else 0
        else:
            marg = sp.marginal(state, (self.prv,))
            count = marg[(self.value,)]
        bound = self.resolve_threshold(model)
        if self.cmp == ">=":
            return count >= bound
        if self.cmp == "<=":
            return count <= bound
        return count == bound


def parse_predicate(text: str) -> RestrictionPredicate:
    """Grammar: count(<prv>, true|false) {>=,<=,=} {<int>, half}."""
    m = _PREDICATE_RE.match(text)
    if not m:
        raise ValueError(f"malformed predicate {text!r}")
    prv, value, cmp, threshold = m.groups()
    return RestrictionPredicate(
        prv=prv,
        value=value == "true",
        cmp=cmp,
        threshold="half" if threshold == "half" else int(threshold),
    )


@dataclass
class QueryEntry:
    action: ActionHistogram
    q: float
    probability: float


@dataclass
class QueryResult:
    entries: list[QueryEntry]
    min_reward: float
    min_prob: float
    mode: str
    state: CountingState = None

    def to_json(self, model: RfMdpModel) -> dict:
        from .counting import action_to_json, state_to_json

        return {
            "mode": self.mode,
            "min_reward": None if self.min_reward == float("-inf") else self.min_reward,
            "min_prob": self.min_prob,
            "state": state_to_json(model, self.state) if self.state else None,
            "actions": [
                {
                    "action": action_to_json(model, e.action),
                    "q": e.q,
                    "probability": e.probability,
                }
                for e in self.entries
            ],
        }


def q_value_exact(model: RfMdpModel, vf: ValueFunction, state: CountingState,
                  action: ActionHistogram) -> float:
    """R(s) + gamma * sum_s' P(s'|s,a) V(s')."""
    return backup(model, state, action, vf.values)


def q_value_approx(model: RfMdpModel, weights, state: CountingState,
                   action: ActionHistogram) -> float:
    """R(s) + gamma * sum_i w_i * lifted backprojection of basis i."""
    table = weights.weights if isinstance(weights, WeightVector) else dict(weights)
    total = reward(model, state)
    for b in model.basis_functions:
        if b.name in table:
            total += model.gamma * table[b.name] * lifted_backprojection(
                model, b, state, action
            )
    return total


def restriction_probability(model: RfMdpModel, state: CountingState,
                            action: ActionHistogram,
                            predicate: RestrictionPredicate) -> float:
    """Probability that the next state satisfies the predicate."""
    dist = next_state_distribution(model, state, action)
    total = 0.0
    for nxt, p in dist.items():
        if p != 0.0 and predicate.holds(model, nxt):
            total += p
    return total


def conditional_action_query(model: RfMdpModel, plan, state: CountingState,
                             min_reward: float,
                             predicate: RestrictionPredicate | None,
                             min_prob: float, mode: str = "exact") -> QueryResult:
    """Admissible actions with Q >= min_reward and restriction probability
    >= min_prob, sorted by Q descending (enumeration order on ties)."""
    if mode not in ("exact", "approx"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" and not isinstance(plan, ValueFunction):
        raise ValueError("exact mode needs a ValueFunction plan")
    if mode == "approx" and not isinstance(plan, (WeightVector, dict)):
        raise ValueError("approx mode needs an approximate weight vector")

    entries = []
    for action in action_space(model, state):
        if mode == "exact":
            q = q_value_exact(model, plan, state, action)
        else:
            q = q_value_approx(model, plan, state, action)
        if q < min_reward:
            continue
        if predicate is not None:
            prob = restriction_probability(model, state, action, predicate)
        else:
            prob = 1.0
        if prob < min_prob:
            continue
        entries.append(QueryEntry(action=action, q=q, probability=prob))
    entries.sort(key=lambda e: -e.q)
    return QueryResult(
        entries=entries,
        min_reward=min_reward,
        min_prob=min_prob,
        mode=mode,
        state=state,
    )


# ---------------------------------------------------------------------------
# Ground-side helpers for the oracle battery
# ---------------------------------------------------------------------------

def default_half_healthy_predicate(model: RfMdpModel) -> RestrictionPredicate | None:
    """'At least half of the objects have the first PRV false' when a
    parameterized state PRV exists; None otherwise."""
    for p in model.state_prvs():
        if not p.is_propositional:
            return RestrictionPredicate(prv=p.name, value=False, cmp=">=", threshold="half")
    return None


def ground_filtered_actions(g, Q, s_idx: int, min_reward: float,
                            predicate: RestrictionPredicate, min_prob: float) -> set:
    """Brute-force filtering on the ground MDP, mapped to histograms."""
    from .oracle import rep_action, transition_matrix

    model = g.model
    bound = predicate.resolve_threshold(model)
    if model.prv(predicate.prv).is_propositional:
        cols = [g.bit_index(predicate.prv, 0)]
    else:
        cols = [
            g.bit_index(predicate.prv, t)
            for t in range(model.grounding_count(predicate.prv))
        ]
    matches = (g.state_bits[:, cols] == (1 if predicate.value else 0)).sum(axis=1)
    if predicate.cmp == ">=":
        ok = matches >= bound
    elif predicate.cmp == "<=":
        ok = matches <= bound
    else:
        ok = matches == bound

    out = set()
    for a_idx in range(g.n_actions):
        if Q[s_idx, a_idx] < min_reward:
            continue
        prob = float(transition_matrix(g, a_idx)[s_idx] @ ok)
        if prob < min_prob:
            continue
        out.add(rep_action(g, s_idx, a_idx))
    return out
