"""Exact lifted planning: value function over counting states via an LP.

One variable per lifted state, one constraint per (state, action) pair:
V(s) >= R(s) + gamma * sum_s' P(s'|s,a) V(s'). With any strictly positive
objective weights the optimum is the Bellman fixed point.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

from . import lp as lpmod
from .counting import ActionHistogram, CountingState, action_space, state_space
from .model import RfMdpModel, serialize_model
from .rewards import reward
from .transition import next_state_distribution

BELLMAN_TOL = 1e-6


@dataclass
class ValueFunction:
    values: dict[CountingState, float]
    alpha: str
    model_fingerprint: str

    def __getitem__(self, state: CountingState) -> float:
        return self.values[state]


@dataclass
class Policy:
    actions: dict[CountingState, ActionHistogram]

    def __getitem__(self, state: CountingState) -> ActionHistogram:
        return self.actions[state]


def model_fingerprint(model: RfMdpModel) -> str:
    return hashlib.sha256(serialize_model(model).encode()).hexdigest()[:16]


def _resolve_alpha(model: RfMdpModel, states: list[CountingState], alpha):
    if alpha is None or alpha == "uniform":
        weight = 1.0 / len(states)
        return [weight] * len(states), "uniform"
    if isinstance(alpha, dict):
        weights = [alpha[s] for s in states]
    else:
        weights = [float(a) for a in alpha]
        if len(weights) != len(states):
            raise ValueError("alpha length does not match the state space")
    if any(w <= 0 for w in weights):
        raise ValueError("alpha weights must be strictly positive")
    return weights, "custom"


def backup(model: RfMdpModel, state: CountingState, action: ActionHistogram,
           values: dict[CountingState, float]) -> float:
    """One-step lookahead R(s) + gamma * sum P(s'|s,a) V(s')."""
    total = reward(model, state)
    if model.gamma == 0.0:
        return total
    dist = next_state_distribution(model, state, action)
    expect = 0.0
    for nxt, p in dist.items():
        if p != 0.0:
            expect += p * values[nxt]
    return total + model.gamma * expect


def build_exact_lp(model: RfMdpModel, alpha=None) -> lpmod.LinearProgram:
    """Assemble the planning LP; variables are named V_<state index>."""
    states = list(state_space(model))
    weights, _ = _resolve_alpha(model, states, alpha)
    state_index = {s: i for i, s in enumerate(states)}
    program = lpmod.LinearProgram(name=f"exact-{model.name}")
    for i in range(len(states)):
        program.add_variable(f"V_{i}")
    program.set_objective({i: w for i, w in enumerate(weights)})

    gamma = model.gamma
    for i, s in enumerate(states):
        base_reward = reward(model, s)
        for a in action_space(model, s):
            coeffs: list[tuple[int, float]] = [(i, 1.0)]
            if gamma != 0.0:
                dist = next_state_distribution(model, s, a)
                for nxt, p in dist.items():
                    if p != 0.0:
                        coeffs.append((state_index[nxt], -gamma * p))
            program.add_constraint(coeffs, lpmod.GE, base_reward)
    return program


def plan_exact(model: RfMdpModel, alpha=None, backend: str = "auto") -> ValueFunction:
    states = list(state_space(model))
    program = build_exact_lp(model, alpha)
    solution = lpmod.solve(program, backend=backend)
    if solution.status != lpmod.OPTIMAL:
        raise lpmod.LpError(
            f"planning LP came back {solution.status}; the model is likely "
            f"ill-posed (gamma={model.gamma})"
        )
    values = {s: solution.values[f"V_{i}"] for i, s in enumerate(states)}
    _, alpha_kind = _resolve_alpha(model, states, alpha)
    return ValueFunction(
        values=values, alpha=alpha_kind, model_fingerprint=model_fingerprint(model)
    )


def greedy_policy(model: RfMdpModel, value_function: ValueFunction) -> Policy:
    """Argmax action per state; ties go to the first enumerated action."""
    chosen: dict[CountingState, ActionHistogram] = {}
    for s in value_function.values:
        best_action = None
        best_q = None
        for a in action_space(model, s):
            q = backup(model, s, a, value_function.values)
            if best_q is None or q > best_q + 1e-12:
                best_q = q
                best_action = a
        chosen[s] = best_action
    return Policy(actions=chosen)


# ---------------------------------------------------------------------------
# Serialization for the CLI / service
# ---------------------------------------------------------------------------

def value_function_to_json(model: RfMdpModel, vf: ValueFunction) -> dict:
    from .counting import state_to_json

    values = {
        json.dumps(state_to_json(model, s), sort_keys=True): v
        for s, v in vf.values.items()
    }
    return {
        "kind": "exact-value-function",
        "model_fingerprint": vf.model_fingerprint,
        "alpha": vf.alpha,
        "values": values,
    }


def value_function_from_json(model: RfMdpModel, doc: dict) -> ValueFunction:
    from .counting import state_from_json

    if doc.get("kind") != "exact-value-function":
        raise ValueError("not an exact value-function document")
    values = {}
    for key, v in doc["values"].items():
        state = state_from_json(model, json.loads(key))
        values[state] = float(v)
    return ValueFunction(
        values=values,
        alpha=doc.get("alpha", "uniform"),
        model_fingerprint=doc.get("model_fingerprint", ""),
    )
