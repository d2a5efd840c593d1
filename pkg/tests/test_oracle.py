import copy
import time

import numpy as np
import pytest

from liftplan.model import ModelError, epidemic_model
from liftplan.oracle import (
    check_equivalence,
    ground,
    ground_alp,
    ground_value_iteration,
    rep_state,
    transition_matrix,
)

from conftest import remote_work_model


def test_ground_sizes(epidemic2, epidemic3):
    g2 = ground(epidemic2)
    assert len(g2.state_vars) == 5
    assert g2.n_states == 32
    g3 = ground(epidemic3)
    assert g3.n_states == 128
    assert g3.n_actions == 8


def test_ground_guard():
    with pytest.raises(ModelError):
        ground(epidemic_model(6))  # 13 state bits


def test_transition_matrices_are_stochastic(epidemic2):
    g = ground(epidemic2)
    for a_idx in range(g.n_actions):
        P = transition_matrix(g, a_idx)
        assert np.allclose(P.sum(axis=1), 1.0, atol=1e-12)
        assert (P >= 0).all()


def test_value_iteration_gamma_zero():
    model = epidemic_model(2)
    model.gamma = 0.0
    g = ground(model)
    V = ground_value_iteration(g)
    assert np.allclose(V, g.rewards)


def test_value_iteration_converges(epidemic2):
    g = ground(epidemic2)
    V = ground_value_iteration(g, eps=1e-8)
    # One more sweep moves nothing beyond the stopping width.
    mats = [transition_matrix(g, a) for a in range(g.n_actions)]
    best = np.max([P @ V for P in mats], axis=0)
    V_next = g.rewards + g.model.gamma * best
    assert np.max(np.abs(V_next - V)) <= 1e-8


def test_ground_values_constant_on_orbits(epidemic2):
    g = ground(epidemic2)
    V = ground_value_iteration(g, eps=1e-8)
    by_rep = {}
    for s_idx in range(g.n_states):
        by_rep.setdefault(rep_state(g, s_idx), []).append(V[s_idx])
    for values in by_rep.values():
        assert max(values) - min(values) <= 1e-7


def test_ground_alp_constant_basis(epidemic3):
    model = epidemic_model(3)
    model.basis_functions = [model.basis_functions[0]]  # constant only
    g = ground(model)
    weights = ground_alp(g)
    assert weights == {"h0": pytest.approx(90.0, abs=1e-6)}


def test_ground_alp_weights_finite(epidemic2):
    g = ground(epidemic2)
    weights = ground_alp(g)
    assert all(np.isfinite(list(weights.values())))


def test_check_equivalence_epidemic_n2(epidemic2):
    report = check_equivalence(epidemic2)
    assert report["ok"]
    assert report["transition_max_deviation"] <= 1e-9
    assert report["value_max_deviation"] <= 1e-6
    assert report["weights_max_deviation"] <= 1e-6


def test_check_equivalence_joint_clique_model():
    report = check_equivalence(remote_work_model(3))
    assert report["ok"]


def test_injected_fault_is_detected(epidemic2):
    broken = copy.deepcopy(epidemic2)
    f1 = broken.parfactor_for_output("Travel")
    f1.potential[(True, False, True)] += 0.1  # now unnormalized
    report = check_equivalence(broken, check_queries=False)
    assert not report["transition_ok"]


def test_transition_aggregation_constant_on_orbits(epidemic2):
    """Different ground representatives of one lifted (s, a) aggregate to
    the same lifted next-state distribution."""
    from liftplan.counting import action_space
    from liftplan.oracle import rep_action

    g = ground(epidemic2)
    orbits = {}
    for s_idx in range(g.n_states):
        orbits.setdefault(rep_state(g, s_idx), []).append(s_idx)
    multi = {s: idxs for s, idxs in orbits.items() if len(idxs) >= 2}
    assert multi
    for s, idxs in list(multi.items())[:4]:
        for action in action_space(epidemic2, s):
            reference = None
            for s_idx in idxs[:3]:
                a_idx = next(
                    a for a in range(g.n_actions)
                    if rep_action(g, s_idx, a) == action
                )
                row = transition_matrix(g, a_idx)[s_idx]
                aggregated = {}
                for s2_idx in range(g.n_states):
                    key = rep_state(g, s2_idx)
                    aggregated[key] = aggregated.get(key, 0.0) + row[s2_idx]
                if reference is None:
                    reference = aggregated
                else:
                    for key, p in aggregated.items():
                        assert p == pytest.approx(reference[key], abs=1e-12)


def test_check_equivalence_n3_runtime(epidemic3):
    start = time.monotonic()
    report = check_equivalence(epidemic3)
    elapsed = time.monotonic() - start
    assert report["ok"]
    assert elapsed < 60.0
