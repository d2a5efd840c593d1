import itertools

import pytest

from liftplan.counting import ActionHistogram, CountingState, space
from liftplan.model import BasisFunction, epidemic_model
from liftplan.rewards import (
    backprojection_table,
    basis_value,
    lifted_backprojection,
    propositional_backprojection,
    reward,
)

RESTRICT_NOBODY = ActionHistogram(cells=((0, 0),))


def test_reward_town_example():
    # 8 people: 5 sick, 3 healthy, 4 travelling -> -5 + 3 + 8 = 6.
    model = epidemic_model(8)
    state = CountingState(entries=((3, 5), (4, 4), False))
    assert reward(model, state) == pytest.approx(6.0)


def test_reward_all_healthy_none_travelling(epidemic3):
    state = CountingState(entries=((3, 0), (3, 0), False))
    assert reward(epidemic3, state) == pytest.approx(3.0)


def test_reward_is_linear_in_counts():
    small = epidemic_model(3)
    large = epidemic_model(6)
    s_small = CountingState(entries=((2, 1), (1, 2), True))
    s_large = CountingState(entries=((4, 2), (2, 4), True))
    assert reward(large, s_large) == pytest.approx(2.0 * reward(small, s_small))


def test_basis_values(epidemic3):
    state = CountingState(entries=((0, 3), (1, 2), False))
    assert basis_value(epidemic3, epidemic3.basis("h0"), state) == 1.0
    assert basis_value(epidemic3, epidemic3.basis("h1"), state) == pytest.approx(-3.0)
    assert basis_value(epidemic3, epidemic3.basis("h2"), state) == pytest.approx(4.0)


def test_reward_equals_sum_of_table_bases(epidemic3):
    from liftplan.counting import state_space

    h1 = epidemic3.basis("h1")
    h2 = epidemic3.basis("h2")
    for s in state_space(epidemic3):
        assert reward(epidemic3, s) == pytest.approx(
            basis_value(epidemic3, h1, s) + basis_value(epidemic3, h2, s)
        )


def test_backprojection_reference_values(epidemic3):
    h0 = epidemic3.basis("h0")
    h1 = epidemic3.basis("h1")
    h2 = epidemic3.basis("h2")
    # Sick-basis values: action-independent.
    assert propositional_backprojection(epidemic3, h1, (True, True)) == pytest.approx(-0.2, abs=1e-12)
    assert propositional_backprojection(epidemic3, h1, (True, False)) == pytest.approx(0.2, abs=1e-12)
    assert propositional_backprojection(epidemic3, h1, (False, True)) == pytest.approx(-0.6, abs=1e-12)
    assert propositional_backprojection(epidemic3, h1, (False, False)) == pytest.approx(0.6, abs=1e-12)
    # Travel-basis values: one per (travelling, restricted) case.
    assert propositional_backprojection(epidemic3, h2, (True,), False) == pytest.approx(1.8, abs=1e-12)
    assert propositional_backprojection(epidemic3, h2, (False,), False) == pytest.approx(0.4, abs=1e-12)
    assert propositional_backprojection(epidemic3, h2, (True,), True) == pytest.approx(1.0, abs=1e-12)
    assert propositional_backprojection(epidemic3, h2, (False,), True) == pytest.approx(0.2, abs=1e-12)
    # Constant basis backprojects to itself.
    for bits in itertools.product((False, True), repeat=2):
        assert propositional_backprojection(epidemic3, h0, bits) == 1.0


def test_lifted_backprojection_weights_by_counts():
    model = epidemic_model(5)
    h1 = model.basis("h1")
    state = CountingState(entries=((2, 3), (5, 0), True))  # 3 sick, 2 healthy, epidemic
    g_sick = propositional_backprojection(model, h1, (True, True))
    g_healthy = propositional_backprojection(model, h1, (False, True))
    expected = 3 * g_sick + 2 * g_healthy
    got = lifted_backprojection(model, h1, state, ActionHistogram(cells=((0, 0),)))
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(-1.8, abs=1e-12)


def test_constant_basis_lifted_backprojection_is_constant(epidemic3):
    h0 = epidemic3.basis("h0")
    from liftplan.counting import action_space, state_space

    for s in itertools.islice(state_space(epidemic3), 5):
        for a in action_space(epidemic3, s):
            assert lifted_backprojection(epidemic3, h0, s, a) == 1.0


def test_lifted_backprojection_equals_ground_sum(epidemic3):
    """Per-tuple backprojections summed over a ground state must equal the
    lifted count-weighted value."""
    h1 = epidemic3.basis("h1")
    h2 = epidemic3.basis("h2")
    for sick_bits in itertools.product((False, True), repeat=3):
        for travel_bits in itertools.product((False, True), repeat=3):
            for epi in (False, True):
                for restrict_bits in itertools.product((False, True), repeat=3):
                    from liftplan.counting import state_of_ground

                    state = state_of_ground(
                        epidemic3,
                        {"Sick": sick_bits, "Travel": travel_bits, "Epidemic": epi},
                    )
                    sp = space(epidemic3)
                    cells = [0, 0]
                    for t in range(3):
                        if restrict_bits[t]:
                            cells[1 if travel_bits[t] else 0] += 1
                    action = ActionHistogram(cells=(tuple(cells),))

                    ground_h1 = sum(
                        propositional_backprojection(epidemic3, h1, (sick_bits[t], epi))
                        for t in range(3)
                    )
                    assert lifted_backprojection(
                        epidemic3, h1, state, action
                    ) == pytest.approx(ground_h1, abs=1e-12)

                    ground_h2 = sum(
                        propositional_backprojection(
                            epidemic3, h2, (travel_bits[t],), restrict_bits[t]
                        )
                        for t in range(3)
                    )
                    assert lifted_backprojection(
                        epidemic3, h2, state, action
                    ) == pytest.approx(ground_h2, abs=1e-12)


def test_backprojection_table_covers_all_cells(epidemic3):
    table_h2 = backprojection_table(epidemic3, epidemic3.basis("h2"))
    assert set(table_h2) == {
        ((False,), False),
        ((False,), True),
        ((True,), False),
        ((True,), True),
    }


def test_multi_output_basis_rejected(epidemic3):
    wide = BasisFunction(
        name="bad",
        scope=("Sick", "Travel"),
        table={
            bits: 1.0 for bits in itertools.product((False, True), repeat=2)
        },
    )
    with pytest.raises(ValueError):
        propositional_backprojection(epidemic3, wide, (True, True))
    state = CountingState(entries=((3, 0), (0, 3), False))
    with pytest.raises(ValueError):
        lifted_backprojection(epidemic3, wide, state, RESTRICT_NOBODY)
