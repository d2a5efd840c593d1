import itertools
import math
import random

import pytest

from liftplan.counting import (
    ActionHistogram,
    CountingState,
    action_space,
    action_space_size,
    enumerate_histograms,
    space,
    state_from_json,
    state_of_ground,
    state_space,
    state_space_size,
    state_to_json,
)
from liftplan.model import epidemic_model

from conftest import random_model, remote_work_model


def test_enumerate_histograms_examples():
    assert enumerate_histograms(2, 3) == [(0, 3), (1, 2), (2, 1), (3, 0)]
    assert len(enumerate_histograms(4, 2)) == 10
    assert enumerate_histograms(1, 5) == [(5,)]


def test_enumerate_histograms_counts_match_binomial():
    for buckets in range(1, 5):
        for n in range(0, 7):
            got = enumerate_histograms(buckets, n)
            assert len(got) == math.comb(n + buckets - 1, buckets - 1)
            assert len(set(got)) == len(got)
            assert all(sum(h) == n for h in got)
            assert got == sorted(got)


def test_state_space_sizes(epidemic2, epidemic3):
    assert len(list(state_space(epidemic3))) == 32
    assert len(list(state_space(epidemic2))) == 18
    assert state_space_size(epidemic3) == 32
    assert state_space_size(epidemic2) == 18


def test_single_propositional_rv_has_two_states():
    from conftest import cpt
    from liftplan.model import Logvar, Parfactor, Prv, RfMdpModel

    model = RfMdpModel(
        name="flag",
        gamma=0.9,
        logvars=[],
        prvs=[Prv("E", (), "state")],
        parfactors=[Parfactor("g", ("E",), "E", cpt({(False,): 0.4, (True,): 0.6}))],
        rewards=[],
        basis_functions=[],
    )
    assert len(list(state_space(model))) == 2


def test_state_space_matches_closed_form_up_to_n6():
    rng = random.Random(3)
    models = [epidemic_model(n) for n in (1, 4, 6)]
    models += [remote_work_model(4)]
    models += [random_model(rng) for _ in range(20)]
    for model in models:
        size = state_space_size(model)
        if size <= 5000:
            assert len(list(state_space(model))) == size


def test_action_space_counts(epidemic3):
    two_travel = CountingState(entries=((3, 0), (1, 2), False))
    assert action_space_size(epidemic3, two_travel) == 6
    assert len(list(action_space(epidemic3, two_travel))) == 6

    all_travel = CountingState(entries=((3, 0), (0, 3), False))
    assert len(list(action_space(epidemic3, all_travel))) == 4  # n+1


def test_example_action_admissibility():
    # Restricting 3 travellers and 2 non-travellers requires >=3 travelling
    # and >=2 not travelling.
    model = epidemic_model(5)
    sp = space(model)
    a = ActionHistogram(cells=((2, 3),))  # bucket order: (not travelling, travelling)
    good = CountingState(entries=((5, 0), (2, 3), False))
    assert sp.is_admissible(good, a)
    bad = CountingState(entries=((5, 0), (3, 2), False))
    assert not sp.is_admissible(bad, a)


def test_state_of_ground_example_histogram():
    # 8 objects; joint (Travel, Car) counts (tt,tf,ft,ff) = (2,1,3,2).
    from conftest import cpt
    from liftplan.model import Logvar, Parfactor, Prv, RewardFunction, RfMdpModel

    model = RfMdpModel(
        name="travel-car",
        gamma=0.9,
        logvars=[Logvar("M", 8)],
        prvs=[Prv("Travel", ("M",), "state"), Prv("Car", ("M",), "state")],
        parfactors=[
            Parfactor(
                "gt",
                ("Travel", "Car"),
                "Travel",
                cpt(
                    {
                        (False, False): 0.2,
                        (False, True): 0.3,
                        (True, False): 0.8,
                        (True, True): 0.9,
                    }
                ),
            ),
            Parfactor("gc", ("Car",), "Car", cpt({(False,): 0.1, (True,): 0.9})),
        ],
        rewards=[
            RewardFunction("R", ("Travel",), {(False,): 0.0, (True,): 1.0})
        ],
        basis_functions=[],
    )
    travel = (True, True, True, False, False, False, False, False)
    car = (True, True, False, True, True, True, False, False)
    state = state_of_ground(model, {"Travel": travel, "Car": car})
    # Bucket order (Travel, Car): ff, ft, tf, tt.
    assert state.entries == ((2, 3, 1, 2),)


def test_state_of_ground_all_false(epidemic3):
    state = state_of_ground(
        epidemic3,
        {"Sick": (False,) * 3, "Travel": (False,) * 3, "Epidemic": False},
    )
    assert state.entries == ((3, 0), (3, 0), False)


def test_state_of_ground_incomplete_assignment(epidemic3):
    with pytest.raises(ValueError):
        state_of_ground(epidemic3, {"Sick": (False, False, False)})


def test_permutation_invariance_brute_force():
    rng = random.Random(5)
    for _ in range(40):
        model = random_model(rng)
        n = model.logvars[0].domain_size if model.logvars else 1
        params = [p.name for p in model.state_prvs() if not p.is_propositional]
        props = [p.name for p in model.state_prvs() if p.is_propositional]
        assignment = {name: tuple(rng.random() < 0.5 for _ in range(n)) for name in params}
        assignment.update({name: rng.random() < 0.5 for name in props})
        base = state_of_ground(model, assignment)
        for perm in itertools.permutations(range(n)):
            shuffled = {
                name: tuple(values[i] for i in perm) for name, values in assignment.items()
                if isinstance(values, tuple)
            }
            shuffled.update({name: assignment[name] for name in props})
            assert state_of_ground(model, shuffled) == base


def test_state_of_ground_surjective(epidemic3):
    reps = set()
    for bits in itertools.product((False, True), repeat=7):
        assignment = {
            "Sick": bits[0:3],
            "Travel": bits[3:6],
            "Epidemic": bits[6],
        }
        reps.add(state_of_ground(epidemic3, assignment))
    assert reps == set(state_space(epidemic3))


def test_state_of_ground_surjective_joint_clique():
    model = remote_work_model(3)
    reps = set()
    for bits in itertools.product((False, True), repeat=6):
        assignment = {"Sick": bits[0:3], "RemoteWork": bits[3:6]}
        reps.add(state_of_ground(model, assignment))
    assert reps == set(state_space(model))


def test_iterators_are_deterministic(epidemic3):
    assert list(state_space(epidemic3)) == list(state_space(epidemic3))
    s = next(iter(state_space(epidemic3)))
    assert list(action_space(epidemic3, s)) == list(action_space(epidemic3, s))


def test_state_json_round_trip(epidemic3):
    for s in state_space(epidemic3):
        doc = state_to_json(epidemic3, s)
        assert state_from_json(epidemic3, doc) == s


def test_state_json_rejects_bad_counts(epidemic3):
    with pytest.raises(ValueError):
        state_from_json(
            epidemic3, {"Sick": [4, 0], "Travel": [3, 0], "Epidemic": False}
        )
