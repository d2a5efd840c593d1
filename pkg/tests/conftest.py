"""Shared fixtures: benchmark models and a random small-model generator."""

from __future__ import annotations

import random

import pytest

from liftplan.model import (
    Aggregate,
    BasisFunction,
    Logvar,
    Parfactor,
    Prv,
    RewardFunction,
    RfMdpModel,
    epidemic_model,
    validate,
)


def cpt(inputs_to_true: dict) -> dict:
    table = {}
    for bits, p in inputs_to_true.items():
        table[bits + (True,)] = p
        table[bits + (False,)] = 1.0 - p
    return table


@pytest.fixture(scope="session")
def epidemic2() -> RfMdpModel:
    return epidemic_model(2)


@pytest.fixture(scope="session")
def epidemic3() -> RfMdpModel:
    return epidemic_model(3)


def remote_work_model(n: int) -> RfMdpModel:
    """Two PRVs counted jointly: sickness depends on remote work."""
    model = RfMdpModel(
        name=f"remote-{n}",
        gamma=0.9,
        logvars=[Logvar("M", n)],
        prvs=[Prv("Sick", ("M",), "state"), Prv("RemoteWork", ("M",), "state")],
        parfactors=[
            Parfactor(
                "fs",
                ("Sick", "RemoteWork"),
                "Sick",
                cpt(
                    {
                        (False, False): 0.3,
                        (False, True): 0.1,
                        (True, False): 0.7,
                        (True, True): 0.4,
                    }
                ),
            ),
            Parfactor(
                "fr",
                ("RemoteWork",),
                "RemoteWork",
                cpt({(False,): 0.2, (True,): 0.85}),
            ),
        ],
        rewards=[RewardFunction("R", ("Sick",), {(False,): 1.0, (True,): -1.0})],
        basis_functions=[
            BasisFunction("b0", constant=1.0),
            BasisFunction("b1", ("Sick",), {(False,): 1.0, (True,): -1.0}),
        ],
    )
    assert validate(model) == []
    return model


def random_model(rng: random.Random) -> RfMdpModel:
    """A valid model with <= 3 state PRVs over <= 4 objects.

    Parameterized PRVs are pre-partitioned into clique groups; groups of
    size two get a covering reward so the group is one maximal clique.
    """
    n = rng.randint(1, 4)
    n_param = rng.randint(0, 3)
    n_prop = rng.randint(0 if n_param else 1, 1)
    while n_param + n_prop == 0 or n_param + n_prop > 3:
        n_param = rng.randint(0, 3)
        n_prop = rng.randint(0 if n_param else 1, 1)

    param_names = [f"P{i}" for i in range(n_param)]
    prop_names = [f"E{i}" for i in range(n_prop)]
    prvs = [Prv(name, ("M",), "state") for name in param_names]
    prvs += [Prv(name, (), "state") for name in prop_names]

    groups: list[list[str]] = []
    pool = list(param_names)
    while pool:
        take = min(len(pool), rng.choice((1, 1, 2)))
        groups.append(pool[:take])
        pool = pool[take:]

    group_of = {name: g for g in groups for name in g}
    has_action = n_param > 0 and rng.random() < 0.5
    action_target = rng.choice(param_names) if has_action else None
    if has_action:
        prvs.append(Prv("Act", ("M",), "action"))

    def random_cpt(width: int) -> dict:
        table = {}
        for i in range(2 ** width):
            bits = tuple(bool((i >> (width - 1 - k)) & 1) for k in range(width))
            table[bits] = round(rng.uniform(0.05, 0.95), 3)
        return cpt(table)

    parfactors = []
    for name in param_names:
        inputs = [p for p in group_of[name] if rng.random() < 0.8]
        if name == action_target and set(inputs) != set(group_of[name]):
            inputs = list(group_of[name])  # action inputs must cover the clique
        if n_prop and rng.random() < 0.5:
            inputs.append(prop_names[0])
        if name == action_target:
            inputs.append("Act")
        parfactors.append(
            Parfactor(f"g_{name}", tuple(inputs), name, random_cpt(len(inputs)))
        )
    for name in prop_names:
        if n_param and rng.random() < 0.6:
            source = rng.choice(param_names)
            kind = rng.choice(("linear", "table"))
            if kind == "linear":
                agg = Aggregate(
                    kind="linear",
                    a=round(rng.uniform(0.0, 0.3), 3),
                    b=round(rng.uniform(0.0, 0.7), 3),
                )
            else:
                agg = Aggregate(
                    kind="table",
                    probs=tuple(round(rng.uniform(0.0, 1.0), 3) for _ in range(n + 1)),
                )
            parfactors.append(Parfactor(f"g_{name}", (source,), name, aggregate=agg))
        else:
            inputs = tuple(p for p in prop_names if rng.random() < 0.5)
            parfactors.append(
                Parfactor(f"g_{name}", inputs, name, random_cpt(len(inputs)))
            )

    rewards = []
    for g in groups:
        if len(g) >= 2:
            table = {}
            for i in range(2 ** len(g)):
                bits = tuple(bool((i >> (len(g) - 1 - k)) & 1) for k in range(len(g)))
                table[bits] = round(rng.uniform(-2.0, 2.0), 3)
            rewards.append(RewardFunction(f"R_{'_'.join(g)}", tuple(g), table))
    for name in param_names + prop_names:
        if rng.random() < 0.6 or not rewards:
            rewards.append(
                RewardFunction(
                    f"R_{name}",
                    (name,),
                    {
                        (False,): round(rng.uniform(-2.0, 2.0), 3),
                        (True,): round(rng.uniform(-2.0, 2.0), 3),
                    },
                )
            )

    model = RfMdpModel(
        name=f"random-{rng.randint(0, 10**6)}",
        gamma=round(rng.uniform(0.0, 0.95), 2),
        logvars=[Logvar("M", n)],
        prvs=prvs,
        parfactors=parfactors,
        rewards=rewards,
        basis_functions=[],
    )
    violations = validate(model)
    assert violations == [], violations
    return model
