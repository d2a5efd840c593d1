import json
import random

import pytest

from liftplan.model import (
    Aggregate,
    ModelError,
    SchemaError,
    SemanticError,
    epidemic_model,
    parse_model,
    serialize_model,
    validate,
)

from conftest import random_model


def test_epidemic_document_parses_to_expected_prvs(epidemic3):
    doc = serialize_model(epidemic3)
    model = parse_model(doc)
    assert {p.name for p in model.prvs} == {"Sick", "Travel", "Epidemic", "Restrict"}
    assert model.prv("Restrict").role == "action"
    assert model.prv("Epidemic").is_propositional


def test_unnormalized_row_is_semantic_violation(epidemic3):
    doc = json.loads(serialize_model(epidemic3))
    doc["parfactors"][0]["rows"][0]["prob"] = "0.1"  # row pair now sums to 0.9
    with pytest.raises(SemanticError):
        parse_model(json.dumps(doc))


def test_round_trip_identity(epidemic3):
    assert parse_model(serialize_model(epidemic3)) == epidemic3


def test_round_trip_preserves_probabilities_bit_exactly():
    model = epidemic_model(4, Aggregate(kind="table", probs=(0.1, 0.25, 0.5, 0.75, 1.0)))
    twice = parse_model(serialize_model(model))
    for g, g2 in zip(model.parfactors, twice.parfactors):
        assert g.potential == g2.potential
        assert g.aggregate == g2.aggregate


def test_validate_clean_model(epidemic3):
    assert validate(epidemic3) == []


def test_validate_gamma_out_of_range(epidemic3):
    epidemic3_bad = epidemic_model(3)
    epidemic3_bad.gamma = 1.2
    problems = validate(epidemic3_bad)
    assert any("gamma out of range" in p for p in problems)


def test_validate_duplicate_output():
    model = epidemic_model(3)
    model.parfactors.append(model.parfactors[0])
    problems = validate(model)
    assert any("duplicate output" in p for p in problems)


def test_tables_3_and_4_reproduced_exactly():
    for n in (1, 3, 8):
        model = epidemic_model(n)
        f1 = model.parfactor_for_output("Travel")
        assert f1.prob_true((False, False)) == 0.2
        assert f1.prob_true((False, True)) == 0.1
        assert f1.prob_true((True, False)) == 0.9
        assert f1.prob_true((True, True)) == 0.5
        f2 = model.parfactor_for_output("Sick")
        assert f2.prob_true((False, False)) == 0.2
        assert f2.prob_true((False, True)) == 0.8
        assert f2.prob_true((True, False)) == 0.4
        assert f2.prob_true((True, True)) == 0.6


def test_default_aggregate_probabilities():
    model = epidemic_model(3)
    f3 = model.parfactor_for_output("Epidemic")
    assert f3.aggregate.prob_true(3, 3) == pytest.approx(0.9)
    assert f3.aggregate.prob_true(0, 3) == pytest.approx(0.1)
    # Normalization is structural: P(true) + P(false) = 1 by construction.
    for k in range(4):
        p = f3.aggregate.prob_true(k, 3)
        assert 0.0 <= p <= 1.0


def test_epidemic_rejects_nonpositive_population():
    with pytest.raises(ModelError):
        epidemic_model(0)


def test_schema_errors():
    with pytest.raises(SchemaError):
        parse_model("not json")
    with pytest.raises(SchemaError):
        parse_model("{}")
    doc = json.loads(serialize_model(epidemic_model(2)))
    doc["parfactors"][0]["rows"][0]["prob"] = 0.8  # must be a decimal string
    with pytest.raises(SchemaError):
        parse_model(json.dumps(doc))


def test_dangling_reference_is_semantic_error():
    doc = json.loads(serialize_model(epidemic_model(2)))
    doc["rewards"][0]["scope"] = ["Nonexistent"]
    with pytest.raises(SemanticError):
        parse_model(json.dumps(doc))


def test_propositional_action_rejected():
    doc = json.loads(serialize_model(epidemic_model(2)))
    doc["prvs"].append({"name": "Flip", "logvars": [], "role": "action"})
    with pytest.raises(SemanticError) as err:
        parse_model(json.dumps(doc))
    assert any("must be parameterized" in v for v in err.value.violations)


def test_overlapping_cliques_rejected():
    # Path structure A-B, B-C: B would be counted in two histograms.
    doc = {
        "name": "path",
        "gamma": "0.9",
        "logvars": [{"name": "M", "domain_size": 2}],
        "prvs": [
            {"name": "A", "logvars": ["M"], "role": "state"},
            {"name": "B", "logvars": ["M"], "role": "state"},
            {"name": "C", "logvars": ["M"], "role": "state"},
        ],
        "parfactors": [
            {
                "name": f"g{x}",
                "inputs": [x],
                "output": x,
                "rows": [
                    {"assignment": [False, False], "prob": "0.5"},
                    {"assignment": [False, True], "prob": "0.5"},
                    {"assignment": [True, False], "prob": "0.5"},
                    {"assignment": [True, True], "prob": "0.5"},
                ],
            }
            for x in ("A", "B", "C")
        ],
        "rewards": [
            {
                "name": "RAB",
                "scope": ["A", "B"],
                "rows": [
                    {"assignment": [a, b], "value": 1.0}
                    for a in (False, True)
                    for b in (False, True)
                ],
            },
            {
                "name": "RBC",
                "scope": ["B", "C"],
                "rows": [
                    {"assignment": [a, b], "value": 1.0}
                    for a in (False, True)
                    for b in (False, True)
                ],
            },
        ],
        "basis": [],
    }
    with pytest.raises(SemanticError) as err:
        parse_model(json.dumps(doc))
    assert any("two maximal cliques" in v for v in err.value.violations)


def test_random_models_serialize_and_validate():
    rng = random.Random(7)
    for _ in range(25):
        model = random_model(rng)
        assert parse_model(serialize_model(model)) == model
