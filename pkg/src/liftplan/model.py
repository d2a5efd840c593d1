"""Relational factored MDP models: types, parsing, validation, benchmark family.

A model couples a parfactor-style transition description (Boolean PRVs over
logvar domains, one conditional table per next-state PRV) with additive
parameterized reward functions, optional basis functions for approximate
planning, and a discount factor.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

ROW_SUM_TOL = 1e-12

STATE = "state"
ACTION = "action"


class ModelError(ValueError):
    """Base class for model document problems."""


class SchemaError(ModelError):
    """Document structure does not match the model-document schema."""


class SemanticError(ModelError):
    """Document is well-formed but violates a model invariant."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = violations


@dataclass
class Logvar:
    name: str
    domain_size: int


@dataclass
class Prv:
    """Parameterized random variable; Boolean-valued, possibly parameterless."""

    name: str
    logvars: tuple[str, ...]
    role: str = STATE

    @property
    def is_propositional(self) -> bool:
        return len(self.logvars) == 0


@dataclass
class Aggregate:
    """Propositional-output potential driven by the true-count k of a
    parameterized input: p(k) explicit per k, or clamp(a + b*k/n, 0, 1)."""

    kind: str  # "linear" | "table"
    a: float | None = None
    b: float | None = None
    probs: tuple[float, ...] | None = None

    def prob_true(self, k: int, n: int) -> float:
        if self.kind == "linear":
            return min(1.0, max(0.0, self.a + self.b * (k / n)))
        return self.probs[k]


@dataclass
class Parfactor:
    """Conditional table P(output' | inputs) shared by all groundings.

    ``potential`` maps a full Boolean assignment (inputs then output) to a
    probability. Aggregate parfactors leave ``potential`` empty and carry an
    :class:`Aggregate` spec instead.
    """

    name: str
    inputs: tuple[str, ...]
    output: str
    potential: dict[tuple[bool, ...], float] = field(default_factory=dict)
    aggregate: Aggregate | None = None

    def prob(self, input_assignment: tuple[bool, ...], output_value: bool) -> float:
        return self.potential[tuple(input_assignment) + (output_value,)]

    def prob_true(self, input_assignment: tuple[bool, ...]) -> float:
        return self.prob(input_assignment, True)


@dataclass
class RewardFunction:
    """Local reward summed over all groundings of its scope."""

    name: str
    scope: tuple[str, ...]
    table: dict[tuple[bool, ...], float]

    def value(self, assignment: tuple[bool, ...]) -> float:
        return self.table[tuple(assignment)]


@dataclass
class BasisFunction:
    """Value-function feature; either a constant or a reward-shaped table."""

    name: str
    scope: tuple[str, ...] = ()
    table: dict[tuple[bool, ...], float] | None = None
    constant: float | None = None

    @property
    def is_constant(self) -> bool:
        return self.constant is not None

    def value(self, assignment: tuple[bool, ...]) -> float:
        if self.is_constant:
            return self.constant
        return self.table[tuple(assignment)]


@dataclass
class RfMdpModel:
    name: str
    gamma: float
    logvars: list[Logvar]
    prvs: list[Prv]
    parfactors: list[Parfactor]
    rewards: list[RewardFunction]
    basis_functions: list[BasisFunction]

    def logvar(self, name: str) -> Logvar:
        for lv in self.logvars:
            if lv.name == name:
                return lv
        raise KeyError(name)

    def prv(self, name: str) -> Prv:
        for p in self.prvs:
            if p.name == name:
                return p
        raise KeyError(name)

    def state_prvs(self) -> list[Prv]:
        return [p for p in self.prvs if p.role == STATE]

    def action_prvs(self) -> list[Prv]:
        return [p for p in self.prvs if p.role == ACTION]

    def parfactor_for_output(self, prv_name: str) -> Parfactor:
        for g in self.parfactors:
            if g.output == prv_name:
                return g
        raise KeyError(prv_name)

    def grounding_count(self, prv_name: str) -> int:
        """Number of ground instances of a PRV (1 if propositional)."""
        count = 1
        for lv in self.prv(prv_name).logvars:
            count *= self.logvar(lv).domain_size
        return count

    def basis(self, name: str) -> BasisFunction:
        for b in self.basis_functions:
            if b.name == name:
                return b
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def _co_occurring_pairs(model: RfMdpModel):
    """All unordered pairs of state-PRV names sharing a function or parfactor."""
    scopes = []
    for g in model.parfactors:
        scopes.append([n for n in g.inputs])
    for r in model.rewards:
        scopes.append(list(r.scope))
    for b in model.basis_functions:
        scopes.append(list(b.scope))
    for scope in scopes:
        for i in range(len(scope)):
            for j in range(i + 1, len(scope)):
                yield scope[i], scope[j]


def validate(model: RfMdpModel) -> list[str]:
    """Check every model invariant; returns human-readable violations."""
    out: list[str] = []
    lv_names = [lv.name for lv in model.logvars]
    if len(set(lv_names)) != len(lv_names):
        out.append("logvar names not unique")
    for lv in model.logvars:
        if lv.domain_size < 1:
            out.append(f"logvar {lv.name}: domain_size must be >= 1")

    prv_names = [p.name for p in model.prvs]
    if len(set(prv_names)) != len(prv_names):
        out.append("PRV names not unique")
    known = set(prv_names)
    for p in model.prvs:
        if p.role not in (STATE, ACTION):
            out.append(f"PRV {p.name}: unknown role {p.role!r}")
        for lv in p.logvars:
            if lv not in lv_names:
                out.append(f"PRV {p.name}: dangling logvar {lv}")
        if p.role == ACTION and p.is_propositional:
            out.append(f"action PRV {p.name} must be parameterized")

    if not 0.0 <= model.gamma <= 1.0:
        out.append("gamma out of range")

    seen_outputs: dict[str, str] = {}
    for g in model.parfactors:
        out.extend(_validate_parfactor(model, g, known))
        if g.output in seen_outputs:
            out.append(
                f"duplicate output: parfactors {seen_outputs[g.output]} "
                f"and {g.name} both produce {g.output}"
            )
        else:
            seen_outputs[g.output] = g.name
    for p in model.prvs:
        if p.role == STATE and p.name not in seen_outputs:
            out.append(f"state PRV {p.name} has no parfactor producing it")

    for r in model.rewards:
        out.extend(_validate_table_function(model, "reward", r.name, r.scope, r.table, known))
    for b in model.basis_functions:
        if b.is_constant:
            if b.scope or b.table:
                out.append(f"basis {b.name}: constant basis must have empty scope")
        else:
            out.extend(_validate_table_function(model, "basis", b.name, b.scope, b.table, known))

    # Co-occurring PRVs that share a logvar must agree on the full logvar
    # sequence, otherwise histograms over their joint assignments are not
    # defined on a common tuple space.
    checked = set()
    for a, b in _co_occurring_pairs(model):
        key = (min(a, b), max(a, b))
        if key in checked or a == b or a not in known or b not in known:
            continue
        checked.add(key)
        pa, pb = model.prv(a), model.prv(b)
        if set(pa.logvars) & set(pb.logvars) and pa.logvars != pb.logvars:
            out.append(
                f"PRVs {a} and {b} co-occur and share a logvar but have "
                f"different logvar sequences"
            )

    if not out:
        # Graph-level checks only make sense once references resolve.
        from . import liftgraph

        out.extend(liftgraph.structural_violations(model))
    return out


def _validate_parfactor(model: RfMdpModel, g: Parfactor, known: set[str]) -> list[str]:
    out: list[str] = []
    for name in (*g.inputs, g.output):
        if name not in known:
            out.append(f"parfactor {g.name}: dangling PRV reference {name}")
            return out
    output = model.prv(g.output)
    if output.role != STATE:
        out.append(f"parfactor {g.name}: output {g.output} must be a state PRV")
        return out

    if g.aggregate is not None:
        return out + _validate_aggregate(model, g)

    actions = [n for n in g.inputs if model.prv(n).role == ACTION]
    if len(actions) > 1:
        out.append(f"parfactor {g.name}: at most one action PRV per parfactor")
    for name in g.inputs:
        p = model.prv(name)
        if not p.is_propositional and p.logvars != output.logvars:
            if output.is_propositional:
                out.append(
                    f"parfactor {g.name}: parameterized input {name} feeding a "
                    f"propositional output requires an aggregate spec"
                )
            else:
                out.append(
                    f"parfactor {g.name}: input {name} must share the output's "
                    f"logvar sequence {output.logvars}"
                )
        if p.is_propositional and p.role == ACTION:
            pass  # already rejected via role check above

    width = len(g.inputs) + 1
    if len(g.potential) != 2 ** width:
        out.append(f"parfactor {g.name}: potential table incomplete")
        return out
    for bits in _assignments(len(g.inputs)):
        total = 0.0
        for value in (False, True):
            prob = g.potential.get(bits + (value,))
            if prob is None:
                out.append(f"parfactor {g.name}: missing row {bits + (value,)}")
                return out
            if not 0.0 <= prob <= 1.0:
                out.append(f"parfactor {g.name}: probability out of [0,1]")
            total += prob
        if abs(total - 1.0) > ROW_SUM_TOL:
            out.append(
                f"parfactor {g.name}: rows for inputs {bits} sum to {total!r}, not 1"
            )
    return out


def _validate_aggregate(model: RfMdpModel, g: Parfactor) -> list[str]:
    out: list[str] = []
    output = model.prv(g.output)
    if not output.is_propositional:
        out.append(f"parfactor {g.name}: aggregate output must be propositional")
    if len(g.inputs) != 1:
        out.append(f"parfactor {g.name}: aggregate takes exactly one input PRV")
        return out
    src = model.prv(g.inputs[0])
    if src.is_propositional or src.role != STATE:
        out.append(
            f"parfactor {g.name}: aggregate input must be a parameterized state PRV"
        )
        return out
    n = model.grounding_count(src.name)
    agg = g.aggregate
    if agg.kind == "linear":
        if agg.a is None or agg.b is None:
            out.append(f"parfactor {g.name}: linear aggregate needs a and b")
    elif agg.kind == "table":
        if agg.probs is None or len(agg.probs) != n + 1:
            out.append(
                f"parfactor {g.name}: aggregate table needs {n + 1} probabilities"
            )
        elif any(not 0.0 <= p <= 1.0 for p in agg.probs):
            out.append(f"parfactor {g.name}: aggregate probability out of [0,1]")
    else:
        out.append(f"parfactor {g.name}: unknown aggregate kind {agg.kind!r}")
    if g.potential:
        out.append(f"parfactor {g.name}: aggregate parfactor must not carry rows")
    return out


def _validate_table_function(model, kind, name, scope, table, known) -> list[str]:
    out: list[str] = []
    for prv_name in scope:
        if prv_name not in known:
            out.append(f"{kind} {name}: dangling PRV reference {prv_name}")
            return out
        if model.prv(prv_name).role != STATE:
            out.append(f"{kind} {name}: scope PRV {prv_name} must be a state PRV")
    if table is None or len(table) != 2 ** len(scope):
        out.append(f"{kind} {name}: table incomplete for scope {scope}")
    return out


def _assignments(width: int):
    """All Boolean tuples of a given width, binary counting, False < True."""
    for index in range(2 ** width):
        yield tuple(bool((index >> (width - 1 - i)) & 1) for i in range(width))


# ---------------------------------------------------------------------------
# Parsing / serialization
# ---------------------------------------------------------------------------

def _need(obj: dict, key: str, types, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing key {key!r}")
    value = obj[key]
    if not isinstance(value, types):
        raise SchemaError(f"{where}: key {key!r} has wrong type")
    return value


def _parse_prob(raw, where: str) -> float:
    if not isinstance(raw, str):
        raise SchemaError(f"{where}: probabilities must be decimal strings")
    try:
        return float(raw)
    except ValueError as exc:
        raise SchemaError(f"{where}: bad decimal {raw!r}") from exc


def _parse_table(rows, width: int, where: str) -> dict[tuple[bool, ...], float]:
    table: dict[tuple[bool, ...], float] = {}
    for row in rows:
        assignment = _need(row, "assignment", list, where)
        if len(assignment) != width or not all(isinstance(v, bool) for v in assignment):
            raise SchemaError(f"{where}: assignment must be {width} booleans")
        key = tuple(assignment)
        if key in table:
            raise SchemaError(f"{where}: duplicate assignment {key}")
        if "prob" in row:
            table[key] = _parse_prob(row["prob"], where)
        elif "value" in row:
            if not isinstance(row["value"], (int, float)) or isinstance(row["value"], bool):
                raise SchemaError(f"{where}: value must be a number")
            table[key] = float(row["value"])
        else:
            raise SchemaError(f"{where}: row needs prob or value")
    return table


def parse_model(text: str) -> RfMdpModel:
    """Parse and validate a UTF-8 JSON model document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("document root must be an object")

    name = _need(doc, "name", str, "document")
    raw_gamma = _need(doc, "gamma", (str, int, float), "document")
    gamma = float(raw_gamma) if not isinstance(raw_gamma, bool) else None
    if gamma is None:
        raise SchemaError("document: gamma has wrong type")

    logvars = []
    for item in _need(doc, "logvars", list, "document"):
        logvars.append(
            Logvar(
                name=_need(item, "name", str, "logvar"),
                domain_size=_need(item, "domain_size", int, "logvar"),
            )
        )
    prvs = []
    for item in _need(doc, "prvs", list, "document"):
        lvs = _need(item, "logvars", list, "prv")
        if not all(isinstance(v, str) for v in lvs):
            raise SchemaError("prv: logvars must be strings")
        prvs.append(
            Prv(
                name=_need(item, "name", str, "prv"),
                logvars=tuple(lvs),
                role=_need(item, "role", str, "prv"),
            )
        )
    parfactors = []
    for item in _need(doc, "parfactors", list, "document"):
        gname = _need(item, "name", str, "parfactor")
        inputs = tuple(_need(item, "inputs", list, gname))
        output = _need(item, "output", str, gname)
        aggregate = None
        potential: dict[tuple[bool, ...], float] = {}
        if "aggregate" in item and item["aggregate"] is not None:
            spec = item["aggregate"]
            kind = _need(spec, "kind", str, f"{gname}.aggregate")
            aggregate = Aggregate(
                kind=kind,
                a=_parse_prob(spec["a"], gname) if "a" in spec else None,
                b=_parse_prob(spec["b"], gname) if "b" in spec else None,
                probs=tuple(_parse_prob(p, gname) for p in spec["probs"])
                if "probs" in spec
                else None,
            )
        else:
            rows = _need(item, "rows", list, gname)
            potential = _parse_table(rows, len(inputs) + 1, gname)
        parfactors.append(
            Parfactor(
                name=gname,
                inputs=inputs,
                output=output,
                potential=potential,
                aggregate=aggregate,
            )
        )
    rewards = []
    for item in _need(doc, "rewards", list, "document"):
        rname = _need(item, "name", str, "reward")
        scope = tuple(_need(item, "scope", list, rname))
        rewards.append(
            RewardFunction(
                name=rname,
                scope=scope,
                table=_parse_table(_need(item, "rows", list, rname), len(scope), rname),
            )
        )
    basis_functions = []
    for item in _need(doc, "basis", list, "document"):
        bname = _need(item, "name", str, "basis")
        scope = tuple(item.get("scope", ()))
        if "constant" in item:
            basis_functions.append(
                BasisFunction(name=bname, constant=float(item["constant"]))
            )
        else:
            basis_functions.append(
                BasisFunction(
                    name=bname,
                    scope=scope,
                    table=_parse_table(_need(item, "rows", list, bname), len(scope), bname),
                )
            )

    model = RfMdpModel(
        name=name,
        gamma=gamma,
        logvars=logvars,
        prvs=prvs,
        parfactors=parfactors,
        rewards=rewards,
        basis_functions=basis_functions,
    )
    violations = validate(model)
    if violations:
        raise SemanticError(violations)
    return model


def _table_rows(table: dict[tuple[bool, ...], float], as_prob: bool) -> list[dict]:
    rows = []
    for key in sorted(table, key=lambda k: tuple(int(v) for v in k)):
        row: dict = {"assignment": list(key)}
        if as_prob:
            row["prob"] = repr(table[key])
        else:
            row["value"] = table[key]
        rows.append(row)
    return rows


def serialize_model(model: RfMdpModel) -> str:
    """Render a model as a document; parse(serialize(m)) == m."""
    doc: dict = {
        "name": model.name,
        "gamma": repr(model.gamma),
        "logvars": [{"name": lv.name, "domain_size": lv.domain_size} for lv in model.logvars],
        "prvs": [
            {"name": p.name, "logvars": list(p.logvars), "role": p.role}
            for p in model.prvs
        ],
        "parfactors": [],
        "rewards": [
            {"name": r.name, "scope": list(r.scope), "rows": _table_rows(r.table, False)}
            for r in model.rewards
        ],
        "basis": [],
    }
    for g in model.parfactors:
        item: dict = {"name": g.name, "inputs": list(g.inputs), "output": g.output}
        if g.aggregate is not None:
            spec: dict = {"kind": g.aggregate.kind}
            if g.aggregate.a is not None:
                spec["a"] = repr(g.aggregate.a)
            if g.aggregate.b is not None:
                spec["b"] = repr(g.aggregate.b)
            if g.aggregate.probs is not None:
                spec["probs"] = [repr(p) for p in g.aggregate.probs]
            item["aggregate"] = spec
        else:
            item["rows"] = _table_rows(g.potential, True)
        doc["parfactors"].append(item)
    for b in model.basis_functions:
        if b.is_constant:
            doc["basis"].append({"name": b.name, "constant": b.constant})
        else:
            doc["basis"].append(
                {"name": b.name, "scope": list(b.scope), "rows": _table_rows(b.table, False)}
            )
    return json.dumps(doc, indent=2)


# ---------------------------------------------------------------------------
# Built-in benchmark family
# ---------------------------------------------------------------------------

def _cpt(inputs_to_true: dict[tuple[bool, ...], float]) -> dict[tuple[bool, ...], float]:
    table = {}
    for bits, p_true in inputs_to_true.items():
        table[bits + (True,)] = p_true
        table[bits + (False,)] = 1.0 - p_true
    return table


def epidemic_model(n: int, f3: Aggregate | None = None) -> RfMdpModel:
    """Town-epidemic benchmark: n persons, travel bans as concurrent actions.

    Per-person travel and sickness dynamics; a propositional epidemic flag
    driven by the number of travellers. Raises ModelError for n < 1.
    """
    if n < 1:
        raise ModelError("epidemic model needs at least one person")
    if f3 is None:
        f3 = Aggregate(kind="linear", a=0.1, b=0.8)

    travel = _cpt(
        {
            (False, False): 0.2,
            (False, True): 0.1,
            (True, False): 0.9,
            (True, True): 0.5,
        }
    )
    sick = _cpt(
        {
            (False, False): 0.2,
            (False, True): 0.8,
            (True, False): 0.4,
            (True, True): 0.6,
        }
    )
    model = RfMdpModel(
        name=f"epidemic-{n}",
        gamma=0.9,
        logvars=[Logvar("M", n)],
        prvs=[
            Prv("Sick", ("M",), STATE),
            Prv("Travel", ("M",), STATE),
            Prv("Epidemic", (), STATE),
            Prv("Restrict", ("M",), ACTION),
        ],
        parfactors=[
            Parfactor("f1", ("Travel", "Restrict"), "Travel", travel),
            Parfactor("f2", ("Sick", "Epidemic"), "Sick", sick),
            Parfactor("f3", ("Travel",), "Epidemic", aggregate=f3),
        ],
        rewards=[
            RewardFunction("R1", ("Sick",), {(False,): 1.0, (True,): -1.0}),
            RewardFunction("R2", ("Travel",), {(False,): 0.0, (True,): 2.0}),
        ],
        basis_functions=[
            BasisFunction("h0", constant=1.0),
            BasisFunction("h1", ("Sick",), {(False,): 1.0, (True,): -1.0}),
            BasisFunction("h2", ("Travel",), {(False,): 0.0, (True,): 2.0}),
        ],
    )
    violations = validate(model)
    if violations:  # structural bug in this factory, not user input
        raise SemanticError(violations)
    return model
