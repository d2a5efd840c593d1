"""Histogram arithmetic and enumeration of lifted state and action spaces.

A lifted state stores, per clique of the current-state cost graph, a
histogram distributing the clique's ground tuples over joint Boolean
assignments of its member PRVs (a single Boolean for propositional
cliques). A concurrent action stores, per action-carrying parfactor, how
many tuples in each input bucket the action is applied to.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

from . import liftgraph
from .model import ACTION, RfMdpModel


@dataclass(frozen=True)
class CountingState:
    """One entry per clique: tuple of bucket counts, or a bool."""

    entries: tuple

    def __str__(self) -> str:
        return "|".join(
            ",".join(map(str, e)) if isinstance(e, tuple) else ("t" if e else "f")
            for e in self.entries
        )


@dataclass(frozen=True)
class ActionHistogram:
    """Per action parfactor: count of action=true tuples per input bucket."""

    cells: tuple[tuple[int, ...], ...]

    def __str__(self) -> str:
        return "|".join(",".join(map(str, c)) for c in self.cells)


@dataclass
class CliqueInfo:
    name: str
    members: tuple[str, ...]
    propositional: bool
    logvars: tuple[str, ...]
    n: int
    buckets: tuple[tuple[bool, ...], ...]

    def bucket_index(self, assignment: tuple[bool, ...]) -> int:
        index = 0
        for v in assignment:
            index = (index << 1) | int(v)
        return index


@dataclass
class ActionInfo:
    """How one action-carrying parfactor is specified against the state."""

    parfactor_name: str
    action_prv: str
    state_inputs: tuple[str, ...]  # parameterized current-state inputs
    input_clique: int | None
    buckets: tuple[tuple[bool, ...], ...]
    n: int


def bucket_assignments(members: int) -> tuple[tuple[bool, ...], ...]:
    """Joint Boolean assignments in binary-counting order, False < True."""
    return tuple(
        tuple(bool((i >> (members - 1 - k)) & 1) for k in range(members))
        for i in range(2 ** members)
    )


def enumerate_histograms(buckets: int, n: int) -> list[tuple[int, ...]]:
    """All weak compositions of n into `buckets` parts, lexicographic."""
    if buckets < 1:
        raise ValueError("need at least one bucket")
    out: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], left: int, remaining: int):
        if remaining == 1:
            out.append(prefix + (left,))
            return
        for v in range(left + 1):
            rec(prefix + (v,), left - v, remaining - 1)

    rec((), n, buckets)
    return out


def histogram_count(buckets: int, n: int) -> int:
    return comb(n + buckets - 1, buckets - 1)


class LiftedSpace:
    """Derived view of a model: cliques, bucket tables, action structure."""

    def __init__(self, model: RfMdpModel):
        self.model = model
        self.graph = liftgraph.relational_cost_graph(model)
        self.report = liftgraph.maximal_cliques(self.graph)
        self.cliques: list[CliqueInfo] = []
        self.prv_clique: dict[str, int] = {}
        for idx, members in enumerate(self.report.cliques):
            first = model.prv(members[0])
            if first.is_propositional:
                info = CliqueInfo(
                    name=members[0],
                    members=members,
                    propositional=True,
                    logvars=(),
                    n=1,
                    buckets=((False,), (True,)),
                )
            else:
                n = model.grounding_count(members[0])
                info = CliqueInfo(
                    name=",".join(members),
                    members=members,
                    propositional=False,
                    logvars=first.logvars,
                    n=n,
                    buckets=bucket_assignments(len(members)),
                )
            self.cliques.append(info)
            for m in members:
                self.prv_clique[m] = idx

        self.action_infos: list[ActionInfo] = []
        for g in model.parfactors:
            action = [n for n in g.inputs if model.prv(n).role == ACTION]
            if not action:
                continue
            state_inputs = tuple(
                n
                for n in g.inputs
                if model.prv(n).role != ACTION and not model.prv(n).is_propositional
            )
            clique_idx = self.prv_clique[state_inputs[0]] if state_inputs else None
            self.action_infos.append(
                ActionInfo(
                    parfactor_name=g.name,
                    action_prv=action[0],
                    state_inputs=state_inputs,
                    input_clique=clique_idx,
                    buckets=bucket_assignments(len(state_inputs)),
                    n=model.grounding_count(g.output),
                )
            )

    # -- state helpers ----------------------------------------------------

    def clique_of(self, prv_name: str) -> CliqueInfo:
        return self.cliques[self.prv_clique[prv_name]]

    def entry(self, state: CountingState, prv_name: str):
        return state.entries[self.prv_clique[prv_name]]

    def marginal(
        self, state: CountingState, subset: tuple[str, ...]
    ) -> dict[tuple[bool, ...], int]:
        """Counts per joint assignment of a subset of one clique's members."""
        if not subset:
            raise ValueError("empty subset")
        info = self.cliques[self.prv_clique[subset[0]]]
        positions = [info.members.index(name) for name in subset]
        histogram = state.entries[self.prv_clique[subset[0]]]
        out: dict[tuple[bool, ...], int] = {
            key: 0 for key in bucket_assignments(len(subset))
        }
        for bucket, count in zip(info.buckets, histogram):
            out[tuple(bucket[p] for p in positions)] += count
        return out

    def action_bucket_counts(
        self, state: CountingState, info: ActionInfo
    ) -> tuple[int, ...]:
        """Size of each input bucket the action histogram is bounded by."""
        if not info.state_inputs:
            return (info.n,)
        marg = self.marginal(state, info.state_inputs)
        return tuple(marg[b] for b in info.buckets)

    def is_admissible(self, state: CountingState, action: ActionHistogram) -> bool:
        if len(action.cells) != len(self.action_infos):
            return False
        for info, cells in zip(self.action_infos, action.cells):
            bounds = self.action_bucket_counts(state, info)
            if len(cells) != len(bounds):
                return False
            if any(c < 0 or c > k for c, k in zip(cells, bounds)):
                return False
        return True

    def validate_state(self, state: CountingState) -> None:
        if len(state.entries) != len(self.cliques):
            raise ValueError("state has wrong number of clique entries")
        for info, entry in zip(self.cliques, state.entries):
            if info.propositional:
                if not isinstance(entry, bool):
                    raise ValueError(f"clique {info.name}: expected a boolean")
            else:
                if not isinstance(entry, tuple) or len(entry) != len(info.buckets):
                    raise ValueError(f"clique {info.name}: expected {len(info.buckets)} counts")
                if any(c < 0 for c in entry) or sum(entry) != info.n:
                    raise ValueError(
                        f"clique {info.name}: counts must be nonnegative and sum to {info.n}"
                    )


def space(model: RfMdpModel) -> LiftedSpace:
    """Derived lifted-space structure, cached on the model instance."""
    cached = getattr(model, "_lifted_space", None)
    if cached is None:
        cached = LiftedSpace(model)
        model._lifted_space = cached
    return cached


# ---------------------------------------------------------------------------
# Enumeration
# ---------------------------------------------------------------------------

def state_space(model: RfMdpModel):
    """Deterministic iterator over every lifted state."""
    sp = space(model)
    domains = []
    for info in sp.cliques:
        if info.propositional:
            domains.append((False, True))
        else:
            domains.append(tuple(enumerate_histograms(len(info.buckets), info.n)))
    for combo in itertools.product(*domains):
        yield CountingState(entries=tuple(combo))


def state_space_size(model: RfMdpModel) -> int:
    sp = space(model)
    total = 1
    for info in sp.cliques:
        if info.propositional:
            total *= 2
        else:
            total *= histogram_count(len(info.buckets), info.n)
    return total


def action_space(model: RfMdpModel, state: CountingState):
    """Deterministic iterator over admissible action histograms for a state."""
    sp = space(model)
    per_parfactor = []
    for info in sp.action_infos:
        bounds = sp.action_bucket_counts(state, info)
        per_parfactor.append(
            tuple(itertools.product(*(range(k + 1) for k in bounds)))
        )
    for combo in itertools.product(*per_parfactor):
        yield ActionHistogram(cells=tuple(combo))


def action_space_size(model: RfMdpModel, state: CountingState) -> int:
    sp = space(model)
    total = 1
    for info in sp.action_infos:
        for k in sp.action_bucket_counts(state, info):
            total *= k + 1
    return total


# ---------------------------------------------------------------------------
# Ground-state mapping
# ---------------------------------------------------------------------------

def state_of_ground(model: RfMdpModel, ground_assignment: dict) -> CountingState:
    """Map a full ground assignment to its lifted state by counting.

    ``ground_assignment`` maps each state PRV name to a sequence of Booleans
    in grounding-tuple order (a bare Boolean for propositional RVs).
    """
    sp = space(model)
    entries = []
    for info in sp.cliques:
        if info.propositional:
            value = ground_assignment.get(info.name)
            if isinstance(value, (list, tuple)):
                value = value[0] if len(value) == 1 else None
            if not isinstance(value, bool):
                raise ValueError(f"assignment incomplete for {info.name}")
            entries.append(value)
            continue
        columns = []
        for member in info.members:
            values = ground_assignment.get(member)
            if values is None or len(values) != info.n:
                raise ValueError(f"assignment incomplete for {member}")
            columns.append(tuple(values))
        counts = [0] * len(info.buckets)
        for t in range(info.n):
            counts[info.bucket_index(tuple(col[t] for col in columns))] += 1
        entries.append(tuple(counts))
    return CountingState(entries=tuple(entries))


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def state_to_json(model: RfMdpModel, state: CountingState) -> dict:
    sp = space(model)
    out: dict = {}
    for info, entry in zip(sp.cliques, state.entries):
        out[info.name] = list(entry) if isinstance(entry, tuple) else entry
    return out


def state_from_json(model: RfMdpModel, doc: dict) -> CountingState:
    sp = space(model)
    entries = []
    for info in sp.cliques:
        if info.name not in doc:
            raise ValueError(f"state document missing clique {info.name}")
        value = doc[info.name]
        if info.propositional:
            if not isinstance(value, bool):
                raise ValueError(f"clique {info.name}: expected a boolean")
            entries.append(value)
        else:
            if not isinstance(value, list):
                raise ValueError(f"clique {info.name}: expected a count list")
            entries.append(tuple(int(v) for v in value))
    state = CountingState(entries=tuple(entries))
    sp.validate_state(state)
    return state


def action_to_json(model: RfMdpModel, action: ActionHistogram) -> dict:
    sp = space(model)
    return {
        info.parfactor_name: list(cells)
        for info, cells in zip(sp.action_infos, action.cells)
    }


def action_from_json(model: RfMdpModel, doc: dict) -> ActionHistogram:
    sp = space(model)
    cells = []
    for info in sp.action_infos:
        if info.parfactor_name not in doc:
            raise ValueError(f"action document missing parfactor {info.parfactor_name}")
        cells.append(tuple(int(v) for v in doc[info.parfactor_name]))
    return ActionHistogram(cells=tuple(cells))
