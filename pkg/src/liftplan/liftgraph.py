"""Cost graphs over PRVs and their maximal cliques.

The clique structure of the current-state cost graph decides which PRVs must
be counted jointly; the clique count c and largest clique size w are the
structural parameters the planners are exponential in.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import RfMdpModel, STATE

RELATIONAL = "relational"
TOTAL = "total"

NEXT_SUFFIX = "'"


@dataclass
class CostGraph:
    vertices: tuple[str, ...]
    edges: frozenset[tuple[str, str]]  # pairs ordered by vertex position
    kind: str

    def neighbors(self, v: str) -> set[str]:
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return out


@dataclass
class CliqueReport:
    cliques: tuple[tuple[str, ...], ...]
    c: int
    w: int
    greedy_induced_width: int


def _edge(order: dict[str, int], a: str, b: str) -> tuple[str, str]:
    return (a, b) if order[a] < order[b] else (b, a)


def _function_scopes(model: RfMdpModel):
    for g in model.parfactors:
        yield list(g.inputs)
    for r in model.rewards:
        yield list(r.scope)
    for b in model.basis_functions:
        yield list(b.scope)


def relational_cost_graph(model: RfMdpModel) -> CostGraph:
    """Graph over current-state PRVs; an edge means the two PRVs share a
    logvar and occur together in a parfactor, reward, or basis function."""
    vertices = tuple(p.name for p in model.state_prvs())
    order = {name: i for i, name in enumerate(vertices)}
    edges = set()
    for scope in _function_scopes(model):
        names = [n for n in scope if n in order]
        for i in range(len(names)):
            for j in range(i + 1, len(names)):
                a, b = names[i], names[j]
                if a == b:
                    continue
                pa, pb = model.prv(a), model.prv(b)
                if set(pa.logvars) & set(pb.logvars):
                    edges.add(_edge(order, a, b))
    return CostGraph(vertices=vertices, edges=frozenset(edges), kind=RELATIONAL)


def total_relational_cost_graph(model: RfMdpModel) -> tuple[CostGraph, CliqueReport]:
    """Graph over every (P)RV including actions and next-state copies; an
    edge means plain co-occurrence in any function or parfactor."""
    vertices = [p.name for p in model.prvs]
    vertices += [p.name + NEXT_SUFFIX for p in model.state_prvs()]
    order = {name: i for i, name in enumerate(vertices)}
    edges = set()
    scopes = []
    for g in model.parfactors:
        scopes.append(list(g.inputs) + [g.output + NEXT_SUFFIX])
    for r in model.rewards:
        scopes.append(list(r.scope))
    for b in model.basis_functions:
        scopes.append(list(b.scope))
    for scope in scopes:
        for i in range(len(scope)):
            for j in range(i + 1, len(scope)):
                if scope[i] != scope[j]:
                    edges.add(_edge(order, scope[i], scope[j]))
    graph = CostGraph(vertices=tuple(vertices), edges=frozenset(edges), kind=TOTAL)
    return graph, maximal_cliques(graph)


def _bron_kerbosch(adj: dict[str, set[str]], r: set, p: set, x: set, out: list):
    if not p and not x:
        out.append(set(r))
        return
    pivot_pool = p | x
    pivot = max(pivot_pool, key=lambda v: len(adj[v] & p))
    for v in list(p - adj[pivot]):
        _bron_kerbosch(adj, r | {v}, p & adj[v], x & adj[v], out)
        p.remove(v)
        x.add(v)


def maximal_cliques(graph: CostGraph) -> CliqueReport:
    """Exact maximal-clique enumeration plus a greedy induced-width bound."""
    order = {name: i for i, name in enumerate(graph.vertices)}
    adj = {v: graph.neighbors(v) for v in graph.vertices}
    found: list[set[str]] = []
    if graph.vertices:
        _bron_kerbosch(adj, set(), set(graph.vertices), set(), found)
    cliques = sorted(
        (tuple(sorted(cl, key=order.get)) for cl in found),
        key=lambda cl: tuple(order[v] for v in cl),
    )
    return CliqueReport(
        cliques=tuple(cliques),
        c=len(cliques),
        w=max((len(cl) for cl in cliques), default=0),
        greedy_induced_width=greedy_induced_width(graph),
    )


def greedy_induced_width(graph: CostGraph) -> int:
    """Upper bound on induced width via min-degree elimination with fill."""
    adj = {v: graph.neighbors(v) for v in graph.vertices}
    order = {name: i for i, name in enumerate(graph.vertices)}
    width = 0
    remaining = set(graph.vertices)
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u] & remaining), order[u]))
        nbrs = adj[v] & remaining
        width = max(width, len(nbrs))
        for a in nbrs:
            for b in nbrs:
                if a != b:
                    adj[a].add(b)
        remaining.remove(v)
    return width


def structural_violations(model: RfMdpModel) -> list[str]:
    """Checks that keep the counting state representation well-defined.

    Maximal cliques must not overlap (a PRV counted in two histograms would
    leave their joint alignment unspecified), each action PRV may drive only
    one parfactor, and a multi-PRV clique must gather all its members'
    parameterized inputs from a single clique with at most one action.
    """
    out: list[str] = []
    graph = relational_cost_graph(model)
    report = maximal_cliques(graph)
    membership: dict[str, int] = {}
    for idx, clique in enumerate(report.cliques):
        for v in clique:
            if v in membership:
                out.append(
                    f"PRV {v} belongs to two maximal cliques; state histograms "
                    f"would overlap"
                )
            membership[v] = idx

    mentioned: dict[str, str] = {}
    for g in model.parfactors:
        for name in g.inputs:
            if model.prv(name).role != STATE:
                if name in mentioned:
                    out.append(
                        f"action PRV {name} mentioned in parfactors "
                        f"{mentioned[name]} and {g.name}; one parfactor per action"
                    )
                mentioned[name] = g.name

    if out:
        return out
    for clique in report.cliques:
        if len(clique) < 2:
            continue
        input_cliques = set()
        action_parfactors = []
        covering_inputs: set[str] = set()
        for member in clique:
            g = model.parfactor_for_output(member)
            state_inputs = [
                n
                for n in g.inputs
                if model.prv(n).role == STATE and not model.prv(n).is_propositional
            ]
            for n in state_inputs:
                input_cliques.add(membership[n])
                covering_inputs.add(n)
            if any(model.prv(n).role != STATE for n in g.inputs):
                action_parfactors.append((g, set(state_inputs)))
        if len(input_cliques) > 1:
            out.append(
                f"clique {clique}: member parfactors draw parameterized inputs "
                f"from more than one clique"
            )
        if len(action_parfactors) > 1:
            out.append(f"clique {clique}: more than one member parfactor has an action")
        elif action_parfactors and not covering_inputs <= action_parfactors[0][1]:
            out.append(
                f"clique {clique}: the action parfactor's inputs must cover all "
                f"member parfactor inputs"
            )
    return out


def min_degree_order(vertices: tuple[str, ...], scopes: list[tuple[str, ...]]) -> list[str]:
    """Min-degree elimination order for a cost network given function scopes."""
    order_index = {name: i for i, name in enumerate(vertices)}
    adj: dict[str, set[str]] = {v: set() for v in vertices}
    for scope in scopes:
        for a in scope:
            for b in scope:
                if a != b:
                    adj[a].add(b)
    out = []
    remaining = set(vertices)
    while remaining:
        v = min(remaining, key=lambda u: (len(adj[u] & remaining), order_index[u]))
        nbrs = adj[v] & remaining
        for a in nbrs:
            for b in nbrs:
                if a != b:
                    adj[a].add(b)
        remaining.remove(v)
        out.append(v)
    return out
