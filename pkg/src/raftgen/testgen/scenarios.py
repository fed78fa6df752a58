"""Inter-rule links over behavioural keys and the scenarios they form."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import networkx as nx

from ..trl import AtomicClause, Comparator, Rule, RuleSet, atoms, base_key, value_text

LINK_KEYS = ("Status", "Action")


@dataclass(frozen=True)
class Link:
    producer: int
    consumer: int
    key: str
    value: str


@dataclass(frozen=True)
class Scenario:
    id: int
    member_rules: tuple[int, ...]
    links: tuple[Link, ...] = ()
    cyclic: bool = False

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "member_rules": list(self.member_rules),
            "links": [[l.producer, l.consumer, l.key, l.value] for l in self.links],
            "cyclic": self.cyclic,
        }


def _facts(clauses: Iterable[AtomicClause], key: str) -> set[str]:
    return {
        value_text(a.value)
        for a in clauses
        if base_key(a.key) == key and a.comparator is Comparator.EQ and a.modulus is None
    }


def rule_links(rules: RuleSet | Iterable[Rule]) -> list[Link]:
    """Producer/consumer pairs sharing a Status or Action value.

    A rule produces the Status and Action values stated in its outcome; a
    rule consumes the ones its condition requires.  Actions merely shared
    between two conditions do not link rules, otherwise a common verb such
    as ``Submit`` would fuse an entire rulebook into one scenario.
    """
    rules = list(rules)
    links = []
    for a in rules:
        produced = {key: _facts(atoms(a.outcome), key) for key in LINK_KEYS}
        for b in rules:
            if a.id == b.id:
                continue
            needed = atoms(b.condition)
            for key in LINK_KEYS:
                for value in sorted(produced[key] & _facts(needed, key)):
                    links.append(Link(a.id, b.id, key, value))
    return links


def build_scenarios(rules: RuleSet | Iterable[Rule]) -> list[Scenario]:
    """Weakly connected components of the link graph, in document order.

    Members of an acyclic component are listed in topological order (ties
    by document position); a cyclic component keeps document order and is
    flagged.
    """
    rules = list(rules)
    position = {r.id: i for i, r in enumerate(rules)}
    graph = nx.DiGraph()
    graph.add_nodes_from(position)
    links = rule_links(rules)
    for link in links:
        graph.add_edge(link.producer, link.consumer)
    components = sorted(nx.weakly_connected_components(graph), key=lambda c: min(position[n] for n in c))
    out = []
    for sid, comp in enumerate(components, 1):
        sub = graph.subgraph(comp)
        cyclic = not nx.is_directed_acyclic_graph(sub)
        if cyclic:
            members = sorted(comp, key=position.__getitem__)
        else:
            members = list(nx.lexicographical_topological_sort(sub, key=position.__getitem__))
        mine = tuple(l for l in links if l.producer in comp)
        out.append(Scenario(sid, tuple(members), mine, cyclic))
    return out


def scenario_of(scenarios: Iterable[Scenario]) -> dict[int, int]:
    return {rid: s.id for s in scenarios for rid in s.member_rules}
