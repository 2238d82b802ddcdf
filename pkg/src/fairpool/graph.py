"""Causal diagrams: immutable DAGs over variable names, plus the ``.dag`` text format."""

from __future__ import annotations

import graphlib
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import CyclicModel, ModelError, ModelSyntaxError, UnknownVertex

Edge = tuple[str, str]


def _find_cycle(vertices: Iterable[str], edges: Iterable[Edge]) -> list[str] | None:
    preds: dict[str, set[str]] = {v: set() for v in vertices}
    for a, b in edges:
        preds[b].add(a)
    try:
        tuple(graphlib.TopologicalSorter(preds).static_order())
    except graphlib.CycleError as exc:
        # first == last; consecutive entries follow edge direction
        return list(exc.args[1])
    return None


@dataclass(frozen=True)
class CausalDiagram:
    """A directed acyclic graph over variables.

    ``removed`` annotates vertices deleted by the fairness removal step; they
    keep no incident edges. ``exogenous`` names the vertices that may not have
    incoming edges.
    """

    vertices: frozenset[str]
    edges: frozenset[Edge]
    predictor: str | None = None
    exogenous: frozenset[str] = frozenset()
    removed: frozenset[str] = frozenset()
    _children: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)
    _parents: Mapping[str, tuple[str, ...]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vertices = frozenset(self.vertices)
        edges = frozenset((str(a), str(b)) for a, b in self.edges)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "exogenous", frozenset(self.exogenous))
        object.__setattr__(self, "removed", frozenset(self.removed))
        for a, b in edges:
            for v in (a, b):
                if v not in vertices:
                    raise UnknownVertex(f"edge {a} -> {b} uses unknown vertex {v}", variable=v)
            if b in self.exogenous:
                raise ModelError(f"edge {a} -> {b} points into exogenous vertex {b}", variable=b)
        if self.predictor is not None and self.predictor not in vertices:
            raise UnknownVertex(f"predictor {self.predictor} is not a vertex", variable=self.predictor)
        cycle = _find_cycle(vertices, edges)
        if cycle is not None:
            raise CyclicModel(cycle, variable=cycle[0])
        children: dict[str, list[str]] = {v: [] for v in vertices}
        parents: dict[str, list[str]] = {v: [] for v in vertices}
        for a, b in sorted(edges):
            children[a].append(b)
            parents[b].append(a)
        object.__setattr__(self, "_children", {v: tuple(c) for v, c in children.items()})
        object.__setattr__(self, "_parents", {v: tuple(p) for v, p in parents.items()})

    def parents(self, v: str) -> tuple[str, ...]:
        return self._parents[v]

    def children(self, v: str) -> tuple[str, ...]:
        return self._children[v]

    def _reach(self, roots: Iterable[str], step) -> frozenset[str]:
        roots = list(roots)
        for r in roots:
            if r not in self.vertices:
                raise UnknownVertex(f"unknown vertex {r}", variable=r)
        seen: set[str] = set()
        queue = deque(roots)
        while queue:
            for w in step(queue.popleft()):
                if w not in seen:
                    seen.add(w)
                    queue.append(w)
        return frozenset(seen)

    def descendants(self, roots: Iterable[str]) -> frozenset[str]:
        """Vertices reachable from any root through at least one edge."""
        return self._reach(roots, self.children)

    def ancestors(self, targets: Iterable[str]) -> frozenset[str]:
        """Vertices with a directed path of length >= 1 into any target."""
        return self._reach(targets, self.parents)

    def topological_order(self) -> list[str]:
        preds = {v: set(self._parents[v]) for v in sorted(self.vertices)}
        return list(graphlib.TopologicalSorter(preds).static_order())

    def with_edges(self, edges: Iterable[Edge]) -> "CausalDiagram":
        return replace(self, edges=frozenset(edges))


def descendants(diagram: CausalDiagram, roots: Iterable[str]) -> frozenset[str]:
    return diagram.descendants(roots)


def has_path(children: Mapping[str, Iterable[str]], source: str, target: str) -> bool:
    """Directed reachability over an adjacency mapping (``source == target`` counts)."""
    seen = {source}
    stack = [source]
    while stack:
        v = stack.pop()
        if v == target:
            return True
        for w in children.get(v, ()):
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return False


# -- .dag text format -------------------------------------------------------

def format_dag(diagram: CausalDiagram, metadata: Mapping[str, object] | None = None) -> str:
    """Serialise a diagram deterministically.

    Layout: ``# key=value`` metadata lines, then ``predictor``, ``vertices``,
    ``exogenous`` and ``removed`` headers (space-separated, sorted), then one
    ``edge FROM -> TO`` line per edge in sorted order.
    """
    lines = []
    for key in sorted(metadata or {}):
        lines.append(f"# {key}={metadata[key]}")
    if diagram.predictor is not None:
        lines.append(f"predictor {diagram.predictor}")
    lines.append(" ".join(["vertices", *sorted(diagram.vertices)]))
    lines.append(" ".join(["exogenous", *sorted(diagram.exogenous & diagram.vertices)]))
    lines.append(" ".join(["removed", *sorted(diagram.removed)]))
    lines.extend(f"edge {a} -> {b}" for a, b in sorted(diagram.edges))
    return "\n".join(lines) + "\n"


def parse_dag(text: str) -> tuple[CausalDiagram, dict[str, str]]:
    """Inverse of :func:`format_dag`; returns the diagram and its metadata."""
    metadata: dict[str, str] = {}
    predictor = None
    vertices: list[str] = []
    exogenous: list[str] = []
    removed: list[str] = []
    edges: list[Edge] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            key, sep, value = line[1:].strip().partition("=")
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        head, *rest = line.split()
        if head == "predictor" and len(rest) == 1:
            predictor = rest[0]
        elif head == "vertices":
            vertices.extend(rest)
        elif head == "exogenous":
            exogenous.extend(rest)
        elif head == "removed":
            removed.extend(rest)
        elif head == "edge" and len(rest) == 3 and rest[1] == "->":
            edges.append((rest[0], rest[2]))
        else:
            raise ModelSyntaxError(f"unrecognised .dag line {line!r}", line=lineno, column=1)
    diagram = CausalDiagram(frozenset(vertices), frozenset(edges), predictor,
                            frozenset(exogenous), frozenset(removed))
    return diagram, metadata
