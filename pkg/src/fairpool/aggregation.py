"""Qualitative aggregation of expert causal diagrams under counterfactual fairness.

Two steps compose in either order:

* removal: delete every edge touching a protected attribute or a descendant of
  one (in any expert's graph); the predictor itself is always kept.
* pooling: judgment aggregation over edges, visiting candidate edges by their
  distance from the predictor and inserting an accepted edge only if the
  pooled graph stays acyclic.

The ordering makes the result depend on more than per-edge votes, which is
the relaxation that sidesteps the impossibility of an unbiased, acyclic,
non-dictatorial rule over an unrestricted domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (AggregationError, EmptyVotes, IncompletePartition,
                     MismatchedVertexSets, OverlappingPartition, PredictorInPartition,
                     UnknownVariable)
from .graph import CausalDiagram, Edge, has_path
from .scm import ProbabilisticCausalModel


class Rule(str, Enum):
    STRICT_MAJORITY = "strict-majority"
    INTERSECTION = "intersection"
    UNION = "union"


class Order(str, Enum):
    REMOVAL_POOLING = "removal-pooling"
    POOLING_REMOVAL = "pooling-removal"


@dataclass(frozen=True)
class TieBreak:
    """Ordering of candidate edges that share a depth.

    ``seed=None`` is lexicographic on ``(from, to)``; an integer seed shuffles
    each layer with a seeded generator instead.
    """

    seed: int | None = None

    @classmethod
    def parse(cls, text: str) -> "TieBreak":
        if text == "lexicographic":
            return cls()
        kind, sep, seed = text.partition(":")
        if kind == "random" and sep and seed.isdigit():
            return cls(int(seed))
        raise ValueError(f"tie-break must be 'lexicographic' or 'random:SEED', got {text!r}")

    def __str__(self) -> str:
        return "lexicographic" if self.seed is None else f"random:{self.seed}"


@dataclass(frozen=True)
class AggregationConfig:
    rule: Rule = Rule.STRICT_MAJORITY
    order: Order = Order.POOLING_REMOVAL
    tie_break: TieBreak = TieBreak()
    prune_isolated: bool = True

    def metadata(self) -> dict[str, str]:
        return {"rule": self.rule.value, "order": self.order.value,
                "tie_break": str(self.tie_break), "prune": str(self.prune_isolated).lower()}


@dataclass(frozen=True)
class FairnessSpec:
    """Partition of the non-predictor variables into protected attributes and features."""

    protected: frozenset[str]
    features: frozenset[str]
    predictor: str

    def __post_init__(self):
        object.__setattr__(self, "protected", frozenset(self.protected))
        object.__setattr__(self, "features", frozenset(self.features))
        overlap = self.protected & self.features
        if overlap:
            raise OverlappingPartition(
                f"listed as both protected and feature: {', '.join(sorted(overlap))}",
                variable=min(overlap))
        if self.predictor in self.protected | self.features:
            raise PredictorInPartition(f"predictor {self.predictor} may not be partitioned",
                                       variable=self.predictor)

    def check_covers(self, variables: Iterable[str]) -> None:
        """Require the partition to cover ``variables`` minus the predictor exactly."""
        variables = frozenset(variables)
        if self.predictor not in variables:
            raise UnknownVariable(f"unknown predictor {self.predictor}", variable=self.predictor)
        unknown = (self.protected | self.features) - variables
        if unknown:
            raise UnknownVariable(f"unknown variables: {', '.join(sorted(unknown))}",
                                  variable=min(unknown))
        missing = variables - self.protected - self.features - {self.predictor}
        if missing:
            raise IncompletePartition(f"not partitioned: {', '.join(sorted(missing))}",
                                      variable=min(missing))


@dataclass(frozen=True)
class EdgeJudgment:
    edge: Edge
    votes: tuple[bool, ...]


@dataclass(frozen=True)
class EdgeDecision:
    """What pooling did with one candidate edge."""

    judgment: EdgeJudgment
    depth: float
    accepted: bool
    reason: str  # "inserted", "rejected by rule" or "would create a cycle"

    @property
    def edge(self) -> Edge:
        return self.judgment.edge


@dataclass(frozen=True)
class PoolingResult:
    diagram: CausalDiagram
    decisions: tuple[EdgeDecision, ...]
    # depth layers holding more than one candidate, in the order they were visited
    tie_breaks: tuple[tuple[float, tuple[Edge, ...]], ...]


@dataclass(frozen=True)
class AggregationResult:
    diagram: CausalDiagram
    removed: frozenset[str]
    pruned: frozenset[str]
    pooling: PoolingResult
    config: AggregationConfig = field(default_factory=AggregationConfig)

    @property
    def rejected(self) -> list[EdgeDecision]:
        return [d for d in self.pooling.decisions if not d.accepted]


def aggregate_judgments(rule: Rule, votes: Sequence[bool]) -> bool:
    """Collective verdict on one edge from per-expert votes."""
    votes = [bool(v) for v in votes]
    if not votes:
        raise EmptyVotes("no votes to aggregate")
    rule = Rule(rule)
    if rule is Rule.STRICT_MAJORITY:
        return 2 * sum(votes) > len(votes)
    if rule is Rule.INTERSECTION:
        return all(votes)
    return any(votes)


def _diagrams(models) -> list[CausalDiagram]:
    diagrams = [m.diagram if isinstance(m, ProbabilisticCausalModel) else m for m in models]
    if not diagrams:
        raise AggregationError("at least one model is required")
    first = diagrams[0]
    for d in diagrams[1:]:
        if d.vertices != first.vertices:
            diff = sorted(d.vertices ^ first.vertices)
            raise MismatchedVertexSets(f"vertex sets differ on {', '.join(diff)}")
        if d.predictor != first.predictor:
            raise MismatchedVertexSets(
                f"predictors differ: {first.predictor} vs {d.predictor}")
    return diagrams


def unfair_vertices(models, protected: Iterable[str], predictor: str) -> frozenset[str]:
    """Protected attributes plus their descendants in any of the graphs, minus the predictor."""
    unfair: set[str] = set()
    for d in _diagrams(models):
        roots = frozenset(protected) & d.vertices
        unfair |= roots | d.descendants(roots)
    unfair.discard(predictor)
    return frozenset(unfair)


def removal(models, spec: FairnessSpec) -> list[CausalDiagram]:
    """Strip protected attributes and their descendants from every graph.

    The unfair set is pooled across graphs, so a variable removed from one
    expert's graph is removed from all of them. Removed vertices stay in the
    vertex set, annotated in ``removed``, with no incident edges.
    """
    diagrams = _diagrams(models)
    if spec.predictor not in diagrams[0].vertices:
        raise AggregationError(f"predictor {spec.predictor} is not a vertex")
    unfair = unfair_vertices(diagrams, spec.protected, spec.predictor)
    out = []
    for d in diagrams:
        edges = frozenset((a, b) for a, b in d.edges if a not in unfair and b not in unfair)
        out.append(replace(d, edges=edges, removed=d.removed | unfair))
    return out


def edge_depth_layers(diagram: CausalDiagram, predictor: str | None = None) -> dict[Edge, float]:
    """Distance of each edge from the predictor, ignoring edge direction.

    Edges touching the predictor have depth 1; depth ``d`` holds the edges
    touching a vertex first reached at depth ``d - 1``. Edges with no
    connection to the predictor get ``math.inf``.
    """
    predictor = diagram.predictor if predictor is None else predictor
    depth: dict[Edge, float] = {}
    if predictor is not None and predictor in diagram.vertices:
        incident: dict[str, list[Edge]] = {v: [] for v in diagram.vertices}
        for e in diagram.edges:
            incident[e[0]].append(e)
            incident[e[1]].append(e)
        seen = {predictor}
        frontier = [predictor]
        d = 0
        while frontier:
            d += 1
            reached = []
            for v in frontier:
                for e in incident[v]:
                    if e not in depth:
                        depth[e] = d
                        for w in e:
                            if w not in seen:
                                seen.add(w)
                                reached.append(w)
            frontier = reached
    for e in diagram.edges:
        depth.setdefault(e, math.inf)
    return depth


def pooling_trace(models, rule: Rule = Rule.STRICT_MAJORITY,
                  tie_break: TieBreak = TieBreak()) -> PoolingResult:
    """Pool the graphs and record every decision taken on the way.

    Each candidate edge is visited once, at its smallest depth over the
    experts; edges unconnected to the predictor in every graph come last.
    """
    diagrams = _diagrams(models)
    first = diagrams[0]
    depths = [edge_depth_layers(d, first.predictor) for d in diagrams]
    candidates: dict[Edge, float] = {}
    for layer in depths:
        for e, dep in layer.items():
            candidates[e] = min(dep, candidates.get(e, math.inf))

    layers: dict[float, list[Edge]] = {}
    for e, dep in candidates.items():
        layers.setdefault(dep, []).append(e)
    shuffle = np.random.default_rng(tie_break.seed) if tie_break.seed is not None else None

    children: dict[str, set[str]] = {v: set() for v in first.vertices}
    accepted: set[Edge] = set()
    decisions = []
    ties = []
    for dep in sorted(layers):
        ordered = sorted(layers[dep])
        if shuffle is not None:
            ordered = [ordered[i] for i in shuffle.permutation(len(ordered))]
        if len(ordered) > 1:
            ties.append((dep, tuple(ordered)))
        for a, b in ordered:
            votes = tuple((a, b) in d.edges for d in diagrams)
            judgment = EdgeJudgment((a, b), votes)
            if not aggregate_judgments(rule, votes):
                decisions.append(EdgeDecision(judgment, dep, False, "rejected by rule"))
            elif has_path(children, b, a):
                decisions.append(EdgeDecision(judgment, dep, False, "would create a cycle"))
            else:
                children[a].add(b)
                accepted.add((a, b))
                decisions.append(EdgeDecision(judgment, dep, True, "inserted"))

    exogenous = frozenset().union(*(d.exogenous for d in diagrams))
    removed = frozenset().union(*(d.removed for d in diagrams))
    pooled = CausalDiagram(first.vertices, frozenset(accepted), first.predictor, exogenous, removed)
    return PoolingResult(pooled, tuple(decisions), tuple(ties))


def pooling(models, rule: Rule = Rule.STRICT_MAJORITY,
            tie_break: TieBreak = TieBreak()) -> CausalDiagram:
    return pooling_trace(models, rule, tie_break).diagram


def prune_isolated(diagram: CausalDiagram) -> CausalDiagram:
    """Drop vertices with no directed path to the predictor."""
    keep = diagram.ancestors([diagram.predictor]) | {diagram.predictor}
    edges = frozenset((a, b) for a, b in diagram.edges if a in keep and b in keep)
    return replace(diagram, vertices=keep, edges=edges, exogenous=diagram.exogenous & keep)


def is_structurally_fair(diagram: CausalDiagram, protected: Iterable[str],
                         predictor: str | None = None) -> bool:
    """True when the predictor's inputs avoid protected attributes and their
    descendants, and no protected attribute is an ancestor of the predictor."""
    predictor = diagram.predictor if predictor is None else predictor
    if predictor not in diagram.vertices:
        return True
    roots = frozenset(protected) & diagram.vertices
    tainted = roots | diagram.descendants(roots)
    if tainted & set(diagram.parents(predictor)):
        return False
    return not (roots & diagram.ancestors([predictor]))


def aggregate(models, spec: FairnessSpec,
              config: AggregationConfig = AggregationConfig()) -> AggregationResult:
    """Run removal and pooling in the configured order and check the result."""
    diagrams = _diagrams(models)
    if config.order is Order.REMOVAL_POOLING:
        stripped = removal(diagrams, spec)
        trace = pooling_trace(stripped, config.rule, config.tie_break)
        fair = trace.diagram
        removed = stripped[0].removed
    else:
        trace = pooling_trace(diagrams, config.rule, config.tie_break)
        fair = removal([trace.diagram], spec)[0]
        removed = fair.removed
    pruned: frozenset[str] = frozenset()
    if config.order is Order.POOLING_REMOVAL and config.prune_isolated:
        before = fair.vertices
        fair = prune_isolated(fair)
        pruned = before - fair.vertices - removed
    if not is_structurally_fair(fair, spec.protected, spec.predictor):
        raise AggregationError("aggregated graph violates the fairness condition")
    return AggregationResult(fair, removed, pruned, trace, config)


def removal_pooling(models, spec: FairnessSpec,
                    config: AggregationConfig = AggregationConfig()) -> CausalDiagram:
    return aggregate(models, spec, replace(config, order=Order.REMOVAL_POOLING)).diagram


def pooling_removal(models, spec: FairnessSpec,
                    config: AggregationConfig = AggregationConfig()) -> CausalDiagram:
    return aggregate(models, spec, replace(config, order=Order.POOLING_REMOVAL)).diagram

