"""Probabilistic structural causal models.

A model holds exogenous variables with distributions, endogenous variables
with structural equations and one designated predictor (an endogenous
variable nothing else depends on). Models validate themselves on
construction, so a model object is always acyclic and fully resolved.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from . import rng
from .distributions import Distribution
from .errors import (CyclicModel, DivisionByZero, DuplicateDeclaration, IncompleteContext,
                     InterventionOnExogenous, InterventionOnUndeclared, InvalidParameter,
                     ModelError, PredictorReferenced, UndeclaredVariable)
from .expr import Constant, Expr, constants, evaluate_expr, references
from .graph import CausalDiagram

KEYWORDS = frozenset({"model", "exogenous", "endogenous", "predictor", "if", "then", "else"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


def check_identifier(name: str) -> str:
    if not isinstance(name, str) or not _IDENT.match(name) or name in KEYWORDS:
        raise ModelError(f"invalid variable name {name!r}", variable=str(name))
    return name


@dataclass(frozen=True)
class ProbabilisticCausalModel:
    label: str
    exogenous: Mapping[str, Distribution]
    endogenous: Mapping[str, Expr]
    predictor: str
    order: tuple[str, ...] = field(init=False, repr=False, compare=False)
    diagram: CausalDiagram = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        exo = dict(self.exogenous)
        endo = dict(self.endogenous)
        for name in (*exo, *endo):
            check_identifier(name)
        for name in exo.keys() & endo.keys():
            raise DuplicateDeclaration(f"{name} declared both exogenous and endogenous",
                                       variable=name)
        if self.predictor not in endo:
            raise ModelError(f"predictor {self.predictor!r} must be an endogenous variable",
                             variable=self.predictor)
        for name, dist in exo.items():
            if not isinstance(dist, Distribution):
                raise InvalidParameter(f"{name}: not a distribution: {dist!r}", variable=name)
        declared = exo.keys() | endo.keys()
        for name, eq in endo.items():
            refs = references(eq)
            for ref in sorted(refs - declared):
                raise UndeclaredVariable(f"{name} references undeclared variable {ref}",
                                         variable=name)
            if name in refs:
                raise CyclicModel([name, name], variable=name)
            if self.predictor in refs:
                raise PredictorReferenced(
                    f"{name} references the predictor {self.predictor}", variable=name)
            for c in constants(eq):
                if not math.isfinite(c):
                    raise InvalidParameter(f"{name}: non-finite constant {c!r}", variable=name)
        object.__setattr__(self, "exogenous", MappingProxyType(exo))
        object.__setattr__(self, "endogenous", MappingProxyType(endo))
        object.__setattr__(self, "diagram", build_diagram(self))
        topo = self.diagram.topological_order()
        object.__setattr__(self, "order", tuple(v for v in topo if v in endo))

    @property
    def variables(self) -> frozenset[str]:
        return frozenset(self.exogenous) | frozenset(self.endogenous)

    def is_exogenous(self, name: str) -> bool:
        return name in self.exogenous


def build_diagram(model: ProbabilisticCausalModel) -> CausalDiagram:
    """The causal diagram read off the structural equations.

    Raises:
        UndeclaredVariable: an equation references an unknown name.
        CyclicModel: the parent relation has a cycle (listed on the error).
    """
    vertices = frozenset(model.exogenous) | frozenset(model.endogenous)
    edges = set()
    for name, eq in model.endogenous.items():
        for ref in references(eq):
            if ref not in vertices:
                raise UndeclaredVariable(f"{name} references undeclared variable {ref}",
                                         variable=name)
            edges.add((ref, name))
    return CausalDiagram(vertices, frozenset(edges), model.predictor, frozenset(model.exogenous))


def evaluate_arrays(model: ProbabilisticCausalModel,
                    exogenous: Mapping[str, np.ndarray | float]) -> dict[str, np.ndarray]:
    """Propagate a batch of contexts; returns arrays for every variable."""
    missing = [u for u in model.exogenous if u not in exogenous]
    if missing:
        raise IncompleteContext(f"context is missing {', '.join(missing)}", variable=missing[0])
    unknown = [k for k in exogenous if k not in model.exogenous]
    if unknown:
        raise UndeclaredVariable(f"context assigns non-exogenous {unknown[0]}",
                                 variable=unknown[0])
    arrays = {u: np.atleast_1d(np.asarray(exogenous[u], dtype=float)) for u in model.exogenous}
    size = max((len(a) for a in arrays.values()), default=1)
    env = {u: np.broadcast_to(a, (size,)) for u, a in arrays.items()}
    for name in model.order:
        try:
            env[name] = np.broadcast_to(evaluate_expr(model.endogenous[name], env, size), (size,))
        except ZeroDivisionError:
            raise DivisionByZero(f"division by zero while evaluating {name}",
                                 variable=name) from None
    return env


def evaluate(model: ProbabilisticCausalModel, context: Mapping[str, float]) -> dict[str, float]:
    """Values of all endogenous variables under one context."""
    env = evaluate_arrays(model, {k: float(v) for k, v in context.items()})
    return {name: float(env[name][0]) for name in model.order}


def intervene(model: ProbabilisticCausalModel,
              assignments: Mapping[str, float]) -> ProbabilisticCausalModel:
    """A copy of ``model`` with each target's equation replaced by a constant."""
    if not assignments:
        raise ModelError("an intervention needs at least one target")
    endo = dict(model.endogenous)
    for name, value in assignments.items():
        if name in model.exogenous:
            raise InterventionOnExogenous(f"cannot intervene on exogenous {name}", variable=name)
        if name not in endo:
            raise InterventionOnUndeclared(f"cannot intervene on undeclared {name}",
                                           variable=name)
        value = float(value)
        if not math.isfinite(value):
            raise InvalidParameter(f"intervention value for {name} must be finite", variable=name)
        endo[name] = Constant(value)
    return ProbabilisticCausalModel(model.label, model.exogenous, endo, model.predictor)


def counterfactual(model: ProbabilisticCausalModel, context: Mapping[str, float],
                   assignments: Mapping[str, float], target: str) -> float:
    """Value ``target`` would take under ``context`` had ``assignments`` been forced."""
    if target not in model.endogenous:
        if target in model.exogenous:
            raise ModelError(f"counterfactual target {target} must be endogenous", variable=target)
        raise UndeclaredVariable(f"unknown counterfactual target {target}", variable=target)
    return evaluate(intervene(model, assignments), context)[target]


def descendants(diagram: CausalDiagram, roots) -> frozenset[str]:
    return diagram.descendants(roots)


def sample_contexts(model: ProbabilisticCausalModel, seed: int, start: int,
                    stop: int) -> dict[str, np.ndarray]:
    """Contexts for sample indices ``start..stop-1``; exogenous variable ``j`` (in
    declaration order) is drawn by inversion from uniform column ``j``."""
    u = rng.uniforms(seed, start, stop, len(model.exogenous))
    return {name: dist.ppf(u[:, j]) for j, (name, dist) in enumerate(model.exogenous.items())}


def sample_context(model: ProbabilisticCausalModel, seed: int, index: int) -> dict[str, float]:
    draws = sample_contexts(model, seed, index, index + 1)
    return {name: float(values[0]) for name, values in draws.items()}
