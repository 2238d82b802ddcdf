"""Line-oriented formats for encoding tables, evidence and fairness specs.

Encoding table (``.enc``)::

    Gnd.F = 1
    Gnd.M = 0

Evidence (``.evd``), one record per line, optional ``LABEL:`` prefix::

    App1: Age=22; Gnd=F; Dpt=ComputerScience; Mrk=0.8; Job=True; Cvr=0.4

Fairness spec (``.fair``)::

    protected = Gnd
    features = Age, Dpt, Mrk, Job, Cvr
    exogenous = features      # every exogenous variable is a feature
    predictor = Y

``#`` comments and blank lines are ignored everywhere.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .aggregation import FairnessSpec
from .errors import (DuplicateDeclaration, EvidenceError, FairnessSpecError, FairpoolError,
                     ModelSyntaxError, UnknownToken, UnknownVariable)
from .scm import ProbabilisticCausalModel

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")


def _content_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, raw, line


def _column(raw: str, fragment: str) -> int:
    return max(raw.find(fragment), 0) + 1


def _number(token: str) -> float | None:
    if _NUMBER.match(token):
        value = float(token)
        if math.isfinite(value):
            return value
    return None


@dataclass(frozen=True)
class EncodingTable:
    """Per-variable map from named tokens (``F``, ``True``...) to numbers."""

    tables: Mapping[str, Mapping[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        frozen = {}
        for var, table in self.tables.items():
            for token, value in table.items():
                if not math.isfinite(float(value)):
                    raise EvidenceError(f"{var}.{token}: value must be finite", variable=var)
            frozen[var] = MappingProxyType({t: float(v) for t, v in table.items()})
        object.__setattr__(self, "tables", MappingProxyType(frozen))

    def resolve(self, variable: str, token: str) -> float:
        token = token.strip()
        table = self.tables.get(variable, {})
        if token in table:
            return table[token]
        value = _number(token)
        if value is None:
            raise UnknownToken(f"no encoding for {variable}={token}", variable=variable)
        return value

    def token_for(self, variable: str, value: float) -> str | None:
        for token, v in self.tables.get(variable, {}).items():
            if v == value:
                return token
        return None


def parse_encoding(text: str) -> EncodingTable:
    tables: dict[str, dict[str, float]] = {}
    for lineno, raw, line in _content_lines(text):
        key, sep, value = line.rpartition("=")
        var, dot, token = key.strip().partition(".")
        var, token = var.strip(), token.strip()
        number = _number(value.strip())
        if not sep or not dot or not var or not token or number is None:
            raise ModelSyntaxError(f"expected 'VARIABLE.TOKEN = NUMBER', got {line!r}",
                                   line=lineno, column=1)
        table = tables.setdefault(var, {})
        if token in table:
            raise DuplicateDeclaration(f"token {token} encoded twice for {var}", variable=var,
                                       line=lineno, column=_column(raw, token))
        table[token] = number
    return EncodingTable(tables)


def format_encoding(table: EncodingTable) -> str:
    lines = [f"{var}.{token} = {value!r}"
             for var in sorted(table.tables) for token, value in table.tables[var].items()]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class EvidenceRecord:
    label: str
    values: Mapping[str, str]
    resolved: Mapping[str, float]

    def with_value(self, variable: str, value: float) -> "EvidenceRecord":
        resolved = dict(self.resolved)
        resolved[variable] = float(value)
        values = dict(self.values)
        values[variable] = repr(float(value))
        return EvidenceRecord(self.label, values, resolved)


def parse_evidence(text: str, encoding: EncodingTable | None = None,
                   variables: Iterable[str] | None = None,
                   resolve: bool = True) -> list[EvidenceRecord]:
    """Parse evidence records and resolve their tokens through ``encoding``.

    With ``resolve=False`` only the syntax is checked and tokens that do not
    resolve are left out of ``resolved``.

    Raises:
        UnknownToken: a value is neither numeric nor in the encoding table.
        UnknownVariable: a key is not in ``variables`` (when given).
    """
    encoding = encoding or EncodingTable()
    known = frozenset(variables) if variables is not None else None
    records = []
    for lineno, raw, line in _content_lines(text):
        label = f"record{len(records) + 1}"
        head, colon, rest = line.partition(":")
        if colon and "=" not in head:
            label, line = head.strip(), rest
        values: dict[str, str] = {}
        resolved: dict[str, float] = {}
        for item in line.split(";"):
            item = item.strip()
            if not item:
                continue
            key, sep, token = item.partition("=")
            key, token = key.strip(), token.strip()
            column = _column(raw, item)
            if not sep or not key or not token:
                raise ModelSyntaxError(f"expected 'VARIABLE=VALUE', got {item!r}",
                                       line=lineno, column=column)
            if key in values:
                raise DuplicateDeclaration(f"{key} given twice in record {label}",
                                           variable=key, line=lineno, column=column)
            if known is not None and key not in known:
                raise UnknownVariable(f"unknown variable {key} in record {label}",
                                      variable=key, line=lineno, column=column)
            try:
                resolved[key] = encoding.resolve(key, token)
            except UnknownToken as exc:
                if resolve:
                    raise exc.located(lineno, column)
            except FairpoolError as exc:
                raise exc.located(lineno, column)
            values[key] = token
        records.append(EvidenceRecord(label, MappingProxyType(values), MappingProxyType(resolved)))
    return records


def _names(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def parse_fairness_spec(text: str,
                        models: Iterable[ProbabilisticCausalModel] = ()) -> FairnessSpec:
    """Parse a fairness spec; with ``models``, expand the ``exogenous`` directive
    and require the partition to cover every model's variables exactly once."""
    models = list(models)
    fields: dict[str, tuple[str, int]] = {}
    for lineno, raw, line in _content_lines(text):
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in ("protected", "features", "exogenous", "predictor"):
            raise ModelSyntaxError(f"expected 'protected|features|exogenous|predictor = ...', "
                                   f"got {line!r}", line=lineno, column=1)
        if key in fields:
            raise DuplicateDeclaration(f"{key} given twice", line=lineno, column=1)
        fields[key] = (value.strip(), lineno)
    if "predictor" not in fields:
        raise FairnessSpecError("fairness spec names no predictor", line=1, column=1)
    predictor = fields["predictor"][0]
    protected = _names(fields.get("protected", ("", 0))[0])
    features = _names(fields.get("features", ("", 0))[0])
    for group in (protected, features):
        dup = {v for v in group if group.count(v) > 1}
        if dup:
            raise DuplicateDeclaration(f"listed twice: {', '.join(sorted(dup))}",
                                       variable=min(dup))
    if "exogenous" in fields:
        target, lineno = fields["exogenous"]
        if target not in ("features", "protected"):
            raise ModelSyntaxError("exogenous must be 'features' or 'protected'",
                                   line=lineno, column=1)
        listed = set(protected) | set(features)
        extra = sorted({u for m in models for u in m.exogenous} - listed)
        (features if target == "features" else protected).extend(extra)
    spec = FairnessSpec(frozenset(protected), frozenset(features), predictor)
    for model in models:
        spec.check_covers(model.variables)
        if model.predictor != predictor:
            raise FairnessSpecError(
                f"model {model.label!r} predicts {model.predictor}, spec says {predictor}",
                variable=predictor)
    return spec


def format_fairness_spec(spec: FairnessSpec) -> str:
    return (f"protected = {', '.join(sorted(spec.protected))}\n"
            f"features = {', '.join(sorted(spec.features))}\n"
            f"predictor = {spec.predictor}\n")
