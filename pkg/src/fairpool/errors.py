"""Exception hierarchy.

Every domain error derives from :class:`FairpoolError` (itself a ``ValueError``).
Errors raised while parsing text carry a 1-based ``line``/``column``; errors
about a specific variable carry its name in ``variable``.
"""

from __future__ import annotations


class FairpoolError(ValueError):
    def __init__(self, message: str, *, variable: str | None = None,
                 line: int | None = None, column: int | None = None) -> None:
        super().__init__(message)
        self.message = message
        self.variable = variable
        self.line = line
        self.column = column

    def located(self, line: int, column: int) -> "FairpoolError":
        """Attach a source location (only if none is set yet) and return self."""
        if self.line is None:
            self.line, self.column = line, column
        return self

    def __str__(self) -> str:
        if self.line is not None:
            return f"{self.line}:{self.column}: {self.message}"
        return self.message


# -- models -----------------------------------------------------------------

class ModelError(FairpoolError):
    pass


class ModelSyntaxError(ModelError):
    pass


class UndeclaredVariable(ModelError):
    pass


class DuplicateDeclaration(ModelError):
    pass


class InvalidParameter(ModelError):
    pass


class CyclicModel(ModelError):
    def __init__(self, cycle, **kwargs) -> None:
        self.cycle = list(cycle)
        super().__init__("cycle: " + " -> ".join(self.cycle), **kwargs)


class PredictorReferenced(ModelError):
    pass


class IncompleteContext(ModelError):
    pass


class DivisionByZero(ModelError):
    pass


class InterventionOnExogenous(ModelError):
    pass


class InterventionOnUndeclared(ModelError):
    pass


class UnknownVertex(ModelError):
    pass


# -- evidence and fairness specs --------------------------------------------

class EvidenceError(FairpoolError):
    pass


class UnknownToken(EvidenceError):
    pass


class UnknownVariable(EvidenceError):
    pass


class MissingEvidence(EvidenceError):
    pass


class FairnessSpecError(FairpoolError):
    pass


class OverlappingPartition(FairnessSpecError):
    pass


class IncompletePartition(FairnessSpecError):
    pass


class PredictorInPartition(FairnessSpecError):
    pass


# -- aggregation, sampling, pooling -----------------------------------------

class AggregationError(FairpoolError):
    pass


class EmptyVotes(AggregationError):
    pass


class MismatchedVertexSets(AggregationError):
    pass


class SamplingError(FairpoolError):
    pass


class ZeroSamples(SamplingError):
    pass


class InfiniteSupport(SamplingError):
    pass


class TooFewSamples(SamplingError):
    pass


class NonpositiveBandwidth(SamplingError):
    pass


class PoolingError(FairpoolError):
    pass


class EmptyInput(PoolingError):
    pass


class GridMismatch(PoolingError):
    pass
