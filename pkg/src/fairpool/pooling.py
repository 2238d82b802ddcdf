"""Opinion pooling of per-expert predictor distributions."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import EmptyInput, GridMismatch, NonpositiveBandwidth, PoolingError, TooFewSamples
from .montecarlo import PredictorDistribution, kde, kde_density, silverman_bandwidth

GRID = 512


class PoolingKind(str, Enum):
    ARITHMETIC_MIXTURE = "arithmetic-mixture"
    GEOMETRIC_POOL = "geometric-pool"
    MEAN_OF_EXPECTATIONS = "mean-of-expectations"


@dataclass(frozen=True)
class PoolingOperator:
    kind: PoolingKind = PoolingKind.MEAN_OF_EXPECTATIONS
    weights: tuple[float, ...] | None = None  # None means uniform

    def __post_init__(self):
        object.__setattr__(self, "kind", PoolingKind(self.kind))
        if self.weights is not None:
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def resolve(self, count: int) -> tuple[float, ...]:
        return check_weights(self.weights, count)


def check_weights(weights, count: int) -> tuple[float, ...]:
    if count < 1:
        raise EmptyInput("nothing to pool")
    if weights is None:
        return (1.0 / count,) * count
    weights = tuple(float(w) for w in weights)
    if len(weights) != count:
        raise PoolingError(f"{len(weights)} weights for {count} experts")
    if any(not math.isfinite(w) or w < 0 for w in weights):
        raise PoolingError("weights must be finite and nonnegative")
    if abs(math.fsum(weights) - 1.0) > 1e-9:
        raise PoolingError(f"weights sum to {math.fsum(weights)!r}, not 1")
    return weights


def mean_of_expectations(dists: Sequence[PredictorDistribution], weights=None) -> float:
    weights = check_weights(weights, len(dists))
    return math.fsum(w * d.mean for w, d in zip(weights, dists))


def _mixture(dists, weights) -> PredictorDistribution:
    """Stratified mixture: expert ``i`` contributes ``round(w_i * n)`` samples.

    Experts take disjoint index segments, so experts run under a shared seed
    never contribute draws from the same contexts.
    """
    active = [i for i, w in enumerate(weights) if w > 0]
    n = min(dists[i].n for i in active)
    counts = [round(weights[i] * n) if i in active else 0 for i in range(len(dists))]
    counts[max(active, key=lambda i: (weights[i], -i))] += n - sum(counts)
    parts, offset = [], 0
    for d, k in zip(dists, counts):
        if k <= 0:
            continue
        start = offset % max(d.n - k + 1, 1)
        parts.append(d.samples[start:start + k])
        offset += k
    seeds = {d.seed for i, d in enumerate(dists) if i in active}
    return PredictorDistribution(np.concatenate(parts), seeds.pop() if len(seeds) == 1 else None)


def _distinct_active(dists, weights) -> list[int]:
    distinct: list[int] = []
    for i, w in enumerate(weights):
        if w > 0 and not any(np.array_equal(dists[i].samples, dists[j].samples) for j in distinct):
            distinct.append(i)
    return distinct


def _geometric(dists, weights, grid: int) -> PredictorDistribution:
    """Pointwise ``prod p_i(x) ** w_i`` over KDE curves, renormalized on a shared grid.

    The pooled samples are deterministic quantiles ``(k + 0.5) / n`` of the
    pooled density, so the result is reproducible without an RNG.
    """
    distinct = _distinct_active(dists, weights)
    if len(distinct) == 1:
        # p ** (sum of weights) == p: the pool is that expert's own density
        only = dists[distinct[0]]
        try:
            curve = kde(only.samples, grid=grid)
        except (NonpositiveBandwidth, TooFewSamples):
            return PredictorDistribution(only.samples, only.seed)  # a point mass has no curve
        return PredictorDistribution(only.samples, only.seed, curve=(curve.x, curve.density))
    active = [i for i, w in enumerate(weights) if w > 0]
    bands = {i: silverman_bandwidth(dists[i].samples) for i in active}
    for i, h in bands.items():
        if not (math.isfinite(h) and h > 0):
            raise GridMismatch(f"expert {i} has a degenerate sample set; no density to pool")
    lo = max(dists[i].samples.min() - 3 * bands[i] for i in active)
    hi = min(dists[i].samples.max() + 3 * bands[i] for i in active)
    if lo >= hi:
        raise GridMismatch("expert densities have disjoint supports")
    x = np.linspace(lo, hi, grid)
    log_p = np.zeros(grid)
    with np.errstate(divide="ignore"):
        for i in active:
            log_p += weights[i] * np.log(kde_density(dists[i].samples, bands[i], x))
    if not np.isfinite(log_p).any():
        raise GridMismatch("pooled density vanishes on the shared grid")
    density = np.exp(log_p - log_p[np.isfinite(log_p)].max())
    density /= np.trapezoid(density, x)
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(x))])
    cdf /= cdf[-1]
    n = min(dists[i].n for i in active)
    samples = np.interp((np.arange(n) + 0.5) / n, cdf, x)
    return PredictorDistribution(samples, None, curve=(x, density))


def pool_samples(op: PoolingOperator, dists: Sequence[PredictorDistribution],
                 grid: int = GRID) -> PredictorDistribution:
    """Merge expert distributions into one.

    ``MeanOfExpectations`` collapses to a single-sample distribution holding
    the pooled mean.
    """
    dists = list(dists)
    weights = op.resolve(len(dists))
    if op.kind is PoolingKind.ARITHMETIC_MIXTURE:
        return _mixture(dists, weights)
    if op.kind is PoolingKind.GEOMETRIC_POOL:
        return _geometric(dists, weights, grid)
    return PredictorDistribution(np.array([mean_of_expectations(dists, weights)]), None)


def is_multimodal(dist: PredictorDistribution, grid: int = GRID) -> bool:
    if dist.n < 2 or dist.variance == 0:
        return False
    return len(kde(dist.samples, grid=grid).modes()) > 1


def decision_report(dists: Sequence[PredictorDistribution], op: PoolingOperator,
                    evidence_label: str, labels: Sequence[str] | None = None,
                    metadata: dict | None = None) -> dict:
    """Audit trail for one scored candidate: per-expert moments and the pooled value.

    Each expert carries a ``multimodal`` flag because a single expected value
    summarizes a multimodal score distribution poorly.
    """
    dists = list(dists)
    weights = op.resolve(len(dists))
    labels = list(labels) if labels is not None else [f"expert{i + 1}" for i in range(len(dists))]
    pooled = pool_samples(op, dists)
    experts = [{
        "model": label, "mean": d.mean, "variance": d.variance,
        "std_err": d.standard_error, "n": d.n, "seed": d.seed,
        "multimodal": is_multimodal(d),
    } for label, d in zip(labels, dists)]
    report = {
        "candidate": evidence_label,
        "operator": op.kind.value,
        "weights": list(weights),
        "experts": experts,
        "pooled": pooled.mean,
        "pooled_variance": pooled.variance,
    }
    if metadata:
        report["metadata"] = dict(metadata)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"
