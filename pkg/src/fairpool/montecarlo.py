"""Monte Carlo estimation of fair predictor distributions.

For each expert model the fair features (vertices kept in the pooled fair
graph) are clamped to the applicant's values by intervention, and everything
else is integrated out by sampling contexts. Clamping rather than
conditioning means the sampled predictor values never read protected or
unfair evidence, so two applicants who agree on the fair features get
bit-identical sample vectors under the same seed.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy.special import ndtr

from .errors import (InfiniteSupport, MissingEvidence, NonpositiveBandwidth, TooFewSamples,
                     ZeroSamples)
from .graph import CausalDiagram
from .scm import ProbabilisticCausalModel, evaluate_arrays, intervene, sample_contexts

DEFAULT_SAMPLES = 100_000
DEFAULT_ABS_TOL = 0.02
Z_CRIT = 3.0
CHUNK = 1 << 16


@dataclass(frozen=True)
class FairFeatureSet:
    fair: frozenset[str]
    unfair: frozenset[str]
    predictor: str

    def __post_init__(self):
        object.__setattr__(self, "fair", frozenset(self.fair))
        object.__setattr__(self, "unfair", frozenset(self.unfair))
        if self.fair & self.unfair:
            raise ValueError("fair and unfair features overlap")
        if self.predictor in self.fair | self.unfair:
            raise ValueError("the predictor is neither fair nor unfair")

    @classmethod
    def from_diagram(cls, diagram: CausalDiagram,
                     model: ProbabilisticCausalModel) -> "FairFeatureSet":
        """Fair = vertices retained in the fair graph; unfair = every other variable."""
        fair = (diagram.vertices - diagram.removed - {model.predictor}) & model.variables
        return cls(fair, model.variables - fair - {model.predictor}, model.predictor)

    @classmethod
    def all_parents(cls, model: ProbabilisticCausalModel) -> "FairFeatureSet":
        fair = frozenset(model.diagram.parents(model.predictor))
        return cls(fair, model.variables - fair - {model.predictor}, model.predictor)


@dataclass(frozen=True)
class PredictorDistribution:
    samples: np.ndarray
    seed: int | None
    n: int = field(init=False)
    mean: float = field(init=False)
    variance: float = field(init=False)
    standard_error: float = field(init=False)
    # (x, density) arrays when the distribution was built from a density curve
    curve: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=float)
        samples.setflags(write=False)
        n = len(samples)
        if n == 0:
            raise ZeroSamples("a predictor distribution needs at least one sample")
        mean = float(np.mean(samples))
        variance = float(np.var(samples, ddof=1)) if n > 1 else 0.0
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "variance", variance)
        object.__setattr__(self, "standard_error", math.sqrt(variance / n))


def _missing(needed: Iterable[str], evidence: Mapping[str, float]) -> list[str]:
    return sorted(v for v in needed if v not in evidence)


def predict_full_evidence(model: ProbabilisticCausalModel, evidence: Mapping[str, float]) -> float:
    """The predictor's equation evaluated with every parent clamped to the evidence."""
    evidence = getattr(evidence, "resolved", evidence)
    parents = model.diagram.parents(model.predictor)
    missing = _missing(parents, evidence)
    if missing:
        raise MissingEvidence(f"evidence lacks {', '.join(missing)}", variable=missing[0])
    clamped = {p: evidence[p] for p in parents if p in model.endogenous}
    exo = {u: (evidence[u] if u in parents else 0.0) for u in model.exogenous}
    target = intervene(model, clamped) if clamped else model
    return float(evaluate_arrays(target, exo)[model.predictor][0])


def _clamped_model(model, fair_set: FairFeatureSet, evidence) -> ProbabilisticCausalModel:
    evidence = getattr(evidence, "resolved", evidence)
    fair_endo = sorted(v for v in fair_set.fair if v in model.endogenous)
    missing = _missing(fair_endo, evidence)
    if missing:
        raise MissingEvidence(f"evidence lacks fair feature {', '.join(missing)}",
                              variable=missing[0])
    if not fair_endo:
        return model
    return intervene(model, {v: evidence[v] for v in fair_endo})


def fair_predict(model: ProbabilisticCausalModel, fair_set: FairFeatureSet, evidence,
                 n: int = DEFAULT_SAMPLES, seed: int = 0, start: int = 0) -> PredictorDistribution:
    """Sample the predictor with fair features clamped and the rest integrated out.

    Sample ``k`` uses the context drawn for index ``start + k`` under ``seed``;
    evidence for protected or unfair variables is never read.
    """
    if n < 1:
        raise ZeroSamples(f"need at least one sample, got n={n}")
    clamped = _clamped_model(model, fair_set, evidence)
    out = np.empty(n)
    for lo in range(0, n, CHUNK):
        hi = min(n, lo + CHUNK)
        contexts = sample_contexts(clamped, seed, start + lo, start + hi)
        out[lo:hi] = evaluate_arrays(clamped, contexts)[model.predictor]
    return PredictorDistribution(out, seed)


def exact_fair_distribution(model: ProbabilisticCausalModel, fair_set: FairFeatureSet,
                            evidence) -> dict[float, float]:
    """Exact pmf of the clamped predictor by enumerating every relevant context.

    Only exogenous ancestors of the predictor (after clamping) are enumerated;
    each must have finite support.
    """
    clamped = _clamped_model(model, fair_set, evidence)
    relevant = [u for u in clamped.exogenous
                if u in clamped.diagram.ancestors([clamped.predictor])]
    supports = []
    for u in relevant:
        support = clamped.exogenous[u].support()
        if support is None:
            raise InfiniteSupport(f"{u} ~ {clamped.exogenous[u].family} has infinite support",
                                  variable=u)
        supports.append(support)
    combos = list(itertools.product(*(range(len(s[0])) for s in supports)))
    size = len(combos)
    exo = {u: np.zeros(size) for u in clamped.exogenous}
    weights = np.ones(size)
    index = np.array(combos, dtype=int).reshape(size, len(relevant))
    for j, u in enumerate(relevant):
        values, probs = supports[j]
        exo[u] = values[index[:, j]]
        weights = weights * probs[index[:, j]]
    ys = evaluate_arrays(clamped, exo)[clamped.predictor]
    pmf: dict[float, float] = {}
    for y, w in zip(ys.tolist(), weights.tolist()):
        if w > 0:
            pmf[y] = pmf.get(y, 0.0) + w
    return pmf


def empirical_pmf(samples: np.ndarray) -> dict[float, float]:
    values, counts = np.unique(np.asarray(samples), return_counts=True)
    return dict(zip(values.tolist(), (counts / counts.sum()).tolist()))


def total_variation(p: Mapping[float, float], q: Mapping[float, float]) -> float:
    return 0.5 * math.fsum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in set(p) | set(q))


@dataclass(frozen=True)
class FairnessReport:
    """Scores of one model for an applicant under protected values ``a`` and ``a_prime``."""

    model: str
    protected: str
    a: float
    a_prime: float
    fair_scores: tuple[float, float]
    fair_gap: float
    std_err: float
    fair_verdict: str
    unfair_scores: tuple[float, float]
    unfair_gap: float
    unfair_verdict: str
    abs_tol: float
    seed: int
    n: int

    @property
    def verdict(self) -> str:
        return self.fair_verdict

    def to_dict(self) -> dict:
        return {
            "model": self.model, "protected": self.protected, "a": self.a,
            "a_prime": self.a_prime, "fair_scores": list(self.fair_scores),
            "fair_gap": self.fair_gap, "unfair_scores": list(self.unfair_scores),
            "unfair_gap": self.unfair_gap, "std_err": self.std_err,
            "verdict": self.fair_verdict, "unfair_verdict": self.unfair_verdict,
            "abs_tol": self.abs_tol, "seed": self.seed, "n": self.n,
        }

    def to_json(self, **extra) -> str:
        return json.dumps({**self.to_dict(), **extra}, indent=2, sort_keys=True) + "\n"


def verdict(gap: float, abs_tol: float, std_err: float, z_crit: float = Z_CRIT) -> str:
    return "fair_within_tolerance" if gap <= max(abs_tol, z_crit * std_err) else "violation"


def check_counterfactual_fairness(model: ProbabilisticCausalModel, fair_set: FairFeatureSet,
                                  evidence, protected: str, values: tuple[float, float],
                                  n: int = DEFAULT_SAMPLES, seed: int = 0,
                                  abs_tol: float = DEFAULT_ABS_TOL,
                                  z_crit: float = Z_CRIT) -> FairnessReport:
    """Compare scores with ``protected`` set to each of ``values``.

    The fair path runs :func:`fair_predict` twice with the same seed; the
    unfair baseline runs :func:`predict_full_evidence` twice.
    """
    evidence = getattr(evidence, "resolved", evidence)
    a, a_prime = (float(v) for v in values)
    ev_a = {**evidence, protected: a}
    ev_b = {**evidence, protected: a_prime}
    dist_a = fair_predict(model, fair_set, ev_a, n, seed)
    dist_b = fair_predict(model, fair_set, ev_b, n, seed)
    fair_gap = abs(dist_a.mean - dist_b.mean)
    std_err = math.hypot(dist_a.standard_error, dist_b.standard_error)
    full_a = predict_full_evidence(model, ev_a)
    full_b = predict_full_evidence(model, ev_b)
    unfair_gap = abs(full_a - full_b)
    return FairnessReport(
        model=model.label, protected=protected, a=a, a_prime=a_prime,
        fair_scores=(dist_a.mean, dist_b.mean), fair_gap=fair_gap, std_err=std_err,
        fair_verdict=verdict(fair_gap, abs_tol, std_err, z_crit),
        unfair_scores=(full_a, full_b), unfair_gap=unfair_gap,
        unfair_verdict=verdict(unfair_gap, abs_tol, 0.0, z_crit),
        abs_tol=abs_tol, seed=seed, n=n)


def interventional_contrast(model: ProbabilisticCausalModel, protected: str,
                            values: tuple[float, float], n: int = DEFAULT_SAMPLES,
                            seed: int = 0) -> PredictorDistribution:
    """Per-context differences ``Y[do(A=a)](u) - Y[do(A=a')](u)`` over sampled contexts.

    A model whose predictor does not depend on ``protected`` yields all zeros;
    any nonzero entry is a context in which forcing the protected attribute
    changes the score.
    """
    a, a_prime = values
    m_a = intervene(model, {protected: a})
    m_b = intervene(model, {protected: a_prime})
    out = np.empty(n)
    for lo in range(0, n, CHUNK):
        hi = min(n, lo + CHUNK)
        contexts = sample_contexts(model, seed, lo, hi)
        out[lo:hi] = (evaluate_arrays(m_a, contexts)[model.predictor]
                      - evaluate_arrays(m_b, contexts)[model.predictor])
    return PredictorDistribution(out, seed)


# -- kernel density estimation ----------------------------------------------

def silverman_bandwidth(samples: np.ndarray) -> float:
    samples = np.asarray(samples, dtype=float)
    sd = float(np.std(samples, ddof=1))
    if sd <= 16 * np.finfo(float).eps * float(np.max(np.abs(samples))):
        return 0.0  # identical values; the nonzero sd is rounding noise
    return 1.06 * sd * len(samples) ** (-0.2)


def kde_density(samples: np.ndarray, bandwidth: float, x: np.ndarray) -> np.ndarray:
    """Gaussian-kernel density of ``samples`` evaluated at points ``x``."""
    samples = np.asarray(samples, dtype=float)
    x = np.asarray(x, dtype=float)
    density = np.zeros(len(x))
    step = max(1, (1 << 22) // max(len(x), 1))
    for lo in range(0, len(samples), step):
        z = (x[:, None] - samples[None, lo:lo + step]) / bandwidth
        density += np.exp(-0.5 * z * z).sum(axis=1)
    return density / (len(samples) * bandwidth * math.sqrt(2 * math.pi))


@dataclass(frozen=True)
class KDECurve:
    x: np.ndarray
    density: np.ndarray
    bandwidth: float

    def integral(self) -> float:
        return float(np.trapezoid(self.density, self.x))

    def modes(self, rel_height: float = 0.05) -> list[float]:
        """Local maxima higher than ``rel_height`` times the global maximum."""
        d = self.density
        floor = rel_height * d.max()
        peaks = []
        for i in range(len(d)):
            left = d[i - 1] if i > 0 else -np.inf
            right = d[i + 1] if i + 1 < len(d) else -np.inf
            if d[i] > left and d[i] >= right and d[i] >= floor:
                peaks.append(float(self.x[i]))
        return peaks

    def to_csv(self, metadata: Mapping[str, object] | None = None) -> str:
        lines = _metadata_lines(metadata) + ["x,density"]
        lines += [f"{x!r},{d!r}" for x, d in zip(self.x.tolist(), self.density.tolist())]
        return "\n".join(lines) + "\n"


def _cell_density(samples: np.ndarray, bandwidth: float, x: np.ndarray) -> np.ndarray:
    """Kernel mass in the cell around each grid point, divided by the cell width."""
    width = x[1] - x[0]
    edges = np.append(x - 0.5 * width, x[-1] + 0.5 * width)
    cdf = np.zeros(len(edges))
    step = max(1, (1 << 22) // len(edges))
    for lo in range(0, len(samples), step):
        cdf += ndtr((edges[:, None] - samples[None, lo:lo + step]) / bandwidth).sum(axis=1)
    return np.diff(cdf) / (len(samples) * width)


def kde(samples, bandwidth: float | str = "auto", grid: int = 512) -> KDECurve:
    """Gaussian KDE on an equispaced grid spanning ``[min - 3h, max + 3h]``.

    ``bandwidth="auto"`` applies Silverman's rule ``1.06 * sd * n**(-1/5)``.
    Each grid value is the kernel mass of its cell over the cell width, and
    the curve is scaled to unit trapezoidal area, so it stays a density even
    when the bandwidth is far below the grid spacing.
    """
    samples = np.asarray(samples, dtype=float)
    if len(samples) < 2:
        raise TooFewSamples(f"kde needs at least 2 samples, got {len(samples)}")
    if grid < 2:
        raise ValueError("grid needs at least 2 points")
    h = silverman_bandwidth(samples) if bandwidth == "auto" else float(bandwidth)
    if not (math.isfinite(h) and h > 0):
        raise NonpositiveBandwidth(f"bandwidth must be positive, got {h!r}")
    x = np.linspace(samples.min() - 3 * h, samples.max() + 3 * h, grid)
    if not np.all(np.diff(x) > 0):
        raise NonpositiveBandwidth(f"bandwidth {h!r} is below the float resolution of the samples")
    density = _cell_density(samples, h, x)
    return KDECurve(x, density / np.trapezoid(density, x), h)


def _metadata_lines(metadata: Mapping[str, object] | None) -> list[str]:
    if not metadata:
        return []
    return ["# " + " ".join(f"{k}={metadata[k]}" for k in sorted(metadata))]


def samples_csv(dist: PredictorDistribution, metadata: Mapping[str, object] | None = None) -> str:
    lines = _metadata_lines(metadata) + ["index,y"]
    lines += [f"{i},{y!r}" for i, y in enumerate(dist.samples.tolist())]
    return "\n".join(lines) + "\n"
