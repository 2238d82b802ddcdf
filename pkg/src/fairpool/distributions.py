"""Distributions over exogenous variables.

Each family draws by inversion: ``ppf`` maps one uniform in [0, 1) to one
value, so every exogenous variable consumes exactly one uniform per context.
Discrete families yield real-valued integers (0.0, 1.0, ...); a Categorical
value is the zero-based index of its weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidParameter


class Distribution:
    family: str = ""

    def params(self) -> list[tuple[str, object]]:
        raise NotImplementedError

    def ppf(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def support(self) -> tuple[np.ndarray, np.ndarray] | None:
        """(values, probabilities) for finite supports, None otherwise."""
        return None

    @property
    def mean(self) -> float:
        raise NotImplementedError


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        raise InvalidParameter(f"{name} must be a positive real, got {value!r}")
    return value


@dataclass(frozen=True)
class Poisson(Distribution):
    lam: float
    family = "Poisson"

    def __post_init__(self):
        object.__setattr__(self, "lam", _positive("lambda", self.lam))

    def params(self):
        return [("lambda", self.lam)]

    @property
    def mean(self):
        return self.lam

    def ppf(self, u):
        # sequential search over the cdf, all elements in lock-step
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        pmf = math.exp(-self.lam)
        cdf = pmf
        active = u >= cdf
        k = 0
        limit = int(self.lam + 40 * math.sqrt(self.lam) + 100)
        while active.any() and k < limit:
            k += 1
            out[active] = k
            pmf *= self.lam / k
            cdf += pmf
            active &= u >= cdf
        return out


@dataclass(frozen=True)
class Bernoulli(Distribution):
    p: float
    family = "Bernoulli"

    def __post_init__(self):
        p = float(self.p)
        if not 0.0 <= p <= 1.0:
            raise InvalidParameter(f"p must lie in [0, 1], got {p!r}")
        object.__setattr__(self, "p", p)

    def params(self):
        return [("p", self.p)]

    @property
    def mean(self):
        return self.p

    def ppf(self, u):
        return (np.asarray(u) < self.p).astype(float)

    def support(self):
        return np.array([0.0, 1.0]), np.array([1.0 - self.p, self.p])


@dataclass(frozen=True)
class Categorical(Distribution):
    weights: tuple[float, ...]
    family = "Categorical"

    def __post_init__(self):
        try:
            weights = tuple(float(w) for w in self.weights)
        except TypeError:
            raise InvalidParameter("weights must be a list of numbers") from None
        if not weights:
            raise InvalidParameter("weights must be nonempty")
        if any(not (math.isfinite(w) and w >= 0) for w in weights):
            raise InvalidParameter("weights must be nonnegative reals")
        if abs(math.fsum(weights) - 1.0) > 1e-9:
            raise InvalidParameter(f"weights must sum to 1, got {math.fsum(weights)!r}")
        object.__setattr__(self, "weights", weights)

    def params(self):
        return [("weights", list(self.weights))]

    @property
    def mean(self):
        return math.fsum(i * w for i, w in enumerate(self.weights))

    def ppf(self, u):
        cdf = np.cumsum(self.weights)
        idx = np.searchsorted(cdf, np.asarray(u), side="right")
        return np.minimum(idx, len(self.weights) - 1).astype(float)

    def support(self):
        return np.arange(len(self.weights), dtype=float), np.array(self.weights)


@dataclass(frozen=True)
class Beta(Distribution):
    alpha: float
    beta: float
    family = "Beta"

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))
        object.__setattr__(self, "beta", _positive("beta", self.beta))

    def params(self):
        return [("alpha", self.alpha), ("beta", self.beta)]

    @property
    def mean(self):
        return self.alpha / (self.alpha + self.beta)

    def ppf(self, u):
        return special.betaincinv(self.alpha, self.beta, np.asarray(u, dtype=float))


@dataclass(frozen=True)
class PointMass(Distribution):
    value: float
    family = "PointMass"

    def __post_init__(self):
        value = float(self.value)
        if not math.isfinite(value):
            raise InvalidParameter(f"value must be finite, got {value!r}")
        object.__setattr__(self, "value", value)

    def params(self):
        return [("value", self.value)]

    @property
    def mean(self):
        return self.value

    def ppf(self, u):
        return np.full(np.shape(u), self.value)

    def support(self):
        return np.array([self.value]), np.array([1.0])


# family name -> (class, parameter names in declaration order)
FAMILIES = {
    "Poisson": (Poisson, ("lambda",)),
    "Bernoulli": (Bernoulli, ("p",)),
    "Categorical": (Categorical, ("weights",)),
    "Beta": (Beta, ("alpha", "beta")),
    "PointMass": (PointMass, ("value",)),
}


def make_distribution(family: str, params: dict) -> Distribution:
    """Build a distribution from its family name and keyword parameters."""
    if family not in FAMILIES:
        raise InvalidParameter(f"unknown distribution family {family!r}")
    cls, names = FAMILIES[family]
    missing = [n for n in names if n not in params]
    extra = [n for n in params if n not in names]
    if missing or extra:
        raise InvalidParameter(
            f"{family} takes parameters ({', '.join(names)}); "
            f"missing {missing or 'none'}, unexpected {extra or 'none'}")
    values = [params[n] for n in names]
    if family == "Categorical":
        if not isinstance(values[0], (list, tuple)):
            raise InvalidParameter("Categorical weights must be a list")
    elif isinstance(values[0], (list, tuple)) or any(isinstance(v, (list, tuple)) for v in values):
        raise InvalidParameter(f"{family} parameters must be numbers")
    return cls(*values)
