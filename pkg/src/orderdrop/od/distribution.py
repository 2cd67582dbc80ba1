"""Discrete width distributions and capability-conditioned sampling."""

from dataclasses import dataclass

import numpy as np

PROB_TOL = 1e-12


class BelowMinimumWidth(ValueError):
    """Raised when a capability cap admits no candidate width."""


@dataclass(frozen=True)
class DropoutDistribution:
    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(q) for q in self.probs)
        if not values or len(values) != len(probs):
            raise ValueError("values and probabilities must be non-empty and equally long")
        if values[0] <= 0.0 or values[-1] > 1.0:
            raise ValueError("candidate widths must lie in (0, 1]")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("candidate widths must be strictly increasing")
        if any(q <= 0.0 for q in probs):
            raise ValueError("every candidate width needs positive probability")
        if abs(sum(probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(probs)!r}, not 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    @property
    def min(self):
        return self.values[0]

    @property
    def max(self):
        return self.values[-1]

    def index(self, p, tol=1e-9):
        for i, v in enumerate(self.values):
            if abs(v - p) <= tol:
                return i
        raise ValueError(f"{p} is not a candidate width")

    def conditional(self, cap):
        """(values, renormalised probabilities) of atoms <= cap."""
        n = sum(1 for v in self.values if v <= cap + 1e-12)
        if n == 0:
            raise BelowMinimumWidth(f"client below minimum supported width (cap {cap} < {self.values[0]})")
        probs = np.array(self.probs[:n])
        return self.values[:n], tuple(probs / probs.sum())

    def to_dict(self):
        return {"values": list(self.values), "probs": list(self.probs)}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["values"]), tuple(d["probs"]))


def make_uniform_k(k):
    """Uniform distribution over {1/k, 2/k, ..., 1}."""
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    return DropoutDistribution(tuple(i / k for i in range(1, k + 1)), tuple([1.0 / k] * k))


def sample_p_conditional(dist, cap, rng):
    """Draw p from ``dist`` restricted to atoms <= ``cap``."""
    values, probs = dist.conditional(cap)
    if len(values) == 1:
        return values[0]
    u = rng.random()
    cdf = np.cumsum(probs)
    i = int(np.searchsorted(cdf, u, side="right"))
    return values[min(i, len(values) - 1)]

