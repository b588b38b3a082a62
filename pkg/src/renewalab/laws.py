"""Jump-law primitives: finite lattice pmfs and analytic continuous laws.

A jump law describes the displacement distribution of a chain at one state.
Lattice laws are exact (integer offsets, finite support); continuous laws
carry analytic callables (cdf, inverse cdf, truncated mean) so that every
certificate computed from them is closed-form rather than sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

PMF_TOL = 1e-12


class LawError(ValueError):
    """Raised when a jump law violates its normalization or support contract."""


@dataclass(frozen=True)
class LatticeLaw:
    """Probability mass function on integer offsets, sorted by offset."""

    offsets: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        offsets = np.asarray(self.offsets, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if offsets.ndim != 1 or probs.shape != offsets.shape or offsets.size == 0:
            raise LawError("offsets and probs must be equal-length 1-d arrays")
        if np.unique(offsets).size != offsets.size:
            raise LawError("duplicate offsets")
        order = np.argsort(offsets)
        offsets = offsets[order]
        probs = probs[order]
        if np.any(probs < -PMF_TOL):
            raise LawError("negative probability")
        probs = np.clip(probs, 0.0, None)
        total = probs.sum()
        if abs(total - 1.0) > PMF_TOL:
            raise LawError(f"pmf sums to {total!r}, not 1 within {PMF_TOL}")
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_mapping(cls, pmf: Mapping[int, float]) -> "LatticeLaw":
        items = sorted(pmf.items())
        return cls(
            np.array([k for k, _ in items], dtype=np.int64),
            np.array([p for _, p in items], dtype=np.float64),
        )

    def as_dict(self) -> dict[int, float]:
        return {int(k): float(p) for k, p in zip(self.offsets, self.probs)}

    def mean(self) -> float:
        return float(np.dot(self.offsets, self.probs))

    def truncated_mean(self, cap: float) -> float:
        """E min(jump, cap); exact."""
        return float(np.dot(np.minimum(self.offsets, cap), self.probs))

    def cdf(self, t: float) -> float:
        return float(self.probs[self.offsets <= t].sum())

    def tail(self, t: float) -> float:
        """P{jump > t}."""
        return float(self.probs[self.offsets > t].sum())

    def abs_tail(self, t: float) -> float:
        """P{|jump| > t}."""
        return float(self.probs[np.abs(self.offsets) > t].sum())

    def abs_mean(self) -> float:
        return float(np.dot(np.abs(self.offsets), self.probs))

    def span(self) -> int:
        """Minimal a > 0 with support contained in a*Z (0 for the point mass at 0)."""
        g = 0
        for k, p in zip(self.offsets, self.probs):
            if p > 0.0 and k != 0:
                g = math.gcd(g, abs(int(k)))
        return g

    def min_offset(self) -> int:
        return int(self.offsets[self.probs > 0.0].min())

    def max_offset(self) -> int:
        return int(self.offsets[self.probs > 0.0].max())

    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.probs)
        c[-1] = 1.0
        return c

    def sample(self, rng: np.random.Generator) -> int:
        u = rng.random()
        return int(self.offsets[int(np.searchsorted(self.cumulative(), u, side="right"))])

    def sup_distance(self, other: "LatticeLaw") -> float:
        """Sup over offsets of |pmf difference|."""
        keys = set(self.as_dict()) | set(other.as_dict())
        a, b = self.as_dict(), other.as_dict()
        return max(abs(a.get(k, 0.0) - b.get(k, 0.0)) for k in keys)


@dataclass(frozen=True)
class ContinuousLaw:
    """Continuous jump law defined by analytic callables.

    `truncated_mean` (cap -> E min(jump, cap)) is the integrability
    declaration: laws without it are rejected by every certificate
    computation that needs expectations.
    """

    cdf: Callable[[float], float]
    ppf: Callable[[float], float]
    mean_value: float
    support: tuple[float, float]
    truncated_mean_fn: Callable[[float], float] | None = None
    label: str = "continuous"

    def __post_init__(self):
        lo, hi = self.support
        if not lo < hi:
            raise LawError("empty support interval")
        for t, want in ((lo - 1e-9, 0.0), (hi + 1e-9, 1.0)):
            got = self.cdf(t)
            if abs(got - want) > 1e-9:
                raise LawError(f"cdf({t}) = {got}, expected {want}")
        grid = np.linspace(lo, hi, 33)
        vals = [self.cdf(float(t)) for t in grid]
        if any(b < a - 1e-12 for a, b in zip(vals, vals[1:])):
            raise LawError("cdf is not nondecreasing")
        for u in (0.0, 0.25, 0.5, 0.75, 1.0):
            x = self.ppf(u)
            if not (lo - 1e-9 <= x <= hi + 1e-9):
                raise LawError(f"ppf({u}) = {x} escapes declared support {self.support}")

    def mean(self) -> float:
        return self.mean_value

    def truncated_mean(self, cap: float) -> float:
        if self.truncated_mean_fn is None:
            raise LawError(f"law {self.label!r} has no integrability declaration")
        return float(self.truncated_mean_fn(cap))

    def tail(self, t: float) -> float:
        return 1.0 - float(self.cdf(t))

    def abs_tail(self, t: float) -> float:
        if t < 0:
            return 1.0
        return 1.0 - float(self.cdf(t)) + float(self.cdf(-t - 0.0))

    def span(self) -> None:
        return None

    def sample(self, rng: np.random.Generator) -> float:
        return float(self.ppf(rng.random()))


JumpLaw = LatticeLaw | ContinuousLaw


def uniform_law(lo: float, hi: float) -> ContinuousLaw:
    """Uniform(lo, hi) with closed-form cdf, quantile, and truncated mean."""
    width = hi - lo
    if width <= 0:
        raise LawError("uniform law needs lo < hi")

    def cdf(t: float) -> float:
        return min(1.0, max(0.0, (t - lo) / width))

    def ppf(u: float) -> float:
        return lo + width * u

    def tmean(cap: float) -> float:
        # E min(X, cap) for X ~ U(lo, hi)
        if cap >= hi:
            return 0.5 * (lo + hi)
        if cap <= lo:
            return float(cap)
        return (cap * cap - lo * lo) / (2.0 * width) + cap * (hi - cap) / width

    return ContinuousLaw(
        cdf=cdf,
        ppf=ppf,
        mean_value=0.5 * (lo + hi),
        support=(lo, hi),
        truncated_mean_fn=tmean,
        label=f"uniform({lo}, {hi})",
    )


def point_mass(offset: int) -> LatticeLaw:
    return LatticeLaw(np.array([offset], dtype=np.int64), np.array([1.0]))


@dataclass(frozen=True)
class TailBound:
    """A candidate dominating tail: t -> P{candidate > t}, with its mean.

    Used to declare stochastic majorants of |jump| families.  Candidates with
    an infinite mean are rejected by the certificate checker.
    """

    tail: Callable[[float], float]
    mean_value: float
    label: str = "tail-bound"

    @classmethod
    def constant(cls, c: float) -> "TailBound":
        return cls(tail=lambda t, c=c: 1.0 if t < c else 0.0, mean_value=float(c), label=f"constant({c})")

    @classmethod
    def from_abs_law(cls, law: JumpLaw, shift: float = 0.0, label: str | None = None) -> "TailBound":
        """Tail of |law| + shift."""
        if isinstance(law, LatticeLaw):
            mean = law.abs_mean() + shift
        else:
            lo, hi = law.support
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise LawError("abs-mean of an unbounded continuous law must be declared explicitly")
            # |X| has tail P{X > t} + P{X < -t}; mean by quadrature on the bounded support
            grid = np.linspace(0.0, max(abs(lo), abs(hi)), 4097)
            tails = np.array([law.abs_tail(float(t)) for t in grid])
            mean = float(np.trapezoid(tails, grid)) + shift
        return cls(
            tail=lambda t, law=law, shift=shift: 1.0 if t < shift else law.abs_tail(t - shift),
            mean_value=mean,
            label=label or f"|{getattr(law, 'label', 'law')}| + {shift}",
        )


def descent_factor(law: LatticeLaw) -> float:
    """Smallest s in (0, 1] with E s**jump = 1, for a positive-mean lattice law.

    P{a random walk with this step law ever descends by g} <= s**g; the bound
    is exact when the minimal offset is -1 (skip-free descent).  Returns 0.0
    when the law has no negative offsets (descent impossible).
    """
    if law.min_offset() >= 0:
        return 0.0
    if law.mean() <= 0:
        return 1.0

    def gen(s: float) -> float:
        return float(np.dot(np.power(s, law.offsets.astype(np.float64)), law.probs)) - 1.0

    # gen(s) -> +inf as s -> 0+, gen(1) = 0, gen'(1) = mean > 0: a root lies in (0, 1).
    lo, hi = 1e-300, 1.0 - 1e-12
    if gen(hi) >= 0.0:
        return 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if gen(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return hi


def ascent_factor(law: LatticeLaw) -> float:
    """Analog of descent_factor for climbing against a negative-mean law."""
    mirrored = LatticeLaw(-law.offsets[::-1], law.probs[::-1])
    return descent_factor(mirrored)
