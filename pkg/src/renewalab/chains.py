"""Transition kernels on the line and the built-in chain catalogue.

Every chain is described by a `MarkovKernel`: a map state -> jump law,
together with the limiting jump law at +infinity, declared domination
candidates, and the analytic escape certificates that the windowed engine
turns into rigorous truncation brackets.

Built-in chains:

* ``random_walk``      -- iid lattice increments with positive mean.
* ``reflected_walk``   -- the same walk reflected at 0 (Lindley recursion).
* ``three_branch``     -- drifts up above 0 at rate +1/2, down below 0 at
                          rate -1/2; the split at the origin is a free
                          parameter ``p`` that controls where the chain
                          escapes and hence the tail renewal density.
* ``counterexample``   -- nondecreasing chain on Z+ built from dyadic blocks
                          [2**n - 1, 2**(n+1) - 2]; inside a block each state
                          idles with probability 1/2, steps +1, or jumps to
                          the block top 2**(n+1) with a probability chosen so
                          the big-jump contribution to the mean vanishes.
                          Its jumps converge weakly to Bernoulli(1/2) but
                          admit no integrable majorant.
* ``perturbed_walk``   -- continuous test chain: Uniform(-1, 1.5) increments
                          plus a decaying state-dependent bump 0.5*exp(-|x|).
* ``custom``           -- finite table of exceptional lattice states plus an
                          explicit limit law everywhere else.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .laws import (
    ContinuousLaw,
    JumpLaw,
    LatticeLaw,
    LawError,
    TailBound,
    ascent_factor,
    descent_factor,
    point_mass,
    uniform_law,
)

# Backend family codes (shared with renewalab._kernels).
FAMILY_RANDOM_WALK = 0
FAMILY_REFLECTED = 1
FAMILY_THREE_BRANCH = 2
FAMILY_COUNTEREXAMPLE = 3
FAMILY_PERTURBED = 4
FAMILY_CUSTOM = 5

BUILTIN_NAMES = (
    "random_walk",
    "reflected_walk",
    "three_branch",
    "counterexample",
    "perturbed_walk",
    "custom",
)

E_SQUARED = math.exp(2.0)

MEAN_TOL = 1e-10


class ChainError(ValueError):
    """Invalid chain specification or parameter range."""


@dataclass(frozen=True)
class EscapeCertificate:
    """Rigorous per-step geometric factors for boundary re-entry.

    ``down_factor`` bounds P{from anywhere above a level, ever descend by g}
    by down_factor**g; ``up_factor`` is the mirror bound for climbing back
    from far below.  1.0 means no information (fully conservative).
    """

    down_factor: float = 1.0
    up_factor: float = 1.0


@dataclass(frozen=True)
class InitialLaw:
    """Initial distribution: finitely many states with probabilities."""

    states: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.float64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if states.shape != probs.shape or states.ndim != 1 or states.size == 0:
            raise ChainError("initial law needs matching 1-d states/probs")
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ChainError("initial probabilities must be nonnegative and sum to 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def point(cls, state: float) -> "InitialLaw":
        return cls(np.array([state], dtype=np.float64), np.array([1.0]))

    def is_point(self) -> bool:
        return self.states.size == 1

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms to initial states (vectorized inverse cdf)."""
        cum = np.cumsum(self.probs)
        cum[-1] = 1.0
        return self.states[np.searchsorted(cum, u, side="right")]


class MarkovKernel:
    """Immutable transition kernel: state -> jump law, plus limit data.

    Subclasses implement `jump_at` and (for lattice chains) `lattice_targets`.
    Instances are safe to share across workers; they hold no mutable state.
    """

    name: str = "abstract"
    family: int = -1
    lattice: bool = True

    def __init__(
        self,
        limit_law: JumpLaw,
        params: dict | None = None,
        majorant: TailBound | None = None,
        minorant: JumpLaw | None = None,
        escape: EscapeCertificate = EscapeCertificate(),
        visit_cap_unit: float | None = None,
    ):
        self.limit_law = limit_law
        self.limit_mean = float(limit_law.mean())
        self.params = dict(params or {})
        self.declared_majorant = majorant
        self.declared_minorant = minorant
        self.escape = escape
        self.visit_cap_unit = visit_cap_unit
        if isinstance(limit_law, LatticeLaw):
            exact = limit_law.mean()
            if abs(self.limit_mean - exact) > MEAN_TOL:
                raise ChainError("limit_mean disagrees with limit law")

    def jump_at(self, x) -> JumpLaw:
        raise NotImplementedError

    def lattice_targets(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        """Absolute landing states and probabilities from integer state x."""
        if not self.lattice:
            raise ChainError(f"{self.name} is not a lattice chain")
        law = self.jump_at(x)
        return (x + law.offsets).astype(np.int64), law.probs.copy()

    def stepper_arrays(self) -> tuple[np.ndarray, np.ndarray, float]:
        """(offsets, cumulative probs, scalar param) consumed by the backends."""
        if isinstance(self.limit_law, LatticeLaw):
            return (
                self.limit_law.offsets.astype(np.float64),
                self.limit_law.cumulative(),
                0.0,
            )
        return np.zeros(0), np.zeros(0), 0.0

    def __repr__(self):
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


class RandomWalkKernel(MarkovKernel):
    """Space-homogeneous walk: jump law is the limit law everywhere."""

    name = "random_walk"
    family = FAMILY_RANDOM_WALK

    def __init__(self, law: LatticeLaw, params=None):
        if law.mean() <= 0:
            raise ChainError("random_walk requires a jump law with positive mean")
        super().__init__(
            limit_law=law,
            params=params or {"law": law.as_dict()},
            majorant=TailBound.from_abs_law(law, label="|step law|"),
            minorant=law,
            escape=EscapeCertificate(down_factor=descent_factor(law), up_factor=1.0),
            visit_cap_unit=_minorant_visit_cap(law),
        )

    def jump_at(self, x) -> LatticeLaw:
        return self.limit_law


class ReflectedWalkKernel(MarkovKernel):
    """Walk reflected at the origin: next state is max(x + step, 0)."""

    name = "reflected_walk"
    family = FAMILY_REFLECTED

    def __init__(self, law: LatticeLaw, params=None):
        if law.mean() <= 0:
            raise ChainError("reflected_walk requires a jump law with positive mean")
        super().__init__(
            limit_law=law,
            params=params or {"law": law.as_dict()},
            majorant=TailBound.from_abs_law(law, label="|step law|"),
            minorant=law,  # (x + s)^+ - x >= s pointwise
            escape=EscapeCertificate(down_factor=descent_factor(law), up_factor=0.0),
            visit_cap_unit=_minorant_visit_cap(law),
        )
        self.base_law = law

    def jump_at(self, x) -> LatticeLaw:
        pmf: dict[int, float] = {}
        for off, p in zip(self.base_law.offsets, self.base_law.probs):
            eff = max(x + int(off), 0) - x
            pmf[eff] = pmf.get(eff, 0.0) + float(p)
        return LatticeLaw.from_mapping(pmf)


class ThreeBranchKernel(MarkovKernel):
    """Nearest-neighbor chain: up-probability 3/4 above 0, 1/4 below, p at 0."""

    name = "three_branch"
    family = FAMILY_THREE_BRANCH

    UP_HIGH = 0.75
    UP_LOW = 0.25

    def __init__(self, p: float):
        if not 0.0 <= p <= 1.0:
            raise ChainError(f"three_branch needs p in [0, 1], got {p}")
        limit = LatticeLaw.from_mapping({1: self.UP_HIGH, -1: 1.0 - self.UP_HIGH})
        down_law = LatticeLaw.from_mapping({1: self.UP_LOW, -1: 1.0 - self.UP_LOW})
        # Per entry to a state, the return probability is at most
        # 3/4 * 1/3 + 1/4 * 1 = 1/2 in either drift region, so expected
        # visits per entry never exceed 2.
        super().__init__(
            limit_law=limit,
            params={"p": float(p)},
            majorant=TailBound.constant(1.0),
            minorant=None,  # no positive-mean minorant exists (down region)
            escape=EscapeCertificate(
                down_factor=descent_factor(limit),
                up_factor=ascent_factor(down_law),
            ),
            visit_cap_unit=2.0,
        )
        self.p = float(p)

    def up_probability(self, x) -> float:
        if x >= 1:
            return self.UP_HIGH
        if x <= -1:
            return self.UP_LOW
        return self.p

    def jump_at(self, x) -> LatticeLaw:
        up = self.up_probability(x)
        return LatticeLaw.from_mapping({1: up, -1: 1.0 - up})

    def stepper_arrays(self):
        offs, cum, _ = super().stepper_arrays()
        return offs, cum, self.p


def counterexample_block(k: int) -> int:
    """Dyadic block index: k belongs to block n iff 2**n - 1 <= k <= 2**(n+1) - 2."""
    if k < 0:
        raise ChainError("counterexample states live on Z+")
    return (k + 1).bit_length() - 1


def counterexample_big_jump_prob(k: int) -> float:
    n = counterexample_block(k)
    top = 1 << (n + 1)
    return 1.0 / ((top - k) * math.log(n + E_SQUARED))


class CounterexampleKernel(MarkovKernel):
    """Dyadic-block chain on Z+ whose jumps are uniformly integrable but
    admit no integrable majorant; the block-top landing points break the
    flatness of the renewal measure."""

    name = "counterexample"
    family = FAMILY_COUNTEREXAMPLE

    def __init__(self):
        limit = LatticeLaw.from_mapping({0: 0.5, 1: 0.5})
        super().__init__(
            limit_law=limit,
            params={},
            majorant=None,  # none exists: block jumps reach 2**n
            minorant=point_mass(0),
            escape=EscapeCertificate(down_factor=0.0, up_factor=0.0),
            visit_cap_unit=2.0,  # idle prob 1/2, never revisited once left
        )

    def jump_at(self, k) -> LatticeLaw:
        k = int(k)
        n = counterexample_block(k)
        top = 1 << (n + 1)
        q = counterexample_big_jump_prob(k)
        return LatticeLaw.from_mapping({0: 0.5, 1: 0.5 - q, top - k: q})

    def lattice_targets(self, k: int):
        k = int(k)
        n = counterexample_block(k)
        top = 1 << (n + 1)
        q = counterexample_big_jump_prob(k)
        return (
            np.array([k, k + 1, top], dtype=np.int64),
            np.array([0.5, 0.5 - q, q]),
        )


class PerturbedWalkKernel(MarkovKernel):
    """Continuous chain: Uniform(-1, 1.5) step plus a bump 0.5*exp(-|x|).

    The bump is nonnegative, so the base uniform law is an exact stochastic
    minorant; |step| never exceeds |base| + 0.5, giving the majorant.
    """

    name = "perturbed_walk"
    family = FAMILY_PERTURBED
    lattice = False

    BASE_LO = -1.0
    BASE_HI = 1.5
    BUMP = 0.5

    def __init__(self):
        base = uniform_law(self.BASE_LO, self.BASE_HI)
        super().__init__(
            limit_law=base,
            params={},
            majorant=TailBound.from_abs_law(base, shift=self.BUMP, label="|uniform| + bump"),
            minorant=base,
            escape=EscapeCertificate(),
            visit_cap_unit=None,
        )

    def bump(self, x: float) -> float:
        return self.BUMP * math.exp(-abs(x))

    def jump_at(self, x) -> ContinuousLaw:
        d = self.bump(float(x))
        return uniform_law(self.BASE_LO + d, self.BASE_HI + d)


class CustomLatticeKernel(MarkovKernel):
    """Finite table of exceptional states; the limit law everywhere else."""

    name = "custom"
    family = FAMILY_CUSTOM

    def __init__(
        self,
        limit_law: LatticeLaw,
        table: dict[int, LatticeLaw] | None = None,
        params: dict | None = None,
        escape: EscapeCertificate = EscapeCertificate(),
        visit_cap_unit: float | None = None,
    ):
        super().__init__(
            limit_law=limit_law,
            params=params or {},
            escape=escape,
            visit_cap_unit=visit_cap_unit,
        )
        self.table = {int(k): v for k, v in (table or {}).items()}

    def jump_at(self, x) -> LatticeLaw:
        return self.table.get(int(x), self.limit_law)


def _minorant_visit_cap(law: LatticeLaw) -> float | None:
    """Uniform bound on expected visits to a unit window for any chain whose
    jumps stochastically dominate `law` (positive mean required).

    Scans truncation caps over the law's support: cap(A) = (A+1)*A/eps(A)**2
    with eps(A) = E min(law, A); the escape-and-restart argument makes every
    such value a valid bound, so the minimum is taken.
    """
    best = None
    for cap in range(1, law.max_offset() + 1):
        eps = law.truncated_mean(cap)
        if eps > 0:
            bound = (cap + 1.0) * cap / (eps * eps)
            best = bound if best is None else min(best, bound)
    return best


# ---------------------------------------------------------------------------
# Chain specifications and the build entry point
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    """Serializable chain description: builder name, parameters, initial law."""

    name: str
    params: dict = field(default_factory=dict)
    initial: dict = field(default_factory=lambda: {"kind": "point", "state": 0})

    def __post_init__(self):
        if self.name not in BUILTIN_NAMES:
            raise ChainError(f"unknown chain {self.name!r}; expected one of {BUILTIN_NAMES}")

    def to_dict(self) -> dict:
        return {"name": self.name, "params": dict(self.params), "initial": dict(self.initial)}

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        extra = set(d) - {"name", "params", "initial"}
        if extra:
            raise ChainError(f"unknown chain-spec fields: {sorted(extra)}")
        return cls(
            name=d["name"],
            params=dict(d.get("params", {})),
            initial=dict(d.get("initial", {"kind": "point", "state": 0})),
        )

    def initial_law(self) -> InitialLaw:
        kind = self.initial.get("kind", "point")
        if kind == "point":
            return InitialLaw.point(float(self.initial.get("state", 0)))
        if kind == "pmf":
            return InitialLaw(
                np.asarray(self.initial["states"], dtype=np.float64),
                np.asarray(self.initial["probs"], dtype=np.float64),
            )
        raise ChainError(f"unknown initial-law kind {kind!r}")


def save_spec(spec: ChainSpec, path) -> None:
    with open(path, "w") as fh:
        json.dump(spec.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_spec(path) -> ChainSpec:
    with open(path) as fh:
        return ChainSpec.from_dict(json.load(fh))


def _law_from_params(params: dict) -> LatticeLaw:
    if "law" in params:
        raw = params["law"]
        if isinstance(raw, LatticeLaw):
            return raw
        if isinstance(raw, dict) and "offsets" in raw:
            return LatticeLaw(
                np.asarray(raw["offsets"], dtype=np.int64),
                np.asarray(raw["probs"], dtype=np.float64),
            )
        return LatticeLaw.from_mapping({int(k): float(v) for k, v in dict(raw).items()})
    if "q" in params:
        q = float(params["q"])
        if not 0.0 < q <= 1.0:
            raise ChainError(f"up-probability q must lie in (0, 1], got {q}")
        if q == 1.0:
            return point_mass(1)
        return LatticeLaw.from_mapping({1: q, -1: 1.0 - q})
    raise ChainError("walk chains need a 'law' mapping or an up-probability 'q'")


def build_chain(spec: ChainSpec) -> MarkovKernel:
    """Construct the kernel described by `spec` (parameters validated)."""
    name, params = spec.name, spec.params
    if name == "random_walk":
        return RandomWalkKernel(_law_from_params(params), params=dict(params))
    if name == "reflected_walk":
        return ReflectedWalkKernel(_law_from_params(params), params=dict(params))
    if name == "three_branch":
        if "p" not in params:
            raise ChainError("three_branch needs parameter p")
        return ThreeBranchKernel(float(params["p"]))
    if name == "counterexample":
        return CounterexampleKernel()
    if name == "perturbed_walk":
        return PerturbedWalkKernel()
    if name == "custom":
        if "limit_law" not in params:
            raise ChainError("custom chains need an explicit limit_law")
        limit = _law_from_params({"law": params["limit_law"]})
        table = {
            int(k): _law_from_params({"law": v})
            for k, v in dict(params.get("table", {})).items()
        }
        escape = EscapeCertificate(
            down_factor=float(params.get("down_factor", 1.0)),
            up_factor=float(params.get("up_factor", 1.0)),
        )
        cap = params.get("visit_cap")
        return CustomLatticeKernel(
            limit, table, params=dict(params), escape=escape,
            visit_cap_unit=None if cap is None else float(cap),
        )
    raise ChainError(f"unknown chain {name!r}")


# ---------------------------------------------------------------------------
# Kernel-level operations
# ---------------------------------------------------------------------------


def mean_jump(kernel: MarkovKernel, x) -> float:
    """Exact one-step drift at state x."""
    law = kernel.jump_at(x)
    return law.mean()


class LimitStatistics(NamedTuple):
    mean: float
    lattice_span: int | None
    truncated_mean: "object"  # cap -> E min(limit jump, cap)


def limit_statistics(kernel: MarkovKernel) -> LimitStatistics:
    """Mean, minimal lattice span (None for continuous), and the truncated
    expectation function of the limiting jump law."""
    law = kernel.limit_law
    span = law.span() if isinstance(law, LatticeLaw) else None
    return LimitStatistics(law.mean(), span, law.truncated_mean)


def sample_step(kernel: MarkovKernel, x, rng: np.random.Generator):
    """One transition from x; advances and returns the caller-owned rng."""
    from ._kernels import backend_for

    backend = backend_for(kernel)
    states = np.array([float(x)], dtype=np.float64)
    u = rng.random(1)
    new = backend.step_states(kernel, states, u)
    out = new[0]
    if kernel.lattice:
        out = int(round(out))
    return out, rng


def homogeneity_gap(kernel: MarkovKernel, x, grid: np.ndarray | None = None) -> float:
    """Distance between the jump law at x and the limit law.

    Sup over offsets of |pmf difference| for lattice chains, sup over a grid
    of |cdf difference| for continuous ones.
    """
    law = kernel.jump_at(x)
    limit = kernel.limit_law
    if isinstance(law, LatticeLaw) and isinstance(limit, LatticeLaw):
        return law.sup_distance(limit)
    if grid is None:
        lo = min(law.support[0], limit.support[0]) - 0.5
        hi = max(law.support[1], limit.support[1]) + 0.5
        grid = np.linspace(lo, hi, 513)
    return max(abs(law.cdf(float(t)) - limit.cdf(float(t))) for t in grid)
