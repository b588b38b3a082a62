"""Domination certificates and certified visit bounds.

Two kinds of hypothesis checks back the renewal analysis:

* stochastic domination: a candidate majorant must dominate |jump| at every
  probed state (mirrored for minorants), verified by exact tail comparison
  on lattices and by cdf evaluation on a threshold grid for continuous laws;
* the escape-and-restart visit bound: if the truncated drift
  E min(jump(x), cap) stays above a floor eps > 0 and the chain escapes
  upward from any state with probability at least delta, then the expected
  visits to any window (x, x+h] are at most (cap + h) / (eps * delta).
  The minorant route replaces delta by eps/cap; nonnegative-jump chains use
  the exceedance floor gamma with bound (cap + h) / (gamma**2 * cap).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chains import MarkovKernel
from .exact import RenewalMeasure
from .laws import ContinuousLaw, JumpLaw, LatticeLaw, TailBound, descent_factor

DOMINATION_TOL = 1e-12


class CertificateError(ValueError):
    """Malformed candidate (for example an infinite-mean majorant)."""


class BoundInputError(ValueError):
    """Nonpositive floor where the bound formula needs a positive one."""


@dataclass(frozen=True)
class DominationCertificate:
    """Result of checking one candidate against a family of jump laws."""

    kind: str  # "majorant" | "minorant"
    candidate: str
    checked_states: list
    worst_violation: float
    worst_state: object
    mean: float

    @property
    def valid(self) -> bool:
        return self.worst_violation <= DOMINATION_TOL

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "candidate": self.candidate,
            "valid": self.valid,
            "worst_violation": self.worst_violation,
            "worst_state": self.worst_state,
            "mean": self.mean,
            "checked_states": list(self.checked_states),
        }


@dataclass(frozen=True)
class VisitBoundInputs:
    """Floors feeding the visit-bound formulas.

    cap         -- the truncation level (must be positive);
    drift_floor -- inf over states of E min(jump(x), cap);
    stay_floor  -- inf over states of P{chain stays above its start forever};
    exceed_floor-- inf over states of P{jump(x) > cap} (nonnegative chains).
    """

    cap: float
    drift_floor: float
    stay_floor: float | None = None
    exceed_floor: float | None = None
    source: str = "analytic"

    def __post_init__(self):
        if self.cap <= 0:
            raise BoundInputError("cap must be positive")
        if self.stay_floor is not None and not 0.0 < self.stay_floor <= 1.0:
            raise BoundInputError("stay_floor must lie in (0, 1]")


@dataclass(frozen=True)
class BoundReport:
    h: float
    bound: float
    mechanism: str  # "drift_escape" | "minorant" | "nonnegative"
    inputs: VisitBoundInputs

    def to_dict(self) -> dict:
        return {
            "h": self.h,
            "bound": self.bound,
            "mechanism": self.mechanism,
            "inputs": {
                "cap": self.inputs.cap,
                "drift_floor": self.inputs.drift_floor,
                "stay_floor": self.inputs.stay_floor,
                "exceed_floor": self.inputs.exceed_floor,
                "source": self.inputs.source,
            },
        }


# ---------------------------------------------------------------------------
# stochastic domination
# ---------------------------------------------------------------------------


def _as_tail_candidate(candidate) -> TailBound:
    if isinstance(candidate, TailBound):
        return candidate
    if isinstance(candidate, LatticeLaw):
        return TailBound.from_abs_law(candidate, label="|lattice law|")
    if isinstance(candidate, (int, float)):
        return TailBound.constant(float(candidate))
    raise CertificateError(f"cannot interpret majorant candidate {candidate!r}")


def _thresholds_for(law: JumpLaw, extra_top: float) -> np.ndarray:
    if isinstance(law, LatticeLaw):
        top = max(abs(law.min_offset()), abs(law.max_offset()), int(math.ceil(extra_top)))
        return np.arange(0, top + 1, dtype=np.float64)
    lo, hi = law.support
    top = max(abs(lo), abs(hi), extra_top) + 1.0
    return np.linspace(0.0, top, 257)


def check_domination(
    kernel: MarkovKernel,
    candidate,
    kind: str,
    states: Sequence,
    include_limit_law: bool = True,
) -> DominationCertificate:
    """Check a majorant of the |jump| family or a minorant of the jump family.

    worst_violation is the largest margin by which the candidate fails the
    tail comparison over all probed states and thresholds; <= 0 means valid.
    """
    if kind not in ("majorant", "minorant"):
        raise CertificateError(f"kind must be 'majorant' or 'minorant', got {kind!r}")
    worst = -math.inf
    worst_state = None
    laws = [(s, kernel.jump_at(s)) for s in states]
    if include_limit_law:
        laws.append(("limit", kernel.limit_law))

    if kind == "majorant":
        cand = _as_tail_candidate(candidate)
        if not math.isfinite(cand.mean_value):
            raise CertificateError(f"majorant {cand.label} has non-finite mean")
        for s, law in laws:
            for t in _thresholds_for(law, extra_top=cand.mean_value):
                v = law.abs_tail(float(t)) - cand.tail(float(t))
                if v > worst:
                    worst, worst_state = v, s
        mean = cand.mean_value
        label = cand.label
    else:
        if not isinstance(candidate, (LatticeLaw, ContinuousLaw)):
            raise CertificateError("minorant candidate must be a jump law")
        mean = candidate.mean()
        if not math.isfinite(mean):
            raise CertificateError("minorant has non-finite mean")
        label = getattr(candidate, "label", "lattice law")
        for s, law in laws:
            ts = _minorant_thresholds(candidate, law)
            for t in ts:
                v = candidate.tail(float(t)) - law.tail(float(t))
                if v > worst:
                    worst, worst_state = v, s
    return DominationCertificate(
        kind=kind,
        candidate=str(label),
        checked_states=list(states),
        worst_violation=float(worst),
        worst_state=worst_state,
        mean=float(mean),
    )


def _minorant_thresholds(cand: JumpLaw, law: JumpLaw) -> np.ndarray:
    pieces = []
    for l in (cand, law):
        if isinstance(l, LatticeLaw):
            pieces.append(l.offsets.astype(np.float64))
        else:
            lo, hi = l.support
            pieces.append(np.linspace(lo - 1.0, hi + 1.0, 257))
    return np.unique(np.concatenate(pieces))


# ---------------------------------------------------------------------------
# floors and bounds
# ---------------------------------------------------------------------------


def truncated_drift_floor(kernel: MarkovKernel, cap: float, states: Sequence) -> tuple[float, object]:
    """inf over the probed states of E min(jump(x), cap), with its argmin.

    Exact per state for lattice laws; analytic for the continuous built-ins.
    May legitimately be <= 0 (reported, not raised): the drift-escape bound
    is then inapplicable.
    """
    if cap <= 0:
        raise BoundInputError("cap must be positive")
    best, arg = math.inf, None
    for s in states:
        val = kernel.jump_at(s).truncated_mean(cap)
        if val < best:
            best, arg = val, s
    return float(best), arg


def exceedance_floor(kernel: MarkovKernel, cap: float, states: Sequence) -> tuple[float, object]:
    """inf over probed states of P{jump(x) > cap} (nonnegative-jump route)."""
    best, arg = math.inf, None
    for s in states:
        val = kernel.jump_at(s).tail(cap)
        if val < best:
            best, arg = val, s
    return float(best), arg


def visit_bound(inputs: VisitBoundInputs, h: float, mechanism: str | None = None) -> BoundReport:
    """Certified upper bound on expected visits to any window (x, x+h].

    Mechanisms: "drift_escape" needs drift_floor > 0 and stay_floor > 0;
    "minorant" substitutes stay_floor >= drift_floor / cap; "nonnegative"
    uses the exceedance floor.  Defaults to drift_escape when a stay floor
    is present, else minorant.
    """
    if h <= 0:
        raise BoundInputError("window width h must be positive")
    cap, eps = inputs.cap, inputs.drift_floor
    if mechanism is None:
        mechanism = "drift_escape" if inputs.stay_floor is not None else "minorant"
    if mechanism == "drift_escape":
        if eps <= 0:
            raise BoundInputError(f"drift floor {eps} is not positive; bound inapplicable")
        if inputs.stay_floor is None:
            raise BoundInputError("drift_escape mechanism needs a stay floor")
        bound = (cap + h) / (eps * inputs.stay_floor)
    elif mechanism == "minorant":
        if eps <= 0:
            raise BoundInputError(f"drift floor {eps} is not positive; bound inapplicable")
        # escape probability of the minorant walk is at least eps/cap
        bound = (cap + h) * cap / (eps * eps)
    elif mechanism == "nonnegative":
        gamma = inputs.exceed_floor
        if gamma is None or gamma <= 0:
            raise BoundInputError("nonnegative mechanism needs a positive exceedance floor")
        bound = (cap + h) / (gamma * gamma * cap)
    else:
        raise BoundInputError(f"unknown mechanism {mechanism!r}")
    return BoundReport(h=float(h), bound=float(bound), mechanism=mechanism, inputs=inputs)


@dataclass(frozen=True)
class VerificationRow:
    x: float
    h: float
    mass: float
    mass_plus_bracket: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class VerificationTable:
    rows: list[VerificationRow]
    bound: float

    @property
    def all_passed(self) -> bool:
        return all(r.passed for r in self.rows)

    def to_dict(self) -> dict:
        return {
            "bound": self.bound,
            "all_passed": self.all_passed,
            "rows": [vars(r) for r in self.rows],
        }


def verify_bound(
    report: BoundReport,
    measure: RenewalMeasure,
    windows: Sequence[tuple[float, float]],
) -> VerificationTable:
    """Check mass + bracket <= bound on every probed window (x, x+h]."""
    rows = []
    for x, h in windows:
        mass = measure.interval_mass(x, h)
        top = mass + measure.bracket_width
        rows.append(
            VerificationRow(
                x=float(x), h=float(h), mass=mass,
                mass_plus_bracket=top, bound=report.bound,
                passed=bool(top <= report.bound),
            )
        )
    return VerificationTable(rows=rows, bound=report.bound)


# ---------------------------------------------------------------------------
# analytic stay-above oracle for nearest-neighbor chains
# ---------------------------------------------------------------------------


def stay_above_exact_nn(kernel: MarkovKernel, x: int) -> float:
    """Exact P{chain stays above x forever | started at x} for
    nearest-neighbor chains that are space-homogeneous above x.

    The chain must first step up, then never descend back; the descent
    probability from above is the root of the generating equation of the
    (constant) upper jump law.
    """
    law = kernel.jump_at(x)
    if not isinstance(law, LatticeLaw) or set(law.as_dict()) - {-1, 1}:
        raise CertificateError("stay-above oracle needs a nearest-neighbor lattice chain")
    upper_law = kernel.jump_at(x + 1)
    if not isinstance(upper_law, LatticeLaw):
        raise CertificateError("stay-above oracle needs lattice laws above the start")
    for probe in (x + 2, x + 5, x + 50):
        if kernel.jump_at(probe).sup_distance(upper_law) != 0.0:
            raise CertificateError(
                f"jump law is not constant above {x}; the closed form does not apply"
            )
    up = law.tail(0.0)
    return up * (1.0 - descent_factor(upper_law))


def report_to_json(
    certificates: Sequence[DominationCertificate],
    inputs: VisitBoundInputs | None,
    reports: Sequence[BoundReport],
    table: VerificationTable | None = None,
    extra: dict | None = None,
) -> str:
    doc = {
        "certificates": [c.to_dict() for c in certificates],
        "bounds": [r.to_dict() for r in reports],
    }
    if table is not None:
        doc["verification"] = table.to_dict()
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True, default=str)
