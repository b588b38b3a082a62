"""Verdicts on renewal limits: tail density versus its predicted value,
flatness of the measure far from the origin, and the block-structure report
for the counterexample chain.

The predicted tail density per unit length is positive_prob / jump_mean:
the limiting probability of sitting above the origin divided by the mean
limiting jump.  For chains that escape upward almost surely this reduces to
the classical 1 / jump_mean; the report always carries both values and
flags when they differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .chains import CounterexampleKernel, E_SQUARED
from .exact import RenewalMeasure, renewal_measure
from .montecarlo import MCEstimate


class LimitError(ValueError):
    """Bad window range or nonpositive mean."""


@dataclass(frozen=True)
class LimitReport:
    """Tail-window renewal density against its predicted limit."""

    density_estimate: float
    target: float
    unit_density_target: float
    relative_error: float
    window_range: tuple[float, float]
    positive_prob: float
    jump_mean: float
    n_windows: int

    @property
    def targets_differ(self) -> bool:
        return abs(self.target - self.unit_density_target) > 1e-12


@dataclass(frozen=True)
class CounterexampleReport:
    """Renewal-measure profile of the dyadic-block chain.

    spike_masses[n] is the measure of the block-top landing point 2**(n+1);
    valley_masses[n] the state just below it; generic_masses samples states
    spread through each block (absolute state -> mass).  reference[n] is the
    harmonic comparison n*ln2/ln(n+e^2) and ratio_band brackets
    spike/reference over the reported blocks.
    """

    spike_masses: dict[int, float]
    reference: dict[int, float]
    ratio_band: tuple[float, float]
    generic_masses: dict[int, float]
    valley_masses: dict[int, float]
    bracket_width: float

    def rows(self):
        for n in sorted(self.spike_masses):
            spike = self.spike_masses[n]
            ref = self.reference[n]
            yield n, spike, ref, spike / ref


def limit_report(
    source: RenewalMeasure | Sequence[MCEstimate],
    h: float,
    positive_prob: float,
    mean: float,
    window_range: tuple[float, float],
) -> LimitReport:
    """Average the renewal density over unit windows in `window_range` and
    compare with positive_prob * h / mean (per unit h)."""
    if mean <= 0:
        raise LimitError(f"jump mean must be positive, got {mean}")
    if h <= 0:
        raise LimitError("window width h must be positive")
    x_min, x_max = window_range
    densities = []
    if isinstance(source, RenewalMeasure):
        if x_min < source.lo or x_max > source.hi:
            raise LimitError(
                f"window range [{x_min}, {x_max}] exceeds computed region "
                f"[{source.lo}, {source.hi}]"
            )
        x = x_min
        while x + h <= x_max + 1e-9:
            densities.append(source.interval_mass(x, h) / h)
            x += h
    else:
        for est in source:
            if not (x_min <= est.x and est.x + est.h <= x_max + 1e-9):
                raise LimitError(f"estimate window ({est.x}, {est.x + est.h}] outside range")
            densities.append(est.value / est.h)
    if not densities:
        raise LimitError("no windows inside the requested range")
    density = float(np.mean(densities))
    target = positive_prob / mean
    unit_target = 1.0 / mean
    rel = abs(density - target) / target if target > 0 else math.inf
    return LimitReport(
        density_estimate=density,
        target=target,
        unit_density_target=unit_target,
        relative_error=rel,
        window_range=(float(x_min), float(x_max)),
        positive_prob=float(positive_prob),
        jump_mean=float(mean),
        n_windows=len(densities),
    )


def flatness_check(measure: RenewalMeasure, window_range: tuple[int, int]) -> float:
    """Max variation |U(k, k+1] - U(k+1, k+2]| over adjacent unit windows."""
    x_min, x_max = window_range
    if x_min < measure.lo or x_max > measure.hi:
        raise LimitError("window range exceeds computed region")
    vals = [measure.interval_mass(k, 1.0) for k in range(int(x_min), int(x_max))]
    if len(vals) < 2:
        raise LimitError("need at least two adjacent windows")
    return float(max(abs(a - b) for a, b in zip(vals, vals[1:])))


def spike_reference(n: int) -> float:
    """Harmonic comparison value n*ln2/ln(n + e^2) for block n."""
    return n * math.log(2.0) / math.log(n + E_SQUARED)


def harmonic_block_sum(n: int) -> float:
    """Sum of 1/k for k = 2 .. 2**n + 1 (the block-n landing-rate total)."""
    ks = np.arange(2, (1 << n) + 2, dtype=np.float64)
    return float(np.sum(1.0 / ks))


def harmonic_ratio(n: int) -> float:
    """harmonic_block_sum(n) / (n ln 2); tends to 1 as n grows."""
    return harmonic_block_sum(n) / (n * math.log(2.0))


# block-relative positions sampled for the generic-state report
GENERIC_FRACTIONS = (0.05, 0.25, 0.5, 0.75)


def counterexample_growth(
    n_lo: int,
    n_hi: int,
    *,
    mu0=0,
    margin: int = 64,
    stop_tol: float = 1e-10,
    n_max: int = 200_000,
    measure: RenewalMeasure | None = None,
    backend=None,
) -> CounterexampleReport:
    """Exact renewal profile of the counterexample chain over blocks
    n_lo..n_hi: block-top spikes, pre-top valleys, and a spread of generic
    in-block states.

    Requires (or computes) a window covering [0, 2**(n_hi+1) + margin].
    Raises if the spikes do not stand out over the adjacent valleys; that
    contrast is what breaks the flatness of the measure.
    """
    if not 1 <= n_lo <= n_hi:
        raise LimitError("need 1 <= n_lo <= n_hi")
    if n_hi > 14:
        raise LimitError("blocks above n = 14 exceed the desk-scale window")
    top_state = (1 << (n_hi + 1)) + margin
    if measure is None:
        kernel = CounterexampleKernel()
        measure = renewal_measure(
            kernel, mu0, (0, top_state),
            n_max=n_max, stop_tol=stop_tol,
            certified=(0, top_state - margin // 2),
            backend=backend,
        )
    elif measure.hi < 1 << (n_hi + 1):
        raise LimitError(
            f"window top {measure.hi} does not cover block {n_hi} (needs >= {1 << (n_hi + 1)})"
        )
    spikes, refs, valleys, generic = {}, {}, {}, {}
    for n in range(n_lo, n_hi + 1):
        m = 1 << (n + 1)
        spikes[n] = measure.mass(m)
        valleys[n] = measure.mass(m - 1)
        refs[n] = spike_reference(n)
        bottom, length = (1 << n) - 1, 1 << n
        for f in GENERIC_FRACTIONS:
            k = bottom + max(2, int(f * length))
            if k < m - 1:
                generic[k] = measure.mass(k)
    ratios = [spikes[n] / refs[n] for n in spikes]
    if not all(spikes[n] > valleys[n] for n in spikes):
        raise LimitError("block-top masses do not stand out over their valleys")
    return CounterexampleReport(
        spike_masses=spikes,
        reference=refs,
        ratio_band=(float(min(ratios)), float(max(ratios))),
        generic_masses=generic,
        valley_masses=valleys,
        bracket_width=measure.bracket_width,
    )


def write_limit_csv(measure: RenewalMeasure, h: float, target: float,
                    window_range: tuple[float, float], path) -> None:
    """Plot-ready rows (x, U(x, x+h]/h, target)."""
    x_min, x_max = window_range
    with open(path, "w") as fh:
        fh.write("x,density,target\n")
        x = x_min
        while x + h <= x_max + 1e-9:
            fh.write(f"{x:.17g},{measure.interval_mass(x, h) / h:.17g},{target:.17g}\n")
            x += h


def write_counterexample_csv(report: CounterexampleReport, path) -> None:
    with open(path, "w") as fh:
        fh.write("n,spike,reference,ratio\n")
        for n, spike, ref, ratio in report.rows():
            fh.write(f"{n},{spike:.17g},{ref:.17g},{ratio:.17g}\n")
