"""Exact renewal measures for lattice chains by dense window iteration.

The distribution of the chain is pushed forward step by step on a truncated
integer window [lo, hi]; mass stepping outside moves into absorbing buckets
and is never revived.  Accumulating the per-step distributions yields the
renewal measure restricted to the window, together with a rigorous error
bracket: every unit of absorbed or residual mass can generate at most
``visit_cap`` future visits to any unit window (uniform-transience bound),
damped by the chain's certified re-entry factors across the gap between the
truncation boundary and the certified probe range.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from ._kernels import backend_for
from .chains import InitialLaw, MarkovKernel

CONSERVATION_TOL = 1e-9
_RESCAN_EVERY = 64


class WindowError(ValueError):
    """Window/initial-law mismatch or a non-lattice kernel."""


class AccuracyError(RuntimeError):
    """Requested accuracy not achieved; carries the bracket that was reached."""

    def __init__(self, bracket: float, requested: float):
        super().__init__(
            f"insufficient window/iterations: achieved bracket {bracket:.3e} "
            f"exceeds requested accuracy {requested:.3e}"
        )
        self.bracket = bracket
        self.requested = requested


@dataclass
class StateWindow:
    """Inclusive truncation bounds plus the mass absorbed at each side."""

    lo: int
    hi: int
    absorb_left_mass: float = 0.0
    absorb_right_mass: float = 0.0

    def __post_init__(self):
        if self.lo >= self.hi:
            raise WindowError(f"window needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1


@dataclass(frozen=True)
class MeasureVector:
    """Distribution of the chain at one step, restricted to the window."""

    lo: int
    masses: np.ndarray
    step_index: int

    def mass(self, k: int) -> float:
        i = int(k) - self.lo
        if 0 <= i < self.masses.size:
            return float(self.masses[i])
        return 0.0

    def total(self) -> float:
        return float(self.masses.sum())

    def as_dict(self) -> dict[int, float]:
        nz = np.nonzero(self.masses)[0]
        return {int(self.lo + i): float(self.masses[i]) for i in nz}


@dataclass(frozen=True)
class RenewalMeasure:
    """Window-restricted renewal masses with a one-sided error bracket.

    The true expected visit count to state k lies in
    ``[mass(k), mass(k) + bracket_width]`` for every k inside the certified
    range; outside it only the lower bound holds.
    """

    lo: int
    hi: int
    masses: np.ndarray
    bracket_width: float
    iterations_used: int
    visit_cap: float
    certified_lo: int
    certified_hi: int
    absorb_left: float
    absorb_right: float
    residual_interior: float

    def mass(self, k: int) -> float:
        i = int(k) - self.lo
        if 0 <= i < self.masses.size:
            return float(self.masses[i])
        return 0.0

    def interval_mass(self, x: float, h: float) -> float:
        """Mass of the window (x, x+h]."""
        ks = np.arange(self.lo, self.hi + 1)
        sel = (ks > x) & (ks <= x + h)
        return float(self.masses[sel].sum())

    def states(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1)

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("state,mass,bracket_width,iterations\n")
            for k, m in zip(self.states(), self.masses):
                fh.write(f"{k},{m:.17g},{self.bracket_width:.17g},{self.iterations_used}\n")


@dataclass(frozen=True)
class GreenFunction(RenewalMeasure):
    """Renewal measure started from a point mass (`start`)."""

    start: int = 0


class PositiveProbBounds(NamedTuple):
    lower: float
    upper: float


def default_window(
    kernel: MarkovKernel,
    probe_lo: int,
    probe_hi: int,
    margin: int = 60,
    include: tuple = (),
) -> tuple[int, int]:
    """Truncation window with slack around the probed region and any extra
    states (typically the initial law's support)."""
    lo = min((probe_lo, *map(int, include)))
    hi = max((probe_hi, *map(int, include)))
    if kernel.name in ("counterexample", "reflected_walk"):
        return min(0, lo), hi + margin
    return lo - margin, hi + margin


# ---------------------------------------------------------------------------
# window transition table
# ---------------------------------------------------------------------------


class _WindowTable:
    """Flattened per-state landing table over a window, absorption included.

    Entry arrays are ordered by source state so that both backends accumulate
    in the same sequence; ``indptr`` delimits the rows.
    """

    def __init__(self, kernel: MarkovKernel, lo: int, hi: int):
        if not kernel.lattice:
            raise WindowError(f"{kernel.name} is not a lattice chain; use the Monte Carlo engine")
        n = hi - lo + 1
        src_list, dst_list, prb_list = [], [], []
        indptr = np.zeros(n + 1, dtype=np.int64)
        off_min, off_max = 0, 0
        for i, k in enumerate(range(lo, hi + 1)):
            targets, probs = kernel.lattice_targets(k)
            off_min = min(off_min, int(targets.min()) - k)
            off_max = max(off_max, int(targets.max()) - k)
            for t, p in zip(targets, probs):
                if p <= 0.0:
                    continue
                if t < lo:
                    j = n
                elif t > hi:
                    j = n + 1
                else:
                    j = int(t) - lo
                src_list.append(i)
                dst_list.append(j)
                prb_list.append(float(p))
            indptr[i + 1] = len(src_list)
        self.lo, self.hi, self.n = lo, hi, n
        self.src = np.array(src_list, dtype=np.int64)
        self.dst = np.array(dst_list, dtype=np.int64)
        self.prob = np.array(prb_list, dtype=np.float64)
        self.indptr = indptr
        self.off_min = off_min
        self.off_max = off_max


def _mu0_vector(mu0, lo: int, hi: int) -> np.ndarray:
    """Normalize an initial-law argument into a window mass vector."""
    n = hi - lo + 1
    vec = np.zeros(n)
    if isinstance(mu0, InitialLaw):
        pairs = zip(mu0.states, mu0.probs)
    elif isinstance(mu0, dict):
        pairs = mu0.items()
    elif np.isscalar(mu0):
        pairs = [(mu0, 1.0)]
    else:
        raise WindowError(f"unsupported initial law {mu0!r}")
    for s, p in pairs:
        if float(s) != int(s):
            raise WindowError(f"lattice engine needs integer initial states, got {s}")
        k = int(s)
        if not lo <= k <= hi:
            raise WindowError(f"initial mass at {k} lies outside window [{lo}, {hi}]")
        vec[k - lo] += float(p)
    total = vec.sum()
    if abs(total - 1.0) > 1e-12:
        raise WindowError(f"initial law sums to {total}, not 1")
    return vec


# ---------------------------------------------------------------------------
# the driver
# ---------------------------------------------------------------------------


class _RunResult(NamedTuple):
    accumulated: np.ndarray | None
    masses: np.ndarray
    absorb_left: float
    absorb_right: float
    interior: float
    iterations: int


def _run_window(
    kernel,
    mu0_vec: np.ndarray,
    table: _WindowTable,
    n_max: int,
    stop_tol: float,
    visit_cap: float,
    accumulate: bool = True,
    backend=None,
) -> _RunResult:
    """Drive the backend in blocks of `_RESCAN_EVERY` steps; the stopping
    decision, active-range tightening, and conservation check run on exact
    pairwise sums at block boundaries, so the trajectory of the computation
    is identical for every backend."""
    backend = backend_for(kernel, backend)
    n = table.n
    buf_a, buf_b = np.zeros(n + 2), np.zeros(n + 2)
    buf_a[:n] = mu0_vec
    cur = 0
    a_left = a_right = 0.0
    acc = np.zeros(n)
    nz = np.nonzero(mu0_vec)[0]
    a0, a1 = int(nz[0]), int(nz[-1])
    steps = 0
    while True:
        masses = (buf_a, buf_b)[cur][:n]
        nz = np.nonzero(masses[a0 : a1 + 1])[0]
        if nz.size:
            a0, a1 = a0 + int(nz[0]), a0 + int(nz[-1])
            interior = float(masses[a0 : a1 + 1].sum())
        else:
            interior = 0.0
        drift = abs(interior + a_left + a_right - 1.0)
        if drift > CONSERVATION_TOL:
            raise ArithmeticError(f"mass conservation violated by {drift:.3e}")
        if interior * visit_cap < stop_tol or interior == 0.0 or steps >= n_max:
            break
        k = min(_RESCAN_EVERY, n_max - steps)
        cur, a0, a1, d_left, d_right = backend.window_run(
            buf_a, buf_b, acc, accumulate,
            table.src, table.dst, table.prob, table.indptr,
            cur, a0, a1, table.off_min, table.off_max, k,
        )
        a_left += d_left
        a_right += d_right
        steps += k
    masses = (buf_a, buf_b)[cur][:n]
    if accumulate:
        acc[a0 : a1 + 1] += masses[a0 : a1 + 1]
    return _RunResult(
        acc if accumulate else None, masses.copy(), a_left, a_right, interior, steps
    )


def _resolve_visit_cap(kernel, visit_cap) -> float:
    cap = visit_cap if visit_cap is not None else kernel.visit_cap_unit
    if cap is None or cap <= 0:
        raise WindowError(
            f"{kernel.name} carries no analytic visit cap; pass visit_cap explicitly "
            "(a uniform bound on expected visits to a unit window)"
        )
    return float(cap)


def _bracket(kernel, a_left, a_right, residual, visit_cap, lo, hi, certified_lo, certified_hi):
    gap_r = max(1, (hi + 1) - certified_hi)
    gap_l = max(1, certified_lo - (lo - 1))
    ret_r = kernel.escape.down_factor ** gap_r
    ret_l = kernel.escape.up_factor ** gap_l
    return (a_left * ret_l + a_right * ret_r + residual) * visit_cap


def iterate_distribution(
    kernel: MarkovKernel,
    mu0,
    window: tuple[int, int],
    n_max: int,
    stop_tol: float = 1e-8,
    visit_cap: float | None = None,
    backend=None,
) -> Iterator[tuple[MeasureVector, StateWindow]]:
    """Lazily yield the chain's distribution step by step on the window.

    Yields (mu_n, window-with-absorbed-mass) starting at n = 0; stops after
    n_max steps or once interior_mass * visit_cap < stop_tol.
    """
    lo, hi = window
    cap = _resolve_visit_cap(kernel, visit_cap)
    table = _WindowTable(kernel, lo, hi)
    be = backend_for(kernel, backend)
    n = table.n
    masses = _mu0_vector(mu0, lo, hi)
    out = np.zeros(n + 2)
    a_left = a_right = 0.0
    for step in range(n_max + 1):
        win = StateWindow(lo, hi, a_left, a_right)
        yield MeasureVector(lo, masses.copy(), step), win
        interior = float(masses.sum())
        if interior * cap < stop_tol or interior == 0.0 or step == n_max:
            return
        out[:] = 0.0
        be.window_step(masses, out, table.src, table.dst, table.prob, 0, len(table.prob))
        a_left += float(out[n])
        a_right += float(out[n + 1])
        masses = out[:n].copy()
        if abs(masses.sum() + a_left + a_right - 1.0) > CONSERVATION_TOL:
            raise ArithmeticError("mass conservation violated")


def renewal_measure(
    kernel: MarkovKernel,
    mu0,
    window: tuple[int, int],
    *,
    n_max: int = 200_000,
    stop_tol: float = 1e-10,
    visit_cap: float | None = None,
    certified: tuple[int, int] | None = None,
    accuracy: float | None = None,
    backend=None,
) -> RenewalMeasure:
    """Accumulated renewal measure on the window with a certified bracket.

    The true measure of each state k in the certified range lies in
    [mass(k), mass(k) + bracket_width].
    """
    lo, hi = window
    cap = _resolve_visit_cap(kernel, visit_cap)
    clo, chi = certified if certified is not None else (lo, hi)
    if not (lo <= clo <= chi <= hi):
        raise WindowError(f"certified range [{clo}, {chi}] escapes window [{lo}, {hi}]")
    table = _WindowTable(kernel, lo, hi)
    mu0_vec = _mu0_vector(mu0, lo, hi)
    res = _run_window(kernel, mu0_vec, table, n_max, stop_tol, cap, backend=backend)
    bracket = _bracket(kernel, res.absorb_left, res.absorb_right, res.interior, cap, lo, hi, clo, chi)
    if accuracy is not None and bracket > accuracy:
        raise AccuracyError(bracket, accuracy)
    return RenewalMeasure(
        lo=lo,
        hi=hi,
        masses=res.accumulated,
        bracket_width=bracket,
        iterations_used=res.iterations,
        visit_cap=cap,
        certified_lo=clo,
        certified_hi=chi,
        absorb_left=res.absorb_left,
        absorb_right=res.absorb_right,
        residual_interior=res.interior,
    )


def green_function(
    kernel: MarkovKernel,
    start: int,
    window: tuple[int, int],
    **kwargs,
) -> GreenFunction:
    """Renewal measure of the chain started at the point mass `start`."""
    rm = renewal_measure(kernel, int(start), window, **kwargs)
    return GreenFunction(
        lo=rm.lo,
        hi=rm.hi,
        masses=rm.masses,
        bracket_width=rm.bracket_width,
        iterations_used=rm.iterations_used,
        visit_cap=rm.visit_cap,
        certified_lo=rm.certified_lo,
        certified_hi=rm.certified_hi,
        absorb_left=rm.absorb_left,
        absorb_right=rm.absorb_right,
        residual_interior=rm.residual_interior,
        start=int(start),
    )


def positive_probability_bounds(
    kernel: MarkovKernel,
    mu0,
    window: tuple[int, int],
    n_at: int,
    backend=None,
) -> PositiveProbBounds:
    """Bounds on the limiting probability that the chain sits above 0.

    Computed from the distribution after n_at steps: interior mass above 0
    plus right-absorbed mass certified to stay positive gives the lower
    bound; undecided interior and left-absorbed mass (damped by the climb
    certificate) widen it upward.  Brackets tighten as n_at grows.
    """
    lo, hi = window
    table = _WindowTable(kernel, lo, hi)
    mu0_vec = _mu0_vector(mu0, lo, hi)
    res = _run_window(kernel, mu0_vec, table, n_at, 0.0, 1.0, accumulate=False, backend=backend)
    if res.iterations < n_at and res.interior > 0.0:
        raise WindowError(f"iteration stopped at {res.iterations} < n_at = {n_at}")
    ks = np.arange(lo, hi + 1)
    pos = float(res.masses[ks > 0].sum())
    nonpos = float(res.masses[ks <= 0].sum())
    down = kernel.escape.down_factor
    up = kernel.escape.up_factor
    gap_r = max(0, hi + 1)  # right-absorbed mass sits at >= hi+1, must descend that far to reach <= 0
    gap_l = max(1, 2 - lo)  # left-absorbed mass sits at <= lo-1, must climb to >= 1
    lower = pos + res.absorb_right * (1.0 - down**gap_r if gap_r > 0 else 0.0)
    upper = pos + nonpos + res.absorb_right + res.absorb_left * up**gap_l
    return PositiveProbBounds(max(0.0, min(1.0, lower)), max(0.0, min(1.0, upper)))
