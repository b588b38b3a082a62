"""Trajectory simulation: occupation-count estimates of the renewal measure,
the limiting positive probability, and stay-above probabilities.

Reproducibility: trajectory i draws its uniforms from a Philox stream keyed
by (master_seed, i), so results are bit-identical across reruns and across
block sizes; estimates are means of integer per-trajectory counts reduced
with numpy's pairwise summation.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import backend_for
from .chains import InitialLaw, MarkovKernel

DEFAULT_BLOCK = 2048


class HorizonWarning(UserWarning):
    """Trajectories did not settle beyond the probed region."""


class HorizonError(RuntimeError):
    """Strict-mode escalation of HorizonWarning."""


@dataclass(frozen=True)
class MCEstimate:
    """Sample-mean estimate with its standard error and provenance."""

    value: float
    stderr: float
    n_trajectories: int
    horizon: int
    master_seed: int
    x: float = float("nan")
    h: float = float("nan")


@dataclass(frozen=True)
class PositiveProbEstimate:
    """Fraction of trajectories above a threshold at the probe time."""

    value: float
    ci95_halfwidth: float
    probe_time: int
    threshold: float
    n_trajectories: int
    master_seed: int
    value_at_half_time: float
    stable: bool

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError("probability estimate escaped [0, 1]")


def _trajectory_uniforms(master_seed: int, index: int, count: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=[int(master_seed), int(index)]))
    return gen.random(count)


def _initial_states(kernel, mu0, u0: np.ndarray | None, block: int) -> np.ndarray:
    if isinstance(mu0, InitialLaw):
        if mu0.is_point():
            return np.full(block, float(mu0.states[0]))
        return mu0.sample(u0)
    if np.isscalar(mu0):
        return np.full(block, float(mu0))
    raise ValueError(f"unsupported initial law {mu0!r}")


def _needs_initial_draw(mu0) -> bool:
    return isinstance(mu0, InitialLaw) and not mu0.is_point()


def _simulate(
    kernel: MarkovKernel,
    mu0,
    horizon: int,
    n_traj: int,
    master_seed: int,
    targets: Sequence[tuple[float, float]] = (),
    probe_steps: Sequence[int] = (),
    block_size: int = DEFAULT_BLOCK,
    backend=None,
):
    """Run all trajectories; returns (counts, min_after, finals, probes).

    counts[i, j] counts visits of trajectory i to (x_j, x_j + h_j] over steps
    0..horizon; min_after[i] is the minimum over steps 1..horizon; probes
    holds the state at each requested step.
    """
    be = backend_for(kernel, backend)
    t_lo = np.array([x for x, _ in targets], dtype=np.float64)
    t_hi = np.array([x + h for x, h in targets], dtype=np.float64)
    probe_arr = np.array(sorted(probe_steps), dtype=np.int64)
    draw_init = _needs_initial_draw(mu0)
    per_traj = horizon + (1 if draw_init else 0)

    counts = np.zeros((n_traj, len(targets)), dtype=np.int64)
    min_after = np.empty(n_traj)
    finals = np.empty(n_traj)
    probes = np.empty((n_traj, probe_arr.size))

    for start in range(0, n_traj, block_size):
        block = min(block_size, n_traj - start)
        uniforms = np.empty((block, per_traj))
        for i in range(block):
            uniforms[i] = _trajectory_uniforms(master_seed, start + i, per_traj)
        if draw_init:
            states = _initial_states(kernel, mu0, uniforms[:, 0], block)
            steps = np.ascontiguousarray(uniforms[:, 1:])
        else:
            states = _initial_states(kernel, mu0, None, block)
            steps = np.ascontiguousarray(uniforms)
        # step 0 (the initial state) counts toward the visit totals
        blk_counts = counts[start : start + block]
        for j in range(len(targets)):
            blk_counts[:, j] += (states > t_lo[j]) & (states <= t_hi[j])
        blk_min = min_after[start : start + block]
        blk_probes = probes[start : start + block]
        be.simulate_block(kernel, states, steps, t_lo, t_hi, blk_counts, blk_min, probe_arr, blk_probes)
        finals[start : start + block] = states
    return counts, min_after, finals, list(probe_arr), probes


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    mean = float(values.mean())
    if values.size < 2:
        return mean, 0.0
    return mean, float(values.std(ddof=1) / np.sqrt(values.size))


def estimate_renewal(
    kernel: MarkovKernel,
    mu0,
    targets: Sequence[tuple[float, float]],
    horizon: int,
    n_traj: int,
    master_seed: int,
    *,
    margin: float = 10.0,
    strict: bool = False,
    block_size: int = DEFAULT_BLOCK,
    backend=None,
) -> list[MCEstimate]:
    """Occupation estimates of the renewal measure of each window (x, x+h].

    Visits after the horizon are missed, so the horizon must carry the
    trajectories well past the probed region: if fewer than 99% of final
    positions clear max target + margin, a HorizonWarning is issued
    (HorizonError under strict=True).
    """
    if not targets:
        raise ValueError("no targets")
    counts, _, finals, _, _ = _simulate(
        kernel, mu0, horizon, n_traj, master_seed,
        targets=targets, block_size=block_size, backend=backend,
    )
    top = max(x + h for x, h in targets)
    passed = float((finals >= top + margin).mean())
    if passed < 0.99:
        msg = (
            f"only {passed:.1%} of trajectories ended beyond max target + margin "
            f"({top + margin:g}); horizon {horizon} may bias the estimates low"
        )
        if strict:
            raise HorizonError(msg)
        warnings.warn(msg, HorizonWarning, stacklevel=2)
    out = []
    for j, (x, h) in enumerate(targets):
        mean, err = _mean_stderr(counts[:, j].astype(np.float64))
        out.append(MCEstimate(mean, err, n_traj, horizon, master_seed, float(x), float(h)))
    return out


def estimate_positive_prob(
    kernel: MarkovKernel,
    mu0,
    threshold: float,
    probe_time: int,
    n_traj: int,
    master_seed: int,
    *,
    strict: bool = False,
    block_size: int = DEFAULT_BLOCK,
    backend=None,
) -> PositiveProbEstimate:
    """Fraction of trajectories above `threshold` at the probe time.

    The estimate at probe_time/2 is reported alongside; if the two differ by
    more than two CI widths the chain has not escaped yet and the result is
    flagged unstable (error under strict=True).
    """
    half = max(1, probe_time // 2)
    _, _, _, steps, probes = _simulate(
        kernel, mu0, probe_time, n_traj, master_seed,
        probe_steps=[half, probe_time], block_size=block_size, backend=backend,
    )
    at_half = probes[:, steps.index(half)]
    at_end = probes[:, steps.index(probe_time)]
    value = float((at_end > threshold).mean())
    value_half = float((at_half > threshold).mean())
    ci = 1.96 * np.sqrt(max(value * (1.0 - value), 1.0 / n_traj) / n_traj)
    stable = abs(value - value_half) <= 2.0 * ci
    if not stable:
        msg = (
            f"positive-probability estimate moved from {value_half:.4f} (t={half}) "
            f"to {value:.4f} (t={probe_time}); probe time looks too short"
        )
        if strict:
            raise HorizonError(msg)
        warnings.warn(msg, HorizonWarning, stacklevel=2)
    return PositiveProbEstimate(
        value=value,
        ci95_halfwidth=float(ci),
        probe_time=probe_time,
        threshold=float(threshold),
        n_trajectories=n_traj,
        master_seed=master_seed,
        value_at_half_time=value_half,
        stable=stable,
    )


def estimate_stay_above(
    kernel: MarkovKernel,
    x: float,
    horizon: int,
    n_traj: int,
    master_seed: int,
    *,
    block_size: int = DEFAULT_BLOCK,
    backend=None,
) -> MCEstimate:
    """Fraction of trajectories started at x that stay above x for all of
    steps 1..horizon.

    This upper-bounds (and converges to, as the horizon grows) the
    probability of never revisiting (-inf, x].
    """
    _, min_after, _, _, _ = _simulate(
        kernel, float(x), horizon, n_traj, master_seed, block_size=block_size, backend=backend,
    )
    stayed = (min_after > float(x)).astype(np.float64)
    mean, err = _mean_stderr(stayed)
    return MCEstimate(mean, err, n_traj, horizon, master_seed, float(x), 0.0)


def write_mc_csv(estimates: Sequence[MCEstimate], path) -> None:
    with open(path, "w") as fh:
        fh.write("x,h,estimate,stderr,n_traj,horizon,seed\n")
        for e in estimates:
            fh.write(
                f"{e.x:.17g},{e.h:.17g},{e.value:.17g},{e.stderr:.17g},"
                f"{e.n_trajectories},{e.horizon},{e.master_seed}\n"
            )
