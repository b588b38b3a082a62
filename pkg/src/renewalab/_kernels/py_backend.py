"""Pure-numpy implementations of the two hot kernels.

Contract shared with the compiled backend (`_core`):

* ``window_step`` accumulates one push-forward of a mass vector through a
  flattened window transition table into a caller-zeroed extended buffer
  (last two slots are the left/right absorption buckets), iterating table
  entries in row order so both backends add in the same sequence.
* ``simulate_block`` advances a block of trajectories through `H` steps,
  consuming exactly one uniform per trajectory per step, and accumulates
  interval visit counts, post-start minima, and probe-time snapshots.
"""

from __future__ import annotations

import numpy as np

NAME = "python"
FAMILIES = frozenset({0, 1, 2, 3, 4, 5})

_E2 = float(np.exp(2.0))


def window_step(masses, out_ext, src, dst, prob, e0, e1):
    """Accumulate one push-forward into the zeroed extended buffer; returns
    the interior mass written (total contributions minus absorbed)."""
    seg = slice(e0, e1)
    contrib = masses[src[seg]] * prob[seg]
    np.add.at(out_ext, dst[seg], contrib)
    n = out_ext.shape[0] - 2
    return float(contrib.sum()) - float(out_ext[n]) - float(out_ext[n + 1])


def window_run(buf_a, buf_b, acc, do_acc, src, dst, prob, indptr,
               cur, a0, a1, off_min, off_max, k):
    """Advance `k` steps, double-buffered; the incoming distribution of each
    step is added to `acc` before stepping.  Returns the new buffer index,
    active range, and the absorbed-mass increments."""
    n = buf_a.shape[0] - 2
    bufs = (buf_a, buf_b)
    d_left = d_right = 0.0
    for _ in range(k):
        m, o = bufs[cur], bufs[1 - cur]
        if do_acc:
            acc[a0 : a1 + 1] += m[a0 : a1 + 1]
        o[:] = 0.0
        seg = slice(int(indptr[a0]), int(indptr[a1 + 1]))
        np.add.at(o, dst[seg], m[src[seg]] * prob[seg])
        d_left += float(o[n])
        d_right += float(o[n + 1])
        cur = 1 - cur
        a0 = max(0, a0 + off_min)
        a1 = min(n - 1, a1 + off_max)
    return cur, a0, a1, d_left, d_right


def step_states(kernel, states, u):
    """One vectorized transition; returns the new state array."""
    fam = kernel.family
    if fam in (0, 1):  # homogeneous walk / reflected walk
        offsets, cum, _ = kernel.stepper_arrays()
        inc = offsets[np.searchsorted(cum, u, side="right")]
        new = states + inc
        if fam == 1:
            np.maximum(new, 0.0, out=new)
        return new
    if fam == 2:  # three_branch
        p = kernel.params["p"]
        up = np.where(states >= 1.0, 0.75, np.where(states <= -1.0, 0.25, p))
        return states + np.where(u < up, 1.0, -1.0)
    if fam == 3:  # counterexample blocks
        _, e = np.frexp(states + 1.0)
        n = e.astype(np.float64) - 1.0
        top = np.ldexp(1.0, e)
        q = 1.0 / ((top - states) * np.log(n + _E2))
        return np.where(u < 0.5, states, np.where(u < 1.0 - q, states + 1.0, top))
    if fam == 4:  # perturbed uniform walk
        return states + (2.5 * u - 1.0) + 0.5 * np.exp(-np.abs(states))
    if fam == 5:  # custom lattice table
        offsets, cum, _ = kernel.stepper_arrays()
        inc = offsets[np.searchsorted(cum, u, side="right")]
        for s, law in kernel.table.items():
            mask = states == float(s)
            if mask.any():
                inc[mask] = law.offsets.astype(np.float64)[
                    np.searchsorted(law.cumulative(), u[mask], side="right")
                ]
        return states + inc
    raise NotImplementedError(f"family {fam}")


def simulate_block(kernel, states, uniforms, t_lo, t_hi, counts, min_after, probe_steps, probe_out):
    horizon = uniforms.shape[1]
    n_targets = t_lo.shape[0]
    min_after[:] = np.inf
    pb = 0
    for s in range(horizon):
        states[:] = step_states(kernel, states, uniforms[:, s])
        np.minimum(min_after, states, out=min_after)
        for j in range(n_targets):
            counts[:, j] += (states > t_lo[j]) & (states <= t_hi[j])
        if pb < probe_steps.shape[0] and probe_steps[pb] == s + 1:
            probe_out[:, pb] = states
            pb += 1
