# Compiled implementations of the hot kernels: dense window push-forward and
# blockwise trajectory simulation.  Semantics mirror py_backend exactly; the
# contracts (iteration order, uniform consumption, tie-breaking) are shared.

from libc.math cimport exp, fabs, log
from libc.stdint cimport int64_t

import numpy as np

NAME = "compiled"
FAMILIES = frozenset({0, 1, 2, 3, 4})

cdef double E2 = exp(2.0)


def window_step(double[::1] masses, double[::1] out_ext,
                int64_t[::1] src, int64_t[::1] dst, double[::1] prob,
                Py_ssize_t e0, Py_ssize_t e1):
    # Accumulates into the zeroed extended buffer; returns interior mass written.
    cdef Py_ssize_t e, n = out_ext.shape[0] - 2
    cdef double total = 0.0, c
    with nogil:
        for e in range(e0, e1):
            c = masses[src[e]] * prob[e]
            out_ext[dst[e]] += c
            total += c
    return total - out_ext[n] - out_ext[n + 1]


def window_run(double[::1] buf_a, double[::1] buf_b, double[::1] acc, bint do_acc,
               int64_t[::1] src, int64_t[::1] dst, double[::1] prob, int64_t[::1] indptr,
               Py_ssize_t cur, Py_ssize_t a0, Py_ssize_t a1,
               Py_ssize_t off_min, Py_ssize_t off_max, Py_ssize_t k):
    # Mirrors py_backend.window_run: k double-buffered steps, accumulating
    # each incoming distribution before stepping it.
    cdef Py_ssize_t n = buf_a.shape[0] - 2
    cdef Py_ssize_t step, e, i
    cdef double d_left = 0.0, d_right = 0.0
    cdef double* bufs[2]
    cdef double* m
    cdef double* o
    bufs[0] = &buf_a[0]
    bufs[1] = &buf_b[0]
    with nogil:
        for step in range(k):
            m = bufs[cur]
            o = bufs[1 - cur]
            if do_acc:
                for i in range(a0, a1 + 1):
                    acc[i] += m[i]
            for i in range(n + 2):
                o[i] = 0.0
            for e in range(indptr[a0], indptr[a1 + 1]):
                o[dst[e]] += m[src[e]] * prob[e]
            d_left += o[n]
            d_right += o[n + 1]
            cur = 1 - cur
            a0 = a0 + off_min
            if a0 < 0:
                a0 = 0
            a1 = a1 + off_max
            if a1 > n - 1:
                a1 = n - 1
    return cur, a0, a1, d_left, d_right


cdef inline Py_ssize_t _pick(double[::1] cum, double u) noexcept nogil:
    # first index with cum[j] > u  (matches np.searchsorted side="right")
    cdef Py_ssize_t j = 0, n = cum.shape[0]
    while j < n - 1 and u >= cum[j]:
        j += 1
    return j


cdef void _count(double x, double[::1] t_lo, double[::1] t_hi,
                 int64_t[:, ::1] counts, Py_ssize_t i) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(t_lo.shape[0]):
        if t_lo[j] < x <= t_hi[j]:
            counts[i, j] += 1


def simulate_block(object kernel,
                   double[::1] states, double[:, ::1] uniforms,
                   double[::1] t_lo, double[::1] t_hi,
                   int64_t[:, ::1] counts, double[::1] min_after,
                   int64_t[::1] probe_steps, double[:, ::1] probe_out):
    cdef int family = kernel.family
    offs_arr, cum_arr, scalar = kernel.stepper_arrays()
    cdef double[::1] offs = np.ascontiguousarray(offs_arr, dtype=np.float64)
    cdef double[::1] cum = np.ascontiguousarray(cum_arr, dtype=np.float64)
    cdef double p0_param = scalar
    cdef Py_ssize_t n_traj = states.shape[0]
    cdef Py_ssize_t horizon = uniforms.shape[1]
    cdef Py_ssize_t n_probes = probe_steps.shape[0]
    cdef Py_ssize_t i, s, pb
    cdef double x, u, mn, up, q, top
    cdef int64_t ki, kp1, topi
    cdef int n

    if family not in (0, 1, 2, 3, 4):
        raise NotImplementedError(f"compiled backend does not handle family {family}")

    with nogil:
        for i in range(n_traj):
            x = states[i]
            mn = x
            pb = 0
            for s in range(horizon):
                u = uniforms[i, s]
                if family == 0 or family == 1:
                    x = x + offs[_pick(cum, u)]
                    if family == 1 and x < 0.0:
                        x = 0.0
                elif family == 2:
                    if x >= 1.0:
                        up = 0.75
                    elif x <= -1.0:
                        up = 0.25
                    else:
                        up = p0_param
                    x = x + 1.0 if u < up else x - 1.0
                elif family == 3:
                    if u >= 0.5:
                        ki = <int64_t>(x + 0.5)
                        kp1 = ki + 1
                        n = -1
                        while kp1 > 0:
                            kp1 >>= 1
                            n += 1
                        topi = (<int64_t>1) << (n + 1)
                        top = <double>topi
                        q = 1.0 / ((top - x) * log(n + E2))
                        x = x + 1.0 if u < 1.0 - q else top
                else:
                    x = x + (2.5 * u - 1.0) + 0.5 * exp(-fabs(x))
                if s == 0 or x < mn:
                    mn = x
                _count(x, t_lo, t_hi, counts, i)
                if pb < n_probes and probe_steps[pb] == s + 1:
                    probe_out[i, pb] = x
                    pb += 1
            states[i] = x
            min_after[i] = mn
