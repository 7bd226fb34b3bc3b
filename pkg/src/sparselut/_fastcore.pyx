# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementations of the hot kernels.

Bit-exact mirror of ``sparselut._slowcore``: same float expression order
(compiled with -ffp-contract=off so no FMA contraction) and the same
(value, index) lexicographic selection rule. The parity tests compare the
two backends on random inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


cdef inline bint _lex_lt(double v1, Py_ssize_t i1, double v2, Py_ssize_t i2) noexcept nogil:
    return v1 < v2 or (v1 == v2 and i1 < i2)


cdef Py_ssize_t _k_smallest(const double* vals, const unsigned char* flags,
                            unsigned char want, Py_ssize_t n, Py_ssize_t stride,
                            Py_ssize_t k, double* buf_v, Py_ssize_t* buf_i) noexcept nogil:
    """Indices of the k smallest (value, index) pairs among rows whose flag
    matches `want`. Column access is strided; buffers hold k entries."""
    cdef Py_ssize_t i, m, filled = 0, worst
    cdef double v
    for i in range(n):
        if flags[i * stride] != want:
            continue
        v = vals[i * stride]
        if filled < k:
            buf_v[filled] = v
            buf_i[filled] = i
            filled += 1
            continue
        worst = 0
        for m in range(1, k):
            if _lex_lt(buf_v[worst], buf_i[worst], buf_v[m], buf_i[m]):
                worst = m
        if _lex_lt(v, i, buf_v[worst], buf_i[worst]):
            buf_v[worst] = v
            buf_i[worst] = i
    return filled


cdef Py_ssize_t _k_largest(const double* vals, const unsigned char* flags,
                           unsigned char want, Py_ssize_t n, Py_ssize_t stride,
                           Py_ssize_t k, double* buf_v, Py_ssize_t* buf_i) noexcept nogil:
    cdef Py_ssize_t i, m, filled = 0, worst
    cdef double v
    for i in range(n):
        if flags[i * stride] != want:
            continue
        v = vals[i * stride]
        if filled < k:
            buf_v[filled] = v
            buf_i[filled] = i
            filled += 1
            continue
        worst = 0
        for m in range(1, k):
            if _lex_lt(buf_v[m], buf_i[m], buf_v[worst], buf_i[worst]):
                worst = m
        if _lex_lt(buf_v[worst], buf_i[worst], v, i):
            buf_v[worst] = v
            buf_i[worst] = i
    return filled


def rewire_step(object theta_arr, object sign_arr, object active_arr,
                object dtheta_arr, object noise_arr, object priority_arr,
                double eta, double alpha, double eps1, double eps2,
                Py_ssize_t fanin, bint phase2):
    """See ``sparselut._slowcore.rewire_step``; identical contract."""
    cdef double[:, ::1] theta = theta_arr
    cdef double[:, ::1] dtheta = dtheta_arr
    cdef double[:, ::1] noise = noise_arr
    cdef double[:, ::1] priority = priority_arr
    cdef unsigned char[:, ::1] active = active_arr.view(np.uint8)

    cdef Py_ssize_t n_in = theta.shape[0]
    cdef Py_ssize_t n_out = theta.shape[1]
    cdef Py_ssize_t i, j, m, cnt, r, k, kept
    cdef double th

    buf_v_arr = np.empty(n_in, dtype=np.float64)
    buf_i_arr = np.empty(n_in, dtype=np.intp)
    keep_arr = np.zeros(n_in, dtype=np.uint8)
    cdef double[:] buf_v = buf_v_arr
    cdef Py_ssize_t[:] buf_i = buf_i_arr
    cdef unsigned char[:] keep = keep_arr

    with nogil:
        for j in range(n_out):
            cnt = 0
            for i in range(n_in):
                if active[i, j]:
                    th = theta[i, j] - eta * dtheta[i, j] - eta * alpha + eta * noise[i, j]
                    theta[i, j] = th
                    if th > 0.0:
                        cnt += 1
                    else:
                        active[i, j] = 0

            r = cnt - fanin
            if r == 0:
                continue
            if r < 0:
                k = _k_smallest(&priority[0, j], &active[0, j], 0, n_in, n_out,
                                -r, &buf_v[0], &buf_i[0])
                for m in range(k):
                    theta[buf_i[m], j] = eps1
                    active[buf_i[m], j] = 1
            elif r <= fanin:
                k = _k_smallest(&theta[0, j], &active[0, j], 1, n_in, n_out,
                                r, &buf_v[0], &buf_i[0])
                for m in range(k):
                    i = buf_i[m]
                    if phase2:
                        theta[i, j] = 0.0
                        active[i, j] = 0
                    else:
                        theta[i, j] = theta[i, j] - eps2
                        if theta[i, j] <= 0.0:
                            active[i, j] = 0
            else:
                # surplus larger than the kept set: cheaper to select the
                # fanin largest and hit the complement
                kept = _k_largest(&theta[0, j], &active[0, j], 1, n_in, n_out,
                                  fanin, &buf_v[0], &buf_i[0])
                for m in range(kept):
                    keep[buf_i[m]] = 1
                for i in range(n_in):
                    if active[i, j] and not keep[i]:
                        if phase2:
                            theta[i, j] = 0.0
                            active[i, j] = 0
                        else:
                            theta[i, j] = theta[i, j] - eps2
                            if theta[i, j] <= 0.0:
                                active[i, j] = 0
                for m in range(kept):
                    keep[buf_i[m]] = 0


def fill_table(object in_levels_arr, object mono_a_arr, object mono_b_arr,
               object weights_arr, double bias, object out_boundaries_arr,
               Py_ssize_t beta_in, Py_ssize_t fan_in, object out_codes_arr):
    """See ``sparselut._slowcore.fill_table``; identical contract."""
    cdef double[::1] in_levels = in_levels_arr
    cdef int[::1] mono_a = mono_a_arr
    cdef int[::1] mono_b = mono_b_arr
    cdef double[::1] weights = weights_arr
    cdef double[::1] bnd = out_boundaries_arr
    cdef unsigned int[::1] out_codes = out_codes_arr

    cdef Py_ssize_t n_rows = out_codes.shape[0]
    cdef Py_ssize_t n_mono = weights.shape[0]
    cdef Py_ssize_t n_bnd = bnd.shape[0]
    cdef unsigned long long level_mask = (1ULL << beta_in) - 1
    cdef unsigned long long row
    cdef Py_ssize_t f, m, lo, hi, mid
    cdef int a, b
    cdef double acc

    x_arr = np.empty(fan_in, dtype=np.float64)
    cdef double[:] x = x_arr

    with nogil:
        for row in range(<unsigned long long> n_rows):
            for f in range(fan_in):
                x[f] = in_levels[<Py_ssize_t> ((row >> (beta_in * (fan_in - 1 - f))) & level_mask)]
            acc = 0.0
            for m in range(n_mono):
                a = mono_a[m]
                b = mono_b[m]
                if a < 0:
                    acc += weights[m]
                elif b < 0:
                    acc += weights[m] * x[a]
                else:
                    acc += weights[m] * (x[a] * x[b])
            acc += bias
            if acc < 0.0:
                acc = 0.0
            elif acc > 1.0:
                acc = 1.0
            # searchsorted(side="right"): first boundary index > acc
            lo = 0
            hi = n_bnd
            while lo < hi:
                mid = (lo + hi) >> 1
                if bnd[mid] <= acc:
                    lo = mid + 1
                else:
                    hi = mid
            out_codes[<Py_ssize_t> row] = <unsigned int> lo
