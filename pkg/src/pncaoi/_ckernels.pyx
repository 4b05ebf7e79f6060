# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: slot-level protocol stepping and Viterbi decoding.

Bit-identical twin of `_pykernels` (same draw order, comparisons and
floating-point grouping); see that module for the state layout contract.
"""
import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef enum:
    KIND_OLTD = 0
    KIND_RPT = 1
    KIND_ULTD = 2
    KIND_DLTD = 3

cdef enum:
    I_KIND = 0
    I_PHASE = 1
    I_T = 2
    I_GEN = 3
    I_RCVD_A = 4
    I_RCVD_B = 5
    I_WARM = 6
    I_START = 7
    I_LAST_A = 8
    I_LAST_B = 9
    I_DELIV = 10
    I_GENCNT = 11
    I_UP_IDX = 12
    I_DNA_IDX = 13
    I_DNB_IDX = 14
    I_CAP_A = 15
    I_CAP_B = 16
    I_OVERFLOW = 17

cdef enum:
    F_AREA_A = 0
    F_AREA_B = 1
    F_AGE_A = 2
    F_AGE_B = 3
    F_DELAY_SUM = 4


cdef inline void _reset_user(cnp.int64_t* ist, double* fst, int u, cnp.int64_t tr,
                             double[::1] cap_t, double[::1] cap_v) noexcept:
    cdef double rv = <double>(tr - ist[I_GEN])
    cdef cnp.int64_t last = ist[I_LAST_A + u]
    cdef cnp.int64_t start, n
    cdef cnp.int64_t s0
    cdef double v0, dt
    if ist[I_WARM] == 1:
        start = ist[I_START]
        s0 = last if last >= start else start
        v0 = fst[F_AGE_A + u] + <double>(s0 - last)
        dt = <double>(tr - s0)
        fst[F_AREA_A + u] += v0 * dt + 0.5 * dt * dt
        ist[I_DELIV] += 1
        ist[I_GENCNT] += 1
        fst[F_DELAY_SUM] += rv
    ist[I_LAST_A + u] = tr
    fst[F_AGE_A + u] = rv
    if cap_t.shape[0] > 0:
        n = ist[I_CAP_A + u]
        if n < cap_t.shape[0]:
            cap_t[n] = <double>tr
            cap_v[n] = rv
            ist[I_CAP_A + u] = n + 1
        else:
            ist[I_OVERFLOW] = 1


def run_bernoulli(cnp.int64_t[::1] ist_mv, double[::1] fst_mv,
                  double alpha, double beta, cnp.int64_t horizon,
                  double[::1] uniforms,
                  double[::1] cap_ta, double[::1] cap_va,
                  double[::1] cap_tb, double[::1] cap_vb):
    cdef cnp.int64_t* ist = &ist_mv[0]
    cdef double* fst = &fst_mv[0]
    cdef int kind = <int>ist[I_KIND]
    cdef bint drop_up = kind == KIND_OLTD or kind == KIND_ULTD
    cdef bint single_shot_down = kind == KIND_OLTD or kind == KIND_DLTD
    cdef cnp.int64_t t = ist[I_T]
    cdef Py_ssize_t idx = 0
    cdef Py_ssize_t n_u = uniforms.shape[0]
    cdef bint ok
    cdef int u
    while t < horizon and idx + 2 <= n_u:
        if ist[I_PHASE] == 0:
            ok = uniforms[idx] < alpha
            idx += 1
            if ok:
                ist[I_PHASE] = 1
                ist[I_RCVD_A] = 0
                ist[I_RCVD_B] = 0
            elif drop_up:
                ist[I_GEN] = t + 1
                if ist[I_WARM] == 1:
                    ist[I_GENCNT] += 2
        else:
            for u in range(2):
                if ist[I_RCVD_A + u] == 0:
                    ok = uniforms[idx] < beta
                    idx += 1
                    if ok:
                        ist[I_RCVD_A + u] = 1
                        if u == 0:
                            _reset_user(ist, fst, 0, t + 1, cap_ta, cap_va)
                        else:
                            _reset_user(ist, fst, 1, t + 1, cap_tb, cap_vb)
                    elif single_shot_down and ist[I_WARM] == 1:
                        ist[I_GENCNT] += 1
            if single_shot_down or (ist[I_RCVD_A] == 1 and ist[I_RCVD_B] == 1):
                ist[I_PHASE] = 0
                ist[I_RCVD_A] = 0
                ist[I_RCVD_B] = 0
                ist[I_GEN] = t + 1
            if ist[I_WARM] == 0 and ist[I_LAST_A] >= 0 and ist[I_LAST_B] >= 0:
                ist[I_WARM] = 1
                ist[I_START] = t + 1
        t += 1
    ist[I_T] = t
    return idx


def run_trace(cnp.int64_t[::1] ist_mv, double[::1] fst_mv,
              cnp.uint8_t[::1] up, cnp.uint8_t[::1] dn_a, cnp.uint8_t[::1] dn_b,
              cnp.int64_t horizon, bint wrap,
              double[::1] cap_ta, double[::1] cap_va,
              double[::1] cap_tb, double[::1] cap_vb):
    cdef cnp.int64_t* ist = &ist_mv[0]
    cdef double* fst = &fst_mv[0]
    cdef int kind = <int>ist[I_KIND]
    cdef bint drop_up = kind == KIND_OLTD or kind == KIND_ULTD
    cdef bint single_shot_down = kind == KIND_OLTD or kind == KIND_DLTD
    cdef cnp.int64_t t = ist[I_T]
    cdef cnp.int64_t i
    cdef bint ok
    cdef int u
    while t < horizon:
        if ist[I_PHASE] == 0:
            i = ist[I_UP_IDX]
            if wrap:
                ok = up[i % up.shape[0]] != 0
            elif i < up.shape[0]:
                ok = up[i] != 0
            else:
                ist[I_T] = t
                return 1
            ist[I_UP_IDX] = i + 1
            if ok:
                ist[I_PHASE] = 1
                ist[I_RCVD_A] = 0
                ist[I_RCVD_B] = 0
            elif drop_up:
                ist[I_GEN] = t + 1
                if ist[I_WARM] == 1:
                    ist[I_GENCNT] += 2
        else:
            for u in range(2):
                if ist[I_RCVD_A + u] == 0:
                    i = ist[I_DNA_IDX + u]
                    if u == 0:
                        if wrap:
                            ok = dn_a[i % dn_a.shape[0]] != 0
                        elif i < dn_a.shape[0]:
                            ok = dn_a[i] != 0
                        else:
                            ist[I_T] = t
                            return 2
                    else:
                        if wrap:
                            ok = dn_b[i % dn_b.shape[0]] != 0
                        elif i < dn_b.shape[0]:
                            ok = dn_b[i] != 0
                        else:
                            ist[I_T] = t
                            return 3
                    ist[I_DNA_IDX + u] = i + 1
                    if ok:
                        ist[I_RCVD_A + u] = 1
                        if u == 0:
                            _reset_user(ist, fst, 0, t + 1, cap_ta, cap_va)
                        else:
                            _reset_user(ist, fst, 1, t + 1, cap_tb, cap_vb)
                    elif single_shot_down and ist[I_WARM] == 1:
                        ist[I_GENCNT] += 1
            if single_shot_down or (ist[I_RCVD_A] == 1 and ist[I_RCVD_B] == 1):
                ist[I_PHASE] = 0
                ist[I_RCVD_A] = 0
                ist[I_RCVD_B] = 0
                ist[I_GEN] = t + 1
            if ist[I_WARM] == 0 and ist[I_LAST_A] >= 0 and ist[I_LAST_B] >= 0:
                ist[I_WARM] = 1
                ist[I_START] = t + 1
        t += 1
    ist[I_T] = t
    return 0


def viterbi_batch(double[:, ::1] llrs, double[:, ::1] sign0, double[:, ::1] sign1):
    cdef Py_ssize_t n = llrs.shape[0]
    cdef Py_ssize_t steps = llrs.shape[1] // 2
    cdef cnp.ndarray[cnp.uint8_t, ndim=3] bp = np.empty((steps, n, 64), dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=2] bits = np.empty((n, steps), dtype=np.uint8)
    cdef double[64] pm_prev
    cdef double[64] pm
    cdef double l0, l1, cand0, cand1
    cdef Py_ssize_t pk, t, ns, p0
    cdef int state
    cdef double NEG_INF = -np.inf
    for pk in range(n):
        for ns in range(64):
            pm_prev[ns] = NEG_INF
        pm_prev[0] = 0.0
        for t in range(steps):
            l0 = llrs[pk, 2 * t]
            l1 = llrs[pk, 2 * t + 1]
            for ns in range(64):
                p0 = (ns & 31) << 1
                cand0 = pm_prev[p0] + l0 * sign0[ns, 0] + l1 * sign1[ns, 0]
                cand1 = pm_prev[p0 | 1] + l0 * sign0[ns, 1] + l1 * sign1[ns, 1]
                if cand1 > cand0:
                    pm[ns] = cand1
                    bp[t, pk, ns] = 1
                else:
                    pm[ns] = cand0
                    bp[t, pk, ns] = 0
            for ns in range(64):
                pm_prev[ns] = pm[ns]
        state = 0
        for t in range(steps - 1, -1, -1):
            bits[pk, t] = state >> 5
            state = ((state & 31) << 1) | bp[t, pk, state]
    return bits
