"""Pure-Python/numpy kernels: slot-level protocol stepping and Viterbi.

Reference implementation of the hot loops.  The compiled twin in
`_ckernels.pyx` must stay bit-identical: same draw order, same comparison
directions, same floating-point expression grouping.  `tests/test_kernels.py`
enforces the parity.
"""
import numpy as np

# Protocol codes shared with the compiled kernel.
KIND_OLTD, KIND_RPT, KIND_ULTD, KIND_DLTD = 0, 1, 2, 3

# int64 state slots.
(
    I_KIND,
    I_PHASE,
    I_T,
    I_GEN,
    I_RCVD_A,
    I_RCVD_B,
    I_WARM,
    I_START,
    I_LAST_A,
    I_LAST_B,
    I_DELIV,
    I_GENCNT,
    I_UP_IDX,
    I_DNA_IDX,
    I_DNB_IDX,
    I_CAP_A,
    I_CAP_B,
    I_OVERFLOW,
) = range(18)
N_ISTATE = 18

# float64 state slots.
F_AREA_A, F_AREA_B, F_AGE_A, F_AGE_B, F_DELAY_SUM = range(5)
N_FSTATE = 5

# run_trace return codes.
TRACE_OK, TRACE_UP_EXHAUSTED, TRACE_DNA_EXHAUSTED, TRACE_DNB_EXHAUSTED = 0, 1, 2, 3


def new_state(kind_code):
    ist = np.zeros(N_ISTATE, dtype=np.int64)
    fst = np.zeros(N_FSTATE, dtype=np.float64)
    ist[I_KIND] = kind_code
    ist[I_LAST_A] = -1
    ist[I_LAST_B] = -1
    return ist, fst


def _reset_user(ist, fst, u, tr, cap_t, cap_v):
    # tr: reset time (end of the decoding slot); age drops to tr - gen.
    rv = float(tr - ist[I_GEN])
    last = ist[I_LAST_A + u]
    if ist[I_WARM] == 1:
        start = ist[I_START]
        s0 = last if last >= start else start
        v0 = fst[F_AGE_A + u] + float(s0 - last)
        dt = float(tr - s0)
        fst[F_AREA_A + u] += v0 * dt + 0.5 * dt * dt
        ist[I_DELIV] += 1
        ist[I_GENCNT] += 1
        fst[F_DELAY_SUM] += rv
    ist[I_LAST_A + u] = tr
    fst[F_AGE_A + u] = rv
    if cap_t.shape[0] > 0:
        n = ist[I_CAP_A + u]
        if n < cap_t.shape[0]:
            cap_t[n] = float(tr)
            cap_v[n] = rv
            ist[I_CAP_A + u] = n + 1
        else:
            ist[I_OVERFLOW] = 1


def run_bernoulli(ist, fst, alpha, beta, horizon, uniforms,
                  cap_ta, cap_va, cap_tb, cap_vb):
    """Advance until `horizon` or the uniform buffer runs low.

    Returns the number of uniforms consumed; the caller refills and calls
    again while ist[I_T] < horizon.  Draw order: one uniform per uplink
    slot; in a downlink slot one uniform per not-yet-received user, A first.
    Capture arrays of length zero disable reset recording.
    """
    kind = int(ist[I_KIND])
    drop_up = kind in (KIND_OLTD, KIND_ULTD)
    single_shot_down = kind in (KIND_OLTD, KIND_DLTD)
    caps = ((cap_ta, cap_va), (cap_tb, cap_vb))
    t = int(ist[I_T])
    idx = 0
    n_u = uniforms.shape[0]
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
            for u in (0, 1):
                if ist[I_RCVD_A + u] == 0:
                    ok = uniforms[idx] < beta
                    idx += 1
                    if ok:
                        ist[I_RCVD_A + u] = 1
                        _reset_user(ist, fst, u, t + 1, *caps[u])
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


def run_trace(ist, fst, up, dn_a, dn_b, horizon, wrap,
              cap_ta, cap_va, cap_tb, cap_vb):
    """Advance on recorded outcomes until `horizon` or stream exhaustion.

    Returns a TRACE_* code; on exhaustion the state reflects the completed
    slots and the offending stream's index sits at its length.
    """
    kind = int(ist[I_KIND])
    drop_up = kind in (KIND_OLTD, KIND_ULTD)
    single_shot_down = kind in (KIND_OLTD, KIND_DLTD)
    caps = ((cap_ta, cap_va), (cap_tb, cap_vb))
    dn = (dn_a, dn_b)
    t = int(ist[I_T])
    while t < horizon:
        if ist[I_PHASE] == 0:
            i = int(ist[I_UP_IDX])
            if wrap:
                ok = up[i % up.shape[0]] != 0
            elif i < up.shape[0]:
                ok = up[i] != 0
            else:
                ist[I_T] = t
                return TRACE_UP_EXHAUSTED
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
            for u in (0, 1):
                if ist[I_RCVD_A + u] == 0:
                    i = int(ist[I_DNA_IDX + u])
                    stream = dn[u]
                    if wrap:
                        ok = stream[i % stream.shape[0]] != 0
                    elif i < stream.shape[0]:
                        ok = stream[i] != 0
                    else:
                        ist[I_T] = t
                        return TRACE_DNA_EXHAUSTED + u
                    ist[I_DNA_IDX + u] = i + 1
                    if ok:
                        ist[I_RCVD_A + u] = 1
                        _reset_user(ist, fst, u, t + 1, *caps[u])
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
    return TRACE_OK


def viterbi_batch(llrs, sign0, sign1):
    """Maximum-correlation trellis decode of a batch of rate-1/2 blocks.

    llrs: (n, 2T) with positive values favouring bit 0.  sign0/sign1:
    (64, 2) BPSK signs of the two output bits on the transition into each
    state from its two predecessors.  Paths start and end in state zero;
    returns all T decided bits per block (tail included).
    """
    llrs = np.ascontiguousarray(llrs, dtype=np.float64)
    n, two_t = llrs.shape
    steps = two_t // 2
    pred0 = ((np.arange(64) & 31) << 1).astype(np.intp)
    pred1 = pred0 | 1
    pm = np.full((n, 64), -np.inf)
    pm[:, 0] = 0.0
    bp = np.empty((steps, n, 64), dtype=np.uint8)
    s00, s10 = sign0[:, 0], sign0[:, 1]
    s01, s11 = sign1[:, 0], sign1[:, 1]
    for t in range(steps):
        l0 = llrs[:, 2 * t][:, None]
        l1 = llrs[:, 2 * t + 1][:, None]
        cand0 = pm[:, pred0] + l0 * s00[None, :] + l1 * s01[None, :]
        cand1 = pm[:, pred1] + l0 * s10[None, :] + l1 * s11[None, :]
        choose = cand1 > cand0
        pm = np.where(choose, cand1, cand0)
        bp[t] = choose
    bits = np.empty((n, steps), dtype=np.uint8)
    state = np.zeros(n, dtype=np.intp)
    rows = np.arange(n)
    for t in range(steps - 1, -1, -1):
        bits[:, t] = state >> 5
        state = ((state & 31) << 1) | bp[t, rows, state]
    return bits
