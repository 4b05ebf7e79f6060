"""Kernel backend selection: compiled extension when available, numpy otherwise.

`BACKEND` names the active implementation ("cython" or "python"); both
expose `run_bernoulli`, `run_trace` and `viterbi_batch` with identical
semantics and bit-identical output.  The layout constants always come from
`_pykernels`, which is the contract of record.
"""
from ._pykernels import (  # noqa: F401  (layout contract re-exported)
    F_AGE_A,
    F_AGE_B,
    F_AREA_A,
    F_AREA_B,
    F_DELAY_SUM,
    I_CAP_A,
    I_CAP_B,
    I_DELIV,
    I_DNA_IDX,
    I_DNB_IDX,
    I_GEN,
    I_GENCNT,
    I_KIND,
    I_LAST_A,
    I_LAST_B,
    I_OVERFLOW,
    I_PHASE,
    I_RCVD_A,
    I_RCVD_B,
    I_START,
    I_T,
    I_UP_IDX,
    I_WARM,
    KIND_DLTD,
    KIND_OLTD,
    KIND_RPT,
    KIND_ULTD,
    TRACE_DNA_EXHAUSTED,
    TRACE_DNB_EXHAUSTED,
    TRACE_OK,
    TRACE_UP_EXHAUSTED,
    new_state,
)

try:
    from ._ckernels import run_bernoulli, run_trace, viterbi_batch

    BACKEND = "cython"
except ImportError:  # pragma: no cover - depends on build environment
    from ._pykernels import run_bernoulli, run_trace, viterbi_batch  # noqa: F401

    BACKEND = "python"
