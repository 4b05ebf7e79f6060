"""Average age-of-information tools for XOR-relaying two-way relay networks.

Submodules: `core` (domain types), `analytic` (closed forms), `rcb`
(random-coding error bounds and block-length optimization), `sim`
(slot-level simulator), `phy` (convolutional codec, XOR demodulation and
Monte Carlo link estimation), `cli` (command-line interface).

`KERNEL_BACKEND` reports whether the compiled kernels are in use.
"""
from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    ANALYTIC_KINDS,
    AoiMetrics,
    AoiSeries,
    DegenerateReliabilityError,
    EmptySeriesError,
    OutOfRangeError,
    PncaoiError,
    ProtocolKind,
    RandomSource,
    Reliability,
    UnsupportedProtocolError,
    average_from_series,
    make_reliability,
)

__version__ = "0.1.0"

__all__ = [
    "ANALYTIC_KINDS",
    "AoiMetrics",
    "AoiSeries",
    "DegenerateReliabilityError",
    "EmptySeriesError",
    "KERNEL_BACKEND",
    "OutOfRangeError",
    "PncaoiError",
    "ProtocolKind",
    "RandomSource",
    "Reliability",
    "UnsupportedProtocolError",
    "__version__",
    "average_from_series",
    "make_reliability",
]
