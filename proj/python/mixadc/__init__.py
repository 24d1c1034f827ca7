# SPDX-License-Identifier: Apache-2.0
"""Mixed-ADC massive MIMO-OFDM: GMI, ergodic bounds and BER simulation."""

from ._core import (
    InvalidArgument,
    NumericalIntegrityError,
    SolverError,
    SystemConfig,
    __version__,
    conv_encode,
    draw_channel,
    ergodic_bounds,
    gmi,
    high_snr_limit,
    lloyd_max,
    norm_based_switch,
    simulate_ber,
    spectrum,
    viterbi_decode,
)

__all__ = [
    "InvalidArgument",
    "NumericalIntegrityError",
    "SolverError",
    "SystemConfig",
    "__version__",
    "conv_encode",
    "draw_channel",
    "ergodic_bounds",
    "gmi",
    "high_snr_limit",
    "lloyd_max",
    "norm_based_switch",
    "simulate_ber",
    "spectrum",
    "viterbi_decode",
]
