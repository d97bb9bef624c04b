"""Capacity analysis and constellation design for MIMO links with one-bit ADCs.

SNR convention: noise is CN(0, I), so the linear SNR equals the total
transmit power ``Pt``.  All rates are in bits per channel use.
"""

from .capacity import BAResult, blahut_arimoto, cost_constrained_capacity
from .channel import (
    ChannelConfigError,
    ChannelModelConfig,
    MmwavePathSet,
    array_response,
    channel_from_json,
    channel_to_json,
    gen_channel,
    gen_mmwave,
    is_general_position,
)
from .closed_form import (
    ConvexOptBoundInputs,
    SingularChannelError,
    aqnm_rate,
    channel_inversion_constellation,
    channel_inversion_rate,
    convexopt_lower_bound,
    dmin_upper_check,
    finite_snr_upper_bound,
    miso_capacity,
    miso_low_snr_expansion,
    mrt_constellation,
    qpsk_low_snr_rate,
    siso_capacity,
    siso_constellation,
    unquantized_waterfilling_capacity,
    waterfilling_allocation,
)
from .constellation_design import (
    DesignResult,
    MarginSolution,
    combined_alphabet_rate,
    design_constellation,
    designed_ba_rate,
    feasibility_check,
    max_margin_symbol,
    mmwave_single_path_constellation,
    sign_consistent,
    simo_grid_capacity,
)
from .infinite_snr import InfSnrBounds, k_func, log2_k, mimo_inf_bounds, mmwave_inf_bounds, simo_inf_capacity, simo_inf_mi
from .numerics import binary_entropy, lift_vector, one_bit_channel_gain, q_func, real_lift, singular_values, unlift_vector
from .quantized_dmc import (
    Constellation,
    TransitionMatrix,
    mutual_information,
    quantize,
    transition_matrix,
    transition_prob,
)

__version__ = "0.1.0"
