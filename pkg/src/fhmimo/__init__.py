"""Link-level simulator for frequency-hopping MIMO radar-communication.

Waveform synthesis, fading propagation, DFT-based reception, pilot channel
estimation, range ambiguity analysis, and the Monte-Carlo experiment
harnesses, plus a CLI (``fhmimo``) that writes tables and figures.
"""

from .waveform import (
    SCHEME_DPSK,
    SCHEME_FHCS,
    SCHEME_FHCS_PSK,
    SCHEME_NONE,
    SCHEME_PSK,
    SCHEMES,
    HoppingCode,
    PhasePayload,
    RadarParams,
    TxBaseband,
    combination_rank,
    data_rate,
    dpsk_encode,
    draw_hopping_code,
    encode_pulse,
    fhcs_bits_per_hop,
    fhcs_encode,
    make_radar_params,
    message_bit_count,
    psk_encode,
    pulse_bits_per_hop,
    random_message_bits,
    reorder_ascending,
    synthesize_tx,
    unrank_combination,
)
from .channel import (
    ChannelModel,
    ChannelRealization,
    RxCapture,
    awgn_channel,
    draw_channel,
    measured_snr,
    propagate,
    rayleigh_channel,
    rician_channel,
    snr_to_noise_power,
    steering_vector,
)
from .receiver import (
    DemodResult,
    HopSpectrum,
    combine_incoherent,
    demodulate_pulse,
    detect_hopping_freqs,
    dpsk_demodulate,
    fhcs_decode,
    hop_dft,
    psk_demodulate,
    tone_samples,
)
from .chanest import (
    ChannelEstimate,
    QseState,
    coarse_aod,
    crlb_aod,
    estimate_channel,
    extract_pilot,
    finalize,
    qse_refine,
    shift_bound,
    wrapped_error,
)
from .ambiguity import (
    AmbiguityProfile,
    average_ambiguity,
    compare_profiles,
    range_ambiguity,
    spike_lags,
)
from .experiments import (
    CurveTable,
    ExperimentConfig,
    MultipathReport,
    ebn0_db_from_snr,
    run_mse,
    run_multipath_demo,
    run_ser,
    scheme_bits_per_hop,
    snr_from_ebn0_db,
)

__version__ = "0.1.0"
