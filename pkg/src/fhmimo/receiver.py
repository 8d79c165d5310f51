"""Terminal-side processing: hop DFTs, tone detection, and demodulation.

All superposed antenna tones of a hop separate in the hop's DFT, so the
receiver works bin-wise: find the occupied sub-band bins, read the complex
tone samples, and invert whichever modulation rides on them.  Detection and
the bin-level helpers are batch-aware; they accept arrays with any number of
leading axes and operate on the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .waveform import (
    SCHEME_DPSK,
    SCHEME_FHCS,
    SCHEME_FHCS_PSK,
    SCHEME_PSK,
    SCHEMES,
    HoppingCode,
    RadarParams,
    combination_rank,
    fhcs_bits_per_hop,
)
from .channel import RxCapture


@dataclass(frozen=True)
class HopSpectrum:
    """Unnormalized DFT of one captured hop, per receive antenna."""

    bins: np.ndarray     # (num_rx, samples_per_hop) complex
    hop_index: int


def hop_dft(capture: RxCapture, hop: int) -> HopSpectrum:
    """Forward DFT of the capture window of one hop."""
    if not 0 <= hop < capture.params.num_hops:
        raise ValueError(f"capture has no hop {hop}")
    return HopSpectrum(bins=np.fft.fft(capture.hop(hop), axis=-1), hop_index=hop)


def candidate_bins(params: RadarParams) -> np.ndarray:
    """DFT bins on which sub-band tones can appear."""
    return np.arange(params.num_subbands) * params.bin_step


def detect_hopping_freqs(spectrum, params: RadarParams,
                         antenna: int = 0) -> np.ndarray:
    """Detect the transmitted sub-band set of one hop.

    Takes the num_tx strongest candidate bins and returns their sub-band
    indices sorted ascending, which is also the antenna association for a
    waveform whose hops are re-ordered ascending.  Accepts a HopSpectrum
    (one antenna of it), a complex spectrum, or a precombined magnitude
    profile; leading batch axes pass through.
    """
    if isinstance(spectrum, HopSpectrum):
        mag = np.abs(spectrum.bins[antenna])
    else:
        spectrum = np.asarray(spectrum)
        mag = np.abs(spectrum) if np.iscomplexobj(spectrum) else spectrum
    cand = mag[..., candidate_bins(params)]
    top = np.argpartition(-cand, params.num_tx - 1, axis=-1)[..., :params.num_tx]
    return np.sort(top, axis=-1)


def combine_incoherent(spectra) -> np.ndarray:
    """Sum squared magnitudes across receive antennas.

    The combined profile keeps a faded antenna's tone visible as long as any
    receive antenna still sees it; feed the result to detect_hopping_freqs.
    """
    if isinstance(spectra, HopSpectrum):
        bins = spectra.bins
    else:
        parts = [np.asarray(s) for s in spectra]
        if any(p.shape != parts[0].shape for p in parts):
            raise ValueError("per-antenna spectra must have equal lengths")
        bins = np.stack(parts)
    if bins.shape[0] < 2:
        raise ValueError("incoherent combining needs at least two receive antennas")
    return np.sum(np.abs(bins) ** 2, axis=0)


def tone_samples(spectrum, detected_row: np.ndarray, params: RadarParams,
                 antenna: int = 0) -> np.ndarray:
    """DFT-gain-normalized tone values at the detected sub-band bins."""
    if isinstance(spectrum, HopSpectrum):
        bins = spectrum.bins[antenna]
    else:
        bins = np.asarray(spectrum)
    row = np.asarray(detected_row, dtype=np.int64)
    return np.take_along_axis(
        bins, row * params.bin_step, axis=-1) / params.samples_per_hop


def _nearest_symbol(angles: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    order = 2 ** bits_per_symbol
    step = 2 * np.pi / order
    return np.mod(np.floor(angles / step + 0.5).astype(np.int64), order)


def _symbols_to_bits(symbols: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    bits = (symbols[..., None] >> shifts) & 1
    return bits.reshape(*symbols.shape[:-1], -1)


def psk_demodulate(spectrum, detected_row: np.ndarray, path_gain: complex,
                   aod: float, bits_per_symbol: int = 1,
                   params: RadarParams | None = None,
                   antenna: int = 0) -> np.ndarray:
    """Recover one hop's PSK bits given the channel response.

    Divides each tone sample by gain * exp(-j*m*aod) and snaps the residual
    angle to the nearest constellation point.  Only the ratio of spectrum to
    channel estimate matters, so common complex scalings cancel.
    """
    if params is None:
        raise ValueError("radar parameters are required")
    if path_gain == 0:
        raise ValueError("channel gain estimate must be nonzero")
    y = tone_samples(spectrum, detected_row, params, antenna)
    m = np.arange(params.num_tx)
    reference = path_gain * np.exp(-1j * m * aod)
    symbols = _nearest_symbol(np.angle(y / reference), bits_per_symbol)
    return _symbols_to_bits(symbols, bits_per_symbol)


def dpsk_demodulate(prev_spectrum, spectrum, prev_row: np.ndarray,
                    row: np.ndarray, bits_per_symbol: int = 1,
                    params: RadarParams | None = None,
                    antenna: int = 0) -> np.ndarray:
    """Recover one hop's DPSK bits from two consecutive hops.

    The phase increment per antenna is read off y_h * conj(y_{h-1}); a
    quasi-static channel response cancels in the product, so no channel
    estimate is needed.
    """
    if params is None:
        raise ValueError("radar parameters are required")
    y_prev = tone_samples(prev_spectrum, prev_row, params, antenna)
    y_curr = tone_samples(spectrum, row, params, antenna)
    symbols = _nearest_symbol(np.angle(y_curr * np.conj(y_prev)), bits_per_symbol)
    return _symbols_to_bits(symbols, bits_per_symbol)


def fhcs_decode(detected_row: np.ndarray, params: RadarParams) -> np.ndarray | None:
    """Map a detected sub-band combination back to its message bits.

    Returns None for combinations whose lexicographic rank falls outside the
    usable power-of-two codebook; callers count those as symbol errors.
    """
    width = fhcs_bits_per_hop(params)
    rank = combination_rank(detected_row, params.num_subbands)
    if rank >= 2 ** width:
        return None
    shifts = np.arange(width - 1, -1, -1)
    return ((rank >> shifts) & 1).astype(np.int64)


@dataclass
class DemodResult:
    """Demodulated message plus per-hop diagnostics."""

    bits: np.ndarray
    detected_code: np.ndarray                 # (num_hops, num_tx) sub-band indices
    peak_magnitudes: np.ndarray               # (num_hops, num_tx) detected peak levels
    out_of_codebook: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))


def demodulate_pulse(capture: RxCapture, scheme: str, bits_per_symbol: int = 1,
                     path_gain: complex | None = None, aod: float | None = None,
                     true_code: HoppingCode | None = None, pilot: bool = True,
                     antenna: int = 0, combine: bool = False) -> DemodResult:
    """Run the full hop-wise pipeline over one captured pulse.

    Hop frequencies come from ``true_code`` when supplied, otherwise from
    peak detection (on the incoherently combined profile when ``combine``).
    PSK needs ``path_gain`` and ``aod``; DPSK and combination decoding do not.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    params = capture.params
    h_total = params.num_hops
    data_start = 1 if (pilot or scheme == SCHEME_DPSK) else 0

    spectra = [hop_dft(capture, h) for h in range(h_total)]
    rows = np.empty((h_total, params.num_tx), dtype=np.int64)
    peaks = np.empty((h_total, params.num_tx))
    for h, spec in enumerate(spectra):
        if true_code is not None:
            rows[h] = np.sort(true_code.entries[h])
        elif combine and capture.num_rx > 1:
            rows[h] = detect_hopping_freqs(combine_incoherent(spec), params)
        else:
            rows[h] = detect_hopping_freqs(spec, params, antenna)
        peaks[h] = np.abs(spec.bins[antenna][rows[h] * params.bin_step])

    chunks: list[np.ndarray] = []
    flags: list[bool] = []
    uses_phase = scheme in (SCHEME_PSK, SCHEME_DPSK, SCHEME_FHCS_PSK)
    uses_code = scheme in (SCHEME_FHCS, SCHEME_FHCS_PSK)
    for h in range(data_start, h_total):
        bad = False
        if uses_code:
            decoded = fhcs_decode(rows[h], params)
            if decoded is None:
                bad = True
                decoded = np.zeros(fhcs_bits_per_hop(params), dtype=np.int64)
            chunks.append(decoded)
        if uses_phase:
            if scheme == SCHEME_DPSK:
                chunks.append(dpsk_demodulate(spectra[h - 1], spectra[h],
                                              rows[h - 1], rows[h],
                                              bits_per_symbol, params, antenna))
            else:
                if path_gain is None or aod is None:
                    raise ValueError("phase demodulation needs path_gain and aod")
                chunks.append(psk_demodulate(spectra[h], rows[h], path_gain,
                                             aod, bits_per_symbol, params, antenna))
        flags.append(bad)

    bits = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    return DemodResult(bits=bits, detected_code=rows, peak_magnitudes=peaks,
                       out_of_codebook=np.array(flags, dtype=bool))
