"""Pilot-based estimation of the direct path's angle and gain.

Hop 0 of every pulse carries no data, so after the hop DFT the tone sample of
antenna m is gain * exp(-j*m*angle): a single complex tone across the array.
Estimation is classic two-stage tone interpolation: pick the strongest bin of
the array-length DFT, then iteratively refine the fractional bin offset from
a pair of DFT coefficients evaluated just left and right of the current
estimate.  All kernels accept leading batch axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import HoppingCode, RadarParams
from .channel import RxCapture
from .receiver import HopSpectrum, detect_hopping_freqs, hop_dft, tone_samples


def extract_pilot(spectrum, detected_row: np.ndarray, params: RadarParams,
                  antenna: int = 0) -> np.ndarray:
    """Pilot-hop tone samples in ascending-frequency antenna order."""
    return tone_samples(spectrum, detected_row, params, antenna)


def _correlate(pilot: np.ndarray, fractional_bin) -> np.ndarray:
    """Correlate the pilot against a steering vector at the given array bin.

    ``fractional_bin`` is in units of 2*pi/num_tx; broadcasting rules apply,
    so a (...,) bin array against a (..., M) pilot yields (...,) outputs.
    """
    m = np.arange(pilot.shape[-1])
    phase = np.exp(2j * np.pi * np.asarray(fractional_bin)[..., None] * m
                   / pilot.shape[-1])
    return np.sum(pilot * phase, axis=-1)


def coarse_aod(pilot: np.ndarray) -> int | np.ndarray:
    """Index of the strongest array-DFT bin; error at most half a bin."""
    pilot = np.asarray(pilot)
    num_tx = pilot.shape[-1]
    bins = np.arange(num_tx)
    mags = np.abs(_correlate(pilot[..., None, :], bins))
    peak = np.argmax(mags, axis=-1)
    return int(peak) if peak.ndim == 0 else peak


def shift_bound(num_tx: int) -> float:
    """Largest admissible interpolation shift for the refinement stage."""
    return min(num_tx ** (-1.0 / 3.0), 0.32)


def _unbias_factor(shift: float, num_tx: int) -> float:
    """Gain that maps Re{ratio} to a fractional-bin correction.

    Solved exactly for the finite array length so the noiseless iteration is
    a contraction onto the true offset; its large-array limit is the familiar
    shift*cos^2(pi*shift) / (1 - pi*shift*cot(pi*shift)).
    """
    log_slope = (np.pi / np.tan(np.pi * shift)
                 - (np.pi / num_tx) / np.tan(np.pi * shift / num_tx))
    envelope = np.cos(np.pi * shift * (num_tx - 1) / num_tx) ** 2
    return -envelope / log_slope


@dataclass
class QseState:
    """Outcome of the iterative fractional-bin refinement."""

    coarse_bin: int | np.ndarray
    delta: float | np.ndarray
    shift: float
    iterations: int
    degenerate: bool | np.ndarray = False


def qse_refine(pilot: np.ndarray, coarse_bin, shift: float | None = None,
               iterations: int = 3) -> QseState:
    """Refine the coarse bin with shifted-DFT interpolation.

    Each pass evaluates the correlation at coarse_bin + delta +/- shift,
    forms the ratio (Z+ - Z-)/(Z+ + Z-), and moves delta by the unbiased
    real part.  The ratio is scale-free, so any complex scaling of the pilot
    leaves the result untouched.  A vanishing denominator aborts refinement
    and flags the state degenerate.
    """
    pilot = np.asarray(pilot)
    num_tx = pilot.shape[-1]
    if shift is None:
        shift = shift_bound(num_tx)
    gain = _unbias_factor(shift, num_tx)

    base = np.asarray(coarse_bin, dtype=float)
    delta = np.zeros(base.shape)
    degenerate = np.zeros(base.shape, dtype=bool)
    for _ in range(iterations):
        upper = _correlate(pilot, base + delta + shift)
        lower = _correlate(pilot, base + delta - shift)
        denom = upper + lower
        bad = denom == 0
        degenerate |= bad
        safe = np.where(bad, 1.0, denom)
        ratio = np.where(bad, 0.0, (upper - lower) / safe)
        delta = np.where(degenerate, delta, gain * np.real(ratio) + delta)
    if base.ndim == 0:
        return QseState(int(base), float(delta), shift, iterations, bool(degenerate))
    return QseState(base.astype(int), delta, shift, iterations, degenerate)


@dataclass(frozen=True)
class ChannelEstimate:
    """Direct-path estimate consumed by the phase demodulators."""

    aod: float             # in [0, 2*pi)
    gain: complex
    code: HoppingCode | None = None
    degenerate: bool = False


def finalize(pilot: np.ndarray, coarse_bin, delta) -> tuple:
    """Closing step: angle from the refined bin, gain by matched filtering.

    Returns (aod, gain); both are arrays when the pilot is batched.  The
    angle is reported modulo 2*pi.
    """
    pilot = np.asarray(pilot)
    num_tx = pilot.shape[-1]
    aod = (2 * np.pi * (np.asarray(coarse_bin, dtype=float) + delta) / num_tx) \
        % (2 * np.pi)
    m = np.arange(num_tx)
    gain = np.mean(pilot * np.exp(1j * np.asarray(aod)[..., None] * m), axis=-1)
    if gain.ndim == 0:
        return float(aod), complex(gain)
    return aod, gain


def estimate_channel(capture: RxCapture, true_code: HoppingCode | None = None,
                     antenna: int = 0, iterations: int = 3,
                     detect_all_hops: bool = True) -> ChannelEstimate:
    """Full estimation pipeline on one captured pulse.

    Detects the hop frequencies (or takes them as given), reads the pilot off
    hop 0, and runs coarse search plus refinement.  The returned code holds
    the per-hop detected sub-band sets for use by the data demodulators.
    """
    params = capture.params
    spectra = [hop_dft(capture, h) for h in range(params.num_hops)]
    code = None
    if true_code is not None:
        rows = np.sort(true_code.entries, axis=1)
        code = HoppingCode(rows)
    elif detect_all_hops:
        rows = np.stack([detect_hopping_freqs(spectra[h], params, antenna)
                         for h in range(params.num_hops)])
        code = HoppingCode(rows)
    else:
        rows = detect_hopping_freqs(spectra[0], params, antenna)[None, :]
    pilot = extract_pilot(spectra[0], rows[0], params, antenna)
    coarse = coarse_aod(pilot)
    state = qse_refine(pilot, coarse, iterations=iterations)
    aod, gain = finalize(pilot, coarse, state.delta)
    return ChannelEstimate(aod=aod, gain=gain, code=code,
                           degenerate=bool(state.degenerate))


def crlb_aod(num_tx: int, samples_per_hop: int, snr: float) -> float:
    """Reference lower bound on the angle-estimation MSE: 3/(pi^2*M*L*snr)."""
    return 3.0 / (np.pi ** 2 * num_tx * samples_per_hop * snr)


def wrapped_error(estimate, truth) -> np.ndarray:
    """Angular estimation error wrapped onto (-pi, pi]."""
    return np.angle(np.exp(1j * (np.asarray(estimate) - np.asarray(truth))))
