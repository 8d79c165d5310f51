"""Zero-Doppler range ambiguity profiles of full-pulse waveforms.

The profile is the autocorrelation magnitude of the coherent antenna-sum
signal over all integer sample lags, normalized to 0 dB at lag zero.  Summing
the antennas first makes the profile depend only on each hop's set of
(frequency, phase) pairs, not on which antenna carries which tone, which is
exactly why re-ordering a hopping code ascending leaves the profile intact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import RadarParams, TxBaseband

_DB_FLOOR = 1e-300    # clamp before log so exact nulls stay finite


@dataclass(frozen=True)
class AmbiguityProfile:
    """Normalized correlation magnitude in dB over signed sample lags."""

    lags: np.ndarray           # ints, -(n-1) .. n-1
    magnitude_db: np.ndarray

    def at_lag(self, lag: int) -> float:
        n = (len(self.lags) + 1) // 2
        return float(self.magnitude_db[lag + n - 1])


def _coherent_sum(tx: TxBaseband | np.ndarray) -> np.ndarray:
    if isinstance(tx, TxBaseband):
        samples = tx.samples
    else:
        samples = np.asarray(tx)
    if samples.ndim == 3:
        samples = samples.reshape(samples.shape[0], -1)
    return np.sum(samples, axis=0)


def range_ambiguity(tx: TxBaseband | np.ndarray) -> AmbiguityProfile:
    """Range ambiguity profile of one pulse.

    Accepts a TxBaseband or a raw (num_tx, total_samples) array.  The
    autocorrelation is computed via FFT with zero padding, so lags cover the
    full +/-(total_samples-1) span and the peak sits exactly at lag 0.
    """
    x = _coherent_sum(tx)
    n = len(x)
    spectrum = np.fft.fft(x, 2 * n)
    circular = np.fft.ifft(np.abs(spectrum) ** 2)
    corr = np.concatenate([circular[-(n - 1):], circular[:n]])
    mag = np.abs(corr) / np.abs(corr[n - 1])
    return AmbiguityProfile(lags=np.arange(-(n - 1), n),
                            magnitude_db=20 * np.log10(np.maximum(mag, _DB_FLOOR)))


def average_ambiguity(profiles: list[AmbiguityProfile]) -> AmbiguityProfile:
    """Average several profiles in the linear magnitude domain."""
    if not profiles:
        raise ValueError("need at least one profile")
    lags = profiles[0].lags
    if any(len(p.lags) != len(lags) for p in profiles):
        raise ValueError("profiles must share one lag grid")
    linear = np.mean([10 ** (p.magnitude_db / 20) for p in profiles], axis=0)
    return AmbiguityProfile(lags=lags,
                            magnitude_db=20 * np.log10(np.maximum(linear, _DB_FLOOR)))


def compare_profiles(a: AmbiguityProfile, b: AmbiguityProfile,
                     floor_db: float = -60.0) -> float:
    """Largest absolute dB difference over lags that matter.

    Lags where both profiles sit below the floor are numerically meaningless
    deep nulls and are excluded from the comparison.
    """
    if len(a.lags) != len(b.lags) or np.any(a.lags != b.lags):
        raise ValueError("profiles are on different lag grids")
    mask = np.maximum(a.magnitude_db, b.magnitude_db) > floor_db
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(a.magnitude_db - b.magnitude_db)[mask]))


def spike_lags(params: RadarParams, profile: AmbiguityProfile,
               count: int = 3) -> np.ndarray:
    """The strongest sidelobe spikes among positive hop-length multiples.

    Sub-band reuse across hops piles up correlation exactly at lags that are
    multiples of the hop length; returns the ``count`` of those lags with the
    largest magnitude in the given profile.
    """
    length = params.samples_per_hop
    candidates = np.arange(1, params.num_hops) * length
    levels = np.array([profile.at_lag(int(lag)) for lag in candidates])
    order = np.argsort(-levels)[:count]
    return candidates[order]
