"""Flat-fading propagation from the radar array to the user terminal.

The channel is a sum of discrete paths, each with a complex gain and a
beamspace departure angle seen by the transmit array.  Collapsing the path
list recovers the three classic cases: a single path is a pure AWGN link, a
strong path plus weak scatterers is Ricean, and many comparable scatterers
give Rayleigh fading.  The receiver may have several antennas on a uniform
line; each path then arrives with its own angle there as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import RadarParams, TxBaseband, _as_rng

CHANNEL_AWGN = "awgn"
CHANNEL_RICIAN = "rician"
CHANNEL_RAYLEIGH = "rayleigh"


def steering_vector(num_elements: int, angle: float | np.ndarray) -> np.ndarray:
    """Array response exp(-j*m*angle) for elements m = 0..num_elements-1."""
    m = np.arange(num_elements)
    return np.exp(-1j * np.multiply.outer(np.asarray(angle), m)).squeeze()


@dataclass(frozen=True)
class ChannelModel:
    """Parametric description of the fading environment.

    ``los_gain=None`` means unit amplitude with a phase drawn uniformly per
    realization.  Scatterer departure/arrival directions are drawn uniformly
    over physical angles in [-pi/2, pi/2).
    """

    kind: str
    los_aod: float = 0.0            # beamspace departure angle of the direct path
    los_aoa: float = 0.0            # physical arrival angle of the direct path
    los_gain: complex | None = None
    num_paths: int = 1
    rician_factor_db: float = 10.0  # direct-to-scattered power ratio
    scatter_power: float = 1.0      # total scattered power (rayleigh)

    def __post_init__(self) -> None:
        if self.kind not in (CHANNEL_AWGN, CHANNEL_RICIAN, CHANNEL_RAYLEIGH):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.num_paths < 1:
            raise ValueError("num_paths must be at least 1")
        if self.kind == CHANNEL_AWGN and self.num_paths != 1:
            raise ValueError("awgn channel has exactly one path")
        if self.kind == CHANNEL_RICIAN and self.num_paths < 2:
            raise ValueError("rician channel needs at least one scattered path")
        if self.scatter_power <= 0:
            raise ValueError("scatter_power must be positive")


def awgn_channel(los_aod: float, los_gain: complex | None = None,
                 los_aoa: float = 0.0) -> ChannelModel:
    return ChannelModel(kind=CHANNEL_AWGN, los_aod=los_aod, los_aoa=los_aoa,
                        los_gain=los_gain)


def rician_channel(los_aod: float, rician_factor_db: float, num_paths: int,
                   los_gain: complex | None = None,
                   los_aoa: float = 0.0) -> ChannelModel:
    return ChannelModel(kind=CHANNEL_RICIAN, los_aod=los_aod, los_aoa=los_aoa,
                        los_gain=los_gain, num_paths=num_paths,
                        rician_factor_db=rician_factor_db)


def rayleigh_channel(num_paths: int, scatter_power: float = 1.0) -> ChannelModel:
    return ChannelModel(kind=CHANNEL_RAYLEIGH, num_paths=num_paths,
                        scatter_power=scatter_power)


@dataclass(frozen=True)
class ChannelRealization:
    """One draw of the fading environment: per-path gains and angles."""

    gains: np.ndarray      # (num_paths,) complex
    aod: np.ndarray        # (num_paths,) beamspace departure angles
    aoa: np.ndarray        # (num_paths,) physical arrival angles
    kind: str

    @property
    def num_paths(self) -> int:
        return len(self.gains)

    def tx_response(self, num_tx: int) -> np.ndarray:
        """Per-transmit-antenna response sum_p gain_p * exp(-j*m*aod_p)."""
        phase = np.exp(-1j * np.outer(self.aod, np.arange(num_tx)))
        return self.gains @ phase

    def coefficients(self, num_tx: int, num_rx: int = 1,
                     rx_spacing: float = 0.5) -> np.ndarray:
        """Channel coefficients per (rx antenna, tx antenna).

        The receive side is a uniform line with the given spacing in
        wavelengths, so path p adds a phase 2*pi*spacing*sin(aoa_p) per
        element on top of the transmit-side steering.
        """
        tx_phase = np.exp(-1j * np.outer(self.aod, np.arange(num_tx)))
        rx_angle = 2 * np.pi * rx_spacing * np.sin(self.aoa)
        rx_phase = np.exp(-1j * np.outer(rx_angle, np.arange(num_rx)))
        return np.einsum('p,pr,pm->rm', self.gains, rx_phase, tx_phase)


def _draw_scatter_angles(rng: np.random.Generator, count: int) -> tuple[np.ndarray, np.ndarray]:
    aod = np.pi * np.sin(rng.uniform(-np.pi / 2, np.pi / 2, size=count))
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, size=count)
    return aod, aoa


def draw_channel(model: ChannelModel,
                 rng: int | np.random.Generator | None = None) -> ChannelRealization:
    """Draw one realization of the configured channel model."""
    gen = _as_rng(rng)
    if model.kind == CHANNEL_RAYLEIGH:
        p = model.num_paths
        scale = np.sqrt(model.scatter_power / (2 * p))
        gains = scale * (gen.standard_normal(p) + 1j * gen.standard_normal(p))
        aod, aoa = _draw_scatter_angles(gen, p)
        return ChannelRealization(gains=gains, aod=aod, aoa=aoa, kind=model.kind)

    los = model.los_gain
    if los is None:
        los = np.exp(1j * gen.uniform(0.0, 2 * np.pi))
    if model.kind == CHANNEL_AWGN:
        return ChannelRealization(gains=np.array([los], dtype=complex),
                                  aod=np.array([model.los_aod]),
                                  aoa=np.array([model.los_aoa]), kind=model.kind)

    n_scatter = model.num_paths - 1
    scatter_total = abs(los) ** 2 * 10 ** (-model.rician_factor_db / 10)
    scale = np.sqrt(scatter_total / (2 * n_scatter))
    scatter = scale * (gen.standard_normal(n_scatter)
                       + 1j * gen.standard_normal(n_scatter))
    aod_s, aoa_s = _draw_scatter_angles(gen, n_scatter)
    return ChannelRealization(
        gains=np.concatenate([[los], scatter]),
        aod=np.concatenate([[model.los_aod], aod_s]),
        aoa=np.concatenate([[model.los_aoa], aoa_s]),
        kind=model.kind,
    )


# --- noise convention ---------------------------------------------------------

def snr_to_noise_power(signal_power: float, snr: float) -> float:
    """Complex noise power that realizes the target per-sample SNR.

    The SNR books signal power against per-quadrature noise, i.e. the total
    complex noise power is signal_power / (2 * snr).  Estimation error under
    this convention attains the reference bound used throughout the toolkit.
    """
    return signal_power / (2.0 * snr)


def measured_snr(signal_power: float, noise_power: float) -> float:
    """Inverse of :func:`snr_to_noise_power` for empirical checks."""
    return signal_power / (2.0 * noise_power)


@dataclass(frozen=True)
class RxCapture:
    """Received baseband samples, shape (num_rx, num_hops*samples_per_hop).

    With zero timing offset and no noise, hop h occupies the sample window
    [h*L, (h+1)*L).  A timing offset of n samples means the terminal opened
    its windows n samples early, so every captured hop starts with the tail
    of the previous true hop.
    """

    samples: np.ndarray
    params: RadarParams
    snr: float | None
    noise_power: float
    timing_offset: int = 0
    rx_spacing: float = 0.5

    @property
    def num_rx(self) -> int:
        return self.samples.shape[0]

    def hop(self, index: int) -> np.ndarray:
        length = self.params.samples_per_hop
        return self.samples[:, index * length:(index + 1) * length]


def propagate(tx: TxBaseband, channel: ChannelRealization,
              snr: float | None = None, timing_offset: int = 0,
              num_rx: int = 1, rx_spacing: float = 0.5,
              rng: int | np.random.Generator | None = None,
              noise_power: float | None = None) -> RxCapture:
    """Propagate one pulse through the channel to the terminal.

    ``snr`` is the per-sample SNR of the noiseless capture (see
    :func:`snr_to_noise_power`); ``noise_power`` pins the complex noise power
    directly and overrides ``snr``.  Leaving both unset gives a noiseless
    capture.  ``timing_offset`` must be smaller than one hop.
    """
    params = tx.params
    length = params.samples_per_hop
    if not 0 <= timing_offset < length:
        raise ValueError(f"timing offset must lie in [0, {length}), got {timing_offset}")
    if num_rx < 1:
        raise ValueError("num_rx must be at least 1")

    coeff = channel.coefficients(params.num_tx, num_rx, rx_spacing)
    flat_tx = tx.samples.reshape(params.num_tx, -1)
    clean = coeff @ flat_tx
    signal_power = float(np.mean(np.abs(clean) ** 2))

    if timing_offset:
        clean = np.concatenate(
            [np.zeros((num_rx, timing_offset), dtype=complex),
             clean[:, :-timing_offset]], axis=1)

    if noise_power is None:
        noise_power = 0.0 if snr is None else snr_to_noise_power(signal_power, snr)
    if noise_power:
        gen = _as_rng(rng)
        sigma = np.sqrt(noise_power / 2.0)
        clean = clean + sigma * (gen.standard_normal(clean.shape)
                                 + 1j * gen.standard_normal(clean.shape))
    return RxCapture(samples=clean, params=params, snr=snr,
                     noise_power=noise_power, timing_offset=timing_offset,
                     rx_spacing=rx_spacing)
