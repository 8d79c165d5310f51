"""Monte-Carlo harnesses for the estimation, link, and diversity studies.

Trials are vectorized: a chunk of independent pulses is synthesized,
propagated, and demodulated as one batch of numpy arrays, reusing the
batch-aware detection and estimation kernels from the receiver and chanest
modules.  Chunks draw independent generators derived from the master seed,
and results reduce by summing error counts, so chunk order and worker count
never change the output.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import chanest
from .channel import (
    CHANNEL_AWGN,
    CHANNEL_RICIAN,
    ChannelModel,
    snr_to_noise_power,
)
from .receiver import detect_hopping_freqs
from .waveform import (
    SCHEME_FHCS,
    SCHEME_FHCS_PSK,
    SCHEME_PSK,
    RadarParams,
    fhcs_bits_per_hop,
    pulse_bits_per_hop,
    tone_table,
)

KNOWLEDGE_COMBOS = ("estk_estch", "truek_estch", "truek_truech", "estk_truech")
SER_SCHEMES = (SCHEME_PSK, SCHEME_FHCS, SCHEME_FHCS_PSK)

_CHUNK = 4000


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproducible experiment run needs."""

    radar: RadarParams
    channel: ChannelModel
    seed: int = 0
    trials: int = 1000
    snr_grid_db: tuple[float, ...] = ()
    ebn0_grid_db: tuple[float, ...] = ()
    schemes: tuple[str, ...] = (SCHEME_PSK, SCHEME_FHCS, SCHEME_FHCS_PSK)
    knowledge: tuple[str, ...] = ("estk_estch", "truek_estch", "truek_truech")
    estimation_snr_db: float = 10.0
    bits_per_symbol: int = 1
    pilot: bool = True
    mse_code_knowledge: str = "truek"
    rx_antennas: int = 1
    rx_spacing: float = 0.5
    timing_offset: int = 0
    qse_iterations: int = 3
    noise_power: float | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        for combo in self.knowledge:
            if combo not in KNOWLEDGE_COMBOS:
                raise ValueError(f"unknown knowledge combo {combo!r}; "
                                 f"expected one of {KNOWLEDGE_COMBOS}")
        if self.mse_code_knowledge not in ("truek", "estk"):
            raise ValueError("mse_code_knowledge must be 'truek' or 'estk'")


@dataclass
class CurveTable:
    """One metric row per grid point, plus run metadata."""

    columns: tuple[str, ...]
    rows: list[tuple[float, ...]]
    metadata: dict[str, str] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        idx = self.columns.index(name)
        return np.array([row[idx] for row in self.rows])

    def csv_text(self) -> str:
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join(f"{value:.12g}" for value in row))
        return "\n".join(lines) + "\n"


def run_id(config: ExperimentConfig) -> str:
    """Stable digest of a configuration; identical runs share it."""
    return hashlib.sha256(repr(config).encode()).hexdigest()[:16]


# --- Eb/N0 bookkeeping --------------------------------------------------------

def scheme_bits_per_hop(params: RadarParams, scheme: str,
                        bits_per_symbol: int = 1) -> int:
    """Per-hop information bits entering the energy-per-bit conversion."""
    return pulse_bits_per_hop(params, scheme, bits_per_symbol)


def ebn0_db_from_snr(params: RadarParams, snr: float, scheme: str,
                     bits_per_symbol: int = 1) -> float:
    """Energy per bit over noise density for a given per-sample SNR.

    Uses the axis convention samples_per_hop * num_tx * snr * bandwidth *
    hop_duration / bits_per_hop; kept in one place so an alternate
    normalization is a one-line swap.
    """
    p = params
    jt = scheme_bits_per_hop(p, scheme, bits_per_symbol)
    value = p.samples_per_hop * p.num_tx * snr * p.bandwidth * p.hop_duration / jt
    return 10 * math.log10(value)


def snr_from_ebn0_db(params: RadarParams, ebn0_db: float, scheme: str,
                     bits_per_symbol: int = 1) -> float:
    """Inverse of :func:`ebn0_db_from_snr`."""
    p = params
    jt = scheme_bits_per_hop(p, scheme, bits_per_symbol)
    return 10 ** (ebn0_db / 10) * jt / (p.samples_per_hop * p.num_tx
                                        * p.bandwidth * p.hop_duration)


# --- batched synthesis helpers --------------------------------------------------

def _chunk_sizes(total: int, chunk: int = _CHUNK) -> list[int]:
    return [min(chunk, total - start) for start in range(0, total, chunk)]


def _rng_for(seed: int, *context: int) -> np.random.Generator:
    return np.random.default_rng([seed, *context])


def _draw_sorted_codes(rng: np.random.Generator, count: int, hops: int,
                       params: RadarParams) -> np.ndarray:
    """Uniform random sorted sub-band subsets, shape (count, hops, num_tx)."""
    keys = rng.random((count, hops, params.num_subbands))
    subset = np.argsort(keys, axis=-1)[..., :params.num_tx]
    return np.sort(subset, axis=-1)


def _comb_table(num_subbands: int, size: int) -> np.ndarray:
    table = np.zeros((num_subbands + 1, size + 1), dtype=np.int64)
    for n in range(num_subbands + 1):
        for k in range(min(n, size) + 1):
            table[n, k] = math.comb(n, k)
    return table


def _unrank_batch(ranks: np.ndarray, params: RadarParams) -> np.ndarray:
    """Vectorized lexicographic unranking of combination indices."""
    k, m = params.num_subbands, params.num_tx
    table = _comb_table(k, m)
    remaining = np.asarray(ranks, dtype=np.int64).copy()
    out = np.zeros((*remaining.shape, m), dtype=np.int64)
    slot = np.zeros(remaining.shape, dtype=np.int64)
    for value in range(k):
        active = slot < m
        count = table[k - 1 - value, np.maximum(m - slot - 1, 0)]
        take = active & (remaining < count)
        if np.any(take):
            idx = np.nonzero(take)
            out[(*idx, slot[take])] = value
        slot = np.where(take, slot + 1, slot)
        remaining = np.where(active & ~take, remaining - count, remaining)
        if not np.any(slot < m):
            break
    return out


def _simulate_pulses(params: RadarParams, codes: np.ndarray, phases: np.ndarray,
                     coeffs: np.ndarray) -> np.ndarray:
    """Noiseless captures for a batch of pulses on a single-antenna terminal.

    codes/phases are (n, hops, num_tx); coeffs is the per-trial channel
    response per transmit antenna, (n, num_tx).  Returns (n, hops, L).
    """
    tones = tone_table(params)
    n, hops, _ = codes.shape
    out = np.empty((n, hops, params.samples_per_hop), dtype=complex)
    for h in range(hops):
        weighted = coeffs * np.exp(1j * phases[:, h])
        out[:, h] = np.einsum('nm,nml->nl', weighted, tones[codes[:, h]])
    return out


def _add_noise(rng: np.random.Generator, clean: np.ndarray,
               noise_power: np.ndarray | float) -> np.ndarray:
    sigma = np.sqrt(np.asarray(noise_power) / 2.0)
    while sigma.ndim < clean.ndim:
        sigma = sigma[..., None]
    noise = rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
    return clean + sigma * noise


def _draw_awgn_coeffs(model: ChannelModel, rng: np.random.Generator,
                      count: int, num_tx: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-trial direct-path gains and tx responses for the AWGN link."""
    if model.kind != CHANNEL_AWGN:
        raise ValueError("this experiment models the single-path direct link")
    if model.los_gain is None:
        gains = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=count))
    else:
        gains = np.full(count, complex(model.los_gain))
    steering = np.exp(-1j * np.arange(num_tx) * model.los_aod)
    return gains, gains[:, None] * steering[None, :]


def _estimate_batch(spectra0: np.ndarray, rows0: np.ndarray,
                    params: RadarParams,
                    iterations: int) -> tuple[np.ndarray, np.ndarray]:
    """Batched pilot estimation: returns (aod, gain) per trial."""
    pilots = np.take_along_axis(spectra0, rows0 * params.bin_step,
                                axis=-1) / params.samples_per_hop
    coarse = chanest.coarse_aod(pilots)
    state = chanest.qse_refine(pilots, coarse, iterations=iterations)
    return chanest.finalize(pilots, coarse, state.delta)


# --- estimation-error experiment ------------------------------------------------

def run_mse(config: ExperimentConfig, details: bool = False):
    """Estimation MSE of the direct path's angle and gain against SNR.

    Per grid point: independent pulses through the single-path link, pilot
    extraction (at the true sub-band bins by default), coarse plus refined
    angle estimation, and squared-error averaging.  The last column restates
    the reference bound 3/(pi^2 * M * L * snr).
    """
    params = config.radar
    if not config.snr_grid_db:
        raise ValueError("snr_grid_db must not be empty")
    if config.channel.kind != CHANNEL_AWGN:
        raise ValueError("the estimation experiment runs on the single-path link")

    length = params.samples_per_hop
    rows_out = []
    extras = []

    def run_chunk(point: int, chunk: int, size: int, snr: float):
        rng = _rng_for(config.seed, 101, point, chunk)
        codes = _draw_sorted_codes(rng, size, 1, params)
        gains, coeffs = _draw_awgn_coeffs(config.channel, rng, size, params.num_tx)
        clean = _simulate_pulses(params, codes, np.zeros((size, 1, params.num_tx)),
                                 coeffs)[:, 0]
        power = np.mean(np.abs(clean) ** 2, axis=-1)
        noisy = _add_noise(rng, clean, snr_to_noise_power(power, snr))
        spectra = np.fft.fft(noisy, axis=-1)
        if config.mse_code_knowledge == "truek":
            rows0 = codes[:, 0]
        else:
            rows0 = detect_hopping_freqs(np.abs(spectra), params)
        aod_hat, gain_hat = _estimate_batch(spectra, rows0, params,
                                            config.qse_iterations)
        err_u = chanest.wrapped_error(aod_hat, config.channel.los_aod) ** 2
        err_b = np.abs(gain_hat - gains) ** 2
        return err_u, err_b

    for point, snr_db in enumerate(config.snr_grid_db):
        snr = 10 ** (snr_db / 10)
        sizes = _chunk_sizes(config.trials)
        jobs = [(point, c, size, snr) for c, size in enumerate(sizes)]
        if config.workers > 1:
            with ThreadPoolExecutor(config.workers) as pool:
                parts = list(pool.map(lambda a: run_chunk(*a), jobs))
        else:
            parts = [run_chunk(*a) for a in jobs]
        err_u = np.concatenate([p[0] for p in parts])
        err_b = np.concatenate([p[1] for p in parts])
        bound = chanest.crlb_aod(params.num_tx, length, snr)
        rows_out.append((float(snr_db), float(err_u.mean()),
                         float(err_b.mean()), float(bound)))
        extras.append({
            "mse_u0_stderr": float(err_u.std(ddof=1) / math.sqrt(len(err_u))),
            "mse_beta0_stderr": float(err_b.std(ddof=1) / math.sqrt(len(err_b))),
        })

    table = CurveTable(columns=("snr_db", "mse_u0", "mse_beta0", "crlb"),
                       rows=rows_out,
                       metadata={"experiment": "mse", "seed": str(config.seed),
                                 "trials": str(config.trials),
                                 "run_id": run_id(config)})
    return (table, extras) if details else table


# --- symbol-error experiment ----------------------------------------------------

def ser_columns(config: ExperimentConfig) -> tuple[str, ...]:
    """Column layout of the symbol-error table for a given configuration."""
    cols: list[str] = ["ebn0_db"]
    for scheme in config.schemes:
        if scheme == SCHEME_FHCS:
            cols.append("ser_fhcs")
        else:
            tag = "psk" if scheme == SCHEME_PSK else "fhcs_psk"
            cols.extend(f"ser_{tag}_{combo}" for combo in config.knowledge)
    return tuple(cols)


def _ser_chunk(config: ExperimentConfig, scheme: str, point: int, chunk: int,
               size: int, snr: float) -> dict[str, int]:
    """Symbol-error counts for one chunk of pulses of one scheme."""
    params = config.radar
    rng = _rng_for(config.seed, 202, point, SER_SCHEMES.index(scheme), chunk)
    h, m = params.num_hops, params.num_tx
    data = slice(1, h)
    order = 2 ** config.bits_per_symbol

    if scheme in (SCHEME_FHCS, SCHEME_FHCS_PSK):
        ranks = rng.integers(0, 2 ** fhcs_bits_per_hop(params), size=(size, h - 1))
        codes = np.concatenate([_draw_sorted_codes(rng, size, 1, params),
                                _unrank_batch(ranks, params)], axis=1)
    else:
        codes = _draw_sorted_codes(rng, size, h, params)

    symbols = np.zeros((size, h, m), dtype=np.int64)
    if scheme in (SCHEME_PSK, SCHEME_FHCS_PSK):
        symbols[:, data] = rng.integers(0, order, size=(size, h - 1, m))
    phases = 2 * np.pi * symbols / order

    gains, coeffs = _draw_awgn_coeffs(config.channel, rng, size, m)
    clean = _simulate_pulses(params, codes, phases, coeffs)
    power = np.mean(np.abs(clean) ** 2, axis=(-2, -1))
    noisy = _add_noise(rng, clean, snr_to_noise_power(power, snr))
    spectra = np.fft.fft(noisy, axis=-1)
    detected = detect_hopping_freqs(np.abs(spectra), params)

    needs_estimate = any(combo.endswith("estch") for combo in config.knowledge)
    if needs_estimate:
        est_snr = 10 ** (config.estimation_snr_db / 10)
        pilot_noisy = _add_noise(rng, clean[:, 0],
                                 snr_to_noise_power(power, est_snr))
        pilot_spectra = np.fft.fft(pilot_noisy, axis=-1)
        pilot_rows = detect_hopping_freqs(np.abs(pilot_spectra), params)
        aod_est, gain_est = _estimate_batch(pilot_spectra, pilot_rows, params,
                                            config.qse_iterations)
    else:
        aod_est = gain_est = None

    fhcs_err = np.any(detected[:, data] != codes[:, data], axis=-1)

    def psk_errors(rows: np.ndarray, gain: np.ndarray, aod: np.ndarray) -> np.ndarray:
        tones = np.take_along_axis(spectra[:, data], rows[:, data] * params.bin_step,
                                   axis=-1) / params.samples_per_hop
        ref = gain[:, None, None] * np.exp(-1j * np.arange(m)[None, None, :]
                                           * aod[:, None, None])
        angles = np.angle(tones / ref)
        decided = np.mod(np.floor(angles / (2 * np.pi / order) + 0.5).astype(np.int64),
                         order)
        return np.any(decided != symbols[:, data], axis=-1)

    counts: dict[str, int] = {}
    if scheme == SCHEME_FHCS:
        counts["ser_fhcs"] = int(fhcs_err.sum())
        return counts

    tag = "psk" if scheme == SCHEME_PSK else "fhcs_psk"
    true_aod = np.full(size, config.channel.los_aod)
    for combo in config.knowledge:
        rows = detected if combo.startswith("estk") else codes
        if combo.endswith("estch"):
            gain, aod = gain_est, aod_est
        else:
            gain, aod = gains, true_aod
        err = psk_errors(rows, gain, aod)
        if scheme == SCHEME_FHCS_PSK:
            err = err | fhcs_err
        counts[f"ser_{tag}_{combo}"] = int(err.sum())
    return counts


def run_ser(config: ExperimentConfig) -> CurveTable:
    """Symbol error rate against energy per bit for the configured schemes.

    The per-sample SNR of each scheme is derived from the shared energy-per-
    bit axis, channel estimates are formed once per pulse from the pilot hop
    received at the estimation SNR, and a symbol counts as errored when any
    bit of its hop's group is wrong.
    """
    params = config.radar
    if not config.ebn0_grid_db:
        raise ValueError("ebn0_grid_db must not be empty")
    for scheme in config.schemes:
        if scheme not in SER_SCHEMES:
            raise ValueError(f"scheme {scheme!r} is not part of the symbol-error "
                             f"experiment; expected a subset of {SER_SCHEMES}")

    columns = ser_columns(config)
    symbols_per_pulse = params.num_hops - 1
    rows_out = []
    for point, ebn0_db in enumerate(config.ebn0_grid_db):
        totals = {name: 0 for name in columns[1:]}
        for scheme in config.schemes:
            snr = snr_from_ebn0_db(params, ebn0_db, scheme, config.bits_per_symbol)
            sizes = _chunk_sizes(config.trials)
            jobs = [(config, scheme, point, c, size, snr)
                    for c, size in enumerate(sizes)]
            if config.workers > 1:
                with ThreadPoolExecutor(config.workers) as pool:
                    parts = list(pool.map(lambda a: _ser_chunk(*a), jobs))
            else:
                parts = [_ser_chunk(*a) for a in jobs]
            for part in parts:
                for name, count in part.items():
                    totals[name] += count
        denom = config.trials * symbols_per_pulse
        rows_out.append((float(ebn0_db),
                         *(totals[name] / denom for name in columns[1:])))

    return CurveTable(columns=columns, rows=rows_out,
                      metadata={"experiment": "ser", "seed": str(config.seed),
                                "trials": str(config.trials),
                                "estimation_snr_db": str(config.estimation_snr_db),
                                "run_id": run_id(config)})


# --- diversity-combining experiment ----------------------------------------------

@dataclass
class MultipathReport:
    """Outcome of the two-antenna diversity demonstration."""

    trials: int
    error_counts: np.ndarray          # per single receive antenna
    combined_errors: int
    example: dict | None              # one fade repaired by combining
    error_rates: np.ndarray = field(init=False)
    combined_rate: float = field(init=False)

    def __post_init__(self) -> None:
        self.error_rates = self.error_counts / self.trials
        self.combined_rate = self.combined_errors / self.trials


def run_multipath_demo(config: ExperimentConfig) -> MultipathReport:
    """Hop-frequency detection with and without incoherent combining.

    Each trial is one hop through an independent fading realization observed
    by a multi-antenna terminal at a fixed absolute noise power.  Detection
    runs per antenna and on the squared-magnitude sum; the report includes
    one stored realization where a single antenna fails but the combined
    profile succeeds, when the run encounters one.
    """
    params = config.radar
    model = config.channel
    if model.kind not in (CHANNEL_RICIAN, CHANNEL_AWGN):
        raise ValueError("the diversity demo expects a direct-path-plus-scatter "
                         "channel")
    num_rx = config.rx_antennas
    if num_rx < 2:
        raise ValueError("the diversity demo needs at least two receive antennas")
    noise_power = config.noise_power if config.noise_power is not None else 0.1
    m = params.num_tx
    tones = tone_table(params)

    error_counts = np.zeros(num_rx, dtype=np.int64)
    combined_errors = 0
    example = None

    for chunk, size in enumerate(_chunk_sizes(config.trials)):
        rng = _rng_for(config.seed, 303, chunk)
        codes = _draw_sorted_codes(rng, size, 1, params)[:, 0]

        if model.los_gain is None:
            los = np.exp(1j * rng.uniform(0.0, 2 * np.pi, size=size))
        else:
            los = np.full(size, complex(model.los_gain))
        n_scatter = model.num_paths - 1 if model.kind == CHANNEL_RICIAN else 0
        gains = np.zeros((size, 1 + n_scatter), dtype=complex)
        aod = np.zeros((size, 1 + n_scatter))
        aoa = np.zeros((size, 1 + n_scatter))
        gains[:, 0] = los
        aod[:, 0] = model.los_aod
        aoa[:, 0] = model.los_aoa
        if n_scatter:
            scatter_total = np.abs(los) ** 2 * 10 ** (-model.rician_factor_db / 10)
            sigma = np.sqrt(scatter_total / (2 * n_scatter))[:, None]
            gains[:, 1:] = sigma * (rng.standard_normal((size, n_scatter))
                                    + 1j * rng.standard_normal((size, n_scatter)))
            aod[:, 1:] = np.pi * np.sin(rng.uniform(-np.pi / 2, np.pi / 2,
                                                    (size, n_scatter)))
            aoa[:, 1:] = rng.uniform(-np.pi / 2, np.pi / 2, (size, n_scatter))

        tx_phase = np.exp(-1j * aod[..., None] * np.arange(m))
        rx_angle = 2 * np.pi * config.rx_spacing * np.sin(aoa)
        rx_phase = np.exp(-1j * rx_angle[..., None] * np.arange(num_rx))
        coeff = np.einsum('np,npr,npm->nrm', gains, rx_phase, tx_phase)

        clean = np.einsum('nrm,nml->nrl', coeff, tones[codes])
        noisy = _add_noise(rng, clean, noise_power)
        spectra = np.fft.fft(noisy, axis=-1)

        detected = detect_hopping_freqs(np.abs(spectra), params)
        wrong = np.any(detected != codes[:, None, :], axis=-1)
        combined = np.sum(np.abs(spectra) ** 2, axis=1)
        detected_combined = detect_hopping_freqs(combined, params)
        wrong_combined = np.any(detected_combined != codes, axis=-1)

        error_counts += wrong.sum(axis=0)
        combined_errors += int(wrong_combined.sum())

        if example is None:
            repaired = np.any(wrong, axis=-1) & ~wrong_combined
            hits = np.nonzero(repaired)[0]
            if hits.size:
                i = int(hits[0])
                example = {
                    "trial": chunk * _CHUNK + i,
                    "true_row": codes[i].copy(),
                    "detected_per_antenna": detected[i].copy(),
                    "detected_combined": detected_combined[i].copy(),
                    "spectra_mag": np.abs(spectra[i]).copy(),
                    "combined_mag": combined[i].copy(),
                }

    return MultipathReport(trials=config.trials, error_counts=error_counts,
                           combined_errors=combined_errors, example=example)
