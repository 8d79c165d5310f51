"""Transmit-side synthesis for a frequency-hopping MIMO radar link.

Each radar pulse is split into hops.  During a hop every transmit antenna
emits a single tone whose centre frequency is drawn from a grid of sub-bands,
with all antennas of a hop on distinct sub-bands so the tones stay orthogonal
over the hop.  Data rides on the waveform in two ways: per-antenna phase
offsets (PSK, or DPSK accumulated hop to hop) and/or the choice of the
sub-band combination itself (combination signalling, "FHCS").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

SCHEME_NONE = "none"
SCHEME_PSK = "psk"
SCHEME_DPSK = "dpsk"
SCHEME_FHCS = "fhcs"
SCHEME_FHCS_PSK = "fhcs+psk"

SCHEMES = (SCHEME_NONE, SCHEME_PSK, SCHEME_DPSK, SCHEME_FHCS, SCHEME_FHCS_PSK)

_PHASE_SCHEMES = (SCHEME_PSK, SCHEME_DPSK, SCHEME_FHCS_PSK)
_CODE_SCHEMES = (SCHEME_FHCS, SCHEME_FHCS_PSK)


def _as_rng(rng: int | np.random.Generator | None) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True)
class RadarParams:
    """Static configuration of the frequency-hopping MIMO transmitter.

    ``samples_per_hop`` and ``bin_step`` are derived in ``__post_init__``;
    construct instances through :func:`make_radar_params`.
    """

    num_tx: int
    num_subbands: int
    num_hops: int
    bandwidth: float          # Hz
    hop_duration: float       # s
    sample_interval: float    # s
    prf: float = 1e4          # pulse repetition frequency, Hz; rate reporting only
    samples_per_hop: int = field(init=False)
    bin_step: int = field(init=False)

    def __post_init__(self) -> None:
        for name in ("num_tx", "num_subbands", "num_hops", "bandwidth",
                     "hop_duration", "sample_interval", "prf"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.num_tx >= self.num_subbands:
            raise ValueError(
                f"num_tx ({self.num_tx}) must be smaller than "
                f"num_subbands ({self.num_subbands})"
            )
        if self.sample_interval > 1.0 / self.bandwidth * (1 + 1e-12):
            raise ValueError(
                f"sample_interval ({self.sample_interval}) exceeds 1/bandwidth "
                f"({1.0 / self.bandwidth}); the tone grid would alias"
            )
        step = self.bandwidth * self.hop_duration / self.num_subbands
        if abs(step - round(step)) > 1e-6 * max(1.0, step) or round(step) < 1:
            raise ValueError(
                f"bandwidth*hop_duration/num_subbands = {step} is not a positive "
                "integer; sub-band tones would not be orthogonal over a hop"
            )
        samples = round(self.hop_duration / self.sample_interval)
        object.__setattr__(self, "samples_per_hop", int(samples))
        object.__setattr__(self, "bin_step", int(round(step)))
        if self.samples_per_hop < self.num_subbands * self.bin_step:
            raise ValueError(
                f"samples_per_hop ({self.samples_per_hop}) is too small to resolve "
                f"{self.num_subbands} sub-bands at bin step {self.bin_step}"
            )

    @property
    def samples_per_pulse(self) -> int:
        return self.num_hops * self.samples_per_hop


def make_radar_params(num_tx: int, num_subbands: int, num_hops: int,
                      bandwidth: float, hop_duration: float,
                      sample_interval: float, prf: float = 1e4) -> RadarParams:
    """Validate and assemble a radar configuration.

    Rejects configurations whose sub-band spacing does not land on an integer
    DFT bin per hop, or whose sampling is slower than the bandwidth.
    """
    return RadarParams(num_tx, num_subbands, num_hops, bandwidth,
                       hop_duration, sample_interval, prf)


@dataclass(frozen=True)
class HoppingCode:
    """Per-hop, per-antenna sub-band assignment (``num_hops x num_tx`` ints)."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.int64)
        object.__setattr__(self, "entries", entries)
        if entries.ndim != 2:
            raise ValueError("hopping code must be a 2-D (hops x antennas) array")
        if entries.min(initial=0) < 0:
            raise ValueError("sub-band indices must be non-negative")
        for h, row in enumerate(entries):
            if len(set(row.tolist())) != len(row):
                raise ValueError(f"hop {h} assigns the same sub-band to two antennas")

    @property
    def num_hops(self) -> int:
        return self.entries.shape[0]

    @property
    def num_tx(self) -> int:
        return self.entries.shape[1]


def draw_hopping_code(params: RadarParams,
                      rng: int | np.random.Generator | None = None) -> HoppingCode:
    """Draw a uniformly random sub-band subset per hop, in draw order."""
    gen = _as_rng(rng)
    rows = [gen.choice(params.num_subbands, size=params.num_tx, replace=False)
            for _ in range(params.num_hops)]
    return HoppingCode(np.stack(rows))


def reorder_ascending(code: HoppingCode) -> HoppingCode:
    """Sort every hop's sub-bands ascending across antennas.

    The per-hop frequency set is unchanged, only the antenna assignment moves,
    so a receiver can associate the sorted tone positions with antennas.
    """
    return HoppingCode(np.sort(code.entries, axis=1))


# --- combination signalling -------------------------------------------------

def fhcs_bits_per_hop(params: RadarParams) -> int:
    """Bits conveyed per hop by the choice of the sub-band combination."""
    return math.floor(math.log2(math.comb(params.num_subbands, params.num_tx)))


def unrank_combination(rank: int, num_subbands: int, size: int) -> np.ndarray:
    """Map a lexicographic rank to the corresponding sorted combination."""
    total = math.comb(num_subbands, size)
    if not 0 <= rank < total:
        raise ValueError(f"rank {rank} out of range for C({num_subbands},{size})")
    combo = []
    value = 0
    remaining = rank
    while len(combo) < size:
        with_value = math.comb(num_subbands - 1 - value, size - 1 - len(combo))
        if remaining < with_value:
            combo.append(value)
        else:
            remaining -= with_value
        value += 1
    return np.array(combo, dtype=np.int64)


def combination_rank(combo: np.ndarray, num_subbands: int) -> int:
    """Lexicographic rank of a sorted combination; inverse of unranking."""
    combo = np.asarray(combo, dtype=np.int64)
    size = len(combo)
    total = math.comb(num_subbands, size)
    acc = sum(math.comb(num_subbands - 1 - int(c), size - i)
              for i, c in enumerate(combo))
    return total - 1 - acc


def _bits_to_int(bits: np.ndarray) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _int_to_bits(value: int, width: int) -> np.ndarray:
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(width)],
                    dtype=np.int64)


def fhcs_encode(bits: np.ndarray, params: RadarParams) -> np.ndarray:
    """Encode one hop's combination-selection bits into a sorted sub-band set."""
    bits = np.asarray(bits, dtype=np.int64)
    width = fhcs_bits_per_hop(params)
    if bits.shape != (width,):
        raise ValueError(f"expected {width} bits per hop, got shape {bits.shape}")
    rank = _bits_to_int(bits)
    return unrank_combination(rank, params.num_subbands, params.num_tx)


# --- phase signalling --------------------------------------------------------

def constellation_phases(bits_per_symbol: int) -> np.ndarray:
    """The 2**bits_per_symbol evenly spaced PSK phases starting at zero."""
    order = 2 ** bits_per_symbol
    return 2 * np.pi * np.arange(order) / order


def _group_bits(bits: np.ndarray, bits_per_symbol: int,
                num_hops: int, num_tx: int) -> np.ndarray:
    """Reshape a flat bit stream into per-(hop, antenna) symbol indices."""
    bits = np.asarray(bits, dtype=np.int64)
    expected = num_hops * num_tx * bits_per_symbol
    if bits.size != expected:
        raise ValueError(f"expected {expected} bits, got {bits.size}")
    if np.any((bits != 0) & (bits != 1)):
        raise ValueError("bits must be 0/1")
    groups = bits.reshape(num_hops, num_tx, bits_per_symbol)
    weights = 2 ** np.arange(bits_per_symbol - 1, -1, -1)
    return groups @ weights


def psk_encode(bits: np.ndarray, bits_per_symbol: int, num_hops: int,
               num_tx: int, pilot: bool = True) -> np.ndarray:
    """Map a bit stream onto absolute PSK phases, one symbol per (hop, antenna).

    With a pilot, hop 0 carries no data and its phases are zero; the stream
    then covers hops 1..num_hops-1 in hop-major order.
    """
    data_hops = num_hops - 1 if pilot else num_hops
    idx = _group_bits(bits, bits_per_symbol, data_hops, num_tx)
    grid = constellation_phases(bits_per_symbol)
    phases = np.zeros((num_hops, num_tx))
    phases[num_hops - data_hops:] = grid[idx]
    return phases


def dpsk_encode(bits: np.ndarray, bits_per_symbol: int, num_hops: int,
                num_tx: int) -> np.ndarray:
    """Accumulate PSK increments hop to hop per antenna, hop 0 as reference.

    Hop 0 always transmits the zero reference phase, so the stream covers
    num_hops-1 increments per antenna whether or not a pilot is configured.
    """
    idx = _group_bits(bits, bits_per_symbol, num_hops - 1, num_tx)
    grid = constellation_phases(bits_per_symbol)
    increments = np.zeros((num_hops, num_tx))
    increments[1:] = grid[idx]
    return np.cumsum(increments, axis=0) % (2 * np.pi)


@dataclass(frozen=True)
class PhasePayload:
    """Phase modulation attached to a pulse, hop 0 first."""

    scheme: str
    bits_per_symbol: int
    phases: np.ndarray            # (num_hops, num_tx) radians
    fhcs_bits_per_hop: int = 0

    def __post_init__(self) -> None:
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        phases = np.asarray(self.phases, dtype=float)
        object.__setattr__(self, "phases", phases)
        step = 2 * np.pi / 2 ** self.bits_per_symbol
        offset = np.abs(phases / step - np.round(phases / step))
        if np.any(offset > 1e-9):
            raise ValueError("phases must lie on the PSK constellation grid")


def synthesize_tx(params: RadarParams, code: HoppingCode,
                  payload: PhasePayload | None = None) -> "TxBaseband":
    """Build per-antenna baseband samples for one pulse.

    Each (antenna, hop) slice is the unit tone of its sub-band times the
    payload phase factor, so every sample has unit magnitude and the hop DFT
    peaks exactly on the sub-band's bin.
    """
    if code.num_hops != params.num_hops or code.num_tx != params.num_tx:
        raise ValueError("hopping code shape does not match radar parameters")
    phases = np.zeros((params.num_hops, params.num_tx)) if payload is None \
        else payload.phases
    if phases.shape != (params.num_hops, params.num_tx):
        raise ValueError("payload phase matrix shape does not match radar parameters")
    tones = tone_table(params)
    samples = tones[code.entries] * np.exp(1j * phases)[..., None]
    return TxBaseband(samples=np.transpose(samples, (1, 0, 2)), params=params)


def tone_table(params: RadarParams) -> np.ndarray:
    """Unit tones of all sub-bands, shape (num_subbands, samples_per_hop)."""
    i = np.arange(params.samples_per_hop)
    k = np.arange(params.num_subbands)
    return np.exp(2j * np.pi * params.bin_step * np.outer(k, i)
                  / params.samples_per_hop)


@dataclass(frozen=True)
class TxBaseband:
    """Transmit samples, shape (num_tx, num_hops, samples_per_hop)."""

    samples: np.ndarray
    params: RadarParams

    def pulse(self, antenna: int | None = None) -> np.ndarray:
        """Hop-concatenated samples for one antenna, or all if antenna is None."""
        if antenna is None:
            return self.samples.reshape(self.samples.shape[0], -1)
        return self.samples[antenna].reshape(-1)


# --- message plumbing ---------------------------------------------------------

def pulse_bits_per_hop(params: RadarParams, scheme: str,
                       bits_per_symbol: int = 1) -> int:
    """Information bits carried by one data hop under the given scheme."""
    if scheme == SCHEME_NONE:
        return 0
    phase = params.num_tx * bits_per_symbol
    code = fhcs_bits_per_hop(params)
    return {SCHEME_PSK: phase, SCHEME_DPSK: phase,
            SCHEME_FHCS: code, SCHEME_FHCS_PSK: phase + code}[scheme]


def message_bit_count(params: RadarParams, scheme: str,
                      bits_per_symbol: int = 1, pilot: bool = True) -> int:
    """Total message bits in one pulse.

    DPSK always loses one hop to the differential reference; the other
    schemes lose hop 0 only when the pilot is enabled.
    """
    if scheme == SCHEME_NONE:
        return 0
    data_hops = params.num_hops - 1 if (pilot or scheme == SCHEME_DPSK) \
        else params.num_hops
    return data_hops * pulse_bits_per_hop(params, scheme, bits_per_symbol)


def random_message_bits(params: RadarParams, scheme: str,
                        rng: int | np.random.Generator | None = None,
                        bits_per_symbol: int = 1, pilot: bool = True) -> np.ndarray:
    gen = _as_rng(rng)
    n = message_bit_count(params, scheme, bits_per_symbol, pilot)
    return gen.integers(0, 2, size=n, dtype=np.int64)


def encode_pulse(params: RadarParams, scheme: str, bits: np.ndarray,
                 rng: int | np.random.Generator | None = None,
                 bits_per_symbol: int = 1, pilot: bool = True,
                 code: HoppingCode | None = None) -> tuple[HoppingCode, PhasePayload]:
    """Turn a message bit stream into a (code, payload) pair for one pulse.

    The stream is consumed hop-major; for the combined scheme each data hop
    takes its combination bits first, then its PSK bits.  Schemes without
    combination data use the supplied code, or draw one and re-order it.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    bits = np.asarray(bits, dtype=np.int64)
    expected = message_bit_count(params, scheme, bits_per_symbol, pilot)
    if bits.size != expected:
        raise ValueError(f"scheme {scheme!r} needs {expected} bits, got {bits.size}")

    h, m = params.num_hops, params.num_tx
    data_start = 1 if (pilot or scheme == SCHEME_DPSK) else 0
    code_width = fhcs_bits_per_hop(params)

    if scheme in _CODE_SCHEMES:
        per_hop = pulse_bits_per_hop(params, scheme, bits_per_symbol)
        rows = np.empty((h, m), dtype=np.int64)
        gen = _as_rng(rng)
        for hop in range(data_start):
            rows[hop] = np.sort(gen.choice(params.num_subbands, size=m, replace=False))
        phase_bits = []
        for j, hop in enumerate(range(data_start, h)):
            group = bits[j * per_hop:(j + 1) * per_hop]
            rows[hop] = fhcs_encode(group[:code_width], params)
            phase_bits.append(group[code_width:])
        out_code = HoppingCode(rows)
        if scheme == SCHEME_FHCS_PSK:
            phases = psk_encode(np.concatenate(phase_bits), bits_per_symbol,
                                h, m, pilot=data_start == 1)
        else:
            phases = np.zeros((h, m))
    else:
        if code is None:
            code = reorder_ascending(draw_hopping_code(params, rng))
        out_code = code
        if scheme == SCHEME_PSK:
            phases = psk_encode(bits, bits_per_symbol, h, m, pilot=pilot)
        elif scheme == SCHEME_DPSK:
            phases = dpsk_encode(bits, bits_per_symbol, h, m)
        else:
            phases = np.zeros((h, m))
    payload = PhasePayload(scheme=scheme, bits_per_symbol=bits_per_symbol,
                           phases=phases, fhcs_bits_per_hop=code_width
                           if scheme in _CODE_SCHEMES else 0)
    return out_code, payload


def data_rate(params: RadarParams, scheme: str, bits_per_symbol: int = 1) -> float:
    """Raw information rate in bit/s: prf * hops * bits-per-hop."""
    return params.prf * params.num_hops * pulse_bits_per_hop(
        params, scheme, bits_per_symbol)
