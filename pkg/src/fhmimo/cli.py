"""Command-line front end: presets, config parsing, and run dispatch.

Configuration flows preset -> config file -> command-line flags, later layers
overriding earlier ones.  Config files are flat ``key=value`` lines with
``#`` comments.  Every run writes its tables, a rendered figure, and a
``run_manifest.json`` listing the emitted files with content hashes into the
output directory (``--out``, the ``FHMIMO_OUTDIR`` environment variable, or
``./fhmimo_runs/<subcommand>``).

Exit codes: 0 success, 2 configuration error, 3 runtime failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .ambiguity import average_ambiguity, range_ambiguity
from .channel import CHANNEL_AWGN, ChannelModel
from .experiments import (
    ExperimentConfig,
    run_id,
    run_mse,
    run_multipath_demo,
    run_ser,
)
from .report import (
    RunManifest,
    render_ambiguity_figure,
    render_mse_figure,
    render_multipath_figure,
    render_ser_figure,
    write_multipath_outputs,
    write_profile_csv,
    write_table,
)
from .waveform import (
    SCHEME_DPSK,
    SCHEME_FHCS,
    SCHEME_FHCS_PSK,
    SCHEME_NONE,
    SCHEME_PSK,
    HoppingCode,
    data_rate,
    draw_hopping_code,
    encode_pulse,
    make_radar_params,
    pulse_bits_per_hop,
    random_message_bits,
    reorder_ascending,
    synthesize_tx,
)

SUBCOMMANDS = ("ambiguity", "mse", "ser", "multipath", "rates")

ENV_OUTDIR = "FHMIMO_OUTDIR"


class ConfigError(Exception):
    """Raised for any malformed or inconsistent configuration input."""


_RADAR_KEYS = ("num_tx", "num_subbands", "num_hops", "bandwidth_hz",
               "hop_duration_s", "sample_interval_s")

_DEFAULTS = {
    "prf_hz": "1e5",
    "channel": "awgn",
    "los_aod_rad": "0.0",
    "rician_factor_db": "5.0",
    "num_paths": "8",
    "noise_power": "",
    "seed": "0",
    "trials": "1000",
    "snr_grid_db": "-10,-8,-6,-4,-2,0,2,4,6,8,10,12,14,16,18,20",
    "ebn0_grid_db": "26,27,28,29,30,31,32,33,34,35,36",
    "schemes": "psk,fhcs,fhcs+psk",
    "knowledge": "estk_estch,truek_estch,truek_truech",
    "estimation_snr_db": "10",
    "psk_bits": "1",
    "pilot": "1",
    "mse_code_knowledge": "truek",
    "rx_antennas": "1",
    "rx_spacing_wl": "0.5",
    "timing_offset_samples": "0",
    "qse_iterations": "3",
    "workers": "1",
    "ambiguity_modulation": "none",
    "ambiguity_compare": "none",
    "ambiguity_average": "1",
}

_KNOWN_KEYS = set(_DEFAULTS) | set(_RADAR_KEYS)

PRESETS: dict[str, dict[str, str]] = {
    # 10x20-sub-band radar, 100 MHz, 0.2 us hops, sampled at 10x bandwidth
    "fig3": {
        "num_tx": "10", "num_subbands": "20", "num_hops": "10",
        "bandwidth_hz": "1e8", "hop_duration_s": "2e-7",
        "sample_interval_s": "1e-9", "prf_hz": "1e5",
        "los_aod_rad": repr(math.pi / 2),
        "ambiguity_compare": "reordered",
    },
    # same radar sampled at twice the bandwidth; estimation study grid
    "fig5": {
        "num_tx": "10", "num_subbands": "20", "num_hops": "10",
        "bandwidth_hz": "1e8", "hop_duration_s": "2e-7",
        "sample_interval_s": "5e-9", "prf_hz": "1e5",
        "los_aod_rad": repr(math.pi / 2),
        "trials": "20000",
    },
    # link-level symbol-error study on the fig5 radar
    "fig6": {
        "num_tx": "10", "num_subbands": "20", "num_hops": "10",
        "bandwidth_hz": "1e8", "hop_duration_s": "2e-7",
        "sample_interval_s": "5e-9", "prf_hz": "1e5",
        "los_aod_rad": repr(math.pi / 2),
        "trials": "12000",
        "estimation_snr_db": "10",
    },
    # two-antenna terminal in a Ricean channel at fixed noise power
    "fig7": {
        "num_tx": "10", "num_subbands": "20", "num_hops": "10",
        "bandwidth_hz": "1e8", "hop_duration_s": "2e-7",
        "sample_interval_s": "1e-9", "prf_hz": "1e5",
        "channel": "rician",
        "rician_factor_db": "5", "num_paths": "8",
        "noise_power": "0.1", "rx_antennas": "2",
        "trials": "10000",
    },
    # smallest admissible configuration, handy for quick checks
    "toy": {
        "num_tx": "2", "num_subbands": "4", "num_hops": "2",
        "bandwidth_hz": "4", "hop_duration_s": "1",
        "sample_interval_s": "0.125", "prf_hz": "1",
    },
}

_SCHEME_ALIASES = {
    "psk": SCHEME_PSK, "bpsk": SCHEME_PSK, "dpsk": SCHEME_DPSK,
    "fhcs": SCHEME_FHCS, "fhcs+psk": SCHEME_FHCS_PSK,
    "fhcs+bpsk": SCHEME_FHCS_PSK, "none": SCHEME_NONE,
}


def _parse_float(raw: str, key: str) -> float:
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from exc


def _parse_int(raw: str, key: str) -> int:
    try:
        return int(float(raw))
    except ValueError as exc:
        raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from exc


def _parse_grid(raw: str, key: str) -> tuple[float, ...]:
    values = tuple(_parse_float(part, key) for part in raw.split(",") if part.strip())
    if not values:
        raise ConfigError(f"key {key!r}: grid must not be empty")
    return values


def read_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key=value config file; unknown keys fail later, loudly."""
    out: dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        out[key.strip()] = value.strip()
    return out


@dataclass
class CliConfig:
    """Validated configuration for one run."""

    experiment: ExperimentConfig
    ambiguity_modulation: str
    ambiguity_compare: str
    ambiguity_average: int
    raw: dict


def parse_config(preset: str | None = None, path: str | Path | None = None,
                 overrides: dict[str, str] | None = None) -> CliConfig:
    """Merge preset, config file, and overrides into a validated config."""
    merged = dict(_DEFAULTS)
    provided: set[str] = set()
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; "
                              f"available: {', '.join(sorted(PRESETS))}")
        merged.update(PRESETS[preset])
        provided.update(PRESETS[preset])
    if path is not None:
        from_file = read_config_file(path)
        merged.update(from_file)
        provided.update(from_file)
    for key, value in (overrides or {}).items():
        merged[key] = value
        provided.add(key)

    unknown = sorted(set(merged) - _KNOWN_KEYS)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    missing = sorted(k for k in _RADAR_KEYS if k not in provided)
    if missing:
        raise ConfigError("missing required radar key(s): " + ", ".join(missing)
                          + " (or select a --preset)")

    try:
        radar = make_radar_params(
            num_tx=_parse_int(merged["num_tx"], "num_tx"),
            num_subbands=_parse_int(merged["num_subbands"], "num_subbands"),
            num_hops=_parse_int(merged["num_hops"], "num_hops"),
            bandwidth=_parse_float(merged["bandwidth_hz"], "bandwidth_hz"),
            hop_duration=_parse_float(merged["hop_duration_s"], "hop_duration_s"),
            sample_interval=_parse_float(merged["sample_interval_s"],
                                         "sample_interval_s"),
            prf=_parse_float(merged["prf_hz"], "prf_hz"),
        )
    except ValueError as exc:
        raise ConfigError(
            f"invalid radar configuration (check num_tx/num_subbands/num_hops/"
            f"bandwidth_hz/hop_duration_s/sample_interval_s): {exc}") from exc

    kind = merged["channel"].strip().lower()
    if kind not in ("awgn", "rician", "rayleigh"):
        raise ConfigError(f"key 'channel': unknown model {merged['channel']!r}")
    try:
        channel = ChannelModel(
            kind=kind,
            los_aod=_parse_float(merged["los_aod_rad"], "los_aod_rad"),
            num_paths=1 if kind == "awgn"
            else _parse_int(merged["num_paths"], "num_paths"),
            rician_factor_db=_parse_float(merged["rician_factor_db"],
                                          "rician_factor_db"),
        )
    except ValueError as exc:
        raise ConfigError(f"invalid channel configuration: {exc}") from exc

    schemes = []
    for name in merged["schemes"].split(","):
        name = name.strip().lower()
        if name not in _SCHEME_ALIASES:
            raise ConfigError(f"key 'schemes': unknown scheme {name!r}")
        schemes.append(_SCHEME_ALIASES[name])

    noise_power = merged["noise_power"].strip()
    trials = _parse_int(merged["trials"], "trials")
    if trials < 1:
        raise ConfigError("key 'trials': must be at least 1")
    timing = _parse_int(merged["timing_offset_samples"], "timing_offset_samples")
    if not 0 <= timing < radar.samples_per_hop:
        raise ConfigError(f"key 'timing_offset_samples': must lie in "
                          f"[0, {radar.samples_per_hop})")

    try:
        experiment = ExperimentConfig(
            radar=radar,
            channel=channel,
            seed=_parse_int(merged["seed"], "seed"),
            trials=trials,
            snr_grid_db=_parse_grid(merged["snr_grid_db"], "snr_grid_db"),
            ebn0_grid_db=_parse_grid(merged["ebn0_grid_db"], "ebn0_grid_db"),
            schemes=tuple(schemes),
            knowledge=tuple(part.strip() for part in merged["knowledge"].split(",")
                            if part.strip()),
            estimation_snr_db=_parse_float(merged["estimation_snr_db"],
                                           "estimation_snr_db"),
            bits_per_symbol=_parse_int(merged["psk_bits"], "psk_bits"),
            pilot=bool(_parse_int(merged["pilot"], "pilot")),
            mse_code_knowledge=merged["mse_code_knowledge"].strip(),
            rx_antennas=_parse_int(merged["rx_antennas"], "rx_antennas"),
            rx_spacing=_parse_float(merged["rx_spacing_wl"], "rx_spacing_wl"),
            timing_offset=timing,
            qse_iterations=_parse_int(merged["qse_iterations"], "qse_iterations"),
            noise_power=None if not noise_power
            else _parse_float(noise_power, "noise_power"),
            workers=_parse_int(merged["workers"], "workers"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    modulation = merged["ambiguity_modulation"].strip().lower()
    if modulation not in _SCHEME_ALIASES:
        raise ConfigError(f"key 'ambiguity_modulation': unknown scheme "
                          f"{modulation!r}")
    compare = merged["ambiguity_compare"].strip().lower()
    if compare not in ("none", "reordered", *_SCHEME_ALIASES):
        raise ConfigError(f"key 'ambiguity_compare': expected 'none', 'reordered' "
                          f"or a modulation name, got {compare!r}")
    return CliConfig(
        experiment=experiment,
        ambiguity_modulation=_SCHEME_ALIASES[modulation],
        ambiguity_compare=compare if compare in ("none", "reordered")
        else _SCHEME_ALIASES[compare],
        ambiguity_average=_parse_int(merged["ambiguity_average"],
                                     "ambiguity_average"),
        raw=merged,
    )


# --- subcommand bodies ----------------------------------------------------------

def _ambiguity_waveform(config: CliConfig, scheme: str, code: HoppingCode,
                        draw: int) -> np.ndarray:
    """Transmit samples for one ambiguity draw of the given modulation."""
    exp = config.experiment
    params = exp.radar
    if scheme == SCHEME_NONE:
        return synthesize_tx(params, code).samples
    rng = np.random.default_rng([exp.seed, 404, draw])
    bits = random_message_bits(params, scheme, rng, exp.bits_per_symbol,
                               pilot=False)
    msg_code, payload = encode_pulse(params, scheme, bits, rng,
                                     exp.bits_per_symbol, pilot=False, code=code)
    return synthesize_tx(params, msg_code, payload).samples


def _profile_for(config: CliConfig, scheme: str, code: HoppingCode):
    draws = max(1, config.ambiguity_average)
    profiles = [range_ambiguity(_ambiguity_waveform(config, scheme, code, d))
                for d in range(draws)]
    return profiles[0] if draws == 1 else average_ambiguity(profiles)


def _run_ambiguity(config: CliConfig, out_dir: Path, manifest: RunManifest) -> None:
    exp = config.experiment
    code = reorder_ascending(draw_hopping_code(exp.radar,
                                               np.random.default_rng([exp.seed, 400])))
    primary_label = config.ambiguity_modulation
    profiles = {primary_label: _profile_for(config, config.ambiguity_modulation, code)}
    if config.ambiguity_compare == "reordered":
        # compare the unsorted draw against its ascending re-ordering
        unsorted_code = draw_hopping_code(exp.radar,
                                          np.random.default_rng([exp.seed, 400]))
        profiles = {
            "original": _profile_for(config, config.ambiguity_modulation,
                                     unsorted_code),
            "reordered": _profile_for(config, config.ambiguity_modulation, code),
        }
    elif config.ambiguity_compare != "none":
        profiles[config.ambiguity_compare] = _profile_for(
            config, config.ambiguity_compare, code)

    for label, profile in profiles.items():
        manifest.add(write_profile_csv(profile, out_dir / f"ambiguity_{label}.csv"))
    manifest.add(render_ambiguity_figure(profiles, out_dir / "ambiguity.png"))


def _run_rates(config: CliConfig, out_dir: Path, manifest: RunManifest) -> None:
    params = config.experiment.radar
    j = config.experiment.bits_per_symbol
    lines = ["scheme,bits_per_hop,rate_bit_s"]
    for scheme in (SCHEME_PSK, SCHEME_DPSK, SCHEME_FHCS, SCHEME_FHCS_PSK):
        bits = pulse_bits_per_hop(params, scheme, j)
        lines.append(f"{scheme},{bits},{data_rate(params, scheme, j):.12g}")
    path = out_dir / "rates.csv"
    path.write_text("\n".join(lines) + "\n")
    manifest.add(path)


def run(subcommand: str, config: CliConfig, out_dir: str | Path,
        config_path: str | None = None) -> RunManifest:
    """Execute one subcommand and write its outputs; returns the manifest."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    exp = config.experiment
    manifest = RunManifest(subcommand=subcommand, config_path=config_path,
                           seed=exp.seed, out_dir=str(out),
                           metadata={"run_id": run_id(exp)})

    if subcommand == "mse":
        table = run_mse(exp)
        manifest.add(write_table(table, out / "mse.csv"))
        manifest.add(render_mse_figure(table, out / "mse.png"))
    elif subcommand == "ser":
        table = run_ser(exp)
        manifest.add(write_table(table, out / "ser.csv"))
        manifest.add(render_ser_figure(table, out / "ser.png"))
    elif subcommand == "multipath":
        report = run_multipath_demo(exp)
        for path in write_multipath_outputs(report, out):
            manifest.add(path)
        manifest.add(render_multipath_figure(report, out / "multipath.png"))
        manifest.metadata["single_antenna_error_rates"] = \
            [float(r) for r in report.error_rates]
        manifest.metadata["combined_error_rate"] = float(report.combined_rate)
        manifest.metadata["repaired_example_trial"] = \
            None if report.example is None else int(report.example["trial"])
    elif subcommand == "ambiguity":
        _run_ambiguity(config, out, manifest)
    elif subcommand == "rates":
        _run_rates(config, out, manifest)

    manifest.write(out)
    return manifest


# --- argument parsing -------------------------------------------------------------

_FLAG_TO_KEY = {
    "seed": "seed",
    "trials": "trials",
    "snr_grid": "snr_grid_db",
    "ebn0_grid": "ebn0_grid_db",
    "schemes": "schemes",
    "knowledge": "knowledge",
    "rx_antennas": "rx_antennas",
    "timing_offset_samples": "timing_offset_samples",
    "workers": "workers",
    "modulation": "ambiguity_modulation",
    "compare": "ambiguity_compare",
    "average": "ambiguity_average",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fhmimo",
        description="Link-level studies of a frequency-hopping MIMO "
                    "radar-communication downlink.")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, help_text in [
            ("ambiguity", "range ambiguity profiles of modulated waveforms"),
            ("mse", "channel-estimation error against SNR"),
            ("ser", "symbol error rate against energy per bit"),
            ("multipath", "two-antenna diversity detection demo"),
            ("rates", "data rates of the signalling schemes")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--preset", choices=sorted(PRESETS),
                       help="named parameter set to start from")
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--seed", help="master seed (integer)")
        p.add_argument("--out", help=f"output directory (default ${ENV_OUTDIR} "
                                     "or ./fhmimo_runs/<subcommand>)")
        p.add_argument("--trials", help="Monte-Carlo trials per grid point")
        p.add_argument("--snr-grid", dest="snr_grid",
                       help="comma-separated SNR grid in dB")
        p.add_argument("--ebn0-grid", dest="ebn0_grid",
                       help="comma-separated Eb/N0 grid in dB")
        p.add_argument("--schemes", help="comma-separated signalling schemes")
        p.add_argument("--knowledge",
                       help="comma-separated receiver-knowledge combos, e.g. "
                            "estk_estch,truek_estch")
        p.add_argument("--rx-antennas", dest="rx_antennas",
                       help="receive antennas at the terminal")
        p.add_argument("--timing-offset-samples", dest="timing_offset_samples",
                       help="sample offset of the capture windows")
        p.add_argument("--workers", help="parallel chunk workers")
        if name == "ambiguity":
            p.add_argument("--modulation", help="waveform modulation to profile")
            p.add_argument("--compare",
                           help="'none', 'reordered', or a second modulation")
            p.add_argument("--average",
                           help="average the profile over this many draws")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for flag, key in _FLAG_TO_KEY.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[key] = value
    try:
        config = parse_config(args.preset, args.config, overrides)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"cannot read configuration: {exc}", file=sys.stderr)
        return 4

    out_dir = args.out or os.environ.get(ENV_OUTDIR) \
        or str(Path("fhmimo_runs") / args.subcommand)
    try:
        manifest = run(args.subcommand, config, out_dir, args.config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 3
    names = ", ".join(entry["name"] for entry in manifest.files)
    print(f"{args.subcommand}: wrote {names} to {manifest.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
