"""Batch front end: single-point designs, figure-reproduction sweeps,
CSV emission, and optional figure rendering.

Every command reads a flat INI config (all keys optional; the defaults
reproduce the published operating points), writes CSV with a provenance
hash, prints a short summary, and, unless ``--no-plot`` is given, renders
a PNG next to the CSV.  Exit codes: 0 success, 2 config error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import report
from .airsim import Alphabet, mismatched_air_estimate
from .configio import (
    Config,
    parse_float_list,
    write_csv,
    write_key_values,
    write_spectrum_csv,
)
from .errors import ConfigError, NumericalError
from .ftn import (
    awgn_ase_bound,
    ebn0_from_air,
    optimize_pulse,
    rrc_folded_spectrum,
)
from .mimo import mimo_flat_air, mimo_waterfill_capacity, optimize_mimo, svd_spectra
from .optimize import flat_spectrum_receiver, optimize_transmit_filter
from .shortening import ShorteningProblem, solve_shortening
from .spectral import SampledSpectrum, dtft, dtft_power, zero_phase_taps
from .waterfill import waterfill

DEFAULT_CHANNEL = "0.5,0 0.5,0 -0.5,0 0,-0.5"

_BASE_DEFAULTS: dict[str, dict[str, str]] = {
    "channel": {"taps": DEFAULT_CHANNEL, "normalize": "true"},
    "grid": {"size": "4096"},
    "run": {"snr_db": "10", "memory": "2"},
    "sweep": {"snr_db": "0, 2, 4, 6, 8, 10, 12, 14, 16", "memory": "1, 2, 3"},
    "optimizer": {},
    "sim": {},
    "mimo": {"size": "2", "memory": "3", "seed": "1"},
    "ftn": {"bandwidth": "0.5", "product": "0.48", "rolloffs": "0.1, 0.2",
            "pulse_taps": "257", "window": "kaiser"},
}


def _noise_from_snr(snr_db: float) -> float:
    return 10.0 ** (-snr_db / 10.0)


def _load(args, extra: dict[str, dict[str, str]] | None = None) -> Config:
    overrides: dict[str, dict[str, str]] = {}
    if args.seed is not None:
        overrides["optimizer"] = {"seed": str(args.seed)}
        overrides["sim"] = {"seed": str(args.seed)}
    if args.grid is not None:
        overrides.setdefault("grid", {})["size"] = str(args.grid)
    defaults = {k: dict(v) for k, v in _BASE_DEFAULTS.items()}
    for section, vals in (extra or {}).items():
        defaults.setdefault(section, {}).update(vals)
    return Config.load(args.config, defaults, overrides)


def _out_path(args, default_name: str) -> Path:
    return Path(args.out) if args.out else Path(default_name)


def _chain_map(tasks, worker, threads: int):
    """Run one worker per chain, in parallel when asked, preserving order."""
    if threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(worker, tasks))
    return [worker(task) for task in tasks]


# ---------------------------------------------------------------------------
# single-point commands
# ---------------------------------------------------------------------------

def cmd_shorten(args) -> int:
    cfg = _load(args)
    grid = cfg.grid()
    channel = cfg.channel()
    noise = _noise_from_snr(cfg.get_float("run", "snr_db"))
    memory = cfg.get_int("run", "memory")
    h2 = dtft_power(channel, grid)
    solution = solve_shortening(ShorteningProblem(h2, noise, memory))

    out = _out_path(args, "shorten.csv")
    digest = cfg.digest()
    rows = []
    for k in range(memory + 1):
        rows.append([
            k,
            float(solution.kernel_lags[k].real), float(solution.kernel_lags[k].imag),
            float(solution.prediction_taps[k].real), float(solution.prediction_taps[k].imag),
            float(solution.target_lags[k].real), float(solution.target_lags[k].imag),
        ])
    write_csv(out, ["lag", "kernel_re", "kernel_im", "prediction_re",
                    "prediction_im", "target_re", "target_im"], rows, digest)
    write_key_values(out.with_suffix(".txt"), {
        "residual": solution.residual,
        "air_bits": solution.air,
        "noise_density": noise,
        "memory": memory,
    }, digest)
    if not args.no_plot:
        mags = np.abs(solution.shortener_values)
        report.render_spectrum(
            {"|front end|": (grid.omegas, mags),
             "combined power": (grid.omegas, h2.values)},
            out.with_suffix(".png"))
    print(f"residual={solution.residual:.6g} air={solution.air:.6f} bits -> {out}")
    return 0


def cmd_optimize(args) -> int:
    cfg = _load(args)
    grid = cfg.grid()
    channel = cfg.channel()
    noise = _noise_from_snr(cfg.get_float("run", "snr_db"))
    memory = cfg.get_int("run", "memory")
    opts = cfg.optimizer_options()
    result = optimize_transmit_filter(channel, noise, memory, opts, grid)
    h2 = dtft_power(channel, grid)
    flat = flat_spectrum_receiver(h2, noise, memory)
    capacity = waterfill(h2, noise).capacity

    out = _out_path(args, "optimize.csv")
    digest = cfg.digest()
    write_spectrum_csv(out, result.spectrum, digest)
    summary: dict[str, object] = {
        "air_bits": result.air,
        "air_flat_bits": flat.air,
        "capacity_bits": capacity,
        "residual": result.residual,
        "converged": result.converged,
        "restarts_used": result.restarts_used,
        "zero_lag": result.coeffs.zero_lag,
    }
    for i, lag in enumerate(result.coeffs.off_lags, start=1):
        summary[f"off_lag_{i}_re"] = float(lag.real)
        summary[f"off_lag_{i}_im"] = float(lag.imag)
    write_key_values(out.with_suffix(".txt"), summary, digest)
    if not args.no_plot:
        report.render_spectrum(
            {"optimized": (grid.omegas, result.spectrum.values),
             "channel power": (grid.omegas, h2.values)},
            out.with_suffix(".png"))
    print(f"air={result.air:.6f} flat={flat.air:.6f} capacity={capacity:.6f} -> {out}")
    return 0


def cmd_waterfill(args) -> int:
    cfg = _load(args)
    grid = cfg.grid()
    channel = cfg.channel()
    noise = _noise_from_snr(cfg.get_float("run", "snr_db"))
    h2 = dtft_power(channel, grid)
    solution = waterfill(h2, noise)

    out = _out_path(args, "waterfill.csv")
    digest = cfg.digest()
    write_spectrum_csv(out, solution.spectrum, digest)
    write_key_values(out.with_suffix(".txt"), {
        "theta": solution.theta,
        "capacity_bits": solution.capacity,
        "noise_density": noise,
    }, digest)
    if not args.no_plot:
        report.render_spectrum(
            {"waterfill": (grid.omegas, solution.spectrum.values),
             "channel power": (grid.omegas, h2.values)},
            out.with_suffix(".png"))
    print(f"theta={solution.theta:.6g} capacity={solution.capacity:.6f} -> {out}")
    return 0


def cmd_mimo(args) -> int:
    cfg = _load(args)
    grid = cfg.grid()
    channel = cfg.mimo_channel()
    ratio_db = cfg.get_float("run", "ehn0_db", cfg.get("run", "snr_db", "10"))
    noise = channel.energy / (10.0 ** (ratio_db / 10.0))
    memory = cfg.get_int("run", "memory")
    opts = cfg.optimizer_options()
    result = optimize_mimo(channel, noise, memory, opts, grid)
    sub = svd_spectra(channel, grid)
    flat = mimo_flat_air(sub, noise, memory)
    capacity = mimo_waterfill_capacity(sub, noise)

    out = _out_path(args, "mimo.csv")
    digest = cfg.digest()
    header = ["omega"]
    cols = [grid.omegas]
    for i, filt in enumerate(result.subchannels, start=1):
        header += [f"gain_{i}", f"transmit_{i}"]
        cols += [sub.sigma[i - 1] ** 2, filt.spectrum.values]
    rows = [[float(c[m]) for c in cols] for m in range(grid.size)]
    write_csv(out, header, rows, digest)
    summary: dict[str, object] = {
        "total_air_bits": result.total_air,
        "flat_air_bits": flat,
        "capacity_bits": capacity,
        "ehn0_db": ratio_db,
        "noise_density": noise,
    }
    for i, frac in enumerate(result.power_split, start=1):
        summary[f"power_fraction_{i}"] = float(frac)
    write_key_values(out.with_suffix(".txt"), summary, digest)
    if not args.no_plot:
        curves = {}
        for i, filt in enumerate(result.subchannels, start=1):
            curves[f"gain {i}"] = (grid.omegas, sub.sigma[i - 1] ** 2)
            curves[f"transmit {i}"] = (grid.omegas, filt.spectrum.values)
        report.render_spectrum(curves, out.with_suffix(".png"))
    print(f"total_air={result.total_air:.6f} flat={flat:.6f} "
          f"capacity={capacity:.6f} -> {out}")
    return 0


def cmd_ftn(args) -> int:
    cfg = _load(args)
    grid = cfg.grid()
    noise = _noise_from_snr(cfg.get_float("run", "snr_db"))
    memory = cfg.get_int("run", "memory")
    scenario = cfg.ftn_scenario(noise)
    opts = cfg.optimizer_options()
    design = optimize_pulse(scenario, memory, opts, grid,
                            num_taps=cfg.get_int("ftn", "pulse_taps", "257"),
                            window=cfg.get("ftn", "window", "kaiser"))

    out = _out_path(args, "ftn.csv")
    digest = cfg.digest()
    write_spectrum_csv(out, design.discrete_spectrum, digest)
    taps_path = out.with_name(out.stem + "_pulse.csv")
    times = design.pulse.times
    amp = design.pulse.taps.real if np.iscomplexobj(design.pulse.taps) else design.pulse.taps
    write_csv(taps_path, ["t", "amplitude"],
              [[float(t), float(a)] for t, a in zip(times, amp)], digest)
    write_key_values(out.with_suffix(".txt"), {
        "air_bits": design.air,
        "ase_bits_s_hz": design.ase,
        "ebn0_db": ebn0_from_air(design.air, noise),
        "stopband_leakage": design.pulse.stopband_leakage,
        "product_2wt": scenario.product,
    }, digest)
    if not args.no_plot:
        report.render_spectrum(
            {"pulse spectrum": (grid.omegas, design.discrete_spectrum.values)},
            out.with_suffix(".png"))
    print(f"air={design.air:.6f} ase={design.ase:.6f} "
          f"leakage={design.pulse.stopband_leakage:.3g} -> {out}")
    return 0


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _bpsk_point(channel, spectrum, noise, memory, grid, sim_cfg, pulse_taps):
    """BPSK Monte-Carlo rate for a designed transmit spectrum."""
    taps, offset = zero_phase_taps(spectrum, pulse_taps)
    taps = taps / np.sqrt(np.sum(taps.real ** 2 + taps.imag ** 2))
    combined = np.convolve(channel.taps, taps)
    response = dtft(combined, grid, offset)
    sv = SampledSpectrum(grid, response.real ** 2 + response.imag ** 2)
    solution = solve_shortening(ShorteningProblem(sv, noise, memory), response)
    estimate = mismatched_air_estimate(Alphabet.bpsk(), combined, offset,
                                       solution, sim_cfg)
    return estimate, solution


def run_fig2(cfg: Config) -> tuple[list[str], list[list]]:
    """Optimized vs flat Gaussian rates per receiver memory over SNR."""
    grid = cfg.grid()
    channel = cfg.channel()
    snrs = cfg.snr_list()
    memories = cfg.memory_list()
    opts = cfg.optimizer_options()
    h2 = dtft_power(channel, grid)
    capacities = {snr: waterfill(h2, _noise_from_snr(snr)).capacity for snr in snrs}

    def chain(memory: int):
        out = []
        warm = ()
        for snr in snrs:
            noise = _noise_from_snr(snr)
            result = optimize_transmit_filter(channel, noise, memory, opts, grid,
                                              warm_starts=warm)
            warm = (result.coeffs.off_lags,)
            flat = flat_spectrum_receiver(h2, noise, memory)
            out.append([float(snr), memory, result.air, flat.air, capacities[snr]])
        return out

    chains = _chain_map(memories, chain, cfg.threads)
    rows = [row for chain_rows in chains for row in chain_rows]
    return ["snr_db", "L", "air_optimized", "air_flat", "capacity"], rows


def run_fig3(cfg: Config) -> tuple[list[str], list[list]]:
    """Rates with the waterfilling spectrum under constrained memory."""
    grid = cfg.grid()
    channel = cfg.channel()
    snrs = cfg.snr_list()
    memories = cfg.memory_list()
    h2 = dtft_power(channel, grid)
    rows = []
    for snr in snrs:
        noise = _noise_from_snr(snr)
        wf = waterfill(h2, noise)
        sv_wf = SampledSpectrum(grid, h2.values * wf.spectrum.values)
        for memory in memories:
            air_wf = solve_shortening(ShorteningProblem(sv_wf, noise, memory)).air
            air_flat = flat_spectrum_receiver(h2, noise, memory).air
            rows.append([float(snr), memory, air_wf, air_flat, wf.capacity])
    return ["snr_db", "L", "air_waterfill_spectrum", "air_flat", "capacity"], rows


def run_fig4(cfg: Config) -> tuple[list[str], list[list]]:
    """BPSK Monte-Carlo rates with the optimized transmit filters."""
    grid = cfg.grid()
    channel = cfg.channel()
    snrs = cfg.snr_list()
    memories = cfg.memory_list()
    opts = cfg.optimizer_options()
    sim_cfg = cfg.sim_config()
    pulse_taps = cfg.get_int("sim", "pulse_taps", "129")

    def chain(memory: int):
        out = []
        warm = ()
        for snr in snrs:
            noise = _noise_from_snr(snr)
            result = optimize_transmit_filter(channel, noise, memory, opts, grid,
                                              warm_starts=warm)
            warm = (result.coeffs.off_lags,)
            estimate, solution = _bpsk_point(channel, result.spectrum, noise,
                                             memory, grid, sim_cfg, pulse_taps)
            out.append([float(snr), memory, estimate.air, estimate.stderr,
                        solution.air, "optimized"])
        return out

    chains = _chain_map(memories, chain, cfg.threads)
    rows = [row for chain_rows in chains for row in chain_rows]
    return ["snr_db", "L", "air", "stderr", "air_gaussian", "filter_label"], rows


def run_fig6(cfg: Config) -> tuple[list[str], list[list]]:
    """MIMO rates (optimized vs flat vs capacity) over channel-energy SNR."""
    grid = cfg.grid()
    channel = cfg.mimo_channel()
    ratios = cfg.snr_list("ehn0_db")
    memories = cfg.memory_list()
    opts = cfg.optimizer_options()
    sub = svd_spectra(channel, grid)
    rows = []
    for memory in memories:
        for ratio_db in ratios:
            noise = channel.energy / (10.0 ** (ratio_db / 10.0))
            result = optimize_mimo(channel, noise, memory, opts, grid)
            flat = mimo_flat_air(sub, noise, memory)
            capacity = mimo_waterfill_capacity(sub, noise)
            rows.append([float(ratio_db), memory, result.total_air, flat, capacity])
    return ["ehn0_db", "L", "air_optimized", "air_flat", "capacity"], rows


def run_fig7(cfg: Config) -> tuple[list[str], list[list]]:
    """BPSK spectral-efficiency curves: optimized pulse vs RRC baselines."""
    grid = cfg.grid()
    snrs = cfg.snr_list()
    memories = cfg.memory_list()
    opts = cfg.optimizer_options()
    sim_cfg = cfg.sim_config()
    rolloffs = parse_float_list(cfg.get("ftn", "rolloffs", "0.1, 0.2"))
    pulse_taps = cfg.get_int("ftn", "pulse_taps", "257")
    alphabet = Alphabet.bpsk()
    rows = []
    for memory in memories:
        for snr in snrs:
            noise = _noise_from_snr(snr)
            scenario = cfg.ftn_scenario(noise)
            wt = scenario.bandwidth * scenario.symbol_time
            candidates = {"optimized": optimize_pulse(
                scenario, memory, opts, grid, num_taps=pulse_taps).discrete_spectrum}
            for alpha in rolloffs:
                candidates[f"rrc_a{alpha:g}"] = rrc_folded_spectrum(alpha, scenario, grid)
            for label, spectrum in candidates.items():
                taps, offset = zero_phase_taps(spectrum, pulse_taps)
                taps = taps / np.sqrt(np.sum(taps.real ** 2 + taps.imag ** 2))
                response = dtft(taps, grid, offset)
                sv = SampledSpectrum(grid, response.real ** 2 + response.imag ** 2)
                solution = solve_shortening(ShorteningProblem(sv, noise, memory),
                                            response)
                estimate = mismatched_air_estimate(alphabet, taps, offset,
                                                   solution, sim_cfg)
                if estimate.air <= 0.0:
                    continue  # below the measurable floor at this noise level
                ebn0 = ebn0_from_air(estimate.air, noise)
                rows.append([float(ebn0), estimate.air / wt, estimate.stderr / wt,
                             memory, f"{label}_L{memory}", awgn_ase_bound(ebn0)])
    return ["ebn0_db", "ase", "ase_stderr", "L", "label", "ase_awgn_bound"], rows


def run_airsim(cfg: Config) -> tuple[list[str], list[list]]:
    """BPSK rates for a configured filter over an SNR sweep."""
    grid = cfg.grid()
    channel = cfg.channel()
    snrs = cfg.snr_list()
    memories = cfg.memory_list()
    opts = cfg.optimizer_options()
    sim_cfg = cfg.sim_config()
    pulse_taps = cfg.get_int("sim", "pulse_taps", "129")
    filter_kind = cfg.get("run", "filter", "flat")
    h2 = dtft_power(channel, grid)
    rows = []
    for memory in memories:
        warm = ()
        for snr in snrs:
            noise = _noise_from_snr(snr)
            if filter_kind == "flat":
                spectrum = SampledSpectrum(grid, np.ones(grid.size))
                label = "flat"
            elif filter_kind == "optimized":
                result = optimize_transmit_filter(channel, noise, memory, opts, grid,
                                                  warm_starts=warm)
                warm = (result.coeffs.off_lags,)
                spectrum = result.spectrum
                label = "optimized"
            else:
                raise ConfigError(f"[run] filter must be 'flat' or 'optimized', "
                                  f"got {filter_kind!r}")
            estimate, solution = _bpsk_point(channel, spectrum, noise, memory,
                                             grid, sim_cfg, pulse_taps)
            rows.append([float(snr), memory, estimate.air, estimate.stderr,
                         solution.air, label])
    return ["snr_db", "L", "air", "stderr", "air_gaussian", "filter_label"], rows


_SWEEPS = {
    "fig2": (run_fig2, "snr_db", ["air_optimized", "air_flat", "capacity"]),
    "fig3": (run_fig3, "snr_db", ["air_waterfill_spectrum", "air_flat", "capacity"]),
    "fig4": (run_fig4, "snr_db", ["air", "air_gaussian"]),
    "fig6": (run_fig6, "ehn0_db", ["air_optimized", "air_flat", "capacity"]),
    "airsim": (run_airsim, "snr_db", ["air", "air_gaussian"]),
}

_SWEEP_DEFAULTS = {
    "fig3": {"sweep": {"memory": "1, 2, 4, 8, 16"}},
    "fig6": {"sweep": {"ehn0_db": "0, 4, 8, 12, 16, 20", "memory": "1, 2"}},
}


def cmd_sweep(args) -> int:
    cfg = _load(args, _SWEEP_DEFAULTS.get(args.command))
    cfg.threads = max(1, args.threads)
    runner, x_key, series = _SWEEPS[args.command]
    header, rows = runner(cfg)
    out = _out_path(args, f"{args.command}.csv")
    write_csv(out, header, rows, cfg.digest())
    if not args.no_plot:
        dict_rows = [dict(zip(header, row)) for row in rows]
        report.render_rate_sweep(dict_rows, out.with_suffix(".png"), x_key,
                                 series, group_key="L")
    print(f"{len(rows)} rows -> {out}")
    return 0


def cmd_fig7(args) -> int:
    cfg = _load(args, {"sweep": {"memory": "1, 2"}})
    cfg.threads = max(1, args.threads)
    header, rows = run_fig7(cfg)
    out = _out_path(args, "fig7.csv")
    write_csv(out, header, rows, cfg.digest())
    if not args.no_plot:
        dict_rows = [dict(zip(header, row)) for row in rows]
        report.render_labeled_sweep(dict_rows, out.with_suffix(".png"),
                                    "ebn0_db", "ase")
    print(f"{len(rows)} rows -> {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="airopt",
        description="Transmit-filter design and rate evaluation for ISI channels "
                    "under reduced-memory detection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "shorten": cmd_shorten,
        "optimize": cmd_optimize,
        "waterfill": cmd_waterfill,
        "mimo": cmd_mimo,
        "ftn": cmd_ftn,
        "airsim": cmd_sweep,
        "fig2": cmd_sweep,
        "fig3": cmd_sweep,
        "fig4": cmd_sweep,
        "fig6": cmd_sweep,
        "fig7": cmd_fig7,
    }
    for name, handler in handlers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="INI config path")
        p.add_argument("--out", default=None, help="output CSV path")
        p.add_argument("--seed", type=int, default=None,
                       help="override optimizer and simulation seeds")
        p.add_argument("--grid", type=int, default=None, help="grid size M")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for independent sweep chains")
        p.add_argument("--no-plot", action="store_true",
                       help="skip PNG rendering next to the CSV")
        p.set_defaults(func=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
