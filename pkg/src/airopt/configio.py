"""Experiment configuration parsing and delimited output.

Configs are flat key-value text with section headers (INI syntax); lists
are comma-separated, complex tap entries are "re,im" pairs separated by
whitespace or semicolons.  Every CSV written here starts with a comment
line carrying a hash of the fully resolved configuration so a result file
can always be traced back to its inputs.
"""

from __future__ import annotations

import configparser
import hashlib
from pathlib import Path

import numpy as np

from .airsim import SimConfig
from .errors import ConfigError
from .ftn import FtnScenario
from .mimo import MimoChannelTaps
from .optimize import OptimizerOptions
from .spectral import ChannelTaps, FrequencyGrid


def parse_complex_pairs(text: str) -> np.ndarray:
    """Parse taps given as "re,im" pairs separated by whitespace or ';'."""
    entries = [tok for tok in text.replace(";", " ").split() if tok]
    if not entries:
        raise ConfigError("empty tap list")
    values = []
    for tok in entries:
        parts = tok.split(",")
        try:
            if len(parts) == 1:
                values.append(complex(float(parts[0]), 0.0))
            elif len(parts) == 2:
                values.append(complex(float(parts[0]), float(parts[1])))
            else:
                raise ValueError
        except ValueError:
            raise ConfigError(f"bad tap entry {tok!r}; expected 're' or 're,im'") from None
    return np.array(values)


def parse_float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad numeric list {text!r}: {exc}") from None


def parse_int_list(text: str) -> list[int]:
    floats = parse_float_list(text)
    ints = [int(round(v)) for v in floats]
    if any(abs(i - v) > 1e-9 for i, v in zip(ints, floats)):
        raise ConfigError(f"expected integers, got {text!r}")
    return ints


class Config:
    """Typed accessor over merged default + file + CLI-override settings."""

    def __init__(self, sections: dict[str, dict[str, str]]):
        self.sections = {name: dict(vals) for name, vals in sections.items()}
        self.threads = 1

    @classmethod
    def load(cls, path: str | Path | None, defaults: dict[str, dict[str, str]],
             overrides: dict[str, dict[str, str]] | None = None) -> "Config":
        merged = {name: dict(vals) for name, vals in defaults.items()}
        if path is not None:
            parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    parser.read_file(handle)
            except OSError as exc:
                raise ConfigError(f"cannot read config {path}: {exc}") from None
            except configparser.Error as exc:
                raise ConfigError(f"config parse error: {exc}") from None
            for section in parser.sections():
                merged.setdefault(section, {})
                for key, value in parser.items(section):
                    merged[section][key] = value
        for section, vals in (overrides or {}).items():
            merged.setdefault(section, {})
            merged[section].update(vals)
        return cls(merged)

    def get(self, section: str, key: str, default: str | None = None) -> str:
        try:
            return self.sections[section][key]
        except KeyError:
            if default is not None:
                return default
            raise ConfigError(f"missing config key [{section}] {key}") from None

    def get_float(self, section: str, key: str, default: str | None = None) -> float:
        raw = self.get(section, key, default)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from None

    def get_int(self, section: str, key: str, default: str | None = None) -> int:
        value = self.get_float(section, key, default)
        if abs(value - round(value)) > 1e-9:
            raise ConfigError(f"[{section}] {key} must be an integer")
        return int(round(value))

    def get_bool(self, section: str, key: str, default: str | None = None) -> bool:
        raw = self.get(section, key, default).strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a boolean")

    def canonical_text(self) -> str:
        lines = []
        for section in sorted(self.sections):
            for key in sorted(self.sections[section]):
                lines.append(f"{section}.{key}={self.sections[section][key]}")
        return "\n".join(lines)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]

    # ---- domain object builders -------------------------------------------

    def grid(self) -> FrequencyGrid:
        try:
            return FrequencyGrid(self.get_int("grid", "size", "4096"))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def channel(self) -> ChannelTaps:
        taps = parse_complex_pairs(self.get("channel", "taps"))
        try:
            channel = ChannelTaps(taps)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.get_bool("channel", "normalize", "true"):
            channel = channel.normalized()
        return channel

    def mimo_channel(self) -> MimoChannelTaps:
        size = self.get_int("mimo", "size", "2")
        memory = self.get_int("mimo", "memory", "3")
        if "seed" in self.sections.get("mimo", {}):
            return MimoChannelTaps.random(size, memory, self.get_int("mimo", "seed"))
        taps = []
        for lag in range(memory + 1):
            rows_text = self.get("mimo", f"tap{lag}")
            rows = [parse_complex_pairs(row) for row in rows_text.split("|")]
            mat = np.array(rows)
            if mat.shape != (size, size):
                raise ConfigError(
                    f"[mimo] tap{lag} must be {size}x{size}, got {mat.shape}"
                )
            taps.append(mat)
        try:
            return MimoChannelTaps(np.array(taps))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def ftn_scenario(self, noise_density: float) -> FtnScenario:
        bandwidth = self.get_float("ftn", "bandwidth", "0.5")
        if "symbol_time" in self.sections.get("ftn", {}):
            symbol_time = self.get_float("ftn", "symbol_time")
        else:
            product = self.get_float("ftn", "product", "0.48")
            symbol_time = product / (2.0 * bandwidth)
        try:
            return FtnScenario(bandwidth, symbol_time, noise_density)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def optimizer_options(self) -> OptimizerOptions:
        try:
            return OptimizerOptions(
                restarts=self.get_int("optimizer", "restarts", "3"),
                max_iterations=self.get_int("optimizer", "max_iterations", "2000"),
                x_tolerance=self.get_float("optimizer", "x_tolerance", "1e-9"),
                f_tolerance=self.get_float("optimizer", "f_tolerance", "1e-12"),
                rng_seed=self.get_int("optimizer", "seed", "0"),
                init_scale=self.get_float("optimizer", "init_scale", "0.1"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def sim_config(self) -> SimConfig:
        try:
            return SimConfig(
                symbols_per_block=self.get_int("sim", "symbols_per_block", "4096"),
                num_blocks=self.get_int("sim", "blocks", "8"),
                rng_seed=self.get_int("sim", "seed", "1234"),
                frontend_taps=self.get_int("sim", "frontend_taps", "129"),
                guard=self.get_int("sim", "guard", "32"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def snr_list(self, key: str = "snr_db") -> list[float]:
        values = parse_float_list(self.get("sweep", key))
        if not values:
            raise ConfigError(f"[sweep] {key} must not be empty")
        return values

    def memory_list(self) -> list[int]:
        values = parse_int_list(self.get("sweep", "memory"))
        if not values:
            raise ConfigError("[sweep] memory must not be empty")
        if any(v < 0 for v in values):
            raise ConfigError("[sweep] memory values must be >= 0")
        return values


def format_float(value: float) -> str:
    """Round-trippable decimal text for CSV cells."""
    return repr(float(value))


def write_csv(path: str | Path, header: list[str], rows: list[list], digest: str) -> None:
    """Write rows with a header line and a provenance comment on top."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={digest}", ",".join(header)]
    for row in rows:
        cells = [format_float(c) if isinstance(c, float) else str(c) for c in row]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_key_values(path: str | Path, items: dict[str, object], digest: str) -> None:
    """Write a flat key=value summary block."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={digest}"]
    for key, value in items.items():
        if isinstance(value, float):
            lines.append(f"{key} = {format_float(value)}")
        else:
            lines.append(f"{key} = {value}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_spectrum_csv(path: str | Path, spectrum, digest: str) -> None:
    """Two-column (omega, value) export of a sampled spectrum."""
    rows = [[float(w), float(v)] for w, v in zip(spectrum.grid.omegas, spectrum.values)]
    write_csv(path, ["omega", "value"], rows, digest)
