"""Run configuration files.

The format is deliberately small: one ``key = value`` pair per line, ``#``
comments, comma-separated lists. Unknown keys, duplicate keys, and
malformed values are rejected with the offending line number. A config
names either a built-in figure preset or one explicit sweep cell, never
both.
"""

from dataclasses import dataclass, fields

from .exceptions import ConfigError
from .simulate import CSI_MODES, ExperimentSpec, METRIC_RUNNERS, SweepCell
from .detectors import FILTER_KINDS
from .model import QuantizerMode
from .presets import FIGURE_IDS

FORMAT_VERSION = 1

QUANTIZER_NAMES = tuple(mode.value for mode in QuantizerMode)

# keys a figure-preset config may carry besides "figure"
FIGURE_COMPATIBLE_KEYS = frozenset({"figure", "master_seed", "format_version"})


@dataclass(frozen=True)
class RunConfig:
    """Parsed configuration: a figure id or one explicit sweep cell."""

    format_version: int = FORMAT_VERSION
    figure: int = None
    num_antennas: int = None
    num_users: int = None
    snr_db: tuple = None
    filter: str = "mrc"
    csi: str = "full"
    pilot_len: int = None
    quantizer: str = "one_bit"
    metrics: tuple = ("mi_hard_mc",)
    channel_trials: int = 100
    inner_trials: int = 100
    soft_bins: int = 64
    master_seed: int = 0
    noise_variance: float = 1.0

    def to_cell(self, master_seed=None):
        """Build the sweep cell (explicit configs only)."""
        if self.figure is not None:
            raise ConfigError(
                "figure presets expand internally; to_cell needs an explicit "
                "config"
            )
        spec = ExperimentSpec(
            num_antennas=self.num_antennas,
            num_users=self.num_users,
            snr_db_grid=self.snr_db,
            filter_kind=self.filter,
            csi_mode=self.csi,
            pilot_len=self.pilot_len,
            quantizer=QuantizerMode(self.quantizer),
            channel_trials=self.channel_trials,
            inner_trials=self.inner_trials,
            master_seed=self.master_seed if master_seed is None else master_seed,
            noise_variance=self.noise_variance,
            soft_bins=self.soft_bins,
        )
        return SweepCell(spec=spec, metrics=self.metrics)


def _parse_int(raw, key, line):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects an integer, got {raw!r}",
                          key=key, line=line) from None


def _parse_float(raw, key, line):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"line {line}: {key} expects a number, got {raw!r}",
                          key=key, line=line) from None


def _parse_float_list(raw, key, line):
    parts = [p.strip() for p in raw.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"line {line}: {key} expects at least one value",
                          key=key, line=line)
    return tuple(_parse_float(p, key, line) for p in parts)


def _parse_name_list(raw, key, line, allowed):
    parts = tuple(p.strip() for p in raw.split(",") if p.strip())
    if not parts:
        raise ConfigError(f"line {line}: {key} expects at least one value",
                          key=key, line=line)
    for part in parts:
        if part not in allowed:
            raise ConfigError(
                f"line {line}: {key} value {part!r} is not one of "
                f"{sorted(allowed)}", key=key, line=line)
    return parts


def _parse_choice(raw, key, line, allowed):
    if raw not in allowed:
        raise ConfigError(
            f"line {line}: {key} must be one of {sorted(allowed)}, got {raw!r}",
            key=key, line=line)
    return raw


_PARSERS = {
    "format_version": _parse_int,
    "figure": _parse_int,
    "num_antennas": _parse_int,
    "num_users": _parse_int,
    "snr_db": _parse_float_list,
    "filter": lambda raw, key, line: _parse_choice(raw, key, line, FILTER_KINDS),
    "csi": lambda raw, key, line: _parse_choice(raw, key, line, CSI_MODES),
    "pilot_len": _parse_int,
    "quantizer": lambda raw, key, line: _parse_choice(raw, key, line,
                                                      QUANTIZER_NAMES),
    "metrics": lambda raw, key, line: _parse_name_list(
        raw, key, line, frozenset(METRIC_RUNNERS)),
    "channel_trials": _parse_int,
    "inner_trials": _parse_int,
    "soft_bins": _parse_int,
    "master_seed": _parse_int,
    "noise_variance": _parse_float,
}

KNOWN_KEYS = frozenset(_PARSERS)


def parse_config(text):
    """Parse config text; raise ConfigError with a line number on any flaw."""
    values = {}
    seen_lines = {}
    for line_no, raw_line in enumerate(text.splitlines(), start=1):
        stripped = raw_line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"line {line_no}: expected 'key = value', got {stripped!r}",
                line=line_no)
        key, _, raw_value = stripped.partition("=")
        key = key.strip()
        raw_value = raw_value.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(
                f"line {line_no}: unknown key {key!r}; known keys: "
                f"{', '.join(sorted(KNOWN_KEYS))}", key=key, line=line_no)
        if key in seen_lines:
            raise ConfigError(
                f"line {line_no}: duplicate key {key!r} "
                f"(first set on line {seen_lines[key]})", key=key, line=line_no)
        if not raw_value:
            raise ConfigError(f"line {line_no}: {key} has an empty value",
                              key=key, line=line_no)
        seen_lines[key] = line_no
        values[key] = _PARSERS[key](raw_value, key, line_no)

    version = values.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(
            f"unsupported format_version {version}; this build reads "
            f"version {FORMAT_VERSION}", key="format_version")

    if "figure" in values:
        figure = values["figure"]
        if figure not in FIGURE_IDS:
            raise ConfigError(
                f"figure must be in {FIGURE_IDS[0]}..{FIGURE_IDS[-1]}, "
                f"got {figure}", key="figure")
        extras = sorted(set(values) - FIGURE_COMPATIBLE_KEYS)
        if extras:
            raise ConfigError(
                "a figure preset config cannot also set explicit sweep keys: "
                + ", ".join(extras), key="figure")
        return RunConfig(
            format_version=version,
            figure=figure,
            master_seed=values.get("master_seed", 0),
        )

    for required in ("num_antennas", "num_users", "snr_db"):
        if required not in values:
            raise ConfigError(f"missing required key {required!r} "
                              f"(or set 'figure' to use a preset)",
                              key=required)
    values.pop("format_version", None)
    return RunConfig(format_version=version, **values)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def emit_config(config):
    """Render a RunConfig back to text. parse_config inverts this exactly."""
    lines = [f"format_version = {config.format_version}"]
    if config.figure is not None:
        lines.append(f"figure = {config.figure}")
        lines.append(f"master_seed = {config.master_seed}")
        return "\n".join(lines) + "\n"
    lines.append(f"num_antennas = {config.num_antennas}")
    lines.append(f"num_users = {config.num_users}")
    lines.append("snr_db = " + ", ".join(repr(s) for s in config.snr_db))
    lines.append(f"filter = {config.filter}")
    lines.append(f"csi = {config.csi}")
    if config.pilot_len is not None:
        lines.append(f"pilot_len = {config.pilot_len}")
    lines.append(f"quantizer = {config.quantizer}")
    lines.append("metrics = " + ", ".join(config.metrics))
    lines.append(f"channel_trials = {config.channel_trials}")
    lines.append(f"inner_trials = {config.inner_trials}")
    lines.append(f"soft_bins = {config.soft_bins}")
    lines.append(f"master_seed = {config.master_seed}")
    lines.append(f"noise_variance = {config.noise_variance!r}")
    return "\n".join(lines) + "\n"
