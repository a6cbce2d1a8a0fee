"""Result rows and CSV output.

The CSV layout is the package's external interface: fixed header, one row
per (cell, metric, SNR point), numbers rendered with %.9g, and failed cells
kept as rows whose numeric fields are empty and whose ``error`` column
holds a sanitized message. Fields never contain commas or newlines, so the
files parse with any CSV reader and with a plain split.
"""

import csv
import os
import tempfile
from dataclasses import dataclass

CSV_HEADER = (
    "snr_db,filter,csi_mode,quantizer_mode,pilot_len_N,metric,value,"
    "std_error,channel_trials,inner_trials,master_seed,M,K,error"
)

HISTOGRAM_HEADER = "panel,axis,bin_center,empirical_density,analytic_density"


def format_number(value):
    """Render a number with 9 significant digits; None becomes empty."""
    if value is None:
        return ""
    return "%.9g" % value


def sanitize_message(text):
    """Make an error message safe for an unquoted CSV field."""
    flat = str(text).replace("\r", " ").replace("\n", " ")
    return flat.replace(",", ";")


@dataclass(frozen=True)
class ResultRow:
    """One output line of a sweep."""

    snr_db: float
    filter: str
    csi_mode: str
    quantizer_mode: str
    pilot_len: int
    metric: str
    value: float
    std_error: float
    channel_trials: int
    inner_trials: int
    master_seed: int
    num_antennas: int
    num_users: int
    error: str = ""

    def to_csv_line(self):
        fields = (
            format_number(self.snr_db),
            self.filter,
            self.csi_mode,
            self.quantizer_mode,
            "" if self.pilot_len is None else str(self.pilot_len),
            self.metric,
            format_number(self.value),
            format_number(self.std_error),
            str(self.channel_trials),
            str(self.inner_trials),
            str(self.master_seed),
            str(self.num_antennas),
            str(self.num_users),
            sanitize_message(self.error) if self.error else "",
        )
        return ",".join(fields)


def sort_rows(rows):
    """Deterministic row order: by metric, then filter, then SNR."""
    return sorted(rows, key=lambda r: (r.metric, r.filter, r.snr_db))


def rows_to_csv_text(rows):
    lines = [CSV_HEADER]
    lines.extend(row.to_csv_line() for row in sort_rows(rows))
    return "\n".join(lines) + "\n"


def _atomic_write_text(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(handle, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.unlink(temp_path)
        raise


def write_rows_csv(path, rows):
    """Write sorted result rows atomically (temp file plus rename)."""
    _atomic_write_text(path, rows_to_csv_text(rows))


def read_rows_csv(path):
    """Read a result CSV back as a list of string-valued dicts."""
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


@dataclass(frozen=True)
class HistogramRow:
    """One bin of one histogram panel."""

    panel: int
    axis: str
    bin_center: float
    empirical_density: float
    analytic_density: float

    def to_csv_line(self):
        return ",".join((
            str(self.panel),
            self.axis,
            format_number(self.bin_center),
            format_number(self.empirical_density),
            format_number(self.analytic_density),
        ))


def histogram_rows(panel, result):
    """Flatten a histogram result into CSV rows, one per bin."""
    rows = []
    for center, emp, ana in zip(result.bin_centers,
                                result.empirical_density,
                                result.analytic_density):
        rows.append(HistogramRow(panel=panel, axis=result.axis,
                                 bin_center=float(center),
                                 empirical_density=float(emp),
                                 analytic_density=float(ana)))
    return rows


def histograms_to_csv_text(rows):
    lines = [HISTOGRAM_HEADER]
    lines.extend(row.to_csv_line() for row in rows)
    return "\n".join(lines) + "\n"


def write_histograms_csv(path, rows):
    """Write histogram rows atomically, preserving the given order."""
    _atomic_write_text(path, histograms_to_csv_text(rows))
