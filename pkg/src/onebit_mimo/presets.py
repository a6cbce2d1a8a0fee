"""Built-in figure presets: canonical sweep layouts at the reference scale.

Each preset expands into sweep cells (or histogram panels for figure 1)
with a fixed cell order, so stream addressing and therefore every number in
the output depends only on (figure id, master seed, scale). ``scale``
shrinks the antenna count and trial budgets proportionally for quick runs;
user count, SNR grid, and cell layout never change.
"""

from .detectors import pilot_length
from .model import QPSK_ALPHABET, QuantizerMode, SystemConfig, sample_channel
from .reporting import histogram_rows
from .simulate import (
    ROLE_CHANNEL,
    ExperimentSpec,
    HistogramSpec,
    SweepCell,
    run_soft_histogram,
    run_sweep,
)
from .streams import RandomStream
from .validation import check_positive

FIGURE_IDS = (1, 2, 3, 4, 5, 6, 7, 8)

SNR_GRID = tuple(float(s) for s in range(-30, 11, 5))

REFERENCE_ANTENNAS = 400
REFERENCE_USERS = 20

MI_CHANNEL_TRIALS = 100
MI_INNER_TRIALS = 100
SER_TRIPLETS = 100_000
HISTOGRAM_SNR_DB = -20.0
HISTOGRAM_PANELS = 3
HISTOGRAM_BINS = 50
HISTOGRAM_DRAWS = 100_000
# The dual-route comparison needs more inner draws than the plain MI
# sweeps: the plug-in estimator's bias at 100 draws would dominate the
# Monte-Carlo-vs-closed-form gap it is meant to expose.
COMPARISON_INNER_TRIALS = 10_000
COMPARISON_SOFT_BINS = 16

DEFAULT_MASTER_SEED = 0

FIGURE_TITLES = {
    1: "soft-output marginals vs the Gaussian model, 3 channel panels",
    2: "MI vs SNR: MRC/ZF full and estimated CSI, direct LS (N=5M, 50M)",
    3: "MI vs SNR: MRC/ZF, pilot lengths N=5K/10K/50K vs full CSI",
    4: "SER vs SNR: MRC/ZF, pilot lengths N=5K/10K/50K vs full CSI",
    5: "MI vs SNR: ZF, 1-bit vs bypass front end, full and N=50K CSI",
    6: "SER vs SNR: ZF, 1-bit vs bypass front end, full and N=50K CSI",
    7: "MI vs SNR: MRC full CSI, Monte Carlo vs closed form, hard and soft",
    8: "SER vs SNR: MRC full CSI, Monte Carlo vs closed form",
}


def _scaled_count(base, scale, minimum):
    return max(minimum, int(round(base * scale)))


def _dims(scale):
    check_positive(scale, "scale")
    if scale > 1.0:
        raise ValueError(f"scale must be in (0, 1], got {scale}")
    antennas = _scaled_count(REFERENCE_ANTENNAS, scale, REFERENCE_USERS)
    return antennas, REFERENCE_USERS


def _pilot(preset, antennas, users):
    config = SystemConfig(num_antennas=antennas, num_users=users)
    return pilot_length(preset, config)


def _mi_cell(antennas, users, seed, scale, *, filter_kind, csi_mode,
             pilot_preset=None, quantizer=QuantizerMode.ONE_BIT):
    spec = ExperimentSpec(
        num_antennas=antennas,
        num_users=users,
        snr_db_grid=SNR_GRID,
        filter_kind=filter_kind,
        csi_mode=csi_mode,
        pilot_len=(None if pilot_preset is None
                   else _pilot(pilot_preset, antennas, users)),
        quantizer=quantizer,
        channel_trials=_scaled_count(MI_CHANNEL_TRIALS, scale, 2),
        inner_trials=_scaled_count(MI_INNER_TRIALS, scale, 16),
        master_seed=seed,
    )
    return SweepCell(spec=spec, metrics=("mi_hard_mc",))


def _ser_cell(antennas, users, seed, scale, *, filter_kind, csi_mode,
              pilot_preset=None, quantizer=QuantizerMode.ONE_BIT):
    spec = ExperimentSpec(
        num_antennas=antennas,
        num_users=users,
        snr_db_grid=SNR_GRID,
        filter_kind=filter_kind,
        csi_mode=csi_mode,
        pilot_len=(None if pilot_preset is None
                   else _pilot(pilot_preset, antennas, users)),
        quantizer=quantizer,
        channel_trials=_scaled_count(SER_TRIPLETS, scale, 2),
        inner_trials=1,
        master_seed=seed,
    )
    return SweepCell(spec=spec, metrics=("ser_mc",))


def _pilot_study_cells(cell_builder, antennas, users, seed, scale, presets):
    cells = []
    for filter_kind in ("mrc", "zf"):
        cells.append(cell_builder(antennas, users, seed, scale,
                                  filter_kind=filter_kind, csi_mode="full"))
        for preset in presets:
            cells.append(cell_builder(antennas, users, seed, scale,
                                      filter_kind=filter_kind,
                                      csi_mode="estimated",
                                      pilot_preset=preset))
    return cells


def _quantizer_gap_cells(cell_builder, antennas, users, seed, scale):
    cells = []
    for quantizer in (QuantizerMode.ONE_BIT, QuantizerMode.BYPASS):
        cells.append(cell_builder(antennas, users, seed, scale,
                                  filter_kind="zf", csi_mode="full",
                                  quantizer=quantizer))
        cells.append(cell_builder(antennas, users, seed, scale,
                                  filter_kind="zf", csi_mode="estimated",
                                  pilot_preset="50K", quantizer=quantizer))
    return cells


def build_figure_cells(figure, master_seed=DEFAULT_MASTER_SEED, scale=1.0):
    """Sweep cells for figures 2 through 8, in their canonical order."""
    antennas, users = _dims(scale)
    seed = master_seed
    if figure == 2:
        cells = []
        for filter_kind in ("mrc", "zf"):
            cells.append(_mi_cell(antennas, users, seed, scale,
                                  filter_kind=filter_kind, csi_mode="full"))
            for preset in ("5M", "50M"):
                cells.append(_mi_cell(antennas, users, seed, scale,
                                      filter_kind=filter_kind,
                                      csi_mode="estimated",
                                      pilot_preset=preset))
        for preset in ("5M", "50M"):
            cells.append(_mi_cell(antennas, users, seed, scale,
                                  filter_kind="direct_ls",
                                  csi_mode="estimated", pilot_preset=preset))
        return cells
    if figure == 3:
        return _pilot_study_cells(_mi_cell, antennas, users, seed, scale,
                                  ("5K", "10K", "50K"))
    if figure == 4:
        return _pilot_study_cells(_ser_cell, antennas, users, seed, scale,
                                  ("5K", "10K", "50K"))
    if figure == 5:
        return _quantizer_gap_cells(_mi_cell, antennas, users, seed, scale)
    if figure == 6:
        return _quantizer_gap_cells(_ser_cell, antennas, users, seed, scale)
    if figure == 7:
        spec = ExperimentSpec(
            num_antennas=antennas,
            num_users=users,
            snr_db_grid=SNR_GRID,
            filter_kind="mrc",
            csi_mode="full",
            channel_trials=_scaled_count(MI_CHANNEL_TRIALS, scale, 2),
            inner_trials=_scaled_count(COMPARISON_INNER_TRIALS, scale, 16),
            master_seed=seed,
            soft_bins=COMPARISON_SOFT_BINS,
        )
        return [SweepCell(spec=spec, metrics=(
            "mi_hard_mc", "mi_soft_mc", "mi_hard_analytic", "mi_soft_analytic",
        ))]
    if figure == 8:
        spec = ExperimentSpec(
            num_antennas=antennas,
            num_users=users,
            snr_db_grid=SNR_GRID,
            filter_kind="mrc",
            csi_mode="full",
            channel_trials=_scaled_count(SER_TRIPLETS, scale, 2),
            inner_trials=1,
            master_seed=seed,
        )
        return [SweepCell(spec=spec, metrics=("ser_mc", "ser_analytic"))]
    if figure == 1:
        raise ValueError("figure 1 is a histogram preset; use run_figure")
    raise ValueError(f"unknown figure id {figure}; expected 1..8")


def run_histogram_figure(master_seed=DEFAULT_MASTER_SEED, scale=1.0):
    """Histogram rows for figure 1: three channel panels, both axes.

    Both axes of a panel reuse the same stream addresses, so they describe
    the same simulated draws.
    """
    antennas, users = _dims(scale)
    spec = ExperimentSpec(
        num_antennas=antennas,
        num_users=users,
        snr_db_grid=(HISTOGRAM_SNR_DB,),
        filter_kind="mrc",
        csi_mode="full",
        channel_trials=1,
        inner_trials=_scaled_count(HISTOGRAM_DRAWS, scale, 1000),
        master_seed=master_seed,
    )
    config = spec.config_at(HISTOGRAM_SNR_DB)
    rows = []
    for panel in range(HISTOGRAM_PANELS):
        channel = sample_channel(
            config, RandomStream(master_seed, (0, panel, ROLE_CHANNEL))
        )
        for axis in ("re", "im"):
            hist = HistogramSpec(
                channel=channel,
                user=0,
                symbol=complex(QPSK_ALPHABET[0]),
                axis=axis,
                bins=HISTOGRAM_BINS,
                panel=panel,
            )
            rows.extend(histogram_rows(panel, run_soft_histogram(spec, hist)))
    return rows


def run_figure(figure, master_seed=DEFAULT_MASTER_SEED, scale=1.0, workers=1):
    """Produce a figure's rows. Returns ("histogram" | "sweep", rows)."""
    if figure == 1:
        return "histogram", run_histogram_figure(master_seed, scale)
    cells = build_figure_cells(figure, master_seed, scale)
    return "sweep", run_sweep(cells, workers=workers)


def default_output_name(figure):
    return f"figure{figure}.csv"
