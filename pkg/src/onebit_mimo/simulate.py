"""Monte Carlo experiment engine, analytic sweep runners, and exact oracle.

Every run is a pure function of its spec: randomness flows from the spec's
master seed through addressed streams, one address per (cell, SNR point,
work unit, role), so parallel and serial executions produce identical
numbers. Channel draws, pilot draws, symbol draws, and noise draws each own
a distinct role index.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.special

from . import analytic
from .detectors import (
    FILTER_KINDS,
    ChannelEstimate,
    PilotBlock,
    ls_channel_estimate,
    ls_direct_filter,
    mrc_filter,
    soft_detect,
    zf_filter,
)
from .exceptions import (
    InsufficientPilotsError,
    OneBitMimoError,
    SizeCapError,
    UnsupportedCombinationError,
)
from .linalg import erfc
from .model import (
    QPSK_ALPHABET,
    QUANTIZER_ALPHABET,
    QuantizerMode,
    SystemConfig,
    propagate,
    quadrant_index,
    quantize,
    sample_channel,
    sample_symbols,
    symbols_to_indices,
)
from .reporting import ResultRow
from .streams import RandomStream, sample_complex_gaussian
from .validation import check_complex_matrix, check_count, check_positive, check_real

# Stream roles: draws of different kinds never share a stream address.
ROLE_CHANNEL = 0
ROLE_PILOT = 1
ROLE_SYMBOLS = 2
ROLE_NOISE = 3

# Exact enumeration walks 4^K inputs x 4^M quantizer outputs.
ORACLE_STATE_CAP = 10**8

# Complex entries a sampling chunk may allocate (about 64 MB).
CHUNK_ELEMENTS = 4_000_000

CSI_MODES = ("full", "estimated")

MC_METRICS = ("mi_hard_mc", "mi_soft_mc", "ser_mc")
ANALYTIC_METRICS = ("mi_hard_analytic", "mi_soft_analytic", "ser_analytic")


@dataclass(frozen=True)
class ExperimentSpec:
    """Complete description of one sweep cell.

    ``channel_trials`` counts channel realizations; ``inner_trials`` counts
    symbol-plus-noise draws per realization. SNR points share the noise
    variance and scale the transmit power.
    """

    num_antennas: int
    num_users: int
    snr_db_grid: tuple
    filter_kind: str = "mrc"
    csi_mode: str = "full"
    pilot_len: int = None
    quantizer: QuantizerMode = QuantizerMode.ONE_BIT
    channel_trials: int = 100
    inner_trials: int = 100
    master_seed: int = 0
    noise_variance: float = 1.0
    soft_bins: int = 64
    fixed_channel: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "num_antennas",
                           check_count(self.num_antennas, "num_antennas"))
        object.__setattr__(self, "num_users",
                           check_count(self.num_users, "num_users"))
        grid = tuple(check_real(s, "snr_db") for s in self.snr_db_grid)
        object.__setattr__(self, "snr_db_grid", grid)
        if self.filter_kind not in FILTER_KINDS:
            raise ValueError(
                f"filter_kind must be one of {FILTER_KINDS}, got {self.filter_kind!r}"
            )
        if self.csi_mode not in CSI_MODES:
            raise ValueError(
                f"csi_mode must be one of {CSI_MODES}, got {self.csi_mode!r}"
            )
        quant = self.quantizer
        if isinstance(quant, str):
            quant = QuantizerMode(quant)
        if not isinstance(quant, QuantizerMode):
            raise TypeError(f"quantizer must be a QuantizerMode, got {quant!r}")
        object.__setattr__(self, "quantizer", quant)
        if self.filter_kind == "direct_ls" and self.csi_mode != "estimated":
            raise UnsupportedCombinationError(
                "the direct LS filter is fit from pilots; csi_mode must be "
                "'estimated'"
            )
        if self.csi_mode == "estimated":
            if self.pilot_len is None:
                raise ValueError("estimated CSI requires pilot_len")
            pilot_len = check_count(self.pilot_len, "pilot_len")
            object.__setattr__(self, "pilot_len", pilot_len)
            needed = (
                self.num_antennas
                if self.filter_kind == "direct_ls"
                else self.num_users
            )
            if pilot_len < needed:
                raise InsufficientPilotsError(
                    f"{self.filter_kind} with estimated CSI needs pilot_len >= "
                    f"{needed}, got {pilot_len}"
                )
        elif self.pilot_len is not None:
            raise ValueError("pilot_len is only meaningful with csi_mode='estimated'")
        object.__setattr__(self, "channel_trials",
                           check_count(self.channel_trials, "channel_trials"))
        object.__setattr__(self, "inner_trials",
                           check_count(self.inner_trials, "inner_trials"))
        object.__setattr__(self, "master_seed",
                           check_count(self.master_seed, "master_seed", minimum=0))
        object.__setattr__(self, "noise_variance",
                           check_positive(self.noise_variance, "noise_variance"))
        object.__setattr__(self, "soft_bins",
                           check_count(self.soft_bins, "soft_bins", minimum=8))
        if self.fixed_channel is not None:
            h = check_complex_matrix(self.fixed_channel, "fixed_channel",
                                     rows=self.num_antennas, cols=self.num_users)
            object.__setattr__(self, "fixed_channel", h)

    def config_at(self, snr_db):
        """System parameters at one SNR point (fixed noise, scaled power)."""
        return SystemConfig.from_snr_db(
            self.num_antennas, self.num_users, snr_db, self.noise_variance
        )


@dataclass(frozen=True)
class MetricPoint:
    """One metric estimate at one SNR point."""

    snr_db: float
    value: float
    std_error: float
    trials: int

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"metric value must be finite, got {self.value}")
        if not (np.isfinite(self.std_error) and self.std_error >= 0.0):
            raise ValueError(f"std_error must be >= 0, got {self.std_error}")


@dataclass(frozen=True)
class MetricEstimate:
    """A metric curve over the SNR grid."""

    metric: str
    points: tuple

    @property
    def per_snr(self):
        return {p.snr_db: p for p in self.points}

    @property
    def value(self):
        if len(self.points) != 1:
            raise ValueError("value is defined only for single-point estimates")
        return self.points[0].value

    @property
    def std_error(self):
        if len(self.points) != 1:
            raise ValueError("std_error is defined only for single-point estimates")
        return self.points[0].std_error


def _stream(spec, key):
    return RandomStream(spec.master_seed, key)


def _summary(snr_db, values, trials):
    values = np.asarray(values, dtype=np.float64)
    value = float(values.mean())
    if values.size > 1:
        std_error = float(values.std(ddof=1) / math.sqrt(values.size))
    else:
        std_error = 0.0
    return MetricPoint(snr_db=float(snr_db), value=value,
                       std_error=std_error, trials=trials)


def plugin_mi_bits(counts):
    """Plug-in mutual information (bits) from a joint count table.

    Rows index the transmitted symbol, columns the observed outcome. All
    probabilities, including the input marginal, come from the counts, so
    the estimate carries the usual positive small-sample bias.
    """
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("counts must contain at least one observation")
    joint = counts / total
    row = joint.sum(axis=1, keepdims=True)
    col = joint.sum(axis=0, keepdims=True)
    mask = joint > 0.0
    ratio = np.ones_like(joint)
    np.divide(joint, row @ col, out=ratio, where=mask)
    bits = float(np.sum(joint[mask] * np.log2(ratio[mask])))
    return min(max(bits, 0.0), 2.0)


def build_filter(channel, spec, config, pilot_stream):
    """Construct the cell's receive filter for one channel realization."""
    if spec.csi_mode == "full":
        est = ChannelEstimate.full_csi(channel)
        return mrc_filter(est) if spec.filter_kind == "mrc" else zf_filter(est)
    pilots = PilotBlock.transmit(
        channel, config, spec.pilot_len, pilot_stream, quantizer=spec.quantizer
    )
    if spec.filter_kind == "direct_ls":
        return ls_direct_filter(pilots)
    est = ls_channel_estimate(pilots, config)
    return mrc_filter(est) if spec.filter_kind == "mrc" else zf_filter(est)


def _trial_channel(spec, config, key):
    if spec.fixed_channel is not None:
        return spec.fixed_channel
    return sample_channel(config, _stream(spec, key + (ROLE_CHANNEL,)))


def _inner_chunks(total, per_chunk):
    done = 0
    while done < total:
        size = min(per_chunk, total - done)
        yield size
        done += size


def _iter_soft_blocks(channel, receive_filter, spec, config, key):
    """Yield (tx_indices, soft_block) over the trial's inner draws, chunked."""
    sym_stream = _stream(spec, key + (ROLE_SYMBOLS,))
    noise_stream = _stream(spec, key + (ROLE_NOISE,))
    per_chunk = max(1, CHUNK_ELEMENTS // config.num_antennas)
    for size in _inner_chunks(spec.inner_trials, per_chunk):
        symbols = sample_symbols(config, sym_stream, size)
        received = propagate(channel, symbols, config, noise_stream)
        observed = quantize(received, spec.quantizer)
        soft = soft_detect(receive_filter, observed)
        yield symbols_to_indices(symbols), soft


def run_mi_hard_mc(spec, key_prefix=()):
    """Monte Carlo mutual information of the hard-decision channel.

    Per channel realization, a 4x4 transition count table is accumulated
    for every user over ``inner_trials`` draws and turned into plug-in MI;
    the reported point averages users and channel realizations.
    """
    if spec.inner_trials < 16:
        raise ValueError(
            "inner_trials must be >= 16 to estimate a 4x4 transition table"
        )
    k = spec.num_users
    user_offsets = (np.arange(k) * 16)[:, None]
    points = []
    for si, snr_db in enumerate(spec.snr_db_grid):
        config = spec.config_at(snr_db)
        per_trial = np.empty(spec.channel_trials)
        for t in range(spec.channel_trials):
            key = key_prefix + (si, t)
            channel = _trial_channel(spec, config, key)
            filt = build_filter(channel, spec, config,
                                _stream(spec, key + (ROLE_PILOT,)))
            counts = np.zeros(16 * k, dtype=np.int64)
            for tx, soft in _iter_soft_blocks(channel, filt, spec, config, key):
                rx = quadrant_index(soft)
                flat = (user_offsets + tx * 4 + rx).ravel()
                counts += np.bincount(flat, minlength=16 * k)
            tables = counts.reshape(k, 4, 4)
            per_trial[t] = float(
                np.mean([plugin_mi_bits(tables[u]) for u in range(k)])
            )
        points.append(_summary(snr_db, per_trial, spec.channel_trials))
    return MetricEstimate(metric="mi_hard_mc", points=tuple(points))


def _require_analytic_cell(spec, what):
    if spec.filter_kind != "mrc" or spec.csi_mode != "full" or (
        spec.quantizer is not QuantizerMode.ONE_BIT
    ):
        raise UnsupportedCombinationError(
            f"{what} is defined for the MRC filter with full CSI and the "
            f"1-bit quantizer only"
        )


def run_mi_soft_mc(spec, key_prefix=()):
    """Monte Carlo mutual information between x_k and the binned soft output.

    The bin grid per (channel, user) is the zero-aligned grid built from the
    analytic Gaussian moments, so the estimate is comparable to
    ``mi_soft_discretized``. Plug-in over bins^2 outcomes; the small-sample
    bias grows with the bin count.
    """
    _require_analytic_cell(spec, "the soft-estimate mutual information")
    if spec.inner_trials < 16:
        raise ValueError("inner_trials must be >= 16 to estimate bin pmfs")
    k = spec.num_users
    bins = spec.soft_bins
    points = []
    for si, snr_db in enumerate(spec.snr_db_grid):
        config = spec.config_at(snr_db)
        per_trial = np.empty(spec.channel_trials)
        for t in range(spec.channel_trials):
            key = key_prefix + (si, t)
            channel = _trial_channel(spec, config, key)
            filt = mrc_filter(ChannelEstimate.full_csi(channel))
            grids = []
            for u in range(k):
                moments = analytic.moments_for_all_symbols(channel, u, config)
                grids.append(analytic.DiscretizationGrid.for_moments(
                    moments, bins=bins))
            counts = np.zeros((k, 4, bins * bins), dtype=np.int64)
            for tx, soft in _iter_soft_blocks(channel, filt, spec, config, key):
                for u in range(k):
                    re_bin = np.searchsorted(grids[u].interior_edges,
                                             soft[u].real, side="right")
                    im_bin = np.searchsorted(grids[u].interior_edges,
                                             soft[u].imag, side="right")
                    cell = re_bin * bins + im_bin
                    flat = tx[u] * (bins * bins) + cell
                    counts[u] += np.bincount(
                        flat.ravel(), minlength=4 * bins * bins
                    ).reshape(4, bins * bins)
            per_trial[t] = float(
                np.mean([plugin_mi_bits(counts[u]) for u in range(k)])
            )
        points.append(_summary(snr_db, per_trial, spec.channel_trials))
    return MetricEstimate(metric="mi_soft_mc", points=tuple(points))


def _ser_chunk_size(spec):
    widest = max(spec.num_users, spec.pilot_len or 1)
    return max(1, min(8192, CHUNK_ELEMENTS // (spec.num_antennas * widest)))


def _batched_full_soft(channels, observed, spec):
    """Soft outputs for full-CSI MRC/ZF over stacked channels."""
    matched = np.einsum("bmk,bm->bk", np.conjugate(channels), observed)
    if spec.filter_kind == "mrc":
        norms = np.sum(np.abs(channels) ** 2, axis=1)
        return matched / norms
    gram = np.einsum("bmi,bmj->bij", np.conjugate(channels), channels)
    return np.linalg.solve(gram, matched[..., None])[..., 0]


def _batched_estimated_soft(channels, observed, spec, config, pilot_stream):
    """Soft outputs with per-realization pilot-based filters, batched."""
    b, m, k = channels.shape
    n = spec.pilot_len
    indices = pilot_stream.generator.integers(0, 4, size=(b, k, n))
    pilot_symbols = QPSK_ALPHABET[indices]
    clean = np.sqrt(config.transmit_power) * np.einsum(
        "bmk,bkn->bmn", channels, pilot_symbols
    )
    noise = sample_complex_gaussian(pilot_stream, (b, m, n),
                                    config.noise_variance)
    pilot_observed = quantize(clean + noise, spec.quantizer)
    if spec.filter_kind == "direct_ls":
        gram = np.einsum("bmn,bpn->bmp", pilot_observed,
                         np.conjugate(pilot_observed))
        cross = np.einsum("bkn,bmn->bkm", pilot_symbols,
                          np.conjugate(pilot_observed))
        filters = np.linalg.solve(gram, np.conjugate(np.swapaxes(cross, 1, 2)))
        return np.einsum("bmk,bm->bk", np.conjugate(filters), observed)
    pt = config.transmit_power
    gram = pt * np.einsum("bkn,bjn->bkj", pilot_symbols,
                          np.conjugate(pilot_symbols))
    cross = np.sqrt(pt) * np.einsum("bmn,bkn->bmk", pilot_observed,
                                    np.conjugate(pilot_symbols))
    estimate_h = np.linalg.solve(gram, np.conjugate(np.swapaxes(cross, 1, 2)))
    estimates = np.conjugate(np.swapaxes(estimate_h, 1, 2))  # (b, M, K)
    matched = np.einsum("bmk,bm->bk", np.conjugate(estimates), observed)
    if spec.filter_kind == "mrc":
        norms = np.sum(np.abs(estimates) ** 2, axis=1)
        return matched / norms
    gram_e = np.einsum("bmi,bmj->bij", np.conjugate(estimates), estimates)
    return np.linalg.solve(gram_e, matched[..., None])[..., 0]


def _ser_point_batched(spec, si, snr_db, key_prefix):
    """Fresh-channel SER path: one (H, x, n) triplet per draw, chunked."""
    config = spec.config_at(snr_db)
    chunk = _ser_chunk_size(spec)
    draw_means = []
    for c, size in enumerate(_inner_chunks(spec.channel_trials, chunk)):
        key = key_prefix + (si, c)
        channels = sample_complex_gaussian(
            _stream(spec, key + (ROLE_CHANNEL,)),
            (size, spec.num_antennas, spec.num_users),
        )
        sym_stream = _stream(spec, key + (ROLE_SYMBOLS,))
        tx = sym_stream.generator.integers(0, 4,
                                           size=(size, spec.num_users))
        symbols = QPSK_ALPHABET[tx]
        clean = np.sqrt(config.transmit_power) * np.einsum(
            "bmk,bk->bm", channels, symbols
        )
        noise = sample_complex_gaussian(
            _stream(spec, key + (ROLE_NOISE,)),
            clean.shape, config.noise_variance,
        )
        observed = quantize(clean + noise, spec.quantizer)
        if spec.csi_mode == "full":
            soft = _batched_full_soft(channels, observed, spec)
        else:
            soft = _batched_estimated_soft(
                channels, observed, spec, config,
                _stream(spec, key + (ROLE_PILOT,)),
            )
        errors = quadrant_index(soft) != tx
        draw_means.append(errors.mean(axis=1))
    values = np.concatenate(draw_means)
    return _summary(snr_db, values, spec.channel_trials)


def _ser_point_per_trial(spec, si, snr_db, key_prefix):
    """General SER path: channel trials with repeated inner draws."""
    config = spec.config_at(snr_db)
    trial_means = np.empty(spec.channel_trials)
    draw_means = None
    for t in range(spec.channel_trials):
        key = key_prefix + (si, t)
        channel = _trial_channel(spec, config, key)
        filt = build_filter(channel, spec, config,
                            _stream(spec, key + (ROLE_PILOT,)))
        collected = []
        for tx, soft in _iter_soft_blocks(channel, filt, spec, config, key):
            errors = quadrant_index(soft) != tx
            collected.append(errors.mean(axis=0))
        draws = np.concatenate(collected)
        trial_means[t] = float(draws.mean())
        if spec.channel_trials == 1:
            draw_means = draws
    total = spec.channel_trials * spec.inner_trials
    if spec.channel_trials == 1:
        # a single channel realization: the draws themselves are independent
        return _summary(snr_db, draw_means, total)
    return _summary(snr_db, trial_means, total)


def run_ser_mc(spec, key_prefix=()):
    """Monte Carlo symbol error rate, averaged over users.

    With ``inner_trials == 1`` and no fixed channel, every draw is an
    independent (channel, symbols, noise) triplet and draws are batched in
    fixed-size chunks; otherwise channel realizations are looped and the
    standard error is computed across realizations.
    """
    points = []
    for si, snr_db in enumerate(spec.snr_db_grid):
        if spec.inner_trials == 1 and spec.fixed_channel is None:
            points.append(_ser_point_batched(spec, si, snr_db, key_prefix))
        else:
            points.append(_ser_point_per_trial(spec, si, snr_db, key_prefix))
    return MetricEstimate(metric="ser_mc", points=tuple(points))


@dataclass(frozen=True)
class HistogramSpec:
    """One marginal-distribution panel: fixed channel, user, and symbol."""

    channel: np.ndarray = field(compare=False, repr=False)
    user: int = 0
    symbol: complex = complex(QPSK_ALPHABET[0])
    axis: str = "re"
    bins: int = 50
    value_range: tuple = None
    panel: int = 0

    def __post_init__(self):
        channel = check_complex_matrix(self.channel, "channel")
        object.__setattr__(self, "channel", channel)
        object.__setattr__(self, "user", check_count(self.user, "user", minimum=0))
        if self.axis not in ("re", "im"):
            raise ValueError(f"axis must be 're' or 'im', got {self.axis!r}")
        object.__setattr__(self, "bins", check_count(self.bins, "bins", minimum=10))
        if self.value_range is not None:
            lo = check_real(self.value_range[0], "value_range lo")
            hi = check_real(self.value_range[1], "value_range hi")
            if hi <= lo:
                raise ValueError(f"value_range is empty: [{lo}, {hi}]")
            object.__setattr__(self, "value_range", (lo, hi))
        object.__setattr__(self, "panel", check_count(self.panel, "panel",
                                                      minimum=0))
        symbols_to_indices(np.array([self.symbol]))


@dataclass(frozen=True)
class HistogramResult:
    """Binned empirical marginal with the matching Gaussian-model masses."""

    axis: str
    bin_edges: np.ndarray
    empirical_probs: np.ndarray
    analytic_probs: np.ndarray
    draws: int

    @property
    def bin_centers(self):
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def bin_width(self):
        return float(self.bin_edges[1] - self.bin_edges[0])

    @property
    def empirical_density(self):
        return self.empirical_probs / self.bin_width

    @property
    def analytic_density(self):
        return self.analytic_probs / self.bin_width

    @property
    def tv_distance(self):
        return 0.5 * float(np.abs(self.empirical_probs
                                  - self.analytic_probs).sum())


def run_soft_histogram(spec, hist):
    """Empirical marginal of one axis of the soft estimate at fixed channel.

    Draws ``spec.inner_trials`` symbol-and-noise realizations with the
    target user's symbol pinned, bins the chosen axis of the MRC soft
    output, and attaches the Gaussian-model bin masses. Mass outside the
    bin range is folded into the outermost bins on both the empirical and
    the model side, so each column sums to one and the total-variation
    distance is well defined.
    """
    _require_analytic_cell(spec, "the soft-estimate histogram")
    if len(spec.snr_db_grid) != 1:
        raise ValueError("histogram runs use exactly one SNR point")
    config = spec.config_at(spec.snr_db_grid[0])
    channel = check_complex_matrix(hist.channel, "channel",
                                   rows=config.num_antennas,
                                   cols=config.num_users)
    moments = analytic.soft_moments(channel, hist.user, hist.symbol, config)
    sigma = math.sqrt(moments.variance / 2.0)
    mean_axis = moments.mean.real if hist.axis == "re" else moments.mean.imag
    if hist.value_range is None:
        lo, hi = mean_axis - 5.0 * sigma, mean_axis + 5.0 * sigma
    else:
        lo, hi = hist.value_range
    edges = np.linspace(lo, hi, hist.bins + 1)

    filt = mrc_filter(ChannelEstimate.full_csi(channel))
    column = filt.matrix[:, hist.user]
    sym_stream = _stream(spec, (0, hist.panel, ROLE_SYMBOLS))
    noise_stream = _stream(spec, (0, hist.panel, ROLE_NOISE))
    counts = np.zeros(hist.bins, dtype=np.int64)
    per_chunk = max(1, CHUNK_ELEMENTS // config.num_antennas)
    for size in _inner_chunks(spec.inner_trials, per_chunk):
        symbols = sample_symbols(config, sym_stream, size)
        symbols[hist.user, :] = hist.symbol
        received = propagate(channel, symbols, config, noise_stream)
        observed = quantize(received, spec.quantizer)
        soft_user = np.conjugate(column) @ observed
        values = soft_user.real if hist.axis == "re" else soft_user.imag
        # interior edges only: out-of-range draws land in the end bins
        bin_ids = np.searchsorted(edges[1:-1], values, side="right")
        counts += np.bincount(bin_ids, minlength=hist.bins)
    empirical = counts / spec.inner_trials
    cdf = scipy.special.ndtr((edges[1:-1] - mean_axis) / sigma)
    model = np.diff(np.concatenate(([0.0], cdf, [1.0])))
    return HistogramResult(axis=hist.axis, bin_edges=edges,
                           empirical_probs=empirical, analytic_probs=model,
                           draws=spec.inner_trials)


@dataclass(frozen=True)
class OracleResult:
    """Exact transition pmf and derived metrics for one (H, filter, user)."""

    transitions: np.ndarray
    mi_hard: float
    ser: float


def _base4_rows(start, stop, width):
    idx = np.arange(start, stop, dtype=np.int64)
    shifts = 2 * np.arange(width - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] >> shifts) & 3


def exact_enumeration_oracle(channel, config, receive_filter, user=0):
    """Exact end-to-end transition pmf by enumerating all quantizer outputs.

    Conditioned on the full transmit vector, each antenna's two sign bits
    are independent with erfc probabilities, so summing over all 4^K input
    patterns and 4^M output patterns gives p(x_hat | x_k) with no sampling
    and no Gaussian approximation of the interference. Feasible only while
    4^(M+K) stays within the 10^8 state cap.

    The filter is applied to 1-bit outputs; the oracle models the one-bit
    front end only.
    """
    m, k = config.num_antennas, config.num_users
    states = 4 ** (m + k)
    if states > ORACLE_STATE_CAP:
        raise SizeCapError(
            f"exact enumeration needs 4^(M+K) = {states} states, above the "
            f"10^8 cap; reduce num_antennas or num_users"
        )
    h = check_complex_matrix(channel, "channel", rows=m, cols=k)
    matrix = (
        receive_filter.matrix
        if hasattr(receive_filter, "matrix")
        else check_complex_matrix(receive_filter, "receive_filter", rows=m)
    )
    column = np.conjugate(matrix[:, user])

    num_inputs = 4**k
    num_outputs = 4**m
    in_digits = _base4_rows(0, num_inputs, k)
    inputs = QPSK_ALPHABET[in_digits]  # (4^K, K)
    means = np.sqrt(config.transmit_power) * (inputs @ h.T)  # (4^K, M)
    sigma = math.sqrt(config.noise_variance)
    p_re_plus = 0.5 * erfc(-means.real / sigma)
    p_im_plus = 0.5 * erfc(-means.imag / sigma)

    mass = np.zeros((4, num_inputs))
    out_chunk = max(1, min(num_outputs, 2_000_000 // num_inputs))
    for start in range(0, num_outputs, out_chunk):
        stop = min(start + out_chunk, num_outputs)
        out_digits = _base4_rows(start, stop, m)
        outputs = QUANTIZER_ALPHABET[out_digits]  # (b, M)
        decisions = quadrant_index(outputs @ column)  # (b,)
        probs = np.ones((num_inputs, stop - start))
        for i in range(m):
            re_pos = outputs[:, i].real > 0
            im_pos = outputs[:, i].imag > 0
            probs *= np.where(re_pos[None, :], p_re_plus[:, i, None],
                              1.0 - p_re_plus[:, i, None])
            probs *= np.where(im_pos[None, :], p_im_plus[:, i, None],
                              1.0 - p_im_plus[:, i, None])
        for q in range(4):
            sel = decisions == q
            if np.any(sel):
                mass[q] += probs[:, sel].sum(axis=1)

    transitions = np.empty((4, 4))
    sent = in_digits[:, user]
    for a in range(4):
        rows = sent == a
        for q in range(4):
            transitions[a, q] = mass[q][rows].mean()
    return OracleResult(
        transitions=transitions,
        mi_hard=analytic.mi_hard(transitions),
        ser=analytic.ser_analytic(transitions),
    )


def _analytic_channels_per_trial(spec, si, key_prefix, config):
    """Channel draws addressed exactly like the MI Monte Carlo trials."""
    draws = []
    for t in range(spec.channel_trials):
        draws.append(_trial_channel(spec, config, key_prefix + (si, t)))
    return np.stack(draws, axis=0)


def run_mi_hard_analytic(spec, key_prefix=()):
    """Closed-form hard-decision MI averaged over seeded channel draws.

    Channel draws reuse the Monte Carlo trial addresses, so an MC run with
    the same spec sees the same channels.
    """
    _require_analytic_cell(spec, "the closed-form analysis")
    points = []
    for si, snr_db in enumerate(spec.snr_db_grid):
        config = spec.config_at(snr_db)
        channels = _analytic_channels_per_trial(spec, si, key_prefix, config)
        per_user = np.empty((spec.num_users, len(channels)))
        for u in range(spec.num_users):
            per_user[u] = analytic.batch_user_metrics(
                channels, u, config, want_mi_hard=True, want_ser=False
            )["mi_hard"]
        points.append(_summary(snr_db, per_user.mean(axis=0),
                               spec.channel_trials))
    return MetricEstimate(metric="mi_hard_analytic", points=tuple(points))


def run_mi_soft_analytic(spec, key_prefix=()):
    """Closed-form discretized soft-estimate MI over seeded channel draws."""
    _require_analytic_cell(spec, "the closed-form analysis")
    points = []
    for si, snr_db in enumerate(spec.snr_db_grid):
        config = spec.config_at(snr_db)
        channels = _analytic_channels_per_trial(spec, si, key_prefix, config)
        per_user = np.empty((spec.num_users, len(channels)))
        for u in range(spec.num_users):
            per_user[u] = analytic.batch_user_metrics(
                channels, u, config, want_mi_hard=False, want_ser=False,
                soft_bins=spec.soft_bins,
            )["mi_soft"]
        points.append(_summary(snr_db, per_user.mean(axis=0),
                               spec.channel_trials))
    return MetricEstimate(metric="mi_soft_analytic", points=tuple(points))


def run_ser_analytic(spec, key_prefix=()):
    """Closed-form SER averaged over seeded channel draws, chunked."""
    _require_analytic_cell(spec, "the closed-form analysis")
    points = []
    chunk = _ser_chunk_size(spec)
    for si, snr_db in enumerate(spec.snr_db_grid):
        config = spec.config_at(snr_db)
        values = []
        for c, size in enumerate(_inner_chunks(spec.channel_trials, chunk)):
            key = key_prefix + (si, c)
            channels = sample_complex_gaussian(
                _stream(spec, key + (ROLE_CHANNEL,)),
                (size, spec.num_antennas, spec.num_users),
            )
            per_user = np.empty((spec.num_users, size))
            for u in range(spec.num_users):
                per_user[u] = analytic.batch_user_metrics(
                    channels, u, config, want_mi_hard=False, want_ser=True
                )["ser"]
            values.append(per_user.mean(axis=0))
        points.append(_summary(snr_db, np.concatenate(values),
                               spec.channel_trials))
    return MetricEstimate(metric="ser_analytic", points=tuple(points))


METRIC_RUNNERS = {
    "mi_hard_mc": run_mi_hard_mc,
    "mi_soft_mc": run_mi_soft_mc,
    "ser_mc": run_ser_mc,
    "mi_hard_analytic": run_mi_hard_analytic,
    "mi_soft_analytic": run_mi_soft_analytic,
    "ser_analytic": run_ser_analytic,
}


@dataclass(frozen=True)
class SweepCell:
    """One curve of a sweep: a spec plus the metrics to evaluate on it."""

    spec: ExperimentSpec
    metrics: tuple

    def __post_init__(self):
        metrics = tuple(self.metrics)
        for name in metrics:
            if name not in METRIC_RUNNERS:
                raise ValueError(
                    f"unknown metric {name!r}; expected one of "
                    f"{sorted(METRIC_RUNNERS)}"
                )
        if not metrics:
            raise ValueError("a sweep cell needs at least one metric")
        object.__setattr__(self, "metrics", metrics)


def _row_base(spec):
    return dict(
        filter=spec.filter_kind,
        csi_mode=spec.csi_mode,
        quantizer_mode=spec.quantizer.value,
        pilot_len=spec.pilot_len,
        channel_trials=spec.channel_trials,
        inner_trials=spec.inner_trials,
        master_seed=spec.master_seed,
        num_antennas=spec.num_antennas,
        num_users=spec.num_users,
    )


def run_cell(cell, cell_index=0):
    """Evaluate one sweep cell, mapping failures to error rows."""
    rows = []
    base = _row_base(cell.spec)
    for metric in cell.metrics:
        try:
            estimate = METRIC_RUNNERS[metric](cell.spec,
                                              key_prefix=(cell_index,))
        except (OneBitMimoError, ValueError, TypeError,
                np.linalg.LinAlgError) as exc:
            grid = cell.spec.snr_db_grid
            rows.append(ResultRow(
                snr_db=float(grid[0]) if grid else 0.0,
                metric=metric, value=None, std_error=None,
                error=str(exc), **base,
            ))
            continue
        for point in estimate.points:
            rows.append(ResultRow(
                snr_db=point.snr_db, metric=metric, value=point.value,
                std_error=point.std_error, error="", **base,
            ))
    return rows


def _run_cell_task(args):
    index, cell = args
    return run_cell(cell, cell_index=index)


def run_sweep(cells, workers=1):
    """Evaluate sweep cells, optionally across processes.

    Results are identical for any worker count: each cell's streams are
    addressed by its position in ``cells`` and rows are collected in cell
    order. Per-cell failures become rows with the ``error`` field set and
    the sweep continues.
    """
    tasks = list(enumerate(cells))
    if workers <= 1:
        grouped = [_run_cell_task(task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            grouped = list(pool.map(_run_cell_task, tasks))
    return [row for group in grouped for row in group]
