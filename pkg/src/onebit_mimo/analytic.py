"""Closed-form performance analysis of the MRC receiver with full CSI.

Conditioned on the target user's symbol, each antenna's quantizer output is
modeled by treating interference plus noise as complex Gaussian, giving the
four quadrant probabilities in closed form via erfc. Summing the filtered
per-antenna contributions and applying a central limit argument yields a
Gaussian model of the soft estimate, from which the hard-decision
transition pmf, mutual information, and symbol error rate follow without
any symbol or noise Monte Carlo.

Everything here is deterministic given the channel matrix; averaging over
channel draws is the caller's job.
"""

from dataclasses import dataclass

import numpy as np
import scipy.special

from .exceptions import DegenerateChannelError, GridCoverageError
from .linalg import erfc
from .model import QPSK_ALPHABET, QUANTIZER_ALPHABET, quadrant_index
from .validation import check_complex_matrix, check_count, check_pmf, check_real

# QPSK_ALPHABET[c] = QPSK_ALPHABET[0] * SYMBOL_ROTATIONS[c]; rotating the
# target symbol rotates the soft-estimate mean by the same unit factor and
# leaves its variance unchanged, which is how transition rows for the other
# three symbols are obtained.
SYMBOL_ROTATIONS = np.array([1.0, -1.0j, -1.0, 1.0j])

COVERAGE_SIGMAS = 5.0


def _axis_sigma(variance):
    """Per-axis standard deviation of a circular complex Gaussian."""
    return np.sqrt(variance / 2.0)


def interference_variance(channel, antenna, user, config):
    """Variance of the multi-user interference seen by one antenna.

    Pt times the summed squared magnitudes of the antenna's channel row,
    excluding the target user's entry. Zero when K = 1.
    """
    h = check_complex_matrix(channel, "channel", rows=config.num_antennas,
                             cols=config.num_users)
    row = h[antenna]
    total = float(np.sum(np.abs(row) ** 2) - np.abs(row[user]) ** 2)
    return config.transmit_power * total


def _quadrant_probs_from_mean(mean, denom):
    """Per-axis positive-sign probabilities for mean/denominator arrays."""
    q_re = 0.5 * erfc(-np.real(mean) / denom)
    q_im = 0.5 * erfc(-np.imag(mean) / denom)
    return q_re, q_im


def _pmf_from_axis_probs(q_re, q_im):
    """Stack quadrant probabilities in QUANTIZER_ALPHABET order, last axis."""
    return np.stack(
        [
            q_re * q_im,
            q_re * (1.0 - q_im),
            (1.0 - q_re) * (1.0 - q_im),
            (1.0 - q_re) * q_im,
        ],
        axis=-1,
    )


def _per_antenna_axis_probs(channel, user, symbol, config):
    """q_re, q_im arrays over antennas for channels shaped (..., M, K)."""
    h_k = channel[..., user]
    row_power = np.sum(np.abs(channel) ** 2, axis=-1)
    sigma_i_sq = config.transmit_power * (row_power - np.abs(h_k) ** 2)
    denom = np.sqrt(config.noise_variance + sigma_i_sq)
    mean = np.sqrt(config.transmit_power) * h_k * symbol
    return _quadrant_probs_from_mean(mean, denom)


def antenna_output_pmf(channel, antenna, user, symbol, config):
    """Pmf over the four quantizer outputs of one antenna given x_k.

    Under the Gaussian interference-plus-noise model the antenna sample is
    CN(sqrt(Pt) h_ik x_k, noise_variance + interference_variance), and each
    quadrant probability is a product of two erfc terms.
    """
    h = check_complex_matrix(channel, "channel", rows=config.num_antennas,
                             cols=config.num_users)
    q_re, q_im = _per_antenna_axis_probs(h, user, symbol, config)
    return _pmf_from_axis_probs(q_re[antenna], q_im[antenna])


@dataclass(frozen=True)
class SoftEstimateMoments:
    """Gaussian model of the MRC soft estimate: CN(mean, variance)."""

    mean: complex
    variance: float

    def __post_init__(self):
        object.__setattr__(self, "mean", complex(self.mean))
        variance = check_real(self.variance, "variance")
        if variance < 0.0:
            raise ValueError(f"variance must be >= 0, got {variance}")
        object.__setattr__(self, "variance", variance)


def _moments_from_quantizer_means(weights, quantizer_means, magnitudes_sq, norm_sq):
    mu = weights * quantizer_means
    # |E y_i|^2 <= 2 exactly; clamp the rounding residue so variances stay >= 0
    spread = np.maximum(2.0 - np.abs(quantizer_means) ** 2, 0.0)
    var = (magnitudes_sq / norm_sq**2) * spread
    return complex(mu.sum()), float(var.sum())


def soft_moments_from_pmfs(channel_column, pmfs):
    """Soft-estimate moments with explicitly supplied per-antenna pmfs.

    Unit-test entry point: lets a caller inject arbitrary pmf rows instead
    of deriving them from the Gaussian model.
    """
    h_k = np.ascontiguousarray(channel_column, dtype=np.complex128)
    if h_k.ndim != 1:
        raise ValueError("channel_column must be 1-D")
    p = np.ascontiguousarray(pmfs, dtype=np.float64)
    if p.shape != (h_k.size, 4):
        raise ValueError(f"pmfs must have shape ({h_k.size}, 4), got {p.shape}")
    for row in p:
        check_pmf(row, "antenna output pmf")
    norm_sq = float(np.sum(np.abs(h_k) ** 2))
    if norm_sq == 0.0:
        raise DegenerateChannelError("target channel column is zero")
    weights = np.conjugate(h_k) / norm_sq
    quantizer_means = p @ QUANTIZER_ALPHABET
    mean, var = _moments_from_quantizer_means(
        weights, quantizer_means, np.abs(h_k) ** 2, norm_sq
    )
    return SoftEstimateMoments(mean=mean, variance=var)


def soft_moments(channel, user, symbol, config):
    """Gaussian moments of the MRC soft estimate for user ``user`` given x_k.

    The mean accumulates each antenna's filtered expected quantizer output;
    the variance accumulates the filtered spread 2 - |E y_i|^2 per antenna.
    """
    h = check_complex_matrix(channel, "channel", rows=config.num_antennas,
                             cols=config.num_users)
    h_k = h[:, user]
    norm_sq = float(np.sum(np.abs(h_k) ** 2))
    if norm_sq == 0.0:
        raise DegenerateChannelError(f"channel column {user} is zero")
    q_re, q_im = _per_antenna_axis_probs(h, user, symbol, config)
    quantizer_means = (2.0 * q_re - 1.0) + 1j * (2.0 * q_im - 1.0)
    weights = np.conjugate(h_k) / norm_sq
    mean, var = _moments_from_quantizer_means(
        weights, quantizer_means, np.abs(h_k) ** 2, norm_sq
    )
    return SoftEstimateMoments(mean=mean, variance=var)


def hard_transition_pmf(moments):
    """Quadrant pmf of the demodulated decision under CN(mean, variance).

    With zero variance the pmf is a point mass on the mean's quadrant
    (boundaries rounding toward +1, as in demodulation).
    """
    if moments.variance == 0.0:
        pmf = np.zeros(4)
        pmf[int(quadrant_index(moments.mean))] = 1.0
        return pmf
    denom = np.sqrt(moments.variance)
    q_re, q_im = _quadrant_probs_from_mean(moments.mean, denom)
    return _pmf_from_axis_probs(np.float64(q_re), np.float64(q_im))


def transition_matrix(channel, user, config):
    """4x4 transition pmf p(x_hat | x) for one user, rows in alphabet order.

    Only the first symbol's moments are computed; the other rows reuse them
    with the mean rotated by the symbol's unit rotation, which is exact for
    this model.
    """
    base = soft_moments(channel, user, QPSK_ALPHABET[0], config)
    rows = [
        hard_transition_pmf(
            SoftEstimateMoments(mean=base.mean * rot, variance=base.variance)
        )
        for rot in SYMBOL_ROTATIONS
    ]
    return np.stack(rows, axis=0)


def _mi_bits_from_conditionals(conditionals):
    """Mutual information in bits for a uniform input over the rows."""
    cond = np.asarray(conditionals, dtype=np.float64)
    joint = cond / cond.shape[0]
    marginal = joint.sum(axis=0, keepdims=True)
    mask = joint > 0.0
    ratio = np.ones_like(joint)
    np.divide(joint, marginal * (1.0 / cond.shape[0]), out=ratio, where=mask)
    bits = float(np.sum(joint[mask] * np.log2(ratio[mask])))
    return min(max(bits, 0.0), 2.0)


def mi_hard(transitions):
    """Mutual information in bits of the 4-ary hard-decision channel.

    ``transitions`` is a 4x4 row-stochastic matrix, rows indexed by the
    transmitted symbol under a uniform prior.
    """
    t = np.asarray(transitions, dtype=np.float64)
    if t.shape != (4, 4):
        raise ValueError(f"transitions must be 4x4, got {t.shape}")
    for row in t:
        check_pmf(row, "transition row")
    return _mi_bits_from_conditionals(t)


def ser_analytic(transitions):
    """Symbol error rate of the hard-decision channel under a uniform prior."""
    t = np.asarray(transitions, dtype=np.float64)
    if t.shape != (4, 4):
        raise ValueError(f"transitions must be 4x4, got {t.shape}")
    for row in t:
        check_pmf(row, "transition row")
    return float(np.mean(1.0 - np.diagonal(t)))


@dataclass(frozen=True)
class DiscretizationGrid:
    """Square per-axis binning of the soft-estimate plane.

    ``bins`` cells per axis over [lo, hi] on both Re and Im; the outermost
    cells absorb all tail mass, so bin pmfs sum to one exactly. Grids built
    by ``for_moments`` place a cell edge at 0 on each axis, making the
    quadrant partition a coarsening of the cell partition.
    """

    bins: int
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "bins", check_count(self.bins, "bins", minimum=8))
        lo = check_real(self.lo, "lo")
        hi = check_real(self.hi, "hi")
        if hi <= lo:
            raise ValueError(f"grid range is empty: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def edges(self):
        return np.linspace(self.lo, self.hi, self.bins + 1)

    @property
    def interior_edges(self):
        return self.edges[1:-1]

    @property
    def zero_aligned(self):
        return bool(np.any(np.abs(self.interior_edges) < 1e-12))

    @classmethod
    def for_moments(cls, moments_list, bins=64, spread=COVERAGE_SIGMAS):
        """Symmetric zero-aligned grid covering every mean +- spread sigmas."""
        bins = check_count(bins, "bins", minimum=8)
        if bins % 2:
            bins += 1
        reach = 0.0
        for m in moments_list:
            sigma = _axis_sigma(m.variance)
            reach = max(
                reach,
                abs(m.mean.real) + spread * sigma,
                abs(m.mean.imag) + spread * sigma,
            )
        if reach <= 0.0:
            reach = 1.0
        return cls(bins=bins, lo=-reach, hi=reach)


def _axis_bin_masses(grid, mean_axis, sigma_axis):
    """Masses of the grid cells along one axis, tails folded into the ends."""
    interior = grid.interior_edges
    if sigma_axis == 0.0:
        index = int(np.searchsorted(interior, mean_axis, side="right"))
        masses = np.zeros(grid.bins)
        masses[index] = 1.0
        return masses
    cdf = scipy.special.ndtr((interior - mean_axis) / sigma_axis)
    return np.diff(np.concatenate(([0.0], cdf, [1.0])))


def soft_bin_pmfs(moments_list, grid):
    """Per-condition pmfs of the discretized soft estimate, shape (C, bins^2).

    Raises GridCoverageError if any conditional mean +- 5 sigma leaves the
    grid range on either axis.
    """
    pmfs = []
    for m in moments_list:
        sigma = _axis_sigma(m.variance)
        for axis_mean in (m.mean.real, m.mean.imag):
            if axis_mean - COVERAGE_SIGMAS * sigma < grid.lo or (
                axis_mean + COVERAGE_SIGMAS * sigma > grid.hi
            ):
                raise GridCoverageError(
                    f"grid [{grid.lo}, {grid.hi}] does not cover mean "
                    f"{axis_mean:.6g} +- {COVERAGE_SIGMAS} sigma "
                    f"({COVERAGE_SIGMAS * sigma:.6g})"
                )
        re_mass = _axis_bin_masses(grid, m.mean.real, sigma)
        im_mass = _axis_bin_masses(grid, m.mean.imag, sigma)
        pmfs.append(np.outer(re_mass, im_mass).ravel())
    return np.stack(pmfs, axis=0)


def mi_soft_discretized(moments_list, grid=None, bins=64):
    """Mutual information in bits between x_k and the binned soft estimate.

    ``moments_list`` holds the four conditional Gaussian models in alphabet
    order. When ``grid`` is omitted a covering zero-aligned grid is built
    from the moments.
    """
    moments_list = list(moments_list)
    if len(moments_list) != 4:
        raise ValueError(f"expected 4 conditional moments, got {len(moments_list)}")
    if grid is None:
        grid = DiscretizationGrid.for_moments(moments_list, bins=bins)
    conditionals = soft_bin_pmfs(moments_list, grid)
    return _mi_bits_from_conditionals(conditionals)


def moments_for_all_symbols(channel, user, config):
    """Conditional soft-estimate moments for each QPSK symbol, via rotation."""
    base = soft_moments(channel, user, QPSK_ALPHABET[0], config)
    return [
        SoftEstimateMoments(mean=base.mean * rot, variance=base.variance)
        for rot in SYMBOL_ROTATIONS
    ]


def analytic_user_metrics(channel, user, config, soft_bins=None):
    """Hard MI, SER, and optionally soft MI for one user and channel.

    Returns a dict with keys "mi_hard", "ser", and "mi_soft" when
    ``soft_bins`` is given.
    """
    moments = moments_for_all_symbols(channel, user, config)
    transitions = np.stack([hard_transition_pmf(m) for m in moments], axis=0)
    out = {
        "mi_hard": _mi_bits_from_conditionals(transitions),
        "ser": float(np.mean(1.0 - np.diagonal(transitions))),
    }
    if soft_bins is not None:
        out["mi_soft"] = mi_soft_discretized(moments, bins=soft_bins)
    return out


def batch_soft_moments(channels, user, config):
    """Vectorized soft-estimate moments over stacked channels (C, M, K).

    Returns (means, variances), each shaped (C,).
    """
    h = np.asarray(channels, dtype=np.complex128)
    if h.ndim != 3 or h.shape[1:] != (config.num_antennas, config.num_users):
        raise ValueError(
            f"channels must have shape (C, {config.num_antennas}, "
            f"{config.num_users}), got {h.shape}"
        )
    h_k = h[..., user]
    magnitudes_sq = np.abs(h_k) ** 2
    norm_sq = magnitudes_sq.sum(axis=-1)
    if np.any(norm_sq == 0.0):
        raise DegenerateChannelError(f"channel column {user} is zero in the batch")
    q_re, q_im = _per_antenna_axis_probs(h, user, QPSK_ALPHABET[0], config)
    quantizer_means = (2.0 * q_re - 1.0) + 1j * (2.0 * q_im - 1.0)
    weights = np.conjugate(h_k) / norm_sq[:, None]
    means = (weights * quantizer_means).sum(axis=-1)
    spread = np.maximum(2.0 - np.abs(quantizer_means) ** 2, 0.0)
    variances = ((magnitudes_sq / norm_sq[:, None] ** 2) * spread).sum(axis=-1)
    return means, variances


def _batch_transitions(means, variances):
    """Stacked 4x4 transition matrices from per-channel moments, (C, 4, 4)."""
    denom = np.sqrt(variances)  # requires positive variances
    rows = []
    for rot in SYMBOL_ROTATIONS:
        rotated = means * rot
        q_re = 0.5 * erfc(-rotated.real / denom)
        q_im = 0.5 * erfc(-rotated.imag / denom)
        rows.append(_pmf_from_axis_probs(q_re, q_im))
    return np.stack(rows, axis=1)


def batch_user_metrics(channels, user, config, want_mi_hard=True, want_ser=True,
                       soft_bins=None):
    """Analytic metrics for one user across stacked channels (C, M, K).

    Returns a dict of float arrays shaped (C,). Keys present: "mi_hard" and
    "ser" as requested, plus "mi_soft" when ``soft_bins`` is given.
    """
    means, variances = batch_soft_moments(channels, user, config)
    out = {}
    if want_mi_hard or want_ser:
        if np.any(variances == 0.0):
            transitions = np.stack(
                [
                    transition_matrix(channels[c], user, config)
                    for c in range(len(means))
                ],
                axis=0,
            )
        else:
            transitions = _batch_transitions(means, variances)
        if want_ser:
            out["ser"] = 1.0 - np.diagonal(transitions, axis1=1, axis2=2).mean(axis=1)
        if want_mi_hard:
            joint = transitions / 4.0
            marginal = joint.sum(axis=1, keepdims=True)
            mask = joint > 0.0
            ratio = np.ones_like(joint)
            np.divide(joint, marginal * 0.25, out=ratio, where=mask)
            bits = np.where(mask, joint * np.log2(ratio), 0.0).sum(axis=(1, 2))
            out["mi_hard"] = np.clip(bits, 0.0, 2.0)
    if soft_bins is not None:
        soft = np.empty(len(means))
        for c in range(len(means)):
            moments = [
                SoftEstimateMoments(mean=complex(means[c] * rot),
                                    variance=float(variances[c]))
                for rot in SYMBOL_ROTATIONS
            ]
            soft[c] = mi_soft_discretized(moments, bins=soft_bins)
        out["mi_soft"] = soft
    return out
