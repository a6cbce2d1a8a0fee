import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from onebit_mimo.analytic import (
    SYMBOL_ROTATIONS,
    DiscretizationGrid,
    SoftEstimateMoments,
    analytic_user_metrics,
    antenna_output_pmf,
    batch_soft_moments,
    batch_user_metrics,
    hard_transition_pmf,
    interference_variance,
    mi_hard,
    mi_soft_discretized,
    moments_for_all_symbols,
    ser_analytic,
    soft_bin_pmfs,
    soft_moments,
    soft_moments_from_pmfs,
    transition_matrix,
)
from onebit_mimo.exceptions import (
    DegenerateChannelError,
    GridCoverageError,
    InvalidPmfError,
)
from onebit_mimo.model import QPSK_ALPHABET, QUANTIZER_ALPHABET, SystemConfig

# Entropy of (0.7, 0.1, 0.1, 0.1) subtracted from 2, evaluated with mpmath
# at 30 significant digits and frozen here.
MI_CIRCULANT_07 = 0.6432203505529605

# Same construction for the product row (0.49, 0.21, 0.09, 0.21), i.e. both
# axes independently correct with probability 0.7.
MI_PRODUCT_ROW_07 = 0.23741820153861476

QUADRANT_SIGNS = ((1, 1), (1, -1), (-1, -1), (-1, 1))


def _random_channel(rng, m, k):
    return (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))) / np.sqrt(2)


def _empirical_quadrant_pmf(samples):
    re_pos = samples.real >= 0.0
    im_pos = samples.imag >= 0.0
    return np.array(
        [
            np.mean(re_pos & im_pos),
            np.mean(re_pos & ~im_pos),
            np.mean(~re_pos & ~im_pos),
            np.mean(~re_pos & im_pos),
        ]
    )


def test_interference_variance_single_user_is_zero():
    rng = np.random.default_rng(11)
    config = SystemConfig(num_antennas=6, num_users=1, transmit_power=3.0)
    h = _random_channel(rng, 6, 1)
    for antenna in range(6):
        assert interference_variance(h, antenna, 0, config) == 0.0


def test_interference_variance_hand_row():
    config = SystemConfig(num_antennas=1, num_users=3, transmit_power=2.0)
    h = np.array([[1.0, 1.0j, -1.0]])
    assert interference_variance(h, 0, 1, config) == pytest.approx(4.0, abs=1e-15)


def test_interference_variance_matches_bruteforce():
    rng = np.random.default_rng(12)
    config = SystemConfig(num_antennas=5, num_users=4, transmit_power=1.7)
    h = _random_channel(rng, 5, 4)
    for antenna in range(5):
        for user in range(4):
            expected = config.transmit_power * sum(
                abs(h[antenna, j]) ** 2 for j in range(4) if j != user
            )
            got = interference_variance(h, antenna, user, config)
            assert got == pytest.approx(expected, rel=1e-12)
            assert got >= 0.0


def test_antenna_pmf_zero_gain_is_uniform():
    rng = np.random.default_rng(13)
    config = SystemConfig(num_antennas=2, num_users=3, transmit_power=2.0)
    h = _random_channel(rng, 2, 3)
    h[1, 2] = 0.0
    pmf = antenna_output_pmf(h, 1, 2, QPSK_ALPHABET[0], config)
    np.testing.assert_allclose(pmf, 0.25, atol=1e-15)


def test_antenna_pmf_concentrates_at_high_power():
    config = SystemConfig(num_antennas=1, num_users=1, transmit_power=1e6)
    h = np.array([[1.0 + 0.0j]])
    pmf = antenna_output_pmf(h, 0, 0, QPSK_ALPHABET[0], config)
    assert pmf[0] > 1.0 - 1e-10
    assert pmf[1:].max() < 1e-10


def test_antenna_pmf_sums_to_one_on_random_instances():
    rng = np.random.default_rng(14)
    config = SystemConfig(num_antennas=5, num_users=4, transmit_power=0.8)
    checked = 0
    for _ in range(13):
        h = _random_channel(rng, 5, 4)
        for antenna in range(5):
            for user in range(4):
                for symbol in QPSK_ALPHABET:
                    pmf = antenna_output_pmf(h, antenna, user, symbol, config)
                    assert pmf.min() >= 0.0
                    assert abs(pmf.sum() - 1.0) < 1e-12
                    checked += 1
    assert checked >= 1000


def test_antenna_pmf_matches_gaussian_surrogate_mc():
    # Interference replaced by a complex Gaussian of matching variance, so
    # the closed form should agree with the simulation up to sampling noise.
    rng = np.random.default_rng(15)
    config = SystemConfig(num_antennas=1, num_users=2, transmit_power=1.5)
    h = np.array([[0.9 + 0.3j, 0.7 - 0.5j]])
    symbol = QPSK_ALPHABET[0]
    pmf = antenna_output_pmf(h, 0, 0, symbol, config)

    draws = 1_000_000
    total_var = config.noise_variance + config.transmit_power * abs(h[0, 1]) ** 2
    mean = np.sqrt(config.transmit_power) * h[0, 0] * symbol
    noise = (rng.standard_normal(draws) + 1j * rng.standard_normal(draws)) * np.sqrt(
        total_var / 2.0
    )
    freq = _empirical_quadrant_pmf(mean + noise)
    se = np.sqrt(pmf * (1.0 - pmf) / draws)
    np.testing.assert_array_less(np.abs(freq - pmf), 3.0 * se + 1e-9)


def test_antenna_pmf_gap_to_true_qpsk_interferer_is_small():
    # With the interferer drawing real QPSK symbols the closed form is only
    # an approximation (one interferer is far from Gaussian), so this checks
    # a loose bound rather than statistical agreement.
    rng = np.random.default_rng(16)
    config = SystemConfig(num_antennas=1, num_users=2, transmit_power=1.5)
    h = np.array([[0.9 + 0.3j, 0.7 - 0.5j]])
    symbol = QPSK_ALPHABET[0]
    pmf = antenna_output_pmf(h, 0, 0, symbol, config)

    draws = 400_000
    amp = np.sqrt(config.transmit_power)
    interferer = QPSK_ALPHABET[rng.integers(0, 4, size=draws)]
    noise = (rng.standard_normal(draws) + 1j * rng.standard_normal(draws)) * np.sqrt(
        config.noise_variance / 2.0
    )
    samples = amp * (h[0, 0] * symbol + h[0, 1] * interferer) + noise
    freq = _empirical_quadrant_pmf(samples)
    assert np.max(np.abs(freq - pmf)) < 0.05


def test_antenna_pmf_exact_for_single_user():
    # No interference at K = 1, so the closed form is exact and a plain
    # Monte Carlo frequency must agree at statistical tolerance.
    rng = np.random.default_rng(17)
    config = SystemConfig(num_antennas=2, num_users=1, transmit_power=2.5)
    h = _random_channel(rng, 2, 1)
    symbol = QPSK_ALPHABET[2]
    draws = 200_000
    for antenna in range(2):
        pmf = antenna_output_pmf(h, antenna, 0, symbol, config)
        noise = (
            rng.standard_normal(draws) + 1j * rng.standard_normal(draws)
        ) * np.sqrt(config.noise_variance / 2.0)
        samples = np.sqrt(config.transmit_power) * h[antenna, 0] * symbol + noise
        freq = _empirical_quadrant_pmf(samples)
        se = np.sqrt(pmf * (1.0 - pmf) / draws)
        np.testing.assert_array_less(np.abs(freq - pmf), 3.0 * se + 1e-6)


def test_antenna_pmf_rotation_consistency():
    rng = np.random.default_rng(18)
    config = SystemConfig(num_antennas=3, num_users=2, transmit_power=1.2)
    h = _random_channel(rng, 3, 2)
    for antenna in range(3):
        for symbol in QPSK_ALPHABET:
            base = antenna_output_pmf(h, antenna, 0, symbol, config)
            rotated = antenna_output_pmf(h, antenna, 0, symbol * 1j, config)
            np.testing.assert_allclose(rotated, np.roll(base, -1), rtol=1e-12)


def test_soft_moments_from_uniform_pmfs():
    rng = np.random.default_rng(19)
    h_k = _random_channel(rng, 4, 1)[:, 0]
    pmfs = np.full((4, 4), 0.25)
    moments = soft_moments_from_pmfs(h_k, pmfs)
    norm_sq = float(np.sum(np.abs(h_k) ** 2))
    assert moments.mean == pytest.approx(0.0, abs=1e-15)
    assert moments.variance == pytest.approx(2.0 / norm_sq, rel=1e-12)


def test_soft_moments_from_point_mass_pmfs():
    rng = np.random.default_rng(20)
    h_k = _random_channel(rng, 5, 1)[:, 0]
    pmfs = np.zeros((5, 4))
    pmfs[:, 0] = 1.0
    moments = soft_moments_from_pmfs(h_k, pmfs)
    norm_sq = float(np.sum(np.abs(h_k) ** 2))
    expected_mean = np.sum(np.conjugate(h_k)) * (1.0 + 1.0j) / norm_sq
    assert moments.variance == 0.0
    assert moments.mean == pytest.approx(expected_mean, rel=1e-12)


def test_soft_moments_from_pmfs_validation():
    h_k = np.array([1.0 + 0.0j, 0.5j])
    with pytest.raises(ValueError):
        soft_moments_from_pmfs(h_k, np.full((3, 4), 0.25))
    bad = np.full((2, 4), 0.25)
    bad[0] = [0.5, 0.5, 0.5, -0.5]
    with pytest.raises(InvalidPmfError):
        soft_moments_from_pmfs(h_k, bad)
    with pytest.raises(DegenerateChannelError):
        soft_moments_from_pmfs(np.zeros(2, dtype=complex), np.full((2, 4), 0.25))


def test_soft_moments_consistent_with_pmf_injection():
    rng = np.random.default_rng(21)
    config = SystemConfig(num_antennas=6, num_users=3, transmit_power=1.3)
    h = _random_channel(rng, 6, 3)
    symbol = QPSK_ALPHABET[1]
    direct = soft_moments(h, 1, symbol, config)
    pmfs = np.stack(
        [antenna_output_pmf(h, i, 1, symbol, config) for i in range(6)], axis=0
    )
    injected = soft_moments_from_pmfs(h[:, 1], pmfs)
    assert direct.mean == pytest.approx(injected.mean, rel=1e-12)
    assert direct.variance == pytest.approx(injected.variance, rel=1e-12)
    assert direct.variance >= 0.0


def test_soft_moments_variance_nonnegative_randomized():
    rng = np.random.default_rng(22)
    for _ in range(50):
        m = int(rng.integers(1, 8))
        k = int(rng.integers(1, 5))
        config = SystemConfig(
            num_antennas=m,
            num_users=k,
            transmit_power=float(rng.uniform(0.05, 20.0)),
        )
        h = _random_channel(rng, m, k)
        user = int(rng.integers(0, k))
        symbol = QPSK_ALPHABET[int(rng.integers(0, 4))]
        assert soft_moments(h, user, symbol, config).variance >= 0.0


def test_soft_moments_rejects_zero_column():
    config = SystemConfig(num_antennas=2, num_users=2)
    h = np.array([[0.0, 1.0], [0.0, 1.0j]])
    with pytest.raises(DegenerateChannelError):
        soft_moments(h, 0, QPSK_ALPHABET[0], config)


def test_hard_transition_zero_mean_is_uniform():
    pmf = hard_transition_pmf(SoftEstimateMoments(mean=0.0, variance=1.0))
    np.testing.assert_allclose(pmf, 0.25, atol=1e-15)


def test_hard_transition_concentrates_far_from_origin():
    pmf = hard_transition_pmf(SoftEstimateMoments(mean=10.0 + 10.0j, variance=1.0))
    assert pmf[0] > 1.0 - 1e-10


def test_hard_transition_zero_variance_point_mass():
    pmf = hard_transition_pmf(SoftEstimateMoments(mean=-0.3 + 0.2j, variance=0.0))
    np.testing.assert_array_equal(pmf, [0.0, 0.0, 0.0, 1.0])
    pmf = hard_transition_pmf(SoftEstimateMoments(mean=0.0, variance=0.0))
    np.testing.assert_array_equal(pmf, [1.0, 0.0, 0.0, 0.0])


def _gaussian_quadrant_mass(mean, variance, sign_re, sign_im):
    sigma_sq = variance / 2.0

    def density(im, re):
        return math.exp(
            -((re - mean.real) ** 2 + (im - mean.imag) ** 2) / (2.0 * sigma_sq)
        ) / (2.0 * math.pi * sigma_sq)

    re_lo, re_hi = (0.0, np.inf) if sign_re > 0 else (-np.inf, 0.0)
    im_lo, im_hi = (0.0, np.inf) if sign_im > 0 else (-np.inf, 0.0)
    mass, _ = scipy.integrate.dblquad(
        density, re_lo, re_hi, im_lo, im_hi, epsabs=1e-10, epsrel=1e-10
    )
    return mass


def test_hard_transition_matches_quadrature():
    rng = np.random.default_rng(23)
    for _ in range(5):
        mean = complex(rng.normal(), rng.normal())
        variance = float(rng.uniform(0.2, 3.0))
        pmf = hard_transition_pmf(SoftEstimateMoments(mean=mean, variance=variance))
        expected = [
            _gaussian_quadrant_mass(mean, variance, sr, si)
            for sr, si in QUADRANT_SIGNS
        ]
        np.testing.assert_allclose(pmf, expected, atol=1e-6)


def test_transition_matrix_rows_are_cyclic_shifts():
    rng = np.random.default_rng(24)
    config = SystemConfig(num_antennas=8, num_users=3, transmit_power=2.0)
    h = _random_channel(rng, 8, 3)
    for user in range(3):
        t = transition_matrix(h, user, config)
        assert t.shape == (4, 4)
        for row in t:
            assert row.min() >= 0.0
            assert abs(row.sum() - 1.0) < 1e-12
        for a in range(4):
            np.testing.assert_allclose(t[a], np.roll(t[0], a), rtol=1e-12)


def test_mi_hard_identity_is_two_bits():
    assert mi_hard(np.eye(4)) == 2.0
    permutation = np.roll(np.eye(4), 2, axis=1)
    assert mi_hard(permutation) == 2.0


def test_mi_hard_constant_rows_is_zero():
    assert mi_hard(np.full((4, 4), 0.25)) == 0.0
    row = np.array([0.7, 0.1, 0.1, 0.1])
    assert mi_hard(np.tile(row, (4, 1))) == pytest.approx(0.0, abs=1e-12)


def test_mi_hard_circulant_frozen_value():
    rows = np.stack([np.roll([0.7, 0.1, 0.1, 0.1], a) for a in range(4)], axis=0)
    assert mi_hard(rows) == pytest.approx(MI_CIRCULANT_07, rel=1e-12)


def test_mi_hard_product_row_frozen_value():
    # Transition row produced by independent per-axis flips at q = 0.7.
    row = np.array([0.49, 0.21, 0.09, 0.21])
    rows = np.stack([np.roll(row, a) for a in range(4)], axis=0)
    assert mi_hard(rows) == pytest.approx(MI_PRODUCT_ROW_07, rel=1e-12)


def test_mi_hard_near_permutation_stays_below_two():
    leaky = np.full((4, 4), 0.001)
    np.fill_diagonal(leaky, 0.997)
    assert mi_hard(leaky) < 2.0 - 1e-4


def test_mi_hard_rejects_invalid_input():
    with pytest.raises(ValueError):
        mi_hard(np.full((3, 4), 0.25))
    bad = np.full((4, 4), 0.25)
    bad[0] = [0.5, 0.5, 0.25, -0.25]
    with pytest.raises(InvalidPmfError):
        mi_hard(bad)
    not_normalized = np.full((4, 4), 0.3)
    with pytest.raises(InvalidPmfError):
        mi_hard(not_normalized)


def test_ser_analytic_reference_points():
    assert ser_analytic(np.eye(4)) == 0.0
    assert ser_analytic(np.full((4, 4), 0.25)) == pytest.approx(0.75, abs=1e-15)
    rows = np.stack([np.roll([0.7, 0.1, 0.1, 0.1], a) for a in range(4)], axis=0)
    assert ser_analytic(rows) == pytest.approx(0.3, rel=1e-12)


def test_mi_soft_identical_conditionals_is_zero():
    moments = [SoftEstimateMoments(mean=0.3 + 0.1j, variance=0.7)] * 4
    assert mi_soft_discretized(moments) == pytest.approx(0.0, abs=1e-12)


def test_mi_soft_resolves_separated_point_like_conditionals():
    moments = [
        SoftEstimateMoments(mean=complex(s), variance=1e-8) for s in QPSK_ALPHABET
    ]
    assert mi_soft_discretized(moments) == pytest.approx(2.0, abs=1e-6)


def test_mi_soft_never_below_hard():
    # The demodulation quadrants are unions of grid cells on a zero-aligned
    # grid, so discretized soft information can never fall below hard.
    rng = np.random.default_rng(25)
    for _ in range(100):
        moments = [
            SoftEstimateMoments(
                mean=complex(rng.normal(), rng.normal()),
                variance=float(rng.uniform(0.05, 2.0)),
            )
            for _ in range(4)
        ]
        soft = mi_soft_discretized(moments, bins=64)
        hard = mi_hard(np.stack([hard_transition_pmf(m) for m in moments], axis=0))
        assert soft >= hard - 1e-9
        assert 0.0 <= soft <= 2.0


def test_mi_soft_grid_coverage_enforced():
    moments = [SoftEstimateMoments(mean=10.0 + 0.0j, variance=1.0)] * 4
    grid = DiscretizationGrid(bins=8, lo=-1.0, hi=1.0)
    with pytest.raises(GridCoverageError):
        mi_soft_discretized(moments, grid=grid)
    with pytest.raises(GridCoverageError):
        soft_bin_pmfs(moments, grid)


def test_mi_soft_requires_four_conditionals():
    moments = [SoftEstimateMoments(mean=0.0, variance=1.0)] * 3
    with pytest.raises(ValueError):
        mi_soft_discretized(moments)


def test_grid_for_moments_properties():
    rng = np.random.default_rng(26)
    moments = [
        SoftEstimateMoments(
            mean=complex(rng.normal(), rng.normal()),
            variance=float(rng.uniform(0.1, 3.0)),
        )
        for _ in range(4)
    ]
    grid = DiscretizationGrid.for_moments(moments, bins=9)
    assert grid.bins == 10
    assert grid.lo == -grid.hi
    assert grid.zero_aligned
    soft_bin_pmfs(moments, grid)  # coverage holds by construction

    degenerate = DiscretizationGrid.for_moments(
        [SoftEstimateMoments(mean=0.0, variance=0.0)] * 4
    )
    assert degenerate.hi == 1.0


def test_grid_validation():
    with pytest.raises(ValueError):
        DiscretizationGrid(bins=4, lo=-1.0, hi=1.0)
    with pytest.raises(ValueError):
        DiscretizationGrid(bins=8, lo=1.0, hi=1.0)
    shifted = DiscretizationGrid(bins=8, lo=0.5, hi=1.5)
    assert not shifted.zero_aligned


def test_bin_pmfs_sum_to_one_with_tail_folding():
    moments = [
        SoftEstimateMoments(mean=complex(s) * 3.0, variance=0.4)
        for s in QPSK_ALPHABET
    ]
    grid = DiscretizationGrid.for_moments(moments, bins=16)
    pmfs = soft_bin_pmfs(moments, grid)
    assert pmfs.shape == (4, 16 * 16)
    np.testing.assert_allclose(pmfs.sum(axis=1), 1.0, atol=1e-12)
    assert pmfs.min() >= 0.0


def test_mi_hard_monotone_in_snr_at_k1():
    rng = np.random.default_rng(27)
    h = _random_channel(rng, 4, 1)
    values = []
    for snr_db in np.arange(-30.0, 10.5, 2.5):
        config = SystemConfig.from_snr_db(4, 1, snr_db)
        values.append(mi_hard(transition_matrix(h, 0, config)))
    diffs = np.diff(values)
    assert np.all(diffs >= -1e-9)


def test_gaussian_model_marginals_match_simulation():
    # Reduced-scale version of the headline distribution match: empirical
    # per-axis histograms of the soft estimate against the Gaussian model.
    rng = np.random.default_rng(28)
    m, k = 64, 8
    config = SystemConfig.from_snr_db(m, k, -10.0)
    h = _random_channel(rng, m, k)
    symbol = QPSK_ALPHABET[0]
    moments = soft_moments(h, 0, symbol, config)

    draws = 30_000
    weights = np.conjugate(h[:, 0]) / float(np.sum(np.abs(h[:, 0]) ** 2))
    others = QPSK_ALPHABET[rng.integers(0, 4, size=(k - 1, draws))]
    sent = np.concatenate(
        [np.full((1, draws), symbol), others], axis=0
    )
    noise = (
        rng.standard_normal((m, draws)) + 1j * rng.standard_normal((m, draws))
    ) * np.sqrt(config.noise_variance / 2.0)
    received = np.sqrt(config.transmit_power) * (h @ sent) + noise
    quantized = np.where(received.real >= 0, 1.0, -1.0) + 1j * np.where(
        received.imag >= 0, 1.0, -1.0
    )
    soft = weights @ quantized

    sigma_axis = np.sqrt(moments.variance / 2.0)
    for axis_samples, axis_mean in (
        (soft.real, moments.mean.real),
        (soft.imag, moments.mean.imag),
    ):
        edges = np.linspace(axis_mean - 5 * sigma_axis, axis_mean + 5 * sigma_axis, 41)
        counts, _ = np.histogram(np.clip(axis_samples, edges[0], edges[-1]), edges)
        empirical = counts / draws
        cdf = scipy.special.ndtr((edges - axis_mean) / sigma_axis)
        model = np.diff(cdf)
        model[0] += cdf[0]
        model[-1] += 1.0 - cdf[-1]
        tv = 0.5 * np.sum(np.abs(empirical - model))
        assert tv < 0.08


def test_analytic_user_metrics_consistency():
    rng = np.random.default_rng(29)
    config = SystemConfig(num_antennas=10, num_users=4, transmit_power=1.5)
    h = _random_channel(rng, 10, 4)
    metrics = analytic_user_metrics(h, 2, config, soft_bins=32)
    t = transition_matrix(h, 2, config)
    assert metrics["mi_hard"] == pytest.approx(mi_hard(t), rel=1e-12)
    assert metrics["ser"] == pytest.approx(ser_analytic(t), rel=1e-12)
    assert metrics["mi_soft"] >= metrics["mi_hard"] - 1e-9
    assert "mi_soft" not in analytic_user_metrics(h, 2, config)


def test_moments_for_all_symbols_rotates_means():
    rng = np.random.default_rng(30)
    config = SystemConfig(num_antennas=5, num_users=2, transmit_power=1.0)
    h = _random_channel(rng, 5, 2)
    moments = moments_for_all_symbols(h, 0, config)
    assert len(moments) == 4
    for rot, m in zip(SYMBOL_ROTATIONS, moments):
        assert m.mean == pytest.approx(moments[0].mean * rot, rel=1e-12)
        assert m.variance == moments[0].variance


def test_batch_metrics_match_scalar_route():
    rng = np.random.default_rng(31)
    config = SystemConfig(num_antennas=7, num_users=3, transmit_power=2.0)
    channels = np.stack([_random_channel(rng, 7, 3) for _ in range(5)], axis=0)
    batch = batch_user_metrics(channels, 1, config, soft_bins=16)
    for c in range(5):
        single = analytic_user_metrics(channels[c], 1, config, soft_bins=16)
        assert batch["mi_hard"][c] == pytest.approx(single["mi_hard"], rel=1e-12)
        assert batch["ser"][c] == pytest.approx(single["ser"], rel=1e-12)
        assert batch["mi_soft"][c] == pytest.approx(single["mi_soft"], rel=1e-12)


def test_batch_soft_moments_validation():
    config = SystemConfig(num_antennas=2, num_users=2)
    with pytest.raises(ValueError):
        batch_soft_moments(np.zeros((3, 2)), 0, config)
    channels = np.zeros((2, 2, 2), dtype=complex)
    channels[:, :, 1] = 1.0
    with pytest.raises(DegenerateChannelError):
        batch_soft_moments(channels, 0, config)


def test_quantizer_alphabet_order_pins_pmf_layout():
    expected = np.array([1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j])
    np.testing.assert_array_equal(QUANTIZER_ALPHABET, expected)
