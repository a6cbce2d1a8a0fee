import numpy as np
import pytest
import scipy.special

from onebit_mimo.analytic import mi_hard, ser_analytic, transition_matrix
from onebit_mimo.detectors import ChannelEstimate, mrc_filter
from onebit_mimo.exceptions import (
    InsufficientPilotsError,
    SizeCapError,
    UnsupportedCombinationError,
)
from onebit_mimo.model import (
    QPSK_ALPHABET,
    QUANTIZER_ALPHABET,
    QuantizerMode,
    SystemConfig,
    quadrant_index,
)
from onebit_mimo.simulate import (
    ExperimentSpec,
    HistogramSpec,
    MetricEstimate,
    MetricPoint,
    SweepCell,
    exact_enumeration_oracle,
    plugin_mi_bits,
    run_cell,
    run_mi_hard_analytic,
    run_mi_hard_mc,
    run_mi_soft_analytic,
    run_mi_soft_mc,
    run_ser_analytic,
    run_ser_mc,
    run_soft_histogram,
    run_sweep,
)


def _random_channel(seed, m, k):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((m, k)) + 1j * rng.standard_normal((m, k))) / np.sqrt(2)


def _mrc(channel):
    return mrc_filter(ChannelEstimate.full_csi(channel))


def _spec(**kwargs):
    kwargs.setdefault("num_antennas", 4)
    kwargs.setdefault("num_users", 2)
    kwargs.setdefault("snr_db_grid", (0.0,))
    return ExperimentSpec(**kwargs)


def test_oracle_matches_hand_formula_at_m1_k1():
    h = np.array([[0.8 - 0.4j]])
    config = SystemConfig.from_snr_db(1, 1, 3.0)
    filt = _mrc(h)
    result = exact_enumeration_oracle(h, config, filt, user=0)

    w = filt.matrix[0, 0]
    sigma = np.sqrt(config.noise_variance)
    expected = np.zeros((4, 4))
    for a, x in enumerate(QPSK_ALPHABET):
        mean = np.sqrt(config.transmit_power) * h[0, 0] * x
        p_re = 0.5 * scipy.special.erfc(-mean.real / sigma)
        p_im = 0.5 * scipy.special.erfc(-mean.imag / sigma)
        for y in QUANTIZER_ALPHABET:
            prob = (p_re if y.real > 0 else 1.0 - p_re) * (
                p_im if y.imag > 0 else 1.0 - p_im
            )
            decision = int(quadrant_index(np.conjugate(w) * y))
            expected[a, decision] += prob

    np.testing.assert_allclose(result.transitions, expected, rtol=1e-12)
    assert result.mi_hard == pytest.approx(mi_hard(expected), rel=1e-12)
    assert result.ser == pytest.approx(ser_analytic(expected), rel=1e-12)


def test_oracle_rows_are_pmfs():
    h = _random_channel(1, 3, 2)
    config = SystemConfig.from_snr_db(3, 2, 0.0)
    result = exact_enumeration_oracle(h, config, _mrc(h), user=1)
    np.testing.assert_allclose(result.transitions.sum(axis=1), 1.0, atol=1e-12)
    assert result.transitions.min() >= 0.0


def test_oracle_uniform_at_very_low_snr():
    h = _random_channel(2, 2, 2)
    config = SystemConfig.from_snr_db(2, 2, -140.0)
    result = exact_enumeration_oracle(h, config, _mrc(h), user=0)
    np.testing.assert_allclose(result.transitions, 0.25, atol=1e-6)
    assert result.mi_hard <= 1e-5
    assert result.ser == pytest.approx(0.75, abs=1e-5)


def test_oracle_enforces_state_cap():
    h = _random_channel(3, 7, 7)
    config = SystemConfig.from_snr_db(7, 7, 0.0)
    with pytest.raises(SizeCapError):
        exact_enumeration_oracle(h, config, _mrc(h), user=0)


def test_oracle_zero_filter_pins_decision():
    # An all-zero filter collapses every soft output onto the boundary,
    # which demodulates to the first symbol: SER is exactly 3/4.
    h = _random_channel(4, 2, 1)
    config = SystemConfig.from_snr_db(2, 1, 5.0)
    result = exact_enumeration_oracle(h, config, np.zeros((2, 1)), user=0)
    np.testing.assert_allclose(result.transitions[:, 0], 1.0, atol=1e-12)
    assert result.ser == pytest.approx(0.75, abs=1e-12)
    assert result.mi_hard == pytest.approx(0.0, abs=1e-12)


def test_fixed_channel_mc_agrees_with_oracle():
    h = _random_channel(5, 2, 1)
    config = SystemConfig.from_snr_db(2, 1, 0.0)
    oracle = exact_enumeration_oracle(h, config, _mrc(h), user=0)

    spec = _spec(
        num_antennas=2,
        num_users=1,
        channel_trials=1,
        inner_trials=100_000,
        fixed_channel=h,
        master_seed=5,
    )
    ser = run_ser_mc(spec)
    assert abs(ser.value - oracle.ser) < 3.0 * ser.std_error + 1e-4
    mi = run_mi_hard_mc(spec)
    assert abs(mi.value - oracle.mi_hard) < 0.02


def test_ser_mc_calibration_over_seeds():
    h = _random_channel(6, 2, 1)
    config = SystemConfig.from_snr_db(2, 1, 0.0)
    truth = exact_enumeration_oracle(h, config, _mrc(h), user=0).ser

    hits = 0
    errors = []
    for seed in range(60):
        spec = _spec(
            num_antennas=2,
            num_users=1,
            channel_trials=1,
            inner_trials=2000,
            fixed_channel=h,
            master_seed=seed,
        )
        point = run_ser_mc(spec).points[0]
        errors.append(point.std_error)
        if abs(point.value - truth) <= 3.0 * point.std_error:
            hits += 1
    assert hits >= 57
    binomial = np.sqrt(truth * (1.0 - truth) / 2000)
    assert 0.8 < np.mean(errors) / binomial < 1.2


def test_ser_batched_and_per_trial_paths_agree():
    batched = run_ser_mc(
        _spec(num_antennas=8, channel_trials=20_000, inner_trials=1, master_seed=7)
    )
    per_trial = run_ser_mc(
        _spec(num_antennas=8, channel_trials=200, inner_trials=100, master_seed=8)
    )
    gap = abs(batched.value - per_trial.value)
    assert gap < 3.0 * (batched.std_error + per_trial.std_error) + 1e-3


def test_estimated_csi_batched_paths_agree_with_per_trial():
    # pilot counts well above the minimum keep the 1-bit Gram matrices
    # comfortably invertible across thousands of draws
    for kind, pilots in (("zf", 16), ("direct_ls", 64)):
        batched = run_ser_mc(
            _spec(
                num_antennas=8,
                filter_kind=kind,
                csi_mode="estimated",
                pilot_len=pilots,
                channel_trials=4000,
                inner_trials=1,
                master_seed=9,
            )
        )
        per_trial = run_ser_mc(
            _spec(
                num_antennas=8,
                filter_kind=kind,
                csi_mode="estimated",
                pilot_len=pilots,
                channel_trials=100,
                inner_trials=40,
                master_seed=10,
            )
        )
        assert 0.0 < batched.value < 0.75
        gap = abs(batched.value - per_trial.value)
        assert gap < 3.0 * (batched.std_error + per_trial.std_error) + 0.02


def test_mi_hard_mc_increases_with_snr():
    estimate = run_mi_hard_mc(
        _spec(
            num_antennas=16,
            snr_db_grid=(-20.0, 0.0),
            channel_trials=8,
            inner_trials=2000,
            master_seed=11,
        )
    )
    low, high = estimate.points
    assert high.value - low.value > 0.3


def test_mi_soft_mc_at_least_hard_mc():
    spec = _spec(
        num_antennas=16,
        snr_db_grid=(-5.0,),
        channel_trials=4,
        inner_trials=4000,
        soft_bins=16,
        master_seed=12,
    )
    soft = run_mi_soft_mc(spec)
    hard = run_mi_hard_mc(spec)
    assert soft.value >= hard.value - 0.02
    assert 0.0 <= soft.value <= 2.0


def test_mi_runner_validation():
    with pytest.raises(ValueError):
        run_mi_hard_mc(_spec(inner_trials=8))
    with pytest.raises(ValueError):
        run_mi_soft_mc(_spec(inner_trials=8))
    with pytest.raises(UnsupportedCombinationError):
        run_mi_soft_mc(_spec(filter_kind="zf"))
    with pytest.raises(UnsupportedCombinationError):
        run_mi_hard_analytic(
            _spec(csi_mode="estimated", pilot_len=4)
        )
    with pytest.raises(UnsupportedCombinationError):
        run_mi_soft_mc(_spec(quantizer="bypass"))


def test_spec_validation():
    with pytest.raises(UnsupportedCombinationError):
        _spec(filter_kind="direct_ls")
    with pytest.raises(InsufficientPilotsError):
        _spec(filter_kind="direct_ls", csi_mode="estimated", pilot_len=3)
    with pytest.raises(InsufficientPilotsError):
        _spec(csi_mode="estimated", pilot_len=1)
    with pytest.raises(ValueError):
        _spec(pilot_len=8)
    with pytest.raises(ValueError):
        _spec(filter_kind="lmmse")
    with pytest.raises(ValueError):
        _spec(csi_mode="genie")
    with pytest.raises(ValueError):
        _spec(fixed_channel=np.zeros((3, 3)))
    spec = _spec(quantizer="bypass")
    assert spec.quantizer is QuantizerMode.BYPASS


def test_metric_point_validation():
    with pytest.raises(ValueError):
        MetricPoint(snr_db=0.0, value=float("nan"), std_error=0.0, trials=1)
    with pytest.raises(ValueError):
        MetricPoint(snr_db=0.0, value=0.5, std_error=-0.1, trials=1)
    two = MetricEstimate(
        metric="ser_mc",
        points=(
            MetricPoint(snr_db=0.0, value=0.5, std_error=0.0, trials=1),
            MetricPoint(snr_db=5.0, value=0.4, std_error=0.0, trials=1),
        ),
    )
    with pytest.raises(ValueError):
        two.value
    assert two.per_snr[5.0].value == 0.4


def test_plugin_mi_reference_points():
    assert plugin_mi_bits(np.eye(4) * 25) == 2.0
    assert plugin_mi_bits(np.full((4, 4), 25)) == 0.0
    with pytest.raises(ValueError):
        plugin_mi_bits(np.zeros((4, 4)))


def test_run_cell_maps_failures_to_error_rows():
    cell = SweepCell(
        spec=_spec(filter_kind="zf", channel_trials=2, inner_trials=64),
        metrics=("mi_soft_mc", "ser_mc"),
    )
    rows = run_cell(cell)
    assert rows[0].metric == "mi_soft_mc"
    assert rows[0].value is None and rows[0].error != ""
    assert rows[1].metric == "ser_mc"
    assert rows[1].error == "" and 0.0 <= rows[1].value <= 1.0


def test_sweep_cell_validates_metrics():
    with pytest.raises(ValueError):
        SweepCell(spec=_spec(), metrics=("ser",))
    with pytest.raises(ValueError):
        SweepCell(spec=_spec(), metrics=())


def test_run_sweep_parallel_matches_serial():
    cells = [
        SweepCell(
            spec=_spec(snr_db_grid=(-10.0, 0.0), channel_trials=3,
                       inner_trials=64, master_seed=13),
            metrics=("mi_hard_mc",),
        ),
        SweepCell(
            spec=_spec(channel_trials=500, inner_trials=1, master_seed=13),
            metrics=("ser_mc",),
        ),
    ]
    serial = run_sweep(cells, workers=1)
    parallel = run_sweep(cells, workers=2)
    assert serial == parallel
    assert len(serial) == 3


def test_run_sweep_continues_after_cell_error():
    cells = [
        SweepCell(
            spec=_spec(filter_kind="zf", channel_trials=2, inner_trials=64),
            metrics=("mi_soft_analytic",),
        ),
        SweepCell(
            spec=_spec(channel_trials=200, inner_trials=1),
            metrics=("ser_mc",),
        ),
    ]
    rows = run_sweep(cells)
    assert rows[0].error != ""
    assert rows[1].error == ""


def test_mc_runs_are_deterministic():
    spec = _spec(channel_trials=3, inner_trials=64, master_seed=14)
    first = run_mi_hard_mc(spec)
    second = run_mi_hard_mc(spec)
    assert first == second
    prefixed = run_mi_hard_mc(spec, key_prefix=(1,))
    assert prefixed.value != first.value


def test_mi_hard_analytic_matches_scalar_reference():
    h = _random_channel(15, 6, 2)
    spec = _spec(
        num_antennas=6,
        snr_db_grid=(-5.0,),
        channel_trials=1,
        fixed_channel=h,
    )
    estimate = run_mi_hard_analytic(spec)
    config = spec.config_at(-5.0)
    expected = np.mean(
        [mi_hard(transition_matrix(h, u, config)) for u in range(2)]
    )
    assert estimate.value == pytest.approx(expected, rel=1e-12)
    assert estimate.std_error == 0.0


def test_soft_analytic_at_least_hard_analytic():
    spec = _spec(
        num_antennas=12,
        snr_db_grid=(-10.0, 0.0),
        channel_trials=5,
        soft_bins=32,
        master_seed=16,
    )
    hard = run_mi_hard_analytic(spec)
    soft = run_mi_soft_analytic(spec)
    for snr_db in spec.snr_db_grid:
        assert soft.per_snr[snr_db].value >= hard.per_snr[snr_db].value - 1e-9


def test_ser_analytic_agrees_with_mc_at_moderate_scale():
    analytic = run_ser_analytic(
        _spec(num_antennas=32, num_users=4, snr_db_grid=(-10.0,),
              channel_trials=2000, master_seed=17)
    )
    mc = run_ser_mc(
        _spec(num_antennas=32, num_users=4, snr_db_grid=(-10.0,),
              channel_trials=20_000, inner_trials=1, master_seed=18)
    )
    gap = abs(analytic.value - mc.value)
    assert gap < 3.0 * (analytic.std_error + mc.std_error) + 0.015


def test_histogram_matches_gaussian_model():
    h = _random_channel(19, 32, 4)
    spec = _spec(
        num_antennas=32,
        num_users=4,
        snr_db_grid=(-10.0,),
        inner_trials=20_000,
        master_seed=19,
    )
    for axis in ("re", "im"):
        result = run_soft_histogram(spec, HistogramSpec(channel=h, axis=axis))
        assert result.empirical_probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert result.analytic_probs.sum() == pytest.approx(1.0, abs=1e-12)
        assert result.tv_distance < 0.05
        np.testing.assert_allclose(
            result.empirical_density * result.bin_width,
            result.empirical_probs,
            rtol=1e-12,
        )
        assert len(result.bin_centers) == 50


def test_histogram_folds_tails_into_end_bins():
    h = _random_channel(20, 16, 2)
    spec = _spec(
        num_antennas=16,
        snr_db_grid=(-10.0,),
        inner_trials=5000,
        master_seed=20,
    )
    hist = HistogramSpec(channel=h, bins=10, value_range=(-0.05, 0.05))
    result = run_soft_histogram(spec, hist)
    assert result.empirical_probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert result.analytic_probs.sum() == pytest.approx(1.0, abs=1e-12)
    # the narrow window forces visible tail mass into the outermost bins
    assert result.analytic_probs[0] > result.analytic_probs[1]
    assert result.analytic_probs[-1] > result.analytic_probs[-2]


def test_histogram_requirements():
    h = _random_channel(21, 4, 2)
    with pytest.raises(ValueError):
        run_soft_histogram(
            _spec(snr_db_grid=(-10.0, 0.0)), HistogramSpec(channel=h)
        )
    with pytest.raises(UnsupportedCombinationError):
        run_soft_histogram(
            _spec(filter_kind="zf"), HistogramSpec(channel=h)
        )
    with pytest.raises(ValueError):
        HistogramSpec(channel=h, axis="abs")
    with pytest.raises(ValueError):
        HistogramSpec(channel=h, bins=5)
    with pytest.raises(ValueError):
        HistogramSpec(channel=h, value_range=(1.0, -1.0))
    with pytest.raises(ValueError):
        HistogramSpec(channel=h, symbol=0.5 + 0.5j)


def test_histogram_is_deterministic():
    h = _random_channel(22, 8, 2)
    spec = _spec(num_antennas=8, snr_db_grid=(-5.0,), inner_trials=2000,
                 master_seed=22)
    first = run_soft_histogram(spec, HistogramSpec(channel=h))
    second = run_soft_histogram(spec, HistogramSpec(channel=h))
    np.testing.assert_array_equal(first.empirical_probs, second.empirical_probs)


def test_histogram_moments_match_gaussian_model():
    from onebit_mimo.analytic import soft_moments

    h = _random_channel(23, 32, 4)
    spec = _spec(
        num_antennas=32,
        num_users=4,
        snr_db_grid=(-10.0,),
        inner_trials=100_000,
        master_seed=23,
    )
    config = spec.config_at(-10.0)
    moments = soft_moments(h, 0, complex(QPSK_ALPHABET[0]), config)
    axis_var = moments.variance / 2.0
    for axis, model_mean in (("re", moments.mean.real), ("im", moments.mean.imag)):
        result = run_soft_histogram(spec, HistogramSpec(channel=h, axis=axis))
        centers = result.bin_centers
        emp_mean = float(np.sum(result.empirical_probs * centers))
        emp_var = float(np.sum(result.empirical_probs * (centers - emp_mean) ** 2))
        # binned moments: allow half a bin width on top of the CLT band
        mean_tol = 3.0 * np.sqrt(axis_var / spec.inner_trials) + result.bin_width / 2
        assert abs(emp_mean - model_mean) < mean_tol
        assert abs(emp_var - axis_var) < 0.1 * axis_var


def test_bypass_zf_high_snr_reference_points():
    spec = _spec(
        num_antennas=40,
        num_users=4,
        snr_db_grid=(60.0,),
        filter_kind="zf",
        quantizer="bypass",
        channel_trials=10_000,
        inner_trials=1,
        master_seed=24,
    )
    assert run_ser_mc(spec).value <= 1e-4
    # the plug-in estimate uses the empirical input marginal, so even an
    # error-free channel needs enough draws for that marginal to flatten
    mi = run_mi_hard_mc(
        _spec(
            num_antennas=8,
            snr_db_grid=(60.0,),
            filter_kind="zf",
            quantizer="bypass",
            channel_trials=2,
            inner_trials=20_000,
            master_seed=24,
        )
    )
    assert mi.value == pytest.approx(2.0, abs=1e-3)


def test_zero_filter_baseline_ser():
    from onebit_mimo.detectors import ReceiveFilter, demodulate, soft_detect

    rng = np.random.default_rng(25)
    h = _random_channel(25, 4, 2)
    config = SystemConfig.from_snr_db(4, 2, 0.0)
    filt = ReceiveFilter(matrix=np.zeros((4, 2), dtype=complex), kind="mrc")
    draws = 10_000
    tx = rng.integers(0, 4, size=(2, draws))
    symbols = QPSK_ALPHABET[tx]
    noise = (
        rng.standard_normal((4, draws)) + 1j * rng.standard_normal((4, draws))
    ) * np.sqrt(0.5)
    observed = np.where((h @ symbols + noise).real >= 0, 1.0, -1.0).astype(complex)
    estimates = demodulate(soft_detect(filt, observed))
    ser = float(np.mean(estimates != symbols))
    assert abs(ser - 0.75) < 3.0 * np.sqrt(0.75 * 0.25 / draws)


def test_plugin_mi_converges_to_oracle():
    h = _random_channel(26, 4, 2)
    config = SystemConfig.from_snr_db(4, 2, 0.0)
    oracle = np.mean(
        [
            exact_enumeration_oracle(h, config, _mrc(h), user=u).mi_hard
            for u in range(2)
        ]
    )
    gaps = []
    for inner in (1000, 100_000):
        spec = _spec(
            channel_trials=1,
            inner_trials=inner,
            fixed_channel=h,
            master_seed=26,
        )
        gaps.append(abs(run_mi_hard_mc(spec).value - oracle))
    assert gaps[-1] <= 0.02
    assert gaps[-1] <= gaps[0] + 0.005


def test_bypass_mi_at_least_quantized():
    base = dict(
        num_antennas=16,
        snr_db_grid=(-10.0, -5.0),
        filter_kind="zf",
        channel_trials=6,
        inner_trials=2000,
        master_seed=27,
    )
    quantized = run_mi_hard_mc(_spec(**base))
    bypass = run_mi_hard_mc(_spec(**base, quantizer="bypass"))
    for snr_db in base["snr_db_grid"]:
        q = quantized.per_snr[snr_db]
        b = bypass.per_snr[snr_db]
        assert b.value >= q.value - 2.0 * (q.std_error + b.std_error)


def test_empty_snr_grid_yields_empty_rows():
    cell = SweepCell(
        spec=_spec(snr_db_grid=(), channel_trials=2, inner_trials=64),
        metrics=("mi_hard_mc", "ser_mc"),
    )
    assert run_cell(cell) == []
