"""Estimator-style wrappers around the channel estimators and detectors.

These follow the scikit-learn conventions: constructor arguments are stored
verbatim, all work happens in ``fit``, fitted state lives in trailing-
underscore attributes, and ``get_params``/``set_params``/``clone`` work as
usual. Arrays are samples-first: pilot observations are ``(n_slots,
num_antennas)``, pilot symbols ``(n_slots, num_users)``, payload
observations ``(n_draws, num_antennas)``.

The functional layer in ``detectors`` keeps time on the trailing axis;
these wrappers transpose at the boundary.
"""

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .detectors import (
    ChannelEstimate,
    MapGrid,
    PilotBlock,
    demodulate,
    ls_channel_estimate,
    ls_direct_filter,
    map_channel_estimate,
    mrc_filter,
    zf_filter,
)
from .model import SystemConfig
from .validation import check_complex_matrix


def _pilot_block(X, y):
    observations = check_complex_matrix(X, "X")
    symbols = check_complex_matrix(y, "y")
    if observations.shape[0] != symbols.shape[0]:
        raise ValueError(
            f"X and y must agree on the number of pilot slots, got "
            f"{observations.shape[0]} and {symbols.shape[0]}"
        )
    return PilotBlock(symbols=np.ascontiguousarray(symbols.T),
                      observations=np.ascontiguousarray(observations.T))


def _system_config(num_antennas, num_users, transmit_power, noise_variance):
    return SystemConfig(num_antennas=num_antennas, num_users=num_users,
                        transmit_power=transmit_power,
                        noise_variance=noise_variance)


class LSChannelEstimator(BaseEstimator):
    """Least-squares channel estimation from quantized (or raw) pilots.

    ``fit(X, y)`` takes pilot observations ``X`` of shape ``(n_slots,
    num_antennas)`` and the transmitted pilot symbols ``y`` of shape
    ``(n_slots, num_users)``; it needs ``n_slots >= num_users``.
    """

    def __init__(self, transmit_power=1.0, noise_variance=1.0,
                 diagonal_loading=False):
        self.transmit_power = transmit_power
        self.noise_variance = noise_variance
        self.diagonal_loading = diagonal_loading

    def fit(self, X, y):
        pilots = _pilot_block(X, y)
        config = _system_config(pilots.num_antennas, pilots.num_users,
                                self.transmit_power, self.noise_variance)
        estimate = ls_channel_estimate(pilots, config,
                                       diagonal_loading=self.diagonal_loading)
        self.channel_estimate_ = estimate.matrix
        self.n_features_in_ = pilots.num_antennas
        return self

    def fitted_estimate(self):
        check_is_fitted(self, "channel_estimate_")
        return ChannelEstimate(matrix=self.channel_estimate_,
                               provenance="least_squares")


class MAPChannelEstimator(BaseEstimator):
    """Per-antenna grid MAP channel estimation from 1-bit pilots.

    ``fit`` requires the observations to be exactly 1-bit quantized values.
    The search grid is a square lattice per complex coordinate; its size is
    capped, so this estimator only suits small user counts.
    """

    def __init__(self, transmit_power=1.0, noise_variance=1.0,
                 grid_extent=3.0, grid_points_per_axis=25):
        self.transmit_power = transmit_power
        self.noise_variance = noise_variance
        self.grid_extent = grid_extent
        self.grid_points_per_axis = grid_points_per_axis

    def fit(self, X, y):
        pilots = _pilot_block(X, y)
        config = _system_config(pilots.num_antennas, pilots.num_users,
                                self.transmit_power, self.noise_variance)
        grid = MapGrid.square(extent=self.grid_extent,
                              points_per_axis=self.grid_points_per_axis)
        estimate = map_channel_estimate(pilots, config, grid=grid)
        self.channel_estimate_ = estimate.matrix
        self.n_features_in_ = pilots.num_antennas
        return self

    def fitted_estimate(self):
        check_is_fitted(self, "channel_estimate_")
        return ChannelEstimate(matrix=self.channel_estimate_,
                               provenance="map")


class _LinearDetector(BaseEstimator):
    """Shared fit/predict logic for the linear detectors."""

    def _filter_from_estimate(self, estimate):
        raise NotImplementedError

    def fit(self, X=None, y=None):
        if self.channel is not None:
            channel = check_complex_matrix(self.channel, "channel")
            estimate = ChannelEstimate.full_csi(channel)
        else:
            if X is None or y is None:
                raise ValueError(
                    "fit needs pilot observations X and pilot symbols y "
                    "when no channel matrix is given")
            pilots = _pilot_block(X, y)
            config = _system_config(pilots.num_antennas, pilots.num_users,
                                    self.transmit_power, self.noise_variance)
            estimate = ls_channel_estimate(pilots, config)
        self.filter_ = self._filter_from_estimate(estimate).matrix
        self.n_features_in_ = self.filter_.shape[0]
        return self

    def decision_function(self, X):
        """Soft symbol estimates, shape ``(n_draws, num_users)``."""
        check_is_fitted(self, "filter_")
        observations = check_complex_matrix(X, "X",
                                            cols=self.filter_.shape[0])
        return observations @ np.conjugate(self.filter_)

    def predict(self, X):
        """Hard QPSK decisions, shape ``(n_draws, num_users)``."""
        return demodulate(self.decision_function(X))


class MRCDetector(_LinearDetector):
    """Maximal-ratio-combining detector.

    Pass ``channel`` for full CSI (then ``fit()`` takes no data), or fit
    pilots; pilot fitting uses the least-squares channel estimate.
    """

    def __init__(self, channel=None, transmit_power=1.0, noise_variance=1.0):
        self.channel = channel
        self.transmit_power = transmit_power
        self.noise_variance = noise_variance

    def _filter_from_estimate(self, estimate):
        return mrc_filter(estimate)


class ZFDetector(_LinearDetector):
    """Zero-forcing detector; same fitting contract as MRCDetector."""

    def __init__(self, channel=None, transmit_power=1.0, noise_variance=1.0):
        self.channel = channel
        self.transmit_power = transmit_power
        self.noise_variance = noise_variance

    def _filter_from_estimate(self, estimate):
        return zf_filter(estimate)


class DirectLSDetector(BaseEstimator):
    """Detector fit directly from pilots, skipping channel estimation.

    Needs ``n_slots >= num_antennas``, which makes it pilot-hungry at
    large antenna counts.
    """

    def __init__(self, transmit_power=1.0, noise_variance=1.0,
                 diagonal_loading=False):
        self.transmit_power = transmit_power
        self.noise_variance = noise_variance
        self.diagonal_loading = diagonal_loading

    def fit(self, X, y):
        pilots = _pilot_block(X, y)
        receive_filter = ls_direct_filter(
            pilots, diagonal_loading=self.diagonal_loading)
        self.filter_ = receive_filter.matrix
        self.n_features_in_ = pilots.num_antennas
        return self

    decision_function = _LinearDetector.decision_function
    predict = _LinearDetector.predict
