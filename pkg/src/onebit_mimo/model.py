"""Uplink system model: QPSK sources, i.i.d. Rayleigh channel, 1-bit ADCs.

Array conventions: the channel has shape ``(num_antennas, num_users)``,
symbol blocks have shape ``(num_users, num_draws)``, and received blocks
have shape ``(num_antennas, num_draws)``. All complex arrays are
complex128.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .streams import sample_complex_gaussian
from .validation import check_complex_matrix, check_count, check_positive

# Unit-energy QPSK constellation. The quadrant order (+ +), (+ -), (- -),
# (- +) is shared with QUANTIZER_ALPHABET so index arithmetic lines up.
QPSK_ALPHABET = np.array([1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j]) / np.sqrt(2.0)

# Output alphabet of the 1-bit quantizer, same quadrant order.
QUANTIZER_ALPHABET = np.array([1 + 1j, 1 - 1j, -1 - 1j, -1 + 1j])


class QuantizerMode(enum.Enum):
    """Front-end mode: 1-bit quantization per axis, or a transparent bypass."""

    ONE_BIT = "one_bit"
    BYPASS = "bypass"


@dataclass(frozen=True)
class SystemConfig:
    """Static parameters of one uplink operating point.

    Parameters
    ----------
    num_antennas : int
        Receive antennas, M >= 1.
    num_users : int
        Single-antenna transmitters, K >= 1. K <= M is not required here;
        filters that need tall channels enforce it themselves.
    transmit_power : float
        Per-user transmit power, > 0.
    noise_variance : float
        Total variance of the complex receiver noise per antenna, > 0.
    """

    num_antennas: int
    num_users: int
    transmit_power: float = 1.0
    noise_variance: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "num_antennas", check_count(self.num_antennas, "num_antennas")
        )
        object.__setattr__(self, "num_users", check_count(self.num_users, "num_users"))
        object.__setattr__(
            self, "transmit_power", check_positive(self.transmit_power, "transmit_power")
        )
        object.__setattr__(
            self, "noise_variance", check_positive(self.noise_variance, "noise_variance")
        )

    @property
    def snr_db(self):
        """Per-user SNR in dB, ``10 log10(transmit_power / noise_variance)``."""
        return 10.0 * np.log10(self.transmit_power / self.noise_variance)

    @classmethod
    def from_snr_db(cls, num_antennas, num_users, snr_db, noise_variance=1.0):
        """Build a config at a given SNR by fixing noise and scaling power."""
        power = noise_variance * 10.0 ** (float(snr_db) / 10.0)
        return cls(num_antennas, num_users, power, noise_variance)


def sample_channel(config, stream):
    """Draw one i.i.d. CN(0, 1) channel matrix of shape (M, K)."""
    return sample_complex_gaussian(
        stream, (config.num_antennas, config.num_users), variance=1.0
    )


def sample_symbols(config, stream, num_draws=None):
    """Draw uniform QPSK symbols.

    Returns shape ``(K,)`` when ``num_draws`` is None, else ``(K, num_draws)``.
    """
    if num_draws is None:
        shape = (config.num_users,)
    else:
        shape = (config.num_users, check_count(num_draws, "num_draws"))
    indices = stream.generator.integers(0, 4, size=shape)
    return QPSK_ALPHABET[indices]


def propagate(channel, symbols, config, stream=None):
    """Pass symbols through the channel: ``sqrt(Pt) H x`` plus optional noise.

    Parameters
    ----------
    channel : array_like
        Shape ``(M, K)``.
    symbols : array_like
        Shape ``(K,)`` or ``(K, T)``.
    config : SystemConfig
        Supplies the transmit power and noise variance.
    stream : RandomStream, optional
        When given, adds CN(0, noise_variance) receiver noise. When None
        the propagation is noiseless, which is the zero-noise limit used
        by some tests.

    Returns
    -------
    numpy.ndarray
        Unquantized receive block with the same trailing shape as
        ``symbols``.
    """
    h = check_complex_matrix(
        channel, "channel", rows=config.num_antennas, cols=config.num_users
    )
    x = np.asarray(symbols, dtype=np.complex128)
    if x.ndim not in (1, 2) or x.shape[0] != config.num_users:
        raise ValueError(
            f"symbols must have leading dimension {config.num_users}, got shape {x.shape}"
        )
    received = np.sqrt(config.transmit_power) * (h @ x)
    if stream is not None:
        received = received + sample_complex_gaussian(
            stream, received.shape, variance=config.noise_variance
        )
    return received


def quantize(received, mode=QuantizerMode.ONE_BIT):
    """Apply the per-antenna front end to a receive block.

    In ``ONE_BIT`` mode each axis is mapped through sign() with the
    convention sign(0) = +1, so outputs lie in {+-1 +- 1j}. In ``BYPASS``
    mode the input is returned unchanged.
    """
    r = np.asarray(received, dtype=np.complex128)
    if mode is QuantizerMode.BYPASS:
        return r
    if mode is not QuantizerMode.ONE_BIT:
        raise ValueError(f"unknown quantizer mode: {mode!r}")
    re = np.where(r.real < 0.0, -1.0, 1.0)
    im = np.where(r.imag < 0.0, -1.0, 1.0)
    return re + 1j * im


def quadrant_index(values):
    """Map complex values to QPSK_ALPHABET indices by quadrant.

    Boundary points (zero real or imaginary part) round toward the
    positive half-axis, matching the quantizer's sign(0) = +1.
    """
    v = np.asarray(values)
    re_neg = v.real < 0.0
    im_neg = v.imag < 0.0
    return np.where(
        re_neg,
        np.where(im_neg, 2, 3),
        np.where(im_neg, 1, 0),
    )


def symbols_to_indices(symbols, atol=1e-9):
    """Map exact QPSK symbols to alphabet indices, validating membership."""
    s = np.asarray(symbols, dtype=np.complex128)
    indices = quadrant_index(s)
    if not np.allclose(QPSK_ALPHABET[indices], s, rtol=0.0, atol=atol):
        raise ValueError("symbols contain entries outside the QPSK alphabet")
    return indices
