"""Pilot-based receive filters and symbol detection.

Covers the direct least-squares filter, least-squares and grid-search MAP
channel estimation, maximal ratio combining, zero forcing, and the final
soft-detect / demodulate pair. All filters are stored as the M x K matrix
``A`` and applied as ``A^H y``.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ComplexityCapError,
    DegenerateChannelError,
    InsufficientPilotsError,
    UnsupportedCombinationError,
)
from .linalg import hermitian, log_ndtr, pseudoinverse, solve_linear
from .model import (
    QPSK_ALPHABET,
    QuantizerMode,
    propagate,
    quadrant_index,
    quantize,
    symbols_to_indices,
)
from .validation import check_complex_matrix, check_count

# Candidate budget for the per-antenna MAP grid search: a grid alphabet of
# size G with K users enumerates G**K candidates; exactly 10**6 is allowed.
MAP_CANDIDATE_CAP = 10**6

# Tikhonov loading factor applied to Gram matrices when requested.
DIAGONAL_LOADING = 1e-6

FILTER_KINDS = ("mrc", "zf", "direct_ls")
PROVENANCE_KINDS = ("full_csi", "least_squares", "map")

# Pilot-length presets used throughout the sweeps: multiples of the user
# count K or the antenna count M.
PILOT_LENGTH_PRESETS = {
    "5K": (5, "users"),
    "10K": (10, "users"),
    "50K": (50, "users"),
    "5M": (5, "antennas"),
    "50M": (50, "antennas"),
}


def pilot_length(preset, config):
    """Resolve a pilot-length preset like ``"5K"`` or ``"50M"`` to a slot count."""
    if preset not in PILOT_LENGTH_PRESETS:
        raise ValueError(
            f"unknown pilot length preset {preset!r}; "
            f"expected one of {sorted(PILOT_LENGTH_PRESETS)}"
        )
    factor, base = PILOT_LENGTH_PRESETS[preset]
    count = config.num_users if base == "users" else config.num_antennas
    return factor * count


def random_qpsk_pilots(num_users, num_slots, stream):
    """Draw an i.i.d. uniform QPSK pilot matrix of shape (K, N)."""
    num_users = check_count(num_users, "num_users")
    num_slots = check_count(num_slots, "num_slots", minimum=0)
    indices = stream.generator.integers(0, 4, size=(num_users, num_slots))
    return QPSK_ALPHABET[indices]


def orthogonal_qpsk_pilots(num_users, num_slots):
    """Deterministic orthogonal QPSK pilots with X X^H = N I exactly.

    Rows come from a Hadamard matrix scaled onto the QPSK constellation,
    so ``num_users`` must not exceed the Hadamard order P (the smallest
    power of two >= num_users) and ``num_slots`` must be a multiple of P.
    """
    import scipy.linalg

    num_users = check_count(num_users, "num_users")
    num_slots = check_count(num_slots, "num_slots")
    order = 1
    while order < num_users:
        order *= 2
    if num_slots % order != 0:
        raise ValueError(
            f"num_slots ({num_slots}) must be a multiple of the Hadamard "
            f"order {order} for {num_users} users"
        )
    block = scipy.linalg.hadamard(order)[:num_users, :]
    tiled = np.tile(block, (1, num_slots // order))
    return tiled * ((1 + 1j) / np.sqrt(2.0))


@dataclass(frozen=True)
class PilotBlock:
    """A block of N training transmissions and the matching observations.

    Attributes
    ----------
    symbols : numpy.ndarray
        Transmitted pilot matrix, shape (K, N), QPSK entries.
    observations : numpy.ndarray
        Received matrix, shape (M, N); quantized or bypass samples.
    """

    symbols: np.ndarray = field(repr=False)
    observations: np.ndarray = field(repr=False)

    def __post_init__(self):
        sym = np.ascontiguousarray(self.symbols, dtype=np.complex128)
        obs = np.ascontiguousarray(self.observations, dtype=np.complex128)
        if sym.ndim != 2 or obs.ndim != 2:
            raise ValueError("pilot symbols and observations must be 2-D")
        if sym.shape[1] != obs.shape[1]:
            raise ValueError(
                f"pilot slot counts differ: symbols {sym.shape[1]}, "
                f"observations {obs.shape[1]}"
            )
        if sym.shape[0] < 1 or obs.shape[0] < 1:
            raise ValueError("pilot block needs at least one user and one antenna")
        if sym.size:
            symbols_to_indices(sym)  # raises when entries leave the QPSK set
        if not (np.all(np.isfinite(obs.real)) and np.all(np.isfinite(obs.imag))):
            raise ValueError("pilot observations must be finite")
        object.__setattr__(self, "symbols", sym)
        object.__setattr__(self, "observations", obs)

    @property
    def num_slots(self):
        return self.symbols.shape[1]

    @property
    def num_users(self):
        return self.symbols.shape[0]

    @property
    def num_antennas(self):
        return self.observations.shape[0]

    @classmethod
    def transmit(
        cls,
        channel,
        config,
        num_slots,
        stream,
        quantizer=QuantizerMode.ONE_BIT,
        scheme="random",
        symbols=None,
    ):
        """Send pilots through the channel and record the observations.

        ``scheme`` picks the pilot matrix: "random" (i.i.d. QPSK drawn from
        ``stream``) or "orthogonal". An explicit ``symbols`` matrix overrides
        the scheme. Noise is drawn from the same stream after the pilots.
        """
        num_slots = check_count(num_slots, "num_slots", minimum=0)
        if symbols is not None:
            sym = np.ascontiguousarray(symbols, dtype=np.complex128)
            if sym.shape != (config.num_users, num_slots):
                raise ValueError(
                    f"explicit pilot symbols must have shape "
                    f"({config.num_users}, {num_slots}), got {sym.shape}"
                )
        elif scheme == "random":
            sym = random_qpsk_pilots(config.num_users, num_slots, stream)
        elif scheme == "orthogonal":
            sym = orthogonal_qpsk_pilots(config.num_users, num_slots)
        else:
            raise ValueError(f"unknown pilot scheme {scheme!r}")
        if num_slots == 0:
            empty = np.zeros((config.num_antennas, 0), dtype=np.complex128)
            return cls(symbols=sym.reshape(config.num_users, 0), observations=empty)
        received = propagate(channel, sym, config, stream)
        return cls(symbols=sym, observations=quantize(received, quantizer))


@dataclass(frozen=True)
class ChannelEstimate:
    """An M x K channel matrix together with how it was obtained."""

    matrix: np.ndarray = field(repr=False)
    provenance: str = "full_csi"

    def __post_init__(self):
        mat = check_complex_matrix(self.matrix, "channel estimate")
        if self.provenance not in PROVENANCE_KINDS:
            raise ValueError(
                f"provenance must be one of {PROVENANCE_KINDS}, got {self.provenance!r}"
            )
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def full_csi(cls, channel):
        return cls(matrix=channel, provenance="full_csi")


@dataclass(frozen=True)
class ReceiveFilter:
    """An M x K linear receive filter A, applied to observations as A^H y."""

    matrix: np.ndarray = field(repr=False)
    kind: str = "mrc"

    def __post_init__(self):
        mat = check_complex_matrix(self.matrix, "filter matrix")
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"kind must be one of {FILTER_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "matrix", mat)


def _loaded(gram, enable):
    if not enable:
        return gram
    dim = gram.shape[0]
    lam = DIAGONAL_LOADING * float(np.trace(gram).real) / dim
    return gram + lam * np.eye(dim)


def ls_direct_filter(pilots, diagonal_loading=False):
    """Fit the K x M filter minimizing the empirical squared error on pilots.

    Solves A^H = (X Y^H)(Y Y^H)^{-1} over the pilot block, which requires at
    least as many slots as antennas for the observation Gram matrix to be
    invertible.

    Parameters
    ----------
    pilots : PilotBlock
    diagonal_loading : bool, optional
        When True, add Tikhonov loading (1e-6 x trace/dim) to the Gram
        matrix before solving instead of raising on singularity.

    Returns
    -------
    ReceiveFilter
        kind "direct_ls".
    """
    m = pilots.num_antennas
    if pilots.num_slots < m:
        raise InsufficientPilotsError(
            f"direct LS filter needs at least num_antennas={m} pilot slots, "
            f"got {pilots.num_slots}"
        )
    y = pilots.observations
    x = pilots.symbols
    gram = _loaded(y @ hermitian(y), diagonal_loading)
    cross = x @ hermitian(y)
    # gram is Hermitian, so solving against cross^H yields A directly.
    a = solve_linear(gram, hermitian(cross))
    return ReceiveFilter(matrix=a, kind="direct_ls")


def ls_channel_estimate(pilots, config, diagonal_loading=False):
    """Least-squares channel estimate from a pilot block.

    Solves H_hat = (sqrt(Pt) Y X^H)(Pt X X^H)^{-1}, requiring at least K
    pilot slots so the pilot Gram matrix can be invertible.
    """
    k = pilots.num_users
    if pilots.num_slots < k:
        raise InsufficientPilotsError(
            f"LS channel estimation needs at least num_users={k} pilot slots, "
            f"got {pilots.num_slots}"
        )
    pt = config.transmit_power
    x = pilots.symbols
    y = pilots.observations
    gram = _loaded(pt * (x @ hermitian(x)), diagonal_loading)
    cross = np.sqrt(pt) * (y @ hermitian(x))
    estimate = hermitian(solve_linear(gram, hermitian(cross)))
    return ChannelEstimate(matrix=estimate, provenance="least_squares")


@dataclass(frozen=True)
class MapGrid:
    """Finite candidate set for one complex channel coefficient."""

    points: np.ndarray = field(repr=False)

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.complex128)
        if pts.ndim != 1 or pts.size < 2:
            raise ValueError("grid needs at least 2 points")
        if not (np.all(np.isfinite(pts.real)) and np.all(np.isfinite(pts.imag))):
            raise ValueError("grid points must be finite")
        # symmetry about the origin, required so the prior mode is unbiased
        key = np.lexsort((pts.imag, pts.real))
        neg = -pts
        neg_key = np.lexsort((neg.imag, neg.real))
        if not np.allclose(pts[key], neg[neg_key], atol=1e-12):
            raise ValueError("grid must be symmetric about 0")
        object.__setattr__(self, "points", pts)

    @property
    def size(self):
        return self.points.size

    @classmethod
    def square(cls, extent=3.0, points_per_axis=25):
        """Uniform square grid over [-extent, extent] on each axis."""
        if extent <= 0:
            raise ValueError(f"extent must be positive, got {extent}")
        points_per_axis = check_count(points_per_axis, "points_per_axis", minimum=2)
        axis = np.linspace(-extent, extent, points_per_axis)
        re, im = np.meshgrid(axis, axis, indexing="ij")
        return cls(points=(re + 1j * im).ravel())


def map_channel_estimate(pilots, config, grid=None):
    """Per-antenna MAP channel estimate by exhaustive grid search.

    For each antenna the posterior score of a candidate row h in A^K is
    log p(h) + sum over slots and axes of the exact sign-observation
    log-likelihood under Gaussian noise. The candidate count G^K is capped
    at 10^6 (the boundary value is allowed) because the search cost is
    exponential in the user count.

    Requires 1-bit quantized observations; ties in the posterior resolve to
    the first candidate in grid enumeration order.
    """
    if grid is None:
        grid = MapGrid.square()
    k = pilots.num_users
    m = pilots.num_antennas
    num_candidates = grid.size**k
    if num_candidates > MAP_CANDIDATE_CAP:
        raise ComplexityCapError(
            f"grid search needs {grid.size}^{k} = {num_candidates} candidates, "
            f"above the {MAP_CANDIDATE_CAP} cap; the cost is exponential in "
            f"the number of users"
        )
    y = pilots.observations
    if y.size and not (
        np.all(np.abs(y.real) == 1.0) and np.all(np.abs(y.imag) == 1.0)
    ):
        raise UnsupportedCombinationError(
            "MAP estimation requires 1-bit quantized observations with "
            "entries in {+-1 +-1j}"
        )
    mesh = np.meshgrid(*([grid.points] * k), indexing="ij")
    candidates = np.stack([axis.ravel() for axis in mesh], axis=1)  # (G^K, K)
    log_prior = -np.sum(np.abs(candidates) ** 2, axis=1)  # CN(0, I) up to a constant

    n = pilots.num_slots
    estimate = np.empty((m, k), dtype=np.complex128)
    if n == 0:
        best = int(np.argmax(log_prior))
        estimate[:] = candidates[best]
        return ChannelEstimate(matrix=estimate, provenance="map")

    x = pilots.symbols  # (K, N)
    scale = np.sqrt(2.0 * config.transmit_power) / np.sqrt(config.noise_variance)
    chunk = max(1, 2_000_000 // max(n, 1))
    for i in range(m):
        sign_re = y[i].real  # (N,)
        sign_im = y[i].imag
        best_score = -np.inf
        best_index = 0
        for start in range(0, candidates.shape[0], chunk):
            cand = candidates[start : start + chunk]
            means = cand @ x  # (g, N), mean of r_i/sqrt(Pt) per slot
            scores = (
                log_prior[start : start + chunk]
                + log_ndtr(scale * sign_re[None, :] * means.real).sum(axis=1)
                + log_ndtr(scale * sign_im[None, :] * means.imag).sum(axis=1)
            )
            local = int(np.argmax(scores))
            if scores[local] > best_score:
                best_score = float(scores[local])
                best_index = start + local
        estimate[i] = candidates[best_index]
    return ChannelEstimate(matrix=estimate, provenance="map")


def mrc_filter(est):
    """Maximal ratio combining: column i is h_i / ||h_i||^2."""
    h = est.matrix
    norms_sq = np.sum(np.abs(h) ** 2, axis=0)
    if np.any(norms_sq == 0.0):
        bad = int(np.flatnonzero(norms_sq == 0.0)[0])
        raise DegenerateChannelError(
            f"channel estimate column {bad} is zero; MRC is undefined"
        )
    return ReceiveFilter(matrix=h / norms_sq[None, :], kind="mrc")


def zf_filter(est):
    """Zero forcing: A^H is the left pseudoinverse of the channel estimate."""
    a_h = pseudoinverse(est.matrix)
    return ReceiveFilter(matrix=hermitian(a_h), kind="zf")


def soft_detect(receive_filter, observations):
    """Apply the filter: x_soft = A^H y for one vector or a block of columns."""
    matrix = (
        receive_filter.matrix
        if isinstance(receive_filter, ReceiveFilter)
        else np.asarray(receive_filter, dtype=np.complex128)
    )
    y = np.asarray(observations, dtype=np.complex128)
    if y.ndim not in (1, 2) or y.shape[0] != matrix.shape[0]:
        raise ValueError(
            f"observations must have leading dimension {matrix.shape[0]}, "
            f"got shape {y.shape}"
        )
    return hermitian(matrix) @ y


def demodulate(soft):
    """Quadrant decision mapping each soft value to the nearest QPSK point.

    Zero coordinates round toward +1 on each axis, matching the quantizer.
    """
    return QPSK_ALPHABET[quadrant_index(np.asarray(soft, dtype=np.complex128))]
