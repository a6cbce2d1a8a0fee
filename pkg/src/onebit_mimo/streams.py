"""Reproducible random streams for parallel Monte Carlo runs.

Every stream is addressed by ``(master_seed, stream_index)`` where the index
is a tuple of non-negative integers. Streams with distinct indices are
statistically independent, and a stream's output depends only on its address
and the order of draws made from it, never on which process created it.
"""

import numbers

import numpy as np


class RandomStream:
    """A counter-based random stream with a stable hierarchical address.

    Parameters
    ----------
    master_seed : int
        Non-negative seed shared by a whole experiment.
    stream_index : int or tuple of int, optional
        Address of this stream under the master seed. Defaults to ``()``,
        the root stream.

    Notes
    -----
    Backed by the Philox counter-based bit generator, so draws are
    reproducible across platforms and process pools.
    """

    def __init__(self, master_seed, stream_index=()):
        if isinstance(master_seed, bool) or not isinstance(master_seed, numbers.Integral):
            raise TypeError("master_seed must be an integer")
        master_seed = int(master_seed)
        if master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {master_seed}")
        if isinstance(stream_index, numbers.Integral) and not isinstance(stream_index, bool):
            stream_index = (int(stream_index),)
        for part in stream_index:
            if isinstance(part, bool) or not isinstance(part, numbers.Integral):
                raise TypeError(
                    f"stream_index parts must be integers, got {part!r}"
                )
        index = tuple(int(part) for part in stream_index)
        if any(part < 0 for part in index):
            raise ValueError(f"stream_index parts must be >= 0, got {index}")
        self.master_seed = master_seed
        self.stream_index = index
        seq = np.random.SeedSequence(master_seed, spawn_key=index)
        self.generator = np.random.Generator(np.random.Philox(seq))

    def substream(self, *index):
        """Return an independent stream addressed below this one."""
        return RandomStream(self.master_seed, self.stream_index + tuple(index))

    def __repr__(self):
        return f"RandomStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def sample_complex_gaussian(stream, shape, variance=1.0):
    """Draw circularly symmetric complex Gaussian variates.

    Parameters
    ----------
    stream : RandomStream
        Source of randomness; draws advance its state.
    shape : int or tuple of int
        Output shape.
    variance : float, optional
        Total variance per entry, split evenly between the real and
        imaginary parts.

    Returns
    -------
    numpy.ndarray
        complex128 array of the requested shape.
    """
    if variance <= 0 or not np.isfinite(variance):
        raise ValueError(f"variance must be positive and finite, got {variance}")
    if isinstance(shape, numbers.Integral):
        shape = (int(shape),)
    shape = tuple(int(s) for s in shape)
    draws = stream.generator.standard_normal((2,) + shape)
    scale = np.sqrt(variance / 2.0)
    return scale * (draws[0] + 1j * draws[1])
