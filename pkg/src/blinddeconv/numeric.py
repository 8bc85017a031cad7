"""Unitary transforms and reproducible complex Gaussian sampling."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import LengthError


def is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _check_pow2(n: int) -> None:
    if not is_power_of_two(n):
        raise LengthError(f"length {n} is not a power of two")


def fft_unitary(v, direction: str = "forward", axis: int = 0) -> np.ndarray:
    """Unitary DFT (scaled by 1/sqrt(L)) along `axis`.

    Forward uses the kernel exp(-2*pi*i*j*k/L). Only power-of-two lengths are
    accepted; the partial-DFT operator calls numpy directly for other lengths.
    """
    v = np.asarray(v, dtype=complex)
    _check_pow2(v.shape[axis])
    if direction == "forward":
        return np.fft.fft(v, axis=axis, norm="ortho")
    if direction == "inverse":
        return np.fft.ifft(v, axis=axis, norm="ortho")
    raise ValueError(f"unknown direction {direction!r}")


def fwht_unitary(v, axis: int = 0) -> np.ndarray:
    """Walsh-Hadamard transform in Sylvester (natural) order, scaled by 1/sqrt(L).

    Self-inverse. Works along `axis` so a matrix of column vectors can be
    transformed in one call.
    """
    a = np.moveaxis(np.array(v, dtype=complex), axis, 0)
    n = a.shape[0]
    _check_pow2(n)
    rest = a.shape[1:]
    h = 1
    while h < n:
        a = a.reshape((n // (2 * h), 2, h) + rest)
        top = a[:, 0] + a[:, 1]
        bot = a[:, 0] - a[:, 1]
        a = np.stack((top, bot), axis=1)
        h *= 2
    a = a.reshape((n,) + rest) / np.sqrt(n)
    return np.moveaxis(a, 0, axis)


_CHILD_BASE = 1 << 32


@dataclass(frozen=True)
class RngStream:
    """Seeded random stream keyed by (seed, stream_id) and an optional grid cell.

    The underlying generator is built from a ``SeedSequence`` whose spawn key
    is ``cell + (stream_id,)``, so draws never depend on execution order.
    """

    seed: int
    stream_id: int = 0
    cell: tuple[int, ...] = ()
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ss = np.random.SeedSequence(
            entropy=int(self.seed) & 0xFFFFFFFFFFFFFFFF,
            spawn_key=tuple(int(c) for c in self.cell) + (int(self.stream_id),),
        )
        object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(ss)))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def child(self, tag: int) -> "RngStream":
        """Independent sub-stream, e.g. for noise drawn separately from the instance."""
        return RngStream(self.seed, self.stream_id, self.cell + (_CHILD_BASE + int(tag),))


def sample_complex_gaussian(rng: RngStream, n: int | tuple) -> np.ndarray:
    """i.i.d. CN(0, 1) draws: real and imaginary parts each N(0, 1/2)."""
    shape = (n,) if np.isscalar(n) else tuple(n)
    if any(s < 1 for s in shape):
        raise ValueError("sample size must be positive")
    g = rng.generator.standard_normal(shape + (2,))
    return (g[..., 0] + 1j * g[..., 1]) * np.sqrt(0.5)
