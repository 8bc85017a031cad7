"""Subspace operators: partial DFT B and Gaussian / partial Hadamard A.

Each operator acts on column vectors (or on matrices whose columns are
vectors) through ``apply`` and ``adjoint``; ``matrix`` materializes it for
small dense checks.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, LengthError
from .numeric import RngStream, fwht_unitary, is_power_of_two, sample_complex_gaussian


class LinearMap:
    """Minimal matrix-free operator of shape (rows, cols)."""

    kind = "linear"
    shape: tuple[int, int]

    def apply(self, u):
        raise NotImplementedError

    def adjoint(self, w):
        raise NotImplementedError

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.shape[1], dtype=complex))

    def _check(self, v, n, what):
        v = np.asarray(v, dtype=complex)
        if v.shape[0] != n:
            raise DimensionError(f"{self.kind}.{what}: expected leading dimension {n}, got {v.shape[0]}")
        return v


@dataclass(frozen=True, eq=False)
class PartialDFT(LinearMap):
    """First K columns of the L x L unitary DFT matrix."""

    L: int
    K: int
    kind = "partial-dft"

    def __post_init__(self):
        if not 1 <= self.K <= self.L:
            raise DimensionError(f"need 1 <= K <= L, got K={self.K}, L={self.L}")

    @property
    def shape(self):
        return (self.L, self.K)

    def apply(self, h):
        h = self._check(h, self.K, "apply")
        return np.fft.fft(h, n=self.L, axis=0, norm="ortho")

    def adjoint(self, w):
        w = self._check(w, self.L, "adjoint")
        return np.fft.ifft(w, axis=0, norm="ortho")[: self.K]

    def row_norms_sq(self) -> np.ndarray:
        return np.full(self.L, self.K / self.L)


@dataclass(frozen=True, eq=False)
class GaussianA(LinearMap):
    """Dense L x N matrix with i.i.d. CN(0, 1) entries."""

    data: np.ndarray
    kind = "gaussian"

    @property
    def shape(self):
        return self.data.shape

    def apply(self, x):
        x = self._check(x, self.shape[1], "apply")
        return self.data @ x

    def adjoint(self, w):
        w = self._check(w, self.shape[0], "adjoint")
        return self.data.conj().T @ w

    def matrix(self):
        return self.data.copy()


@dataclass(frozen=True, eq=False)
class PartialHadamardA(LinearMap):
    """A = D H[:, S] with H the +-1 Sylvester Hadamard matrix and D = diag(signs)."""

    signs: np.ndarray
    columns: np.ndarray
    kind = "hadamard"

    def __post_init__(self):
        L = len(self.signs)
        if not is_power_of_two(L):
            raise LengthError(f"partial Hadamard needs L a power of two, got {L}")
        if len(set(self.columns.tolist())) != len(self.columns):
            raise DimensionError("column indices must be distinct")

    @property
    def shape(self):
        return (len(self.signs), len(self.columns))

    def apply(self, x):
        x = self._check(x, self.shape[1], "apply")
        L = self.shape[0]
        z = np.zeros((L,) + x.shape[1:], dtype=complex)
        z[self.columns] = x
        hz = fwht_unitary(z) * np.sqrt(L)
        return _rowscale(self.signs, hz)

    def adjoint(self, w):
        w = self._check(w, self.shape[0], "adjoint")
        L = self.shape[0]
        # H is real symmetric, so A^H w = (H D w)[S]
        hw = fwht_unitary(_rowscale(self.signs, w)) * np.sqrt(L)
        return hw[self.columns]


def _rowscale(d, v):
    return d.reshape((-1,) + (1,) * (v.ndim - 1)) * v


@dataclass(frozen=True, eq=False)
class SubspaceOperators:
    """The pair (B, A) defining y = (Bh) * conj(Ax)."""

    B: LinearMap
    A: LinearMap

    def __post_init__(self):
        if self.B.shape[0] != self.A.shape[0]:
            raise DimensionError("B and A must have the same number of rows")

    @property
    def L(self) -> int:
        return self.B.shape[0]

    @property
    def K(self) -> int:
        return self.B.shape[1]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def a_kind(self) -> str:
        return self.A.kind


def make_partial_dft_b(L: int, K: int) -> PartialDFT:
    return PartialDFT(L, K)


def make_gaussian_a(L: int, N: int, rng: RngStream) -> GaussianA:
    if N < 1 or L < 1:
        raise DimensionError("dimensions must be positive")
    return GaussianA(sample_complex_gaussian(rng, (L, N)))


def make_partial_hadamard_a(L: int, N: int, rng: RngStream) -> PartialHadamardA:
    if not is_power_of_two(L):
        raise LengthError(f"partial Hadamard needs L a power of two, got {L}")
    if not 1 <= N <= L:
        raise DimensionError(f"need 1 <= N <= L, got N={N}, L={L}")
    g = rng.generator
    signs = g.choice(np.array([-1.0, 1.0]), size=L)
    columns = np.sort(g.choice(L, size=N, replace=False))
    return PartialHadamardA(signs, columns)


def make_operators(L: int, K: int, N: int, a_kind: str, rng: RngStream) -> SubspaceOperators:
    B = make_partial_dft_b(L, K)
    if a_kind == "gaussian":
        A = make_gaussian_a(L, N, rng)
    elif a_kind == "hadamard":
        A = make_partial_hadamard_a(L, N, rng)
    else:
        raise ValueError(f"unknown A ensemble {a_kind!r}")
    return SubspaceOperators(B, A)
