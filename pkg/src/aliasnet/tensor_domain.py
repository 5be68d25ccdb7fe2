"""Complex grids and the unitary Fourier transforms along each encode axis.

Rows index the phase-encode direction (length N), columns the
frequency-encode direction (length M).  All transforms use the orthonormal
scaling, so every adjoint is the inverse.  Index 0 is DC; no shifting is
done here.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class Domain(Enum):
    IMAGE = 0
    KSPACE = 1
    HYBRID_F = 2  # transformed along frequency-encode only
    HYBRID_P = 3  # transformed along phase-encode only


# (forward, inverse) successor tables
_PE_FWD = {Domain.IMAGE: Domain.HYBRID_P, Domain.HYBRID_F: Domain.KSPACE}
_FE_FWD = {Domain.IMAGE: Domain.HYBRID_F, Domain.HYBRID_P: Domain.KSPACE}
_PE_INV = {v: k for k, v in _PE_FWD.items()}
_FE_INV = {v: k for k, v in _FE_FWD.items()}


@dataclass
class ComplexGrid:
    data: np.ndarray
    domain: Domain = Domain.IMAGE

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2:
            raise ValueError(f"grid must be 2D, got shape {self.data.shape}")
        n, m = self.data.shape
        if n < 2 or m < 1:
            raise ValueError(f"grid needs N >= 2 and M >= 1, got {n}x{m}")
        self.domain = Domain(self.domain)

    @property
    def shape(self):
        return self.data.shape

    @property
    def rows(self):
        return self.data.shape[0]

    @property
    def cols(self):
        return self.data.shape[1]

    def norm(self):
        return float(np.linalg.norm(self.data))

    def copy(self):
        return ComplexGrid(self.data.copy(), self.domain)


def _advance(table, domain, name):
    try:
        return table[domain]
    except KeyError:
        raise ValueError(f"{name} is not defined on a {domain.name} grid") from None


# Raw array transforms.  They act on the last two axes so a leading batch
# axis passes through untouched.

def fft_pe(a):
    return np.fft.fft(a, axis=-2, norm="ortho")


def ifft_pe(a):
    return np.fft.ifft(a, axis=-2, norm="ortho")


def fft_fe(a):
    return np.fft.fft(a, axis=-1, norm="ortho")


def ifft_fe(a):
    return np.fft.ifft(a, axis=-1, norm="ortho")


def fft2c(a):
    return np.fft.fft2(a, axes=(-2, -1), norm="ortho")


def ifft2c(a):
    return np.fft.ifft2(a, axes=(-2, -1), norm="ortho")


def dft_pe(g):
    return ComplexGrid(fft_pe(g.data), _advance(_PE_FWD, g.domain, "dft_pe"))


def idft_pe(g):
    return ComplexGrid(ifft_pe(g.data), _advance(_PE_INV, g.domain, "idft_pe"))


def dft_fe(g):
    return ComplexGrid(fft_fe(g.data), _advance(_FE_FWD, g.domain, "dft_fe"))


def idft_fe(g):
    return ComplexGrid(ifft_fe(g.data), _advance(_FE_INV, g.domain, "idft_fe"))


def dft2d(g):
    return dft_pe(dft_fe(g))


def idft2d(g):
    return idft_fe(idft_pe(g))


def dft_pe_1d(c):
    """Unitary length-N DFT of a single column."""
    return np.fft.fft(np.asarray(c, dtype=np.complex128), norm="ortho")


def idft_pe_1d(c):
    return np.fft.ifft(np.asarray(c, dtype=np.complex128), norm="ortho")


def get_column(g, i):
    if not 0 <= i < g.cols:
        raise IndexError(f"column {i} out of range for grid with {g.cols} columns")
    return g.data[:, i].copy()


def set_column(g, i, c):
    """Return a copy of ``g`` with column ``i`` replaced by ``c``."""
    if not 0 <= i < g.cols:
        raise IndexError(f"column {i} out of range for grid with {g.cols} columns")
    c = np.asarray(c, dtype=np.complex128)
    if c.shape != (g.rows,):
        raise ValueError(f"column must have length {g.rows}, got shape {c.shape}")
    out = g.copy()
    out.data[:, i] = c
    return out
