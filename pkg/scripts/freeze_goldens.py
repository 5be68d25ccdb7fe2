"""Recompute every frozen reference value used by the test suite.

Prints name = value lines; paste changes back into the tests only after
checking why a value moved.
"""

import hashlib

import numpy as np

from aliasnet.denoisers import TV1d
from aliasnet.fileio import cks_bytes, pgm_bytes
from aliasnet.metrics import psnr
from aliasnet.phantom import gen_phantom, phantom_suite, piecewise_constant_column, random_spec
from aliasnet.sampling import apply_mask, gen_gaussian_mask, peak_sidelobe_ratio, psf
from aliasnet.solver import pg_1d, zero_fill
from aliasnet.tensor_domain import ComplexGrid, Domain, dft2d


def main():
    golden = gen_gaussian_mask(64, 4, 64 / 6, 4, 7)
    p = psf(golden, 64, 64)
    print("GOLDEN_INDICES =", [int(i) for i in golden.indices])
    print("GOLDEN_PSR =", repr(peak_sidelobe_ratio(p)))
    print("PSF_R4_PGM_SHA256 =", hashlib.sha256(pgm_bytes(p, shift=True)).hexdigest())

    x = gen_phantom(random_spec(64, 64, seed=123))
    y = apply_mask(dft2d(x), golden)
    print("ZERO_FILL_PSNR_R4 =", repr(psnr(x, zero_fill(y, golden))))

    mask2 = gen_gaussian_mask(64, 2, 64 / 6, 4, 7)
    u = piecewise_constant_column(64, 2, 0)
    v = np.fft.fft(u, norm="ortho") * mask2.flags
    out = pg_1d(np.fft.ifft(v, norm="ortho"), v, mask2, [TV1d(0.05)] * 50)
    print("PG_TV_PSNR_TWO_PLATEAU =", repr(psnr(u, out)))

    suite = phantom_suite(200, 64, 64, seed=0)
    print("SUITE_SHA256 =", hashlib.sha256(np.ascontiguousarray(suite, "<c16").tobytes()).hexdigest())

    unit = np.array([[1, 0], [-1, 0]], float) + 1j * np.array([[0, 1], [0, -1]], float)
    print("CKS_UNIT_HEX =", cks_bytes(ComplexGrid(unit, Domain.KSPACE)).hex())


if __name__ == "__main__":
    main()
