"""1D Gaussian-density phase-encode masks, undersampling and PSFs."""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .rng import Xoshiro256
from .tensor_domain import ComplexGrid, Domain, fft2c, ifft2c


@dataclass(frozen=True)
class Mask1D:
    """Binary phase-encode sampling pattern.

    ``flags[k]`` marks line ``k`` (DC at index 0) as acquired.  The generator
    parameters are kept for provenance; masks read from file carry ``None``.
    """

    flags: np.ndarray
    seed: int | None = None
    density_sigma: float | None = None
    acs_lines: int | None = None

    def __post_init__(self):
        flags = np.asarray(self.flags, dtype=bool).copy()
        flags.setflags(write=False)
        object.__setattr__(self, "flags", flags)
        if flags.ndim != 1 or flags.size < 1:
            raise ValueError("mask flags must be a non-empty 1D vector")

    @property
    def length(self):
        return self.flags.size

    @property
    def sampled_count(self):
        return int(self.flags.sum())

    @property
    def reduction(self):
        return self.length / self.sampled_count

    @property
    def indices(self):
        return np.flatnonzero(self.flags)

    def as_array(self):
        """Float mask broadcastable over a (..., N, M) grid."""
        return self.flags.astype(np.float64)[:, None]

    def __eq__(self, other):
        return isinstance(other, Mask1D) and np.array_equal(self.flags, other.flags)

    def __hash__(self):
        return hash(self.flags.tobytes())


class MaskParameterError(ValueError):
    pass


def centered_offset(n):
    """Signed distance of every line index from DC (fftshift ordering)."""
    k = np.arange(n)
    return ((k + n // 2) % n) - n // 2


def acs_indices(n, acs):
    """The ``acs`` centermost lines of the shifted spectrum, as unshifted indices."""
    c = n // 2
    start = c - acs // 2
    return [((j - c) % n) for j in range(start, start + acs)]


def gen_gaussian_mask(n, r, sigma=None, acs=None, seed=0):
    """Draw a fixed 1D Gaussian random mask with ``round(n / r)`` lines.

    The ``acs`` central lines are forced on.  The rest are drawn without
    replacement, each draw an inverse-CDF pick over the remaining lines
    with weights ``exp(-d**2 / (2 sigma**2))``, scanned in index order, with
    uniforms from xoshiro256**.
    """
    if n < 4:
        raise MaskParameterError(f"need N >= 4, got {n}")
    if r < 1:
        raise MaskParameterError(f"reduction factor must be >= 1, got {r}")
    sigma = n / 6 if sigma is None else float(sigma)
    acs = max(1, round(n / 32)) if acs is None else int(acs)
    if sigma <= 0:
        raise MaskParameterError("sigma must be positive")
    if not 1 <= acs <= n:
        raise MaskParameterError(f"acs must lie in [1, {n}], got {acs}")
    budget = int(round(n / r))
    if budget < acs:
        raise MaskParameterError(
            f"budget round({n}/{r}) = {budget} lines is below the {acs} forced ACS lines"
        )

    flags = [False] * n
    for k in acs_indices(n, acs):
        flags[k] = True
    d = centered_offset(n)
    weights = [math.exp(-float(d[k]) ** 2 / (2.0 * sigma**2)) for k in range(n)]
    rng = Xoshiro256(seed)
    for _ in range(budget - acs):
        total = 0.0
        for k in range(n):
            if not flags[k]:
                total += weights[k]
        target = rng.random() * total
        acc = 0.0
        pick = -1
        for k in range(n):
            if flags[k]:
                continue
            acc += weights[k]
            pick = k
            if acc > target:
                break
        flags[pick] = True
    return Mask1D(np.array(flags), seed=int(seed), density_sigma=sigma, acs_lines=acs)


def full_mask(n):
    return Mask1D(np.ones(n, dtype=bool))


def _check_rows(grid, mask):
    if grid.rows != mask.length:
        raise ValueError(f"mask length {mask.length} does not match grid rows {grid.rows}")


def apply_mask(y, mask):
    """Zero the unsampled phase-encode lines of k-space ``y``."""
    _check_rows(y, mask)
    out = np.where(mask.flags[:, None], y.data, 0)
    return ComplexGrid(out, y.domain)


def psf(mask, n, m):
    """Point-spread function of ``mask`` replicated over ``m`` readout columns.

    Returned unshifted (DC image position at (0, 0)) and scaled so that
    position has unit magnitude.
    """
    if mask.length != n:
        raise ValueError(f"mask length {mask.length} does not match N={n}")
    k = np.broadcast_to(mask.as_array(), (n, m)).astype(np.complex128)
    p = ifft2c(k)
    return ComplexGrid(p / p[0, 0], Domain.IMAGE)


def peak_sidelobe_ratio(p):
    """Ratio of the DC peak to the largest other magnitude; ``inf`` for a delta."""
    mag = np.abs(p.data)
    peak = mag[0, 0]
    side = mag.copy()
    side[0, 0] = 0.0
    s = side.max()
    return float("inf") if s <= 1e-12 * peak else float(peak / s)


def off_center_column_max(p):
    """Largest PSF magnitude outside the column holding DC, relative to the peak."""
    mag = np.abs(p.data)
    if mag.shape[1] == 1:
        return 0.0
    return float(mag[:, 1:].max() / mag.max())


def complex_noise(shape, noise_sigma, seed):
    """i.i.d. complex Gaussian noise, real/imag std ``noise_sigma / sqrt(2)``."""
    rng = Xoshiro256(seed)
    count = int(np.prod(shape))
    vals = np.array(rng.normals(2 * count)).reshape(count, 2)
    scale = noise_sigma / math.sqrt(2.0)
    return (scale * (vals[:, 0] + 1j * vals[:, 1])).reshape(shape)


def undersample(x0, mask, noise_sigma=0.0, seed=0):
    """Retrospectively undersample image ``x0``: ``mask * (F x0 + noise)``."""
    _check_rows(x0, mask)
    k = fft2c(x0.data)
    if noise_sigma > 0:
        k = k + complex_noise(k.shape, noise_sigma, seed)
    return apply_mask(ComplexGrid(k, Domain.KSPACE), mask)


def write_mask(mask, path):
    """Text format: line 1 = N, line 2 = space-separated sorted sampled indices."""
    idx = " ".join(str(int(i)) for i in mask.indices)
    Path(path).write_text(f"{mask.length}\n{idx}\n")


def read_mask(path):
    lines = Path(path).read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty mask file")
    try:
        n = int(lines[0].strip())
        idx = [int(t) for t in lines[1].split()] if len(lines) > 1 else []
    except ValueError as exc:
        raise ValueError(f"{path}: malformed mask file ({exc})") from None
    if n < 1 or any(i < 0 or i >= n for i in idx):
        raise ValueError(f"{path}: index out of range for N={n}")
    if idx != sorted(set(idx)):
        raise ValueError(f"{path}: indices must be sorted and unique")
    flags = np.zeros(n, dtype=bool)
    flags[idx] = True
    return Mask1D(flags)
