"""Image-quality metrics on magnitude images with a fixed peak of 1."""

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .tensor_domain import ComplexGrid

SSIM_WINDOW = 7
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _mag(a):
    if isinstance(a, ComplexGrid):
        a = a.data
    return np.abs(np.asarray(a))


def psnr(ref, test, peak=1.0):
    """``10 log10(peak**2 / MSE)`` of the magnitudes; ``inf`` when identical."""
    a, b = _mag(ref), _mag(test)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    mse = np.mean((a - b) ** 2)
    if mse == 0:
        return float("inf")
    return float(10.0 * np.log10(peak**2 / mse))


def ssim(ref, test, data_range=1.0, win=SSIM_WINDOW):
    """Mean SSIM over all fully contained ``win x win`` windows (uniform weights).

    Window statistics are population moments (divide by ``win**2``).
    """
    a, b = _mag(ref), _mag(test)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if min(a.shape) < win:
        raise ValueError(f"images must be at least {win}x{win}")
    c1 = (SSIM_K1 * data_range) ** 2
    c2 = (SSIM_K2 * data_range) ** 2
    wa = sliding_window_view(a, (win, win))
    wb = sliding_window_view(b, (win, win))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    da = wa - mu_a[..., None, None]
    db = wb - mu_b[..., None, None]
    var_a = (da * da).mean(axis=(-2, -1))
    var_b = (db * db).mean(axis=(-2, -1))
    cov = (da * db).mean(axis=(-2, -1))
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass
class MetricReport:
    psnr: float
    ssim: float
    per_slice: list = field(default_factory=list)

    @classmethod
    def compute(cls, refs, tests):
        rows = [{"psnr": psnr(r, t), "ssim": ssim(r, t)} for r, t in zip(refs, tests)]
        return cls(
            float(np.mean([r["psnr"] for r in rows])),
            float(np.mean([r["ssim"] for r in rows])),
            rows,
        )

    def to_dict(self):
        def enc(v):
            return "inf" if v == float("inf") else v

        return {
            "psnr": enc(self.psnr),
            "ssim": self.ssim,
            "per_slice": [{k: enc(v) for k, v in r.items()} for r in self.per_slice],
        }
