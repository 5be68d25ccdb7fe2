"""Synthetic ellipse phantoms standing in for real MR slices."""

import numpy as np

from .config import PhantomSpec
from .rng import derive_seed
from .tensor_domain import ComplexGrid, Domain


class PhantomError(ValueError):
    pass


def _grid(n, m):
    # pixel centres symmetric about 0 so centred shapes are 180-degree symmetric
    r = (np.arange(n) + 0.5) / n * 2 - 1
    c = (np.arange(m) + 0.5) / m * 2 - 1
    return np.meshgrid(r, c, indexing="ij")


def ellipse_mask(n, m, center, axes, angle):
    a, b = axes
    if a <= 0 or b <= 0:
        raise PhantomError(f"ellipse axes must be positive, got {axes}")
    rr, cc = _grid(n, m)
    dr, dc = rr - center[0], cc - center[1]
    ca, sa = np.cos(angle), np.sin(angle)
    u = ca * dr + sa * dc
    v = -sa * dr + ca * dc
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def gen_phantom(spec):
    """Render a phantom; magnitude is normalised to [0, 1].

    Ellipse intensities add.  ``plateaus > 0`` adds a piecewise-constant
    profile along the phase-encode axis inside the ellipse support, and
    ``smooth_phase`` multiplies by a random low-order phase ramp.
    """
    n, m = spec.n, spec.m
    rng = np.random.default_rng(derive_seed(spec.seed, "phantom"))
    img = np.zeros((n, m))
    support = np.zeros((n, m), dtype=bool)
    for e in spec.ellipses:
        mask = ellipse_mask(n, m, e["center"], e["axes"], e.get("angle", 0.0))
        img += e.get("intensity", 1.0) * mask
        support |= mask
    if spec.plateaus > 0 and support.any():
        cuts = np.sort(rng.choice(np.arange(1, n), size=min(spec.plateaus - 1, n - 1), replace=False))
        levels = rng.uniform(0.0, 0.3, size=len(cuts) + 1)
        profile = np.repeat(levels, np.diff(np.concatenate([[0], cuts, [n]])))
        img += profile[:, None] * support
    mag = np.abs(img)
    peak = mag.max()
    if peak > 0:
        img = img / peak
    out = img.astype(np.complex128)
    if spec.phase_mode == "smooth_phase":
        rr, cc = _grid(n, m)
        coef = rng.uniform(-np.pi / 2, np.pi / 2, size=5)
        phase = coef[0] + coef[1] * rr + coef[2] * cc + coef[3] * rr * cc + coef[4] * rr**2
        out = out * np.exp(1j * phase)
        # |z| can round to 1 + eps; shrink by an ulp until the range holds exactly
        over = np.abs(out) > 1.0
        while over.any():
            out[over] *= np.nextafter(1.0, 0.0)
            over = np.abs(out) > 1.0
    return ComplexGrid(out, Domain.IMAGE)


def random_spec(n, m, seed, max_ellipses=6, plateaus=3, phase_mode="smooth_phase"):
    """A random head-like phantom: an outer shell plus smaller inner ellipses."""
    rng = np.random.default_rng(derive_seed(seed, "phantom") ^ 0x5EED)
    ellipses = [{
        "center": [rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05)],
        "axes": [rng.uniform(0.7, 0.9), rng.uniform(0.55, 0.75)],
        "angle": rng.uniform(-0.3, 0.3),
        "intensity": 0.6,
    }]
    for _ in range(int(rng.integers(2, max_ellipses + 1))):
        ellipses.append({
            "center": [rng.uniform(-0.45, 0.45), rng.uniform(-0.35, 0.35)],
            "axes": [rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.25)],
            "angle": rng.uniform(-np.pi, np.pi),
            "intensity": rng.uniform(-0.3, 0.4),
        })
    return PhantomSpec(n=n, m=m, ellipses=ellipses, plateaus=plateaus, phase_mode=phase_mode, seed=seed)


def phantom_suite(count, n=64, m=64, seed=0, **kw):
    """``count`` random phantoms stacked as a (count, n, m) complex array."""
    return np.stack([gen_phantom(random_spec(n, m, seed + j, **kw)).data for j in range(count)])


def piecewise_constant_column(n, plateaus, seed):
    """Real column with ``plateaus`` constant segments (levels in [0, 1])."""
    rng = np.random.default_rng(seed)
    cuts = np.sort(rng.choice(np.arange(4, n - 3), size=plateaus - 1, replace=False))
    levels = rng.uniform(0.0, 1.0, size=plateaus)
    return np.repeat(levels, np.diff(np.concatenate([[0], cuts, [n]]))).astype(np.complex128)
