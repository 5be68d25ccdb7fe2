"""Column-wise proximal gradient recovery and the alternating 1D + 2D cascade.

Every outer iteration runs, in order: the intermediate-Fourier sweep
(G_P), the image-domain column sweep (G_F), the 2D regulariser, and a hard
data-consistency projection.  The batched ``_``-prefixed functions operate
on (B, N, M) arrays or tensors and are what training differentiates; the
public functions wrap them for single grids and columns.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .config import ReconConfig
from .denoisers import TV1d, TV2d, Cnn1dWeights, Cnn2dWeights, apply_1d, apply_2d
from .rng import derive_seed
from .tensor_domain import ComplexGrid, Domain


class ModelMismatchError(ValueError):
    pass


@dataclass
class ModelBundle:
    """Ordered regulariser modules for one cascade.

    ``gp``/``gf`` hold ``n`` modules when shared, ``n * n_d`` when unshared
    (outer-iteration major).  ``d2`` has one entry per outer iteration,
    ``None`` meaning no 2D step.
    """

    gp: list = field(default_factory=list)
    gf: list = field(default_factory=list)
    d2: list = field(default_factory=list)

    @classmethod
    def init(cls, cfg, seed=0):
        """Randomly initialised learned modules (TV modules when configured)."""
        base = derive_seed(seed, "init")
        counter = iter(range(1 << 20))

        def one_1d():
            if cfg.regularizer_1d == "tv":
                return TV1d(cfg.tv_lambda)
            return Cnn1dWeights.init(base + next(counter))

        def one_2d():
            if cfg.regularizer_2d == "cnn2d":
                return Cnn2dWeights.init(
                    base + next(counter), cfg.cnn2d_depth, cfg.cnn2d_features
                )
            if cfg.regularizer_2d == "tv2d":
                return TV2d(cfg.tv2d_lambda)
            return None

        gp = [one_1d() for _ in range(cfg.modules_per_block(cfg.n_p))]
        gf = [one_1d() for _ in range(cfg.modules_per_block(cfg.n_f))]
        d2 = [one_2d() for _ in range(cfg.n_d)]
        return cls(gp, gf, d2)

    @classmethod
    def identity(cls, cfg):
        """Zero-weight CNNs: every regulariser is the identity map."""
        gp = [Cnn1dWeights.zeros() for _ in range(cfg.modules_per_block(cfg.n_p))]
        gf = [Cnn1dWeights.zeros() for _ in range(cfg.modules_per_block(cfg.n_f))]
        if cfg.regularizer_2d == "cnn2d":
            d2 = [Cnn2dWeights.zeros(cfg.cnn2d_depth, cfg.cnn2d_features) for _ in range(cfg.n_d)]
        else:
            d2 = [None] * cfg.n_d
        return cls(gp, gf, d2)

    def modules(self):
        return [*self.gp, *self.gf, *(m for m in self.d2 if m is not None)]

    def learned(self):
        return [m for m in self.modules() if isinstance(m, (Cnn1dWeights, Cnn2dWeights))]

    def parameters(self):
        out = []
        for m in self.learned():
            out += m.parameters()
        return out

    def with_parameters(self, params):
        params = list(params)
        pos = 0

        def swap(m):
            nonlocal pos
            if not isinstance(m, (Cnn1dWeights, Cnn2dWeights)):
                return m
            n = len(m.parameters())
            new = m.with_parameters(params[pos:pos + n])
            pos += n
            return new

        gp = [swap(m) for m in self.gp]
        gf = [swap(m) for m in self.gf]
        d2 = [swap(m) for m in self.d2]
        if pos != len(params):
            raise ValueError(f"expected {pos} parameter arrays, got {len(params)}")
        return ModelBundle(gp, gf, d2)

    def block(self, name, cfg, t):
        """Modules used by sweep ``name`` at outer iteration ``t``."""
        mods = self.gp if name == "gp" else self.gf
        n = cfg.n_p if name == "gp" else cfg.n_f
        if cfg.sharing == "shared":
            return mods
        return mods[t * n:(t + 1) * n]


def check_model(cfg, model):
    want_1d = Cnn1dWeights if cfg.regularizer_1d == "cnn" else TV1d
    for name, mods, n in (("gp", model.gp, cfg.n_p), ("gf", model.gf, cfg.n_f)):
        if len(mods) != cfg.modules_per_block(n):
            raise ModelMismatchError(
                f"{name}: config needs {cfg.modules_per_block(n)} modules "
                f"({cfg.sharing}), model has {len(mods)}"
            )
        for m in mods:
            if not isinstance(m, want_1d):
                raise ModelMismatchError(f"{name}: expected {want_1d.__name__}, got {type(m).__name__}")
    if any(a is b for a in model.gp for b in model.gf):
        raise ModelMismatchError("G_P and G_F must not share modules")
    if len(model.d2) != cfg.n_d:
        raise ModelMismatchError(f"2D: config needs {cfg.n_d} modules, model has {len(model.d2)}")
    want_2d = {"cnn2d": Cnn2dWeights, "tv2d": TV2d, "none": type(None)}[cfg.regularizer_2d]
    for m in model.d2:
        if not isinstance(m, want_2d):
            raise ModelMismatchError(f"2D: expected {cfg.regularizer_2d}, got {type(m).__name__}")


# ---------------------------------------------------------------- batched core


def _mask_array(mask):
    return mask.as_array() if hasattr(mask, "as_array") else np.asarray(mask, dtype=float)


def _pg(u, v, m, modules):
    """Proximal gradient over all columns at once.

    z = m * (F_pe u) - v;  r = u - rho * F_pe^H z;  u = prox(r)
    """
    for mod in modules:
        z = ad.mul_const(ad.sub(ad.fft_pe(u), v), m)
        r = ad.sub(u, ad.scale(ad.ifft_pe(z), mod.step))
        u = apply_1d(mod, r)
    return u


def _pg_threaded(u, v, m, modules, threads):
    if threads <= 1 or ad.recording():
        return _pg(u, v, m, modules)
    uv, vv = ad.value(u), ad.value(v)
    chunks = np.array_split(np.arange(uv.shape[-1]), threads)
    chunks = [c for c in chunks if c.size]
    with ThreadPoolExecutor(len(chunks)) as pool:
        parts = list(pool.map(
            lambda c: _pg(ad.Tensor(uv[..., c]), vv[..., c], m, modules).value, chunks
        ))
    return ad.Tensor(np.concatenate(parts, axis=-1))


def _solve_gp(x, y, m, modules, threads=1):
    h = ad.fft_fe(x)
    h = _pg_threaded(h, y, m, modules, threads)
    return ad.ifft_fe(h)


def _solve_gf(x, y, m, modules, threads=1):
    v = np.fft.ifft(ad.value(y), axis=-1, norm="ortho")
    return _pg_threaded(x, v, m, modules, threads)


def _dc(x, y, m):
    k = ad.fft2c(x)
    k = ad.add(ad.mul_const(k, 1.0 - m), ad.value(y) * m)
    return ad.ifft2c(k)


def _zero_fill(y, m):
    return np.fft.ifft2(np.asarray(y) * m, axes=(-2, -1), norm="ortho")


def recon_batch(y, mask, cfg, model, threads=None):
    """Reconstruct a (B, N, M) k-space batch; returns a Tensor."""
    check_model(cfg, model)
    m = _mask_array(mask)
    y = np.asarray(y, dtype=np.complex128) * m
    threads = cfg.threads if threads is None else threads
    x = ad.Tensor(_zero_fill(y, m))
    for t in range(cfg.n_d):
        if cfg.n_p:
            x = _solve_gp(x, y, m, model.block("gp", cfg, t), threads)
        if cfg.n_f:
            x = _solve_gf(x, y, m, model.block("gf", cfg, t), threads)
        x = apply_2d(model.d2[t], x)
        x = _dc(x, y, m)
    return x


# ---------------------------------------------------------------- public API


def _check_shapes(*grids):
    shape = grids[0].shape
    for g in grids[1:]:
        if g.shape != shape:
            raise ValueError(f"shape mismatch: {shape} vs {g.shape}")


def zero_fill(y, mask):
    return ComplexGrid(_zero_fill(y.data, _mask_array(mask)), Domain.IMAGE)


def pg_1d(u0, v, mask, modules):
    """Recover one column from its phase-encode measurements ``v``."""
    u0 = np.asarray(u0, dtype=np.complex128)
    v = np.asarray(v, dtype=np.complex128)
    m = _mask_array(mask)
    if u0.shape != v.shape or u0.ndim != 1 or u0.shape[0] != m.shape[0]:
        raise ValueError(
            f"length mismatch: u0 {u0.shape}, v {v.shape}, mask {m.shape[0]}"
        )
    if not modules:
        raise ValueError("pg_1d needs at least one module")
    out = _pg(ad.Tensor(u0.reshape(1, -1, 1)), (v * m[:, 0]).reshape(1, -1, 1), m, modules)
    return out.value.reshape(-1)


def solve_GF(x, y, mask, modules, threads=1):
    _check_shapes(x, y)
    m = _mask_array(mask)
    out = _solve_gf(ad.Tensor(x.data[None]), y.data[None] * m, m, modules, threads)
    return ComplexGrid(ad.value(out)[0], Domain.IMAGE)


def solve_GP(x, y, mask, modules, threads=1):
    _check_shapes(x, y)
    m = _mask_array(mask)
    out = _solve_gp(ad.Tensor(x.data[None]), y.data[None] * m, m, modules, threads)
    return ComplexGrid(ad.value(out)[0], Domain.IMAGE)


def data_consistency(x, y, mask):
    _check_shapes(x, y)
    m = _mask_array(mask)
    return ComplexGrid(ad.value(_dc(ad.Tensor(x.data), y.data, m)), Domain.IMAGE)


def recon_am(y, mask, cfg=None, model=None, threads=None):
    """Alternating 1D + 2D reconstruction of a single k-space grid."""
    cfg = ReconConfig() if cfg is None else cfg
    if model is None:
        raise ModelMismatchError("recon_am needs a ModelBundle")
    out = recon_batch(y.data[None], mask, cfg, model, threads)
    return ComplexGrid(out.value[0], Domain.IMAGE)
