"""Regularisers used inside the proximal steps.

* :class:`Cnn1dWeights` - three-layer residual 1D CNN applied to every
  column (real and imaginary parts as two channels), with its own step size.
* :class:`TV1d` - exact 1D total-variation proximal map per column.
* :class:`Cnn2dWeights` - small residual 2D CNN for the image-domain step.
* :class:`TV2d` - isotropic 2D TV denoising (Chambolle's projection).

Weight containers hold numpy arrays for inference.  Training swaps them for
:class:`~aliasnet.autodiff.Tensor` leaves with ``with_parameters``; the
forward code is the same for both.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .tensor_domain import ComplexGrid, Domain

KERNEL_1D = 9
FEATURES_1D = 8
CHANNELS = 2  # real, imag
DEFAULT_SLOPE = 0.01

CNN1D_PARAMS = (
    FEATURES_1D * CHANNELS * KERNEL_1D + FEATURES_1D
    + FEATURES_1D * FEATURES_1D * KERNEL_1D + FEATURES_1D
    + CHANNELS * FEATURES_1D * KERNEL_1D + CHANNELS
)  # 882
MODULE_1D_PARAMS = CNN1D_PARAMS + 1  # plus the step size


def _shape(x):
    return ad.value(x).shape


def _uniform_layer(rng, cout, cin, ksize):
    fan_in = cin * int(np.prod(ksize))
    bound = math.sqrt(1.0 / fan_in)
    w = rng.uniform(-bound, bound, size=(cout, cin, *ksize))
    b = rng.uniform(-bound, bound, size=(cout,))
    return w, b


@dataclass
class Cnn1dWeights:
    kernels: tuple
    biases: tuple
    rho: object = field(default_factory=lambda: np.array(1.0))
    leaky_slope: float = DEFAULT_SLOPE

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        self.biases = tuple(self.biases)
        if len(self.kernels) != 3 or len(self.biases) != 3:
            raise ValueError("g_cnn has exactly three convolution layers")
        chain = [CHANNELS, FEATURES_1D, FEATURES_1D, CHANNELS]
        for j, (k, b) in enumerate(zip(self.kernels, self.biases)):
            want = (chain[j + 1], chain[j], KERNEL_1D)
            if _shape(k) != want or _shape(b) != (chain[j + 1],):
                raise ValueError(f"layer {j}: expected kernel {want}, got {_shape(k)}")
        if not isinstance(self.rho, ad.Tensor):
            self.rho = np.asarray(self.rho, dtype=np.float64).reshape(())

    @classmethod
    def zeros(cls, rho=1.0, leaky_slope=DEFAULT_SLOPE):
        chain = [CHANNELS, FEATURES_1D, FEATURES_1D, CHANNELS]
        ks = [np.zeros((chain[j + 1], chain[j], KERNEL_1D)) for j in range(3)]
        bs = [np.zeros(chain[j + 1]) for j in range(3)]
        return cls(ks, bs, np.array(float(rho)), leaky_slope)

    @classmethod
    def init(cls, seed, rho=1.0, leaky_slope=DEFAULT_SLOPE):
        """Uniform(+-sqrt(1/fan_in)) initialisation from ``seed``."""
        rng = np.random.default_rng(seed)
        chain = [CHANNELS, FEATURES_1D, FEATURES_1D, CHANNELS]
        layers = [_uniform_layer(rng, chain[j + 1], chain[j], (KERNEL_1D,)) for j in range(3)]
        return cls([w for w, _ in layers], [b for _, b in layers], np.array(float(rho)), leaky_slope)

    def parameters(self):
        out = []
        for k, b in zip(self.kernels, self.biases):
            out += [k, b]
        return out + [self.rho]

    def with_parameters(self, params):
        params = list(params)
        return Cnn1dWeights(params[0:6:2], params[1:6:2], params[6], self.leaky_slope)

    @property
    def num_parameters(self):
        return sum(int(np.prod(_shape(p))) for p in self.parameters())

    @property
    def step(self):
        return self.rho


@dataclass
class TV1d:
    """Column-wise TV proximal map ``argmin 1/2||u - r||^2 + lam TV(u)``."""

    lam: float
    rho: float = 1.0

    @property
    def step(self):
        return np.asarray(self.rho, dtype=np.float64)


@dataclass
class Cnn2dWeights:
    kernels: tuple
    biases: tuple
    leaky_slope: float = DEFAULT_SLOPE

    def __post_init__(self):
        self.kernels = tuple(self.kernels)
        self.biases = tuple(self.biases)
        if len(self.kernels) < 1 or len(self.kernels) != len(self.biases):
            raise ValueError("need at least one layer and one bias per layer")
        cin = CHANNELS
        for j, (k, b) in enumerate(zip(self.kernels, self.biases)):
            ks = _shape(k)
            if len(ks) != 4 or ks[1] != cin or ks[2] % 2 == 0 or ks[3] % 2 == 0:
                raise ValueError(f"layer {j}: bad kernel shape {ks}")
            if _shape(b) != (ks[0],):
                raise ValueError(f"layer {j}: bias shape {_shape(b)} != ({ks[0]},)")
            cin = ks[0]
        if cin != CHANNELS:
            raise ValueError("last 2D layer must output 2 channels")

    @staticmethod
    def _chain(depth, features):
        if depth < 1:
            raise ValueError("depth must be >= 1")
        return [CHANNELS] + [features] * (depth - 1) + [CHANNELS]

    @classmethod
    def zeros(cls, depth=5, features=32, leaky_slope=DEFAULT_SLOPE):
        chain = cls._chain(depth, features)
        ks = [np.zeros((chain[j + 1], chain[j], 3, 3)) for j in range(depth)]
        bs = [np.zeros(chain[j + 1]) for j in range(depth)]
        return cls(ks, bs, leaky_slope)

    @classmethod
    def init(cls, seed, depth=5, features=32, leaky_slope=DEFAULT_SLOPE):
        rng = np.random.default_rng(seed)
        chain = cls._chain(depth, features)
        layers = [_uniform_layer(rng, chain[j + 1], chain[j], (3, 3)) for j in range(depth)]
        return cls([w for w, _ in layers], [b for _, b in layers], leaky_slope)

    def parameters(self):
        out = []
        for k, b in zip(self.kernels, self.biases):
            out += [k, b]
        return out

    def with_parameters(self, params):
        params = list(params)
        return Cnn2dWeights(params[0::2], params[1::2], self.leaky_slope)

    @property
    def num_parameters(self):
        return sum(int(np.prod(_shape(p))) for p in self.parameters())

    @property
    def depth(self):
        return len(self.kernels)


@dataclass
class TV2d:
    lam: float
    iterations: int = 100


def param_count(sharing, n_p, n_f, n_d=1):
    """Unique trainable 1D parameters for a G_P/G_F cascade."""
    modules = n_p + n_f
    if sharing == "shared":
        return modules * MODULE_1D_PARAMS
    if sharing == "unshared":
        return modules * n_d * MODULE_1D_PARAMS
    raise ValueError(f"unknown sharing mode {sharing!r}")


# ---------------------------------------------------------------- forward


def _branch(c, kernels, biases, slope, conv):
    h = c
    last = len(kernels) - 1
    for j, (k, b) in enumerate(zip(kernels, biases)):
        h = conv(h, k, b)
        if j < last:
            h = ad.leaky_relu(h, slope)
    return h


def apply_1d(module, r):
    """Apply a 1D regulariser to every column of a (B, N, M) complex batch."""
    if isinstance(module, Cnn1dWeights):
        batch = ad.value(r).shape[0]
        c = ad.columns_to_channels(r)
        h = _branch(c, module.kernels, module.biases, module.leaky_slope, ad.conv1d)
        return ad.add(r, ad.channels_to_columns(h, batch))
    if isinstance(module, TV1d):
        return ad.detached(lambda v: tv_prox_columns(v, module.lam), r)
    raise TypeError(f"not a 1D regulariser: {type(module).__name__}")


def apply_2d(module, x):
    """Apply an image-domain regulariser to a (B, N, M) complex batch."""
    if module is None:
        return x
    if isinstance(module, Cnn2dWeights):
        c = ad.image_to_channels(x)
        h = _branch(c, module.kernels, module.biases, module.leaky_slope, ad.conv2d)
        return ad.add(x, ad.channels_to_image(h))
    if isinstance(module, TV2d):
        return ad.detached(lambda v: tv_prox_2d(v, module.lam, module.iterations), x)
    raise TypeError(f"not a 2D regulariser: {type(module).__name__}")


def gcnn_forward(r, w):
    """Residual 1D CNN on a single complex column: ``r + branch(r)``."""
    r = np.asarray(r, dtype=np.complex128)
    out = apply_1d(w, ad.Tensor(r.reshape(1, -1, 1)))
    return out.value.reshape(-1)


def cnn2d_forward(x, w):
    out = apply_2d(w, ad.Tensor(x.data[None]))
    return ComplexGrid(out.value[0], Domain.IMAGE)


# ---------------------------------------------------------------- TV


def _tv1d_real(y, lam):
    """Condat's direct algorithm for ``argmin 1/2||u - y||^2 + lam sum|u[k+1] - u[k]|``."""
    n = len(y)
    out = [0.0] * n
    if n == 0:
        return out
    if lam <= 0:
        return list(y)
    k = k0 = kplus = kminus = 0
    umin, umax = lam, -lam
    vmin, vmax = y[0] - lam, y[0] + lam
    twolam = 2.0 * lam
    while True:
        while k == n - 1:
            if umin < 0.0:
                while True:
                    out[k0] = vmin
                    k0 += 1
                    if k0 > kminus:
                        break
                k = kminus = k0
                vmin = y[k]
                umin = lam
                umax = vmin + umin - vmax
            elif umax > 0.0:
                while True:
                    out[k0] = vmax
                    k0 += 1
                    if k0 > kplus:
                        break
                k = kplus = k0
                vmax = y[k]
                umax = -lam
                umin = vmax + umax - vmin
            else:
                vmin += umin / (k - k0 + 1)
                while k0 <= k:
                    out[k0] = vmin
                    k0 += 1
                return out
        umin += y[k + 1] - vmin
        if umin < -lam:
            while True:
                out[k0] = vmin
                k0 += 1
                if k0 > kminus:
                    break
            k = kplus = kminus = k0
            vmin = y[k]
            vmax = vmin + twolam
            umin, umax = lam, -lam
            continue
        umax += y[k + 1] - vmax
        if umax > lam:
            while True:
                out[k0] = vmax
                k0 += 1
                if k0 > kplus:
                    break
            k = kplus = kminus = k0
            vmax = y[k]
            vmin = vmax - twolam
            umin, umax = lam, -lam
            continue
        k += 1
        if umin >= lam:
            kminus = k
            vmin += (umin - lam) / (kminus - k0 + 1)
            umin = lam
        if umax <= -lam:
            kplus = k
            vmax += (umax + lam) / (kplus - k0 + 1)
            umax = -lam


def tv_prox_1d(r, lam):
    """Exact 1D TV denoising of a column, real and imaginary parts separately."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    r = np.asarray(r)
    re = np.array(_tv1d_real(r.real.astype(float).tolist(), float(lam)))
    if not np.iscomplexobj(r):
        return re
    im = np.array(_tv1d_real(r.imag.astype(float).tolist(), float(lam)))
    return re + 1j * im


def tv_prox_columns(x, lam):
    """:func:`tv_prox_1d` on every column of a (B, N, M) batch."""
    out = np.empty_like(x, dtype=np.complex128)
    for b in range(x.shape[0]):
        for i in range(x.shape[2]):
            out[b, :, i] = tv_prox_1d(x[b, :, i].astype(np.complex128), lam)
    return out


def _grad2(u):
    gx = np.zeros_like(u)
    gy = np.zeros_like(u)
    gx[..., :-1, :] = u[..., 1:, :] - u[..., :-1, :]
    gy[..., :, :-1] = u[..., :, 1:] - u[..., :, :-1]
    return gx, gy


def _div2(px, py):
    d = np.zeros_like(px)
    d[..., 0, :] += px[..., 0, :]
    d[..., 1:-1, :] += px[..., 1:-1, :] - px[..., :-2, :]
    d[..., -1, :] -= px[..., -2, :]
    d[..., :, 0] += py[..., :, 0]
    d[..., :, 1:-1] += py[..., :, 1:-1] - py[..., :, :-2]
    d[..., :, -1] -= py[..., :, -2]
    return d


def _tv2d_real(f, lam, iterations):
    tau = 0.249
    px = np.zeros_like(f)
    py = np.zeros_like(f)
    for _ in range(iterations):
        gx, gy = _grad2(_div2(px, py) - f / lam)
        norm = 1.0 + tau * np.sqrt(gx**2 + gy**2)
        px = (px + tau * gx) / norm
        py = (py + tau * gy) / norm
    return f - lam * _div2(px, py)


def tv_prox_2d(x, lam, iterations=100):
    """Approximate isotropic TV denoising (Chambolle), real/imag separately."""
    x = np.asarray(x, dtype=np.complex128)
    return _tv2d_real(x.real, lam, iterations) + 1j * _tv2d_real(x.imag, lam, iterations)
