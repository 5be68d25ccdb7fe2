"""Minimal tape-based reverse-mode differentiation over numpy arrays.

Ops run eagerly.  While a :class:`Tape` is active each op also records a
vector-Jacobian product closure; ``Tape.gradient`` replays them backwards.

Complex arrays carry gradients as ``dL/dRe + 1j * dL/dIm`` for the real
loss ``L``.  Under that convention the backward rule of a complex-linear map
is its adjoint, so the unitary FFTs backpropagate through their inverses.
"""

import numpy as np

_TAPES = []


class UsageError(RuntimeError):
    pass


class Tensor:
    __slots__ = ("value", "parents", "vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = value
        self.parents = parents
        self.vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    def __repr__(self):
        return f"Tensor(shape={self.value.shape}, dtype={self.value.dtype})"


def tensor(x):
    return x if isinstance(x, Tensor) else Tensor(np.asarray(x))


def value(x):
    return x.value if isinstance(x, Tensor) else x


def recording():
    return bool(_TAPES)


def _emit(val, parents, vjp):
    out = Tensor(val)
    if _TAPES:
        out.parents = parents
        out.vjp = vjp
        _TAPES[-1].nodes.append(out)
    return out


class Tape:
    """Records a forward pass for a single reverse sweep.

    >>> with Tape() as tape:
    ...     loss = l1(sub(x, y))
    >>> gx, = tape.gradient(loss, [x])
    """

    def __init__(self):
        self.nodes = []

    def __enter__(self):
        _TAPES.append(self)
        return self

    def __exit__(self, *exc):
        _TAPES.remove(self)
        return False

    def gradient(self, target, sources):
        if not self.nodes:
            raise UsageError("gradient() called without a recorded forward pass")
        if not any(n is target for n in self.nodes):
            raise UsageError("target was not produced under this tape")
        grads = {id(target): np.ones_like(target.value)}
        for node in reversed(self.nodes):
            g = grads.pop(id(node), None)
            if g is None:
                continue
            for parent, pg in zip(node.parents, node.vjp(g)):
                if pg is None:
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        return [grads.get(id(s), np.zeros_like(s.value)) for s in sources]


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _match(g, like):
    # real leaves receive the real part of a complex cotangent
    if not np.iscomplexobj(like) and np.iscomplexobj(g):
        return g.real
    return g


def add(a, b):
    a, b = tensor(a), tensor(b)
    av, bv = a.value, b.value
    return _emit(
        av + bv,
        (a, b),
        lambda g: (_match(_unbroadcast(g, av.shape), av), _match(_unbroadcast(g, bv.shape), bv)),
    )


def sub(a, b):
    a, b = tensor(a), tensor(b)
    av, bv = a.value, b.value
    return _emit(
        av - bv,
        (a, b),
        lambda g: (_match(_unbroadcast(g, av.shape), av), _match(_unbroadcast(-g, bv.shape), bv)),
    )


def mul_const(a, c):
    """Multiply by a constant (real) array or scalar."""
    a = tensor(a)
    c = np.asarray(c)
    return _emit(a.value * c, (a,), lambda g: (_unbroadcast(g * c, a.value.shape),))


def scale(a, s):
    """``s * a`` for a differentiable real scalar tensor ``s``."""
    a, s = tensor(a), tensor(s)
    av, sv = a.value, s.value
    return _emit(
        sv * av,
        (a, s),
        lambda g: (sv * g, np.asarray(np.real(np.vdot(av, g)), dtype=sv.dtype).reshape(sv.shape)),
    )


def _fft_op(fwd, inv):
    def op(a):
        a = tensor(a)
        return _emit(fwd(a.value), (a,), lambda g: (inv(g),))

    return op


def _axis_fft(axis, inverse):
    f = np.fft.ifft if inverse else np.fft.fft
    return lambda v: f(v, axis=axis, norm="ortho")


fft_pe = _fft_op(_axis_fft(-2, False), _axis_fft(-2, True))
ifft_pe = _fft_op(_axis_fft(-2, True), _axis_fft(-2, False))
fft_fe = _fft_op(_axis_fft(-1, False), _axis_fft(-1, True))
ifft_fe = _fft_op(_axis_fft(-1, True), _axis_fft(-1, False))
fft2c = _fft_op(
    lambda v: np.fft.fft2(v, axes=(-2, -1), norm="ortho"),
    lambda v: np.fft.ifft2(v, axes=(-2, -1), norm="ortho"),
)
ifft2c = _fft_op(
    lambda v: np.fft.ifft2(v, axes=(-2, -1), norm="ortho"),
    lambda v: np.fft.fft2(v, axes=(-2, -1), norm="ortho"),
)


def columns_to_channels(x):
    """(B, N, M) complex -> (2, B*M, N) real; one signal per image column."""
    x = tensor(x)
    b, n, m = x.value.shape
    cols = np.moveaxis(x.value, 2, 1).reshape(b * m, n)
    out = np.stack([cols.real, cols.imag], axis=0)

    def vjp(g):
        c = (g[0] + 1j * g[1]).reshape(b, m, n)
        return (np.moveaxis(c, 1, 2),)

    return _emit(out, (x,), vjp)


def channels_to_columns(c, batch):
    """Inverse of :func:`columns_to_channels`."""
    c = tensor(c)
    _, k, n = c.value.shape
    m = k // batch
    z = (c.value[0] + 1j * c.value[1]).reshape(batch, m, n)
    out = np.moveaxis(z, 1, 2)

    def vjp(g):
        cols = np.moveaxis(g, 2, 1).reshape(k, n)
        return (np.stack([cols.real, cols.imag], axis=0),)

    return _emit(out, (c,), vjp)


def image_to_channels(x):
    """(B, N, M) complex -> (2, B, N, M) real."""
    x = tensor(x)
    out = np.stack([x.value.real, x.value.imag], axis=0)
    return _emit(out, (x,), lambda g: (g[0] + 1j * g[1],))


def channels_to_image(c):
    c = tensor(c)
    out = c.value[0] + 1j * c.value[1]
    return _emit(out, (c,), lambda g: (np.stack([g.real, g.imag], axis=0),))


# Convolutions run on a channel-major flat layout: every signal (or image)
# is zero-padded and laid end to end, so each kernel tap is one matmul over
# a contiguous slice.  Outputs that straddle two signals land in the padding
# gaps and are discarded.


def _pad_flat(x, pads):
    c = x.shape[0]
    xp = np.zeros((c,) + tuple(n + 2 * p for n, p in zip(x.shape[1:], (0,) + pads)), x.dtype)
    xp[(slice(None), slice(None)) + tuple(slice(p, p + n) for n, p in zip(x.shape[2:], pads))] = x
    return xp, xp.reshape(c, -1)


def _taps(w):
    """Kernel taps as (offset-tuple, (Cout, Cin) matrix) pairs."""
    return [(idx, np.ascontiguousarray(w[(slice(None), slice(None)) + idx]))
            for idx in np.ndindex(*w.shape[2:])]


def _tap_shift(idx, padded_shape):
    shift = 0
    stride = 1
    for i, n in zip(reversed(idx), reversed(padded_shape)):
        shift += i * stride
        stride *= n
    return shift


def _flat_corr(flat, w, padded_shape, span):
    cout = w.shape[0]
    total = flat.shape[1]
    t = total - span
    out = np.zeros((cout, total))
    acc = out[:, :t]
    for idx, mat in _taps(w):
        s = _tap_shift(idx, padded_shape)
        acc += mat @ flat[:, s:s + t]
    return out


def _conv_nd(x, w, b):
    x, w, b = tensor(x), tensor(w), tensor(b)
    xv, wv = x.value, w.value
    ks = wv.shape[2:]
    pads = tuple(k // 2 for k in ks)
    spatial = xv.shape[2:]
    xp, flat = _pad_flat(xv, pads)
    padded = xp.shape[2:]
    span = _tap_shift(tuple(k - 1 for k in ks), padded)
    crop = (slice(None), slice(None)) + tuple(slice(0, n) for n in spatial)
    bshape = (-1,) + (1,) * (xv.ndim - 1)

    def run(fl, kernel):
        o = _flat_corr(fl, kernel, padded, span).reshape((kernel.shape[0],) + xp.shape[1:])
        return o[crop]

    out = run(flat, wv) + b.value.reshape(bshape)

    def vjp(g):
        gl = np.zeros((g.shape[0],) + xp.shape[1:])
        gl[crop] = g
        gflat = gl.reshape(g.shape[0], -1)
        t = flat.shape[1] - span
        gw = np.empty_like(wv)
        for idx, _ in _taps(wv):
            s = _tap_shift(idx, padded)
            gw[(slice(None), slice(None)) + idx] = gflat[:, :t] @ flat[:, s:s + t].T
        gb = g.sum(axis=tuple(range(1, g.ndim)))
        # input gradient: correlate the padded cotangent with the flipped,
        # channel-transposed kernel
        wt = np.swapaxes(wv, 0, 1)[(slice(None), slice(None)) + (slice(None, None, -1),) * len(ks)]
        _, gpf = _pad_flat(g, pads)
        gx = run(gpf, np.ascontiguousarray(wt))
        return gx, gw, gb

    return _emit(out, (x, w, b), vjp)


def conv1d(x, w, b):
    """Zero-padded 'same' cross-correlation.

    x: (Cin, K, N), w: (Cout, Cin, L) with odd L, b: (Cout,) -> (Cout, K, N)
    """
    return _conv_nd(x, w, b)


def conv2d(x, w, b):
    """Zero-padded 'same' 2D cross-correlation.

    x: (Cin, B, H, W), w: (Cout, Cin, kh, kw) with odd sides, b: (Cout,)
    """
    return _conv_nd(x, w, b)


def leaky_relu(x, slope):
    """Leaky ReLU; the derivative at exactly 0 is taken from the positive side."""
    x = tensor(x)
    pos = x.value >= 0
    out = x.value * np.where(pos, 1.0, slope)
    return _emit(out, (x,), lambda g: (np.where(pos, g, slope * g),))


def l1(a):
    """Sum of ``|re| + |im|`` over all elements (plain ``|a|`` for real input)."""
    a = tensor(a)
    av = a.value
    if np.iscomplexobj(av):
        out = np.abs(av.real).sum() + np.abs(av.imag).sum()
        sgn = np.sign(av.real) + 1j * np.sign(av.imag)
    else:
        out = np.abs(av).sum()
        sgn = np.sign(av)
    return _emit(np.asarray(out), (a,), lambda g: (g * sgn,))


def stack_sum(terms):
    """Sum a list of scalar tensors."""
    out = terms[0]
    for t in terms[1:]:
        out = add(out, t)
    return out


def detached(fn, x):
    """Apply a non-differentiable array function; no gradient flows back."""
    x = tensor(x)
    return _emit(fn(x.value), (x,), lambda g: (None,))
