import numpy as np
import pytest

from aliasnet import autodiff as ad

rng = np.random.default_rng(0)


def crand(*shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def adjoint(op, u, w):
    """Apply the recorded backward rule of ``op`` at ``u`` to cotangent ``w``."""
    with ad.Tape():
        out = op(ad.Tensor(u))
    return out.value, out.vjp(w)[0]


def inner(a, b):
    return np.real(np.vdot(a, b))


MASK = (rng.random((1, 8, 1)) > 0.5).astype(float)
K1 = rng.standard_normal((3, 2, 5))
K2 = rng.standard_normal((4, 2, 3, 3))

LINEAR_OPS = {
    "fft_pe": (ad.fft_pe, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "ifft_pe": (ad.ifft_pe, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "fft_fe": (ad.fft_fe, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "ifft_fe": (ad.ifft_fe, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "fft2c": (ad.fft2c, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "ifft2c": (ad.ifft2c, lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "mask": (lambda t: ad.mul_const(t, MASK), lambda: crand(2, 8, 6), lambda: crand(2, 8, 6)),
    "cols_to_ch": (ad.columns_to_channels, lambda: crand(2, 8, 6), lambda: rng.standard_normal((2, 12, 8))),
    "ch_to_cols": (lambda t: ad.channels_to_columns(t, 2), lambda: rng.standard_normal((2, 12, 8)), lambda: crand(2, 8, 6)),
    "img_to_ch": (ad.image_to_channels, lambda: crand(2, 8, 6), lambda: rng.standard_normal((2, 2, 8, 6))),
    "ch_to_img": (ad.channels_to_image, lambda: rng.standard_normal((2, 2, 8, 6)), lambda: crand(2, 8, 6)),
    "conv1d": (lambda t: ad.conv1d(t, K1, np.zeros(3)), lambda: rng.standard_normal((2, 5, 11)), lambda: rng.standard_normal((3, 5, 11))),
    "conv2d": (lambda t: ad.conv2d(t, K2, np.zeros(4)), lambda: rng.standard_normal((2, 3, 7, 5)), lambda: rng.standard_normal((4, 3, 7, 5))),
}


@pytest.mark.parametrize("name", sorted(LINEAR_OPS))
def test_adjoint_dot_product(name):
    op, mk_u, mk_w = LINEAR_OPS[name]
    for _ in range(20):
        u, w = mk_u(), mk_w()
        au, ahw = adjoint(op, u, w)
        lhs, rhs = inner(au, w), inner(u, ahw)
        assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_conv_weight_gradients_match_fd():
    x = rng.standard_normal((2, 3, 9))
    w = rng.standard_normal((3, 2, 5))
    b = rng.standard_normal(3)
    c = rng.standard_normal((3, 3, 9))

    def f(wv):
        return float(np.sum(c * ad.conv1d(x, wv, b).value))

    # gradient of the linear functional sum(c * y) is the vjp of c
    with ad.Tape():
        y = ad.conv1d(ad.Tensor(x), ad.Tensor(w), ad.Tensor(b))
    _, gw, gb = y.vjp(c)
    h = 1e-6
    for idx in [(0, 0, 0), (2, 1, 4), (1, 0, 2)]:
        wp, wm = w.copy(), w.copy()
        wp[idx] += h
        wm[idx] -= h
        assert gw[idx] == pytest.approx((f(wp) - f(wm)) / (2 * h), rel=1e-7)
    np.testing.assert_allclose(gb, c.sum(axis=(1, 2)))


def test_scale_gradient():
    a = crand(3, 4)
    s = ad.Tensor(np.array(0.7))
    w = crand(3, 4)
    with ad.Tape():
        out = ad.scale(ad.Tensor(a), s)
    ga, gs = out.vjp(w)
    np.testing.assert_allclose(ga, 0.7 * w)
    assert gs == pytest.approx(np.sum(a.real * w.real + a.imag * w.imag))


def test_l1_subgradient_at_zero():
    x = ad.Tensor(np.array([0.0, 2.0, -1.0]))
    with ad.Tape() as tape:
        out = ad.l1(x)
    (g,) = tape.gradient(out, [x])
    np.testing.assert_array_equal(g, [0.0, 1.0, -1.0])


def test_leaky_relu_kink_uses_positive_slope():
    x = ad.Tensor(np.array([0.0, -1.0, 1.0]))
    with ad.Tape() as tape:
        out = ad.l1(ad.leaky_relu(x, 0.01))
    (g,) = tape.gradient(out, [x])
    np.testing.assert_allclose(g, [0.0, -0.01, 1.0])
    with ad.Tape():
        out = ad.leaky_relu(x, 0.01)
    np.testing.assert_allclose(out.vjp(np.ones(3))[0], [1.0, 0.01, 1.0])


def test_gradient_requires_recording():
    tape = ad.Tape()
    with pytest.raises(ad.UsageError):
        tape.gradient(ad.Tensor(np.array(1.0)), [])
    x = ad.Tensor(np.ones(3))
    y = ad.l1(x)  # not under a tape
    with ad.Tape() as tape:
        ad.l1(x)
    with pytest.raises(ad.UsageError):
        tape.gradient(y, [x])


def test_no_recording_outside_tape():
    x = ad.Tensor(np.ones(3))
    y = ad.l1(x)
    assert y.vjp is None and not ad.recording()


def test_shared_leaf_accumulates():
    x = ad.Tensor(np.array([1.0, -2.0]))
    with ad.Tape() as tape:
        out = ad.add(ad.l1(x), ad.l1(ad.mul_const(x, 3.0)))
    (g,) = tape.gradient(out, [x])
    np.testing.assert_allclose(g, [4.0, -4.0])
