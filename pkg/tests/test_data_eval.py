import hashlib
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aliasnet.config import PhantomSpec, ReconConfig
from aliasnet.fileio import (
    FormatError,
    cks_bytes,
    export_pgm,
    load_weights,
    parse_weights,
    parse_cks,
    pgm_bytes,
    read_cks,
    read_manifest,
    read_pgm,
    save_weights,
    weights_bytes,
    write_cks,
    write_manifest,
)
from aliasnet.metrics import MetricReport, psnr, ssim
from aliasnet.phantom import PhantomError, gen_phantom, phantom_suite
from aliasnet.sampling import full_mask, psf
from aliasnet.solver import ModelBundle
from aliasnet.tensor_domain import ComplexGrid, Domain

SUITE_SHA256 = "99ca6a026d96f33bfee3b3c95fc62be8295b0173550c56adbbf49e10f6cdd70b"
CKS_UNIT_HEX = (
    "434b5331" "02000000" "02000000" "01"
    "0000803f" "00000000" "00000000" "0000803f"
    "000080bf" "00000000" "00000000" "000080bf"
)
PSF_R4_PGM_SHA256 = "2642c7703ed422f4d4fe9189b1db3668cb96a26f606f44583e88249ebb55fad9"


def rand_image(seed, shape=(16, 16)):
    return np.random.default_rng(seed).uniform(0, 1, shape)


# ---------------------------------------------------------------- psnr


def test_psnr_identical_is_inf():
    x = rand_image(0)
    assert psnr(x, x) == float("inf")


def test_psnr_constant_offset():
    x = rand_image(1) * 0.9
    assert psnr(x, x + 0.1) == pytest.approx(20.0, abs=1e-3)


def test_psnr_scalar_oracle():
    a, b = rand_image(2), rand_image(3)
    mse = sum((a[i, j] - b[i, j]) ** 2 for i in range(16) for j in range(16)) / 256
    assert abs(psnr(a, b) - 10 * math.log10(1 / mse)) <= 1e-10


def test_psnr_uses_magnitude():
    a = rand_image(4)
    phase = np.exp(1j * rand_image(5) * 6)
    assert psnr(a, a * phase) > 250


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(-3, 3))
def test_psnr_symmetric_and_shift_invariant(seed, c):
    a, b = rand_image(seed), rand_image(seed + 1)
    assert psnr(a, b) == pytest.approx(psnr(b, a), rel=1e-12)
    assert psnr(a + 5, b + 5) == pytest.approx(psnr(a, b), rel=1e-9)


# ---------------------------------------------------------------- ssim


def ssim_oracle(a, b, win=7):
    c1, c2 = 0.01**2, 0.03**2
    vals = []
    for i in range(a.shape[0] - win + 1):
        for j in range(a.shape[1] - win + 1):
            pa = a[i:i + win, j:j + win].ravel()
            pb = b[i:i + win, j:j + win].ravel()
            ma, mb = sum(pa) / pa.size, sum(pb) / pb.size
            va = sum((t - ma) ** 2 for t in pa) / pa.size
            vb = sum((t - mb) ** 2 for t in pb) / pb.size
            cv = sum((s - ma) * (t - mb) for s, t in zip(pa, pb)) / pa.size
            vals.append((2 * ma * mb + c1) * (2 * cv + c2) / ((ma**2 + mb**2 + c1) * (va + vb + c2)))
    return sum(vals) / len(vals)


def test_ssim_identical_exact():
    x = rand_image(6)
    assert ssim(x, x) == 1.0


def test_ssim_inverted_below_one():
    x = rand_image(7)
    assert ssim(x, 1 - x) < 1.0


def test_ssim_window_oracle():
    a, b = rand_image(8), rand_image(9)
    assert abs(ssim(a, b) - ssim_oracle(a, b)) <= 1e-10


def test_ssim_too_small():
    with pytest.raises(ValueError):
        ssim(np.zeros((6, 6)), np.zeros((6, 6)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_ssim_symmetric_and_self_one(seed):
    a, b = rand_image(seed, (9, 11)), rand_image(seed + 7, (9, 11))
    assert ssim(a, b) == pytest.approx(ssim(b, a), abs=1e-14)
    assert ssim(a, a) == 1.0


def test_metric_report_encodes_inf():
    x = rand_image(10)
    rep = MetricReport.compute([x, x], [x, x + 0.1])
    d = rep.to_dict()
    assert d["per_slice"][0]["psnr"] == "inf"
    assert d["per_slice"][1]["psnr"] == pytest.approx(20.0, abs=1e-9)


# ---------------------------------------------------------------- phantoms


def test_empty_phantom_is_zero():
    g = gen_phantom(PhantomSpec(n=16, m=12))
    assert g.shape == (16, 12) and not g.data.any()


def test_centered_ellipse_symmetric():
    spec = PhantomSpec(n=32, m=24, ellipses=[{"center": [0, 0], "axes": [0.6, 0.4], "intensity": 1.0}])
    img = gen_phantom(spec).data
    assert np.abs(img).max() == 1.0
    np.testing.assert_array_equal(img, img[::-1, ::-1])


def test_degenerate_axes_rejected():
    spec = PhantomSpec(n=16, m=16, ellipses=[{"center": [0, 0], "axes": [0.0, 0.4]}])
    with pytest.raises(PhantomError):
        gen_phantom(spec)


def test_phantom_too_small():
    with pytest.raises(ValueError):
        PhantomSpec(n=4, m=16)


def test_phantom_suite_hash():
    s = phantom_suite(200, 64, 64, seed=0)
    assert np.abs(s).max() <= 1.0
    assert hashlib.sha256(np.ascontiguousarray(s, "<c16").tobytes()).hexdigest() == SUITE_SHA256


# ---------------------------------------------------------------- CKS


def test_cks_unit_golden():
    data = np.array([[1, 0], [-1, 0]], float) + 1j * np.array([[0, 1], [0, -1]], float)
    buf = cks_bytes(ComplexGrid(data, Domain.KSPACE))
    assert len(buf) == 13 + 32
    assert buf.hex() == CKS_UNIT_HEX
    back = parse_cks(buf)
    assert back.domain is Domain.KSPACE
    np.testing.assert_array_equal(back.data, data)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 9), st.integers(1, 9), st.integers(0, 3), st.integers(0, 1000))
def test_cks_roundtrip(n, m, tag, seed):
    rng = np.random.default_rng(seed)
    data = (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))).astype(np.complex64)
    back = parse_cks(cks_bytes(ComplexGrid(data.astype(complex), Domain(tag))))
    np.testing.assert_array_equal(back.data, data)
    assert back.domain == Domain(tag)


def test_cks_file_roundtrip(tmp_path):
    g = ComplexGrid(np.arange(12).reshape(4, 3) * (1 + 0.5j), Domain.HYBRID_F)
    write_cks(g, tmp_path / "g.cks")
    np.testing.assert_array_equal(read_cks(tmp_path / "g.cks").data, g.data)


@pytest.mark.parametrize("cut", [0, 3, 10, 20, 44])
def test_cks_truncated(cut):
    buf = cks_bytes(ComplexGrid(np.ones((2, 2), complex), Domain.IMAGE))
    with pytest.raises(FormatError) as err:
        parse_cks(buf[:cut])
    assert "offset" in str(err.value)


def test_cks_bad_magic_and_tag():
    buf = bytearray(cks_bytes(ComplexGrid(np.ones((2, 2), complex), Domain.IMAGE)))
    with pytest.raises(FormatError):
        parse_cks(b"XKS1" + bytes(buf[4:]))
    buf[12] = 9
    with pytest.raises(FormatError) as err:
        parse_cks(bytes(buf))
    assert err.value.offset == 12


# ---------------------------------------------------------------- PGM


def test_pgm_zero(tmp_path):
    export_pgm(np.zeros((5, 7)), tmp_path / "z.pgm")
    img = read_pgm(tmp_path / "z.pgm")
    assert img.shape == (5, 7) and not img.any()


def test_pgm_delta_psf_centered(tmp_path):
    p = psf(full_mask(8), 8, 6)
    export_pgm(p, tmp_path / "d.pgm", shift=True)
    img = read_pgm(tmp_path / "d.pgm")
    assert img[4, 3] == 65535
    assert img.sum() == 65535


def test_pgm_psf_golden(golden_mask):
    p = psf(golden_mask, 64, 64)
    assert hashlib.sha256(pgm_bytes(p, shift=True)).hexdigest() == PSF_R4_PGM_SHA256


# ---------------------------------------------------------------- weights and manifests


@pytest.mark.parametrize("sharing", ["shared", "unshared"])
def test_weights_roundtrip_bit_exact(tmp_path, sharing):
    cfg = ReconConfig(sharing=sharing, n_d=2, cnn2d_depth=3, cnn2d_features=4)
    model = ModelBundle.init(cfg, 11)
    save_weights(model, tmp_path / "w.awt")
    back = load_weights(tmp_path / "w.awt")
    assert weights_bytes(back) == weights_bytes(model)
    for a, b in zip(model.parameters(), back.parameters()):
        np.testing.assert_array_equal(a, b)


def test_weights_truncated():
    buf = weights_bytes(ModelBundle.init(ReconConfig(cnn2d_depth=2, cnn2d_features=2), 0))
    with pytest.raises(FormatError):
        parse_weights(buf[:-3])


def test_manifest_roundtrip(tmp_path):
    items = [{"path": "a.cks", "split": "train"}, {"path": "b.cks", "split": "val"}]
    write_manifest(items, tmp_path / "m.json")
    out = read_manifest(tmp_path / "m.json")
    assert [split for _, split in out] == ["train", "val"]
    assert out[0][0] == tmp_path / "a.cks"
