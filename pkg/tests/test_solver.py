import copy

import numpy as np
import pytest

from aliasnet.config import ReconConfig
from aliasnet.denoisers import TV1d, Cnn1dWeights, Cnn2dWeights
from aliasnet.metrics import psnr
from aliasnet.phantom import gen_phantom, piecewise_constant_column, random_spec
from aliasnet.sampling import apply_mask, full_mask, gen_gaussian_mask
from aliasnet.solver import (
    ModelBundle,
    ModelMismatchError,
    data_consistency,
    pg_1d,
    recon_am,
    solve_GF,
    solve_GP,
    zero_fill,
)
from aliasnet.tensor_domain import ComplexGrid, Domain, dft2d, idft2d, idft_fe

from conftest import random_grid, rel_err

# frozen reference values (see scripts/freeze_goldens.py)
ZERO_FILL_PSNR_R4 = 20.426863547539288
PG_TV_PSNR_TWO_PLATEAU = 53.49837311924308


@pytest.fixture
def phantom():
    return gen_phantom(random_spec(64, 64, seed=123))


def column_measurements(u, mask):
    v = np.fft.fft(u, norm="ortho") * mask.flags
    return v, np.fft.ifft(v, norm="ortho")


# ---------------------------------------------------------------- pg_1d


def test_pg_full_mask_fixed_point():
    u = np.random.default_rng(0).standard_normal(16) + 0j
    v, u0 = column_measurements(u, full_mask(16))
    out = pg_1d(u0, v, full_mask(16), [Cnn1dWeights.zeros()])
    np.testing.assert_allclose(out, u0, atol=1e-12)


def test_pg_zero_filled_start_is_fixed_point(golden_mask):
    u = np.random.default_rng(1).standard_normal(64) + 1j
    v, u0 = column_measurements(u, golden_mask)
    out = pg_1d(u0, v, golden_mask, [Cnn1dWeights.zeros(rho=1.0)] * 3)
    np.testing.assert_allclose(out, u0, atol=1e-12)


def test_pg_length_errors(golden_mask):
    with pytest.raises(ValueError):
        pg_1d(np.zeros(32), np.zeros(32), golden_mask, [TV1d(0.1)])
    with pytest.raises(ValueError):
        pg_1d(np.zeros(64), np.zeros(64), golden_mask, [])


def test_pg_tv_recovers_piecewise_constant():
    mask = gen_gaussian_mask(64, 2, 64 / 6, 4, 7)
    u = piecewise_constant_column(64, 2, 0)
    v, u0 = column_measurements(u, mask)
    out = pg_1d(u0, v, mask, [TV1d(0.05)] * 50)
    assert psnr(u, out) >= psnr(u, u0) + 10
    assert psnr(u, out) >= PG_TV_PSNR_TWO_PLATEAU - 0.01


# ---------------------------------------------------------------- sweeps


def identity_modules(n):
    return [Cnn1dWeights.zeros() for _ in range(n)]


def test_gf_identity_and_full_sampling(phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    x = zero_fill(y, golden_mask)
    out = solve_GF(x, y, golden_mask, identity_modules(3))
    assert rel_err(out, x) <= 1e-12
    yf = dft2d(phantom)
    xf = idft2d(yf)
    assert rel_err(solve_GF(xf, yf, full_mask(64), identity_modules(2)), xf) <= 1e-12


def test_gp_identity_and_full_sampling(phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    x = zero_fill(y, golden_mask)
    assert rel_err(solve_GP(x, y, golden_mask, identity_modules(2)), x) <= 1e-12
    yf = dft2d(phantom)
    xf = idft2d(yf)
    assert rel_err(solve_GP(xf, yf, full_mask(64), identity_modules(1)), xf) <= 1e-12


def test_gf_tv_sweep_improves_phantom(golden_mask):
    for seed in range(3):
        x0 = gen_phantom(random_spec(64, 64, seed=seed, phase_mode="real"))
        y = apply_mask(dft2d(x0), golden_mask)
        xz = zero_fill(y, golden_mask)
        out = solve_GF(xz, y, golden_mask, [TV1d(0.01)] * 5)
        assert psnr(x0, out) > psnr(x0, xz)


def test_gf_column_independence(phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    x = zero_fill(y, golden_mask)
    mods = [Cnn1dWeights.init(s) for s in range(2)]
    base = solve_GF(x, y, golden_mask, mods).data
    v = idft_fe(y).data.copy()
    j = 17
    v[golden_mask.flags, j] += 0.3 - 0.1j
    y2 = ComplexGrid(np.fft.fft(v, axis=1, norm="ortho"), Domain.KSPACE)
    pert = solve_GF(x, y2, golden_mask, mods).data
    changed = np.flatnonzero(np.abs(pert - base).max(axis=0) > 1e-13)
    assert list(changed) == [j]


def test_threaded_sweep_matches_serial(phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    x = zero_fill(y, golden_mask)
    mods = [Cnn1dWeights.init(3), Cnn1dWeights.init(4)]
    a = solve_GF(x, y, golden_mask, mods).data
    b = solve_GF(x, y, golden_mask, mods, threads=3).data
    np.testing.assert_allclose(a, b, atol=1e-13)


# ---------------------------------------------------------------- data consistency


def test_data_consistency(phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    x = random_grid(64, 64, 9)
    d1 = data_consistency(x, y, golden_mask)
    d2 = data_consistency(d1, y, golden_mask)
    assert rel_err(d2, d1) <= 1e-12
    resid = apply_mask(dft2d(d1), golden_mask).data - y.data
    assert np.linalg.norm(resid) <= 1e-10
    consistent = zero_fill(y, golden_mask)
    assert rel_err(data_consistency(consistent, y, golden_mask), consistent) <= 1e-12


# ---------------------------------------------------------------- zero fill and cascade


def test_zero_fill(phantom, golden_mask):
    y = dft2d(phantom)
    assert rel_err(zero_fill(y, full_mask(64)), idft2d(y)) <= 1e-12
    a = 2.0 - 3.0j
    lhs = zero_fill(ComplexGrid(a * y.data, Domain.KSPACE), golden_mask).data
    rhs = a * zero_fill(y, golden_mask).data
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)
    assert psnr(phantom, zero_fill(y, golden_mask)) == pytest.approx(ZERO_FILL_PSNR_R4, abs=1e-9)


def test_recon_collapses_to_zero_fill(phantom, golden_mask):
    cfg = ReconConfig(n_p=0, n_f=0, n_d=3, regularizer_2d="none")
    y = apply_mask(dft2d(phantom), golden_mask)
    out = recon_am(y, golden_mask, cfg, ModelBundle.identity(cfg))
    assert rel_err(out, zero_fill(y, golden_mask)) <= 1e-12


def test_recon_full_mask_identity(phantom):
    cfg = ReconConfig(n_p=1, n_f=2, n_d=2, cnn2d_depth=2, cnn2d_features=4)
    y = dft2d(phantom)
    out = recon_am(y, full_mask(64), cfg, ModelBundle.identity(cfg))
    assert rel_err(out, idft2d(y)) <= 1e-10


@pytest.mark.parametrize(
    "cfg",
    [
        ReconConfig(n_p=1, n_f=2, n_d=2, cnn2d_depth=2, cnn2d_features=4),
        ReconConfig(n_p=1, n_f=1, n_d=2, sharing="unshared", regularizer_2d="none"),
        ReconConfig(n_p=0, n_f=2, n_d=1, regularizer_1d="tv", tv_lambda=0.01, regularizer_2d="tv2d"),
    ],
    ids=["shared-cnn", "unshared-no2d", "tv"],
)
def test_recon_output_is_consistent(cfg, phantom, golden_mask):
    y = apply_mask(dft2d(phantom), golden_mask)
    out = recon_am(y, golden_mask, cfg, ModelBundle.init(cfg, 1))
    resid = apply_mask(dft2d(out), golden_mask).data - y.data
    assert np.linalg.norm(resid) <= 1e-10


def test_unshared_copies_equal_shared(phantom, golden_mask):
    shared = ReconConfig(n_p=1, n_f=2, n_d=3, cnn2d_depth=2, cnn2d_features=4)
    unshared = ReconConfig(**{**shared.__dict__, "sharing": "unshared"})
    m = ModelBundle.init(shared, 2)
    mu = ModelBundle(
        [copy.deepcopy(mod) for _ in range(3) for mod in m.gp],
        [copy.deepcopy(mod) for _ in range(3) for mod in m.gf],
        m.d2,
    )
    y = apply_mask(dft2d(phantom), golden_mask)
    a = recon_am(y, golden_mask, shared, m).data
    b = recon_am(y, golden_mask, unshared, mu).data
    assert a.tobytes() == b.tobytes()


def test_model_mismatch_detected(golden_mask):
    cfg = ReconConfig(n_p=1, n_f=5, n_d=5, cnn2d_features=4)
    y = ComplexGrid(np.zeros((64, 8)), Domain.KSPACE)
    good = ModelBundle.init(cfg, 0)
    with pytest.raises(ModelMismatchError):
        recon_am(y, golden_mask, cfg, ModelBundle(good.gp, good.gf[:4], good.d2))
    with pytest.raises(ModelMismatchError):
        recon_am(y, golden_mask, ReconConfig(**{**cfg.__dict__, "sharing": "unshared"}), good)
    with pytest.raises(ModelMismatchError):
        recon_am(y, golden_mask, cfg, ModelBundle(good.gp, good.gf, [None] * 5))
    shared_mod = good.gp[0]
    with pytest.raises(ModelMismatchError):
        recon_am(y, golden_mask, cfg, ModelBundle([shared_mod], [shared_mod] + good.gf[1:], good.d2))


def test_model_bundle_parameters_round_trip():
    cfg = ReconConfig(n_p=1, n_f=2, n_d=2, sharing="unshared", cnn2d_depth=2, cnn2d_features=4)
    m = ModelBundle.init(cfg, 0)
    assert len(m.gp) == 2 and len(m.gf) == 4 and len(m.d2) == 2
    params = m.parameters()
    assert sum(p.size for p in params[: 6 * 7]) == 6 * 883
    m2 = m.with_parameters([p * 2 for p in params])
    np.testing.assert_array_equal(m2.gf[1].kernels[0], 2 * m.gf[1].kernels[0])
    assert isinstance(m2.d2[0], Cnn2dWeights)
