"""Multi-domain loss, Adam, the training loop and finite-difference checks."""

import copy
import logging
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .config import ReconConfig, TrainConfig
from .denoisers import Cnn1dWeights
from .metrics import psnr
from .rng import derive_seed
from .solver import ModelBundle, recon_batch

log = logging.getLogger(__name__)


# ---------------------------------------------------------------- loss


def loss_tensor(x0, y0, xhat, tau_k=0.1, tau_p=0.3, tau_f=0.3):
    """Batch-mean multi-domain L1 loss; ``xhat`` may be a Tensor.

    L = |x0 - xh| + tau_k |y0 - yh| + tau_p |F_pe^H (y0 - yh)| + tau_f |F_fe^H (y0 - yh)|
    with yh = F xh and |.| summing |re| + |im|.
    """
    x0 = np.asarray(x0)
    batch = x0.shape[0] if x0.ndim == 3 else 1
    yhat = ad.fft2c(xhat)
    dy = ad.sub(y0, yhat)
    terms = [ad.l1(ad.sub(x0, xhat))]
    if tau_k:
        terms.append(ad.mul_const(ad.l1(dy), tau_k))
    if tau_p:
        terms.append(ad.mul_const(ad.l1(ad.ifft_pe(dy)), tau_p))
    if tau_f:
        terms.append(ad.mul_const(ad.l1(ad.ifft_fe(dy)), tau_f))
    return ad.mul_const(ad.stack_sum(terms), 1.0 / batch)


def loss(x0, y0, xhat, tau_k=0.1, tau_p=0.3, tau_f=0.3):
    """Multi-domain loss of a single reconstruction (grids in, float out)."""
    out = loss_tensor(x0.data, y0.data, xhat.data, tau_k, tau_p, tau_f)
    return float(ad.value(out))


# ---------------------------------------------------------------- Adam


@dataclass
class AdamState:
    m: list
    v: list
    step: int = 0

    @classmethod
    def zeros_like(cls, params):
        return cls([np.zeros_like(p) for p in params], [np.zeros_like(p) for p in params], 0)


def adam_step(params, grads, state, cfg, rho_mask=None):
    """One bias-corrected Adam update; step sizes flagged in ``rho_mask`` are clamped."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params, grads and optimizer state disagree in length")
    t = state.step + 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    new_params, new_m, new_v = [], [], []
    for j, (p, g, m, v) in enumerate(zip(params, grads, state.m, state.v)):
        if p.shape != g.shape:
            raise ValueError(f"parameter {j}: shape {p.shape} vs gradient {g.shape}")
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        p = p - cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
        if rho_mask is not None and rho_mask[j]:
            p = np.maximum(p, cfg.rho_min)
        new_params.append(p)
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(new_m, new_v, t)


def rho_mask(model):
    flags = []
    for mod in model.learned():
        n = len(mod.parameters())
        flags += [isinstance(mod, Cnn1dWeights) and j == n - 1 for j in range(n)]
    return flags


# ---------------------------------------------------------------- gradients


def loss_and_grads(model, x0, y, mask, recon_cfg, train_cfg):
    """Loss of a batch and its gradient w.r.t. ``model.parameters()``."""
    params = model.parameters()
    leaves = [ad.Tensor(p) for p in params]
    tracked = model.with_parameters(leaves)
    y0 = np.fft.fft2(x0, axes=(-2, -1), norm="ortho")
    with ad.Tape() as tape:
        xhat = recon_batch(y, mask, recon_cfg, tracked)
        out = loss_tensor(x0, y0, xhat, train_cfg.tau_k, train_cfg.tau_p, train_cfg.tau_f)
    grads = tape.gradient(out, leaves)
    return float(out.value), grads


def eval_loss(model, x0, y, mask, recon_cfg, train_cfg):
    y0 = np.fft.fft2(x0, axes=(-2, -1), norm="ortho")
    xhat = recon_batch(y, mask, recon_cfg, model)
    return float(loss_tensor(x0, y0, xhat, train_cfg.tau_k, train_cfg.tau_p, train_cfg.tau_f).value)


# ---------------------------------------------------------------- training


@dataclass
class TrainResult:
    model: ModelBundle
    history: list = field(default_factory=list)
    best_epoch: int = 0


def measure(x0, y, mask):
    m = mask.as_array()
    return np.asarray(y) * m if y is not None else np.fft.fft2(x0, axes=(-2, -1), norm="ortho") * m


def _batched(fn, x0, y, chunk):
    vals = []
    for s in range(0, x0.shape[0], chunk):
        vals.append(fn(x0[s:s + chunk], y[s:s + chunk]) * min(chunk, x0.shape[0] - s))
    return sum(vals) / x0.shape[0]


def mean_psnr(model, x0, y, mask, recon_cfg, chunk=10):
    scores = []
    for s in range(0, x0.shape[0], chunk):
        xhat = recon_batch(y[s:s + chunk], mask, recon_cfg, model).value
        scores += [psnr(a, b) for a, b in zip(x0[s:s + chunk], xhat)]
    return float(np.mean(scores))


def train(train_x, val_x, mask, cfg=None, recon_cfg=None, model=None, callback=None):
    """Mini-batch Adam on the multi-domain loss.

    Returns the parameters with the lowest validation loss seen at the end of
    any epoch, plus the per-epoch history.
    """
    cfg = TrainConfig() if cfg is None else cfg
    recon_cfg = ReconConfig() if recon_cfg is None else recon_cfg
    train_x = np.asarray(train_x, dtype=np.complex128)
    val_x = np.asarray(val_x, dtype=np.complex128)
    if train_x.ndim != 3 or train_x.shape[0] == 0:
        raise ValueError("training set is empty")
    if val_x.ndim != 3 or val_x.shape[0] == 0:
        raise ValueError("validation set is empty")
    if recon_cfg.regularizer_1d != "cnn" or recon_cfg.regularizer_2d == "tv2d":
        raise ValueError("only learned regularisers can be trained")
    if model is None:
        model = ModelBundle.init(recon_cfg, cfg.seed)
    train_y = measure(train_x, None, mask)
    val_y = measure(val_x, None, mask)
    flags = rho_mask(model)
    params = model.parameters()
    state = AdamState.zeros_like(params)
    shuffle = np.random.default_rng(derive_seed(cfg.seed, "shuffle"))
    best = (np.inf, model, 0)
    history = []
    for epoch in range(1, cfg.epochs + 1):
        order = shuffle.permutation(train_x.shape[0])
        losses = []
        for s in range(0, len(order), cfg.batch_size):
            idx = order[s:s + cfg.batch_size]
            value, grads = loss_and_grads(
                model, train_x[idx], train_y[idx], mask, recon_cfg, cfg
            )
            params, state = adam_step(params, grads, state, cfg, flags)
            model = model.with_parameters(params)
            losses.append(value * len(idx))
        train_loss = sum(losses) / len(order)
        val_loss = _batched(
            lambda a, b: eval_loss(model, a, b, mask, recon_cfg, cfg), val_x, val_y, cfg.batch_size
        )
        val_psnr = mean_psnr(model, val_x, val_y, mask, recon_cfg, cfg.batch_size)
        row = {"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss, "val_psnr": val_psnr}
        history.append(row)
        log.info("epoch %d train %.5f val %.5f psnr %.3f", epoch, train_loss, val_loss, val_psnr)
        if callback is not None:
            callback(row)
        if val_loss < best[0]:
            best = (val_loss, copy.deepcopy(model), epoch)
    return TrainResult(best[1], history, best[2])


# ---------------------------------------------------------------- gradient check


def fd_gradients(fn, params, h=1e-5, select=None):
    """Central differences of scalar ``fn(params)`` for every (or selected) scalar."""
    out = []
    for j, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            if select is not None and not select(j, idx):
                continue
            orig = p[idx]
            p[idx] = orig + h
            fp = fn(params)
            p[idx] = orig - h
            fm = fn(params)
            p[idx] = orig
            g[idx] = (fp - fm) / (2 * h)
        out.append(g)
    return out


def relative_errors(analytic, numeric, floor=1e-6):
    """Elementwise ``|a - n| / max(|a|, |n|, floor)`` flattened per parameter."""
    errs = []
    for a, n in zip(analytic, numeric):
        errs.append(np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor))
    return errs


def gradcheck(recon_cfg, train_cfg, x0, mask, model, h=1e-5, floor=1e-4):
    """Compare tape gradients with central differences for every parameter.

    Returns a report dict with the worst relative error per parameter class.
    """
    x0 = np.asarray(x0, dtype=np.complex128)
    y = measure(x0, None, mask)
    _, analytic = loss_and_grads(model, x0, y, mask, recon_cfg, train_cfg)
    params = [p.copy() for p in model.parameters()]

    def f(ps):
        return eval_loss(model.with_parameters(ps), x0, y, mask, recon_cfg, train_cfg)

    numeric = fd_gradients(f, params, h)
    errs = relative_errors(analytic, numeric, floor)
    classes = {}
    pos = 0
    for mod in model.learned():
        n = len(mod.parameters())
        kind = "1d" if isinstance(mod, Cnn1dWeights) else "2d"
        for j in range(n):
            if kind == "1d" and j == n - 1:
                name = "rho"
            else:
                name = f"{kind}_{'kernel' if j % 2 == 0 else 'bias'}"
            e = float(errs[pos + j].max()) if errs[pos + j].size else 0.0
            classes[name] = max(classes.get(name, 0.0), e)
        pos += n
    worst = max(classes.values()) if classes else 0.0
    return {"max_rel_err": worst, "per_class": classes, "n_params": int(sum(p.size for p in params))}
