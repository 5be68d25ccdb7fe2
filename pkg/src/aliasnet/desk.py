"""Desk-scale training experiment on synthetic phantoms."""

import time
from dataclasses import dataclass, field

import numpy as np

from .config import ReconConfig, TrainConfig
from .metrics import psnr
from .phantom import phantom_suite
from .sampling import gen_gaussian_mask
from .solver import _zero_fill
from .train import mean_psnr, measure, train


@dataclass
class DeskSetup:
    count: int = 200
    size: int = 64
    phantom_seed: int = 1000
    splits: tuple = (120, 40, 40)
    reduction: float = 4.0
    mask_seed: int = 7
    acs: int = 4
    epochs: int = 6
    learning_rate: float = 1e-3
    batch_size: int = 10
    seed: int = 0
    features_2d: int = 8


@dataclass
class DeskResult:
    sharing: str
    zero_fill_psnr: float
    test_psnr: float
    best_epoch: int
    seconds: float
    history: list = field(default_factory=list)

    @property
    def gain(self):
        return self.test_psnr - self.zero_fill_psnr


def desk_data(setup):
    x = phantom_suite(setup.count, setup.size, setup.size, seed=setup.phantom_seed)
    a, b, _ = setup.splits
    mask = gen_gaussian_mask(setup.size, setup.reduction, setup.size / 6, setup.acs, setup.mask_seed)
    return x[:a], x[a:a + b], x[a + b:], mask


def run_desk(sharing="shared", setup=None, data=None, log=None):
    """Train one configuration and score it on the held-out split."""
    setup = DeskSetup() if setup is None else setup
    tr, va, te, mask = desk_data(setup) if data is None else data
    recon = ReconConfig(sharing=sharing, cnn2d_features=setup.features_2d)
    cfg = TrainConfig(learning_rate=setup.learning_rate, epochs=setup.epochs,
                      batch_size=setup.batch_size, seed=setup.seed)
    y = measure(te, None, mask)
    zf = _zero_fill(y, mask.as_array())
    zf_psnr = float(np.mean([psnr(a, b) for a, b in zip(te, zf)]))
    t0 = time.perf_counter()
    res = train(tr, va, mask, cfg, recon, callback=log)
    score = mean_psnr(res.model, te, y, mask, recon, setup.batch_size)
    return DeskResult(sharing, zf_psnr, score, res.best_epoch, time.perf_counter() - t0, res.history)
