"""Column-decoupled compressed-sensing reconstruction for phase-encode undersampled MRI."""

from .config import PhantomSpec, ReconConfig, RunConfig, TrainConfig
from .denoisers import (
    TV1d,
    TV2d,
    Cnn1dWeights,
    Cnn2dWeights,
    cnn2d_forward,
    gcnn_forward,
    param_count,
    tv_prox_1d,
)
from .metrics import MetricReport, psnr, ssim
from .sampling import Mask1D, apply_mask, gen_gaussian_mask, psf, undersample
from .solver import (
    ModelBundle,
    data_consistency,
    pg_1d,
    recon_am,
    solve_GF,
    solve_GP,
    zero_fill,
)
from .tensor_domain import (
    ComplexGrid,
    Domain,
    dft2d,
    dft_fe,
    dft_pe,
    get_column,
    idft2d,
    idft_fe,
    idft_pe,
    set_column,
)

__version__ = "0.1.0"
