"""Prior-regularized single-image super-resolution, built from first principles.

A small convolutional network maps bicubic-upscaled low-resolution images to
high-resolution ones. Training couples the reconstruction error with a
differentiable rank surrogate, a variance-of-Laplacian sharpness measure
generalized to a learnable filter bank, and a patch-driven score on that
bank. All gradients are derived by hand and checked against finite
differences.
"""

__version__ = "0.1.0"

from .checkpoint import (
    Checkpoint,
    CheckpointError,
    CheckpointVersionError,
    load_checkpoint,
    save_checkpoint,
)
from .data import (
    PatchDataset,
    PatchPair,
    build_patch_dataset,
    crop_to_multiple,
    extract_patches,
    select_sharp_smooth,
    simulate_lr,
    synthetic_textures,
)
from .gradcheck import run_checks
from .imageops import (
    Padding,
    SvdResult,
    bicubic_resize,
    conv2d_adjoint,
    conv2d_kernel_grad,
    conv2d_same,
    downsample,
    gaussian_blur,
    svd,
    truncate_svd,
)
from .metrics import MetricReport, StudyRow, psnr, rank_study, sharpness_study, ssim
from .network import (
    Activation,
    ConvLayer,
    ForwardCache,
    LayerSpec,
    LossConfig,
    LossParts,
    backward,
    default_arch,
    forward,
    init_params,
    init_sharpness_bank,
    loss_dnsp,
    output_grad,
)
from .optim import AdamState, adam_step, sgd_step
from .priors import (
    LAPLACIAN,
    DegenerateSpectrumWarning,
    g_delta,
    laplacian_response,
    rank_surrogate,
    rank_surrogate_grad,
    sharpness_measure,
    sharpness_measure_grad,
    v_mod,
    v_mod_grad_filters,
    v_mod_grad_image,
    variance_of_laplacian,
    variance_of_laplacian_grad,
)
from .train import EpochStats, Optimizer, TrainConfig, infer, train, train_with_state
