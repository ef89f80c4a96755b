"""Palette-conditioned semantic layouts: SAA, conditional losses, palette GMM, editing and metrics."""

from .layout import (
    HardLayout,
    argmax_labeling,
    hard_histogram,
    soft_histogram,
    validate_palette,
)
from .saa import saa, sinkhorn, spatial_softmax, palette_weighting, pixel_normalize, residual_fusion
from .losses import (
    cond_loss,
    cond_loss_grad,
    entropy_loss,
    matching_loss,
    multiscale_cond_loss,
    novelty_loss,
    spread_loss,
)
from .palette_model import GmmModel, fit_gmm, project_simplex, sample_palette, select_components
from .transforms import (
    EditRegion,
    edited_pixel_set,
    gumbel_sample,
    mark_crop,
    merge_edit,
    one_hot,
    soften_ground_truth,
)
from .metrics import frechet_distance, population_stats, proportion_kl
from .synth import SynthesisConfig, gradcheck, synthesize, synthesize_edit

__version__ = "0.1.0"
