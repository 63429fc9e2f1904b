"""Unsupervised change detection for imbalanced bi-temporal SAR imagery.

The pipeline builds a pooled multi-scale difference image, pseudo-labels
it with two fuzzy clustering runs in parallel, and trains a PCA-filter
network plus a linear classifier on the confident pseudo-labels to
resolve the ambiguous pixels. A deterministic synthetic scene generator
provides speckled test pairs with ground truth.
"""

from .ddi import (
    DdiParams,
    PoolKernel,
    cumulative_pool,
    deep_difference,
    kernel_mean,
    log_ratio,
    pool_kernel,
    weighted_pool,
)
from .errors import (
    DegenerateInputError,
    DegenerateTrainingError,
    FormatError,
    InternalError,
    ParameterError,
    SarcdError,
    UndefinedMetricError,
)
from .metrics import ConfusionCounts, confusion, evaluate, imbalance_ratio, kappa, pcc
from .pcanet import (
    PcanetModel,
    SampleSelection,
    balance_sample,
    batch_features,
    binarize_encode,
    extract_patches,
    features_for,
    histogram_feature,
    learn_pca_filters,
    load_model,
    save_model,
    stage_forward,
    train_pcanet,
)
from .pfcmc import (
    CHANGED,
    INTERMEDIATE,
    UNCHANGED,
    FcmResult,
    GaborBankConfig,
    PfcmcConfig,
    SigmoidParams,
    encode_labels,
    fcm,
    gabor_features,
    gabor_kernels,
    load_three_way,
    orient_labels,
    pfcmc,
    save_three_way,
    sigmoid_map,
)
from .pipeline import (
    PipelineConfig,
    PipelineResult,
    baseline_change_map,
    config_from_json,
    config_to_json,
    run_pipeline,
    sweep,
    sweep_csv,
)
from .raster import (
    load_binary,
    load_f32,
    load_pgm,
    normalize_center,
    save_binary,
    save_f32,
    save_pgm,
)
from .svm import SvmModel, load_svm, predict, predict_batch, save_svm, train_svm
from .synth import SceneSpec, generate_pair, scene_from_json, scene_to_json, speckle_field

__version__ = "0.1.0"
