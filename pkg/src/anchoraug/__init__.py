"""Anchor data augmentation (ADA) and anchor regression for regression tasks."""
from .anchors import (
    AnchorAssignment,
    CenteredDataset,
    CompactProjection,
    DenseProjection,
    ProjectionOperator,
    build_anchor_matrix,
    center_dataset,
    project_group_mean,
    projection_compact,
    projection_dense,
    projection_row_sum,
)
from .augment import (
    ADAHook,
    AnchorAugmenter,
    AugmentedBatch,
    CMixupAugmenter,
    GammaGrid,
    GammaPrior,
    MixupAugmenter,
    ada_minibatch,
    ada_transform,
    ar_transform,
    augment_dataset_offline,
    cmixup_minibatch,
    gamma_grid,
    mixup_minibatch,
    sample_gamma,
)
from .datagen import ILLUSTRATION_CONFIG, CosineConfig, gen_cosine, gen_linear_scm
from .ingest import (
    DatasetDescriptor,
    SplitSpec,
    TabularDataset,
    load_csv,
    load_descriptor_dataset,
    split,
)
from .partitioning import (
    AnchorPartitioner,
    KMeansConfig,
    KMeansResult,
    equal_size_bins,
    equal_width_bins,
    kmeans,
)
from .regressors import (
    AnchorRegression,
    LinearModel,
    MLPConfig,
    MLPRegressor,
    RidgeRegression,
    anchor_loss,
    fit_anchor_regression,
    fit_ols,
    fit_ridge,
    metrics,
    mlp_predict,
    mlp_train,
)

__version__ = "0.1.0"
