"""mergap: music emotion regression across datasets, and why it fails.

The package covers the full loop: manifest ingestion with per-dataset
annotation normalization, chroma/MFCC descriptors, embedding containers,
a small from-scratch MLP regressor, cross-dataset R2 grids, and
distribution-gap diagnostics (sliced Wasserstein, Jensen-Shannon,
k-means composition, 2-D projections).
"""

__version__ = "0.1.0"

from .audio_features import (
    AudioClip,
    FeatureGram,
    FeatureMatrix,
    FeatureVector,
    compute_chromagram,
    compute_mfcc,
    concat_features,
    load_wav,
    resample,
    select_segment,
    summarize_stats,
)
from .datasets import (
    AnnotationScale,
    ClipRecord,
    CombinedDataset,
    Dataset,
    LabelRangeError,
    ManifestError,
    SplitAssignment,
    combine,
    load_dataset,
    make_splits,
    normalize_dataset,
    normalize_label,
)
from .embedding_io import (
    EmbeddingFormatError,
    EmbeddingTable,
    JoinResult,
    join_with_labels,
    pool_time,
    read_emb1,
    write_emb1,
)
from .evaluation import (
    EvalDataset,
    EvalResult,
    GridResult,
    cross_grid,
    evaluate,
    final_experiment,
    r2,
)
from .gap_analysis import (
    CentroidStats,
    KmeansResult,
    Projection2D,
    inter_centroid_stats,
    js_divergence,
    kmeans,
    sliced_wasserstein,
    tsne,
    w1_1d,
)
from .kernels import BACKEND as KERNEL_BACKEND
from .regressor import (
    MlpParams,
    TrainConfig,
    TrainingDivergedError,
    TrainReport,
    load_checkpoint,
    predict,
    save_checkpoint,
    train,
)

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "AnnotationScale",
    "AudioClip",
    "CentroidStats",
    "ClipRecord",
    "CombinedDataset",
    "Dataset",
    "EmbeddingFormatError",
    "EmbeddingTable",
    "EvalDataset",
    "EvalResult",
    "FeatureGram",
    "FeatureMatrix",
    "FeatureVector",
    "GridResult",
    "JoinResult",
    "KmeansResult",
    "LabelRangeError",
    "ManifestError",
    "MlpParams",
    "Projection2D",
    "SplitAssignment",
    "TrainConfig",
    "TrainReport",
    "TrainingDivergedError",
    "combine",
    "compute_chromagram",
    "compute_mfcc",
    "concat_features",
    "cross_grid",
    "evaluate",
    "final_experiment",
    "inter_centroid_stats",
    "join_with_labels",
    "js_divergence",
    "kmeans",
    "load_checkpoint",
    "load_dataset",
    "load_wav",
    "make_splits",
    "normalize_dataset",
    "normalize_label",
    "pool_time",
    "predict",
    "r2",
    "read_emb1",
    "resample",
    "save_checkpoint",
    "select_segment",
    "sliced_wasserstein",
    "summarize_stats",
    "train",
    "tsne",
    "w1_1d",
    "write_emb1",
]
