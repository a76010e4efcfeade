"""Hierarchical multi-label persuasion-technique classification toolkit."""

from .taxonomy import (
    LabelTree,
    Taxonomy,
    TreeNode,
    ancestors,
    bundled_taxonomy,
    dag_to_tree,
    leaf_set,
    load_taxonomy,
    parse_taxonomy,
)
from .metrics import (
    MetricsReport,
    PredictionSet,
    augment,
    hierarchical_prf,
    hierarchical_report,
    macro_f1,
    per_class_f1,
)
from .hyperbolic import (
    BALL_EPS,
    exp_map_origin,
    poincare_distance,
    project_to_ball,
    riemannian_rescale,
)
from .cones import (
    ConeTrainConfig,
    LabelEmbedding,
    cone_aperture,
    cone_energy,
    inner_radius,
    label_distance,
    load_label_embedding,
    save_label_embedding,
    train_label_embeddings,
)
from .hypemo import (
    HypemoConfig,
    HypemoModel,
    explode_multilabel,
    forward,
    hypemo_loss,
    predict_hier,
    train_hypemo,
    zscore_decode,
)
from .cdp import (
    CdpConfig,
    CdpModel,
    cdp_loss,
    predict_cdp,
    sample_definition_pairs,
    train_cdp,
)
from .binary import (
    BinaryConfig,
    BinaryModel,
    imbalance_weight,
    predict_binary,
    train_binary,
    weighted_bce,
)
from .ensemble import union_ensemble
from .dataio import (
    FeatureFile,
    Sample,
    concat_features,
    normalize_text,
    read_dataset,
    read_features,
    read_predictions,
    stats,
    write_dataset,
    write_features,
    write_predictions,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
