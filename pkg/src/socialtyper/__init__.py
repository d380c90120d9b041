"""Semantic typing for a social knowledge base.

Induces a fine/coarse type schema from ontology paths, aligns social
accounts with KB dump extracts, extends labels by weak supervision, trains
a composite-loss classifier over fused content/network embeddings, and
answers reranked entity-similarity queries.
"""

from .classifier import (
    MlpModel,
    TrainConfig,
    composite_loss,
    cross_entropy,
    forward,
    init_model,
    load_model,
    predict,
    save_model,
    train,
)
from .corpus import (
    AlignmentRecord,
    EntityRecord,
    LabelRecord,
    LabelSource,
    align_wikidata,
    attach_dbpedia,
    build_gold_labels,
    load_entities,
    merge_label_sources,
)
from .embedstore import (
    EmbeddingSet,
    SegmentMap,
    aggregate_mean,
    fuse,
    read_embeddings,
    write_embeddings,
)
from .errors import SocialTyperError
from .evaluation import (
    ConfusionMatrix,
    MetricsReport,
    coarse_rollup,
    confusion,
    metrics,
    permissive_accuracy,
    type_distribution,
)
from .ontology import (
    CoarseType,
    FineType,
    TypePath,
    TypeSchema,
    coarse_of,
    induce_schema,
    leaf_type,
    parse_type_paths,
)
from .simsearch import RankedList, cosine, rerank, topk
from .weaklabel import WeakLabelReport, WeakTarget, specialize_labels

__version__ = "0.1.0"
