"""Explainability evaluation toolkit for process outcome prediction."""

from xpop.eventlog import (
    AttributeSchema,
    Event,
    EventLog,
    ParseError,
    SchemaError,
    Trace,
    label_eventually_followed_by,
    parse_csv,
    serialize_csv,
)
from xpop.preprocess import (
    ColumnMeta,
    EncodedMatrix,
    PrefixLog,
    Vocabulary,
    aggregate_encode,
    extract_prefixes,
    fit_vocabulary,
    temporal_split,
)
from xpop.models import (
    BridgeError,
    TrainedModel,
    auc,
    export_model,
    external_predict,
    train_forest,
    train_llm,
    train_logreg,
    train_tree,
)
from xpop.explain import (
    WeightVector,
    coefficient_weights,
    impurity_weights,
    load_external_weights,
    permutation_importance,
)
from xpop.metrics import (
    MetricsReport,
    TypedMetric,
    functional_complexity,
    irc,
    lod_at_k,
    parsimony,
    spearman,
    top_k_type_counts,
)
from xpop.guidelines import Questionnaire, Recommendation, interactive_guide, recommend
from xpop.synth import SynthSpec, generate_log, synth_schema
from xpop.harness import BenchmarkConfig, render_report, run_benchmark

__all__ = [
    "AttributeSchema",
    "Event",
    "EventLog",
    "ParseError",
    "SchemaError",
    "Trace",
    "label_eventually_followed_by",
    "parse_csv",
    "serialize_csv",
    "ColumnMeta",
    "EncodedMatrix",
    "PrefixLog",
    "Vocabulary",
    "aggregate_encode",
    "extract_prefixes",
    "fit_vocabulary",
    "temporal_split",
    "BridgeError",
    "TrainedModel",
    "auc",
    "export_model",
    "external_predict",
    "train_forest",
    "train_llm",
    "train_logreg",
    "train_tree",
    "WeightVector",
    "coefficient_weights",
    "impurity_weights",
    "load_external_weights",
    "permutation_importance",
    "MetricsReport",
    "TypedMetric",
    "functional_complexity",
    "irc",
    "lod_at_k",
    "parsimony",
    "spearman",
    "top_k_type_counts",
    "Questionnaire",
    "Recommendation",
    "interactive_guide",
    "recommend",
    "SynthSpec",
    "generate_log",
    "synth_schema",
    "BenchmarkConfig",
    "render_report",
    "run_benchmark",
]
