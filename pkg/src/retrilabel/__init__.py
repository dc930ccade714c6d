"""retrilabel: classify an unlabeled corpus from class label names alone.

The pipeline retrieves documents for each label name with dense vectors,
expands the names with fused local/global keyword scores, trains a
softmax probe on the retrieved pseudo-labels, and refines it with
confidence-thresholded self-training.
"""

from .classifier import (
    LinearSoftmaxClassifier,
    SelfTrainResult,
    TrainConfig,
    predict,
    self_train,
    train,
)
from .corpus import (
    Corpus,
    Document,
    LabelSpec,
    TokenizedDocument,
    load_corpus,
    load_label_specs,
    query_text,
    save_corpus,
    save_label_specs,
    tokenize,
)
from .evaluation import MetricsReport, PilotReport, f1_report, hard_match_pilot
from .expansion import (
    ClassTermStats,
    ExpansionResult,
    KeywordCandidate,
    global_score,
    local_score,
    run_expansion,
    select_expansion,
)
from .pipeline import (
    LabelNamePipeline,
    PipelineConfig,
    PipelineResult,
    run_pipeline,
    sweep,
)
from .retrieval import (
    PseudoLabelSet,
    RetrievalResult,
    dedup_assign,
    retrieve_all,
    top_k,
)
from .store import (
    EmbeddingStore,
    ExternalEmbedder,
    cosine,
    load_store,
    read_vectors,
    write_vectors,
)

__version__ = "0.1.0"
