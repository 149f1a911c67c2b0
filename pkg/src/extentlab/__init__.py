"""extentlab: semantic extents for relation classification.

Determine the minimal influential text regions behind relation-classification
decisions, for models (expanding and reductive procedures) and for human
annotators (a staged-reveal protocol), and compare the two with agreement,
confidence, and adversarial analytics.
"""

__version__ = "0.1.0"

from .corpus import (
    ArgumentSpan,
    Document,
    EntityMention,
    LabelSet,
    RelationMention,
    RelationSample,
    Sentence,
    SplitAssignment,
    Token,
    build_samples,
    canonicalize_sample,
    corpus_stats,
    ingest_document,
    load_corpus,
    save_corpus,
    split_dataset,
)
from .syntax import (
    PriorityAssignment,
    STAGES,
    argument_subtree_tokens,
    dependency_path,
    expansion_order,
    span_head,
    stage_assignment,
)
from .classifier import (
    Classifier,
    EncodedSample,
    KeywordClassifier,
    LinearBagOfWordsClassifier,
    PredictionResult,
    TrainingConfig,
    cross_entropy,
    encode_sample,
    load_model,
    save_model,
    softmax,
    top_k_labels,
)
from .extents import (
    ExtentConfig,
    SemanticExtent,
    expanding_extent,
    extent_batch,
    load_extents,
    reductive_extent,
    save_extents,
)
from .metrics import (
    AdversarialGroup,
    AgreementReport,
    EvalReport,
    adversarial_eval,
    agreement_report,
    class_histograms,
    confidence_breakdown,
    emit_report,
    extent_size_stats,
    f1_scores,
    label_agreement,
    semantic_class_agreement,
)
from .annotation import (
    REJECT,
    AnnotationRecord,
    AnnotationService,
    AnnotationStore,
    export_annotations,
)
