"""topicbench: a topic-model evaluation workbench.

Corpus preprocessing, reference-corpus coherence metrics (NPMI, C_v, C_UCI,
C_UMASS), a collapsed-Gibbs LDA baseline, human-evaluation survey tooling,
and the statistical machinery (power analysis, non-inferiority bounds,
bootstrap FDR/FOR) for deciding when automated coherence differences are
meaningful.
"""

__version__ = "0.1.0"

from .cooc import CoherenceScore, CoocCounts, Metric, Topic, count_windows, score_topic
from .corpus import (
    EncodedCorpus,
    PreprocessConfig,
    RawDocument,
    TokenizedDoc,
    Vocabulary,
    VocabularyBuilder,
    build_vocabulary,
    encode_corpus,
    min_doc_frequency,
    process_document,
)
from .lda import GibbsLda, fit_gibbs_lda

__all__ = [
    "CoherenceScore",
    "CoocCounts",
    "EncodedCorpus",
    "GibbsLda",
    "Metric",
    "PreprocessConfig",
    "RawDocument",
    "TokenizedDoc",
    "Topic",
    "Vocabulary",
    "VocabularyBuilder",
    "build_vocabulary",
    "count_windows",
    "encode_corpus",
    "fit_gibbs_lda",
    "min_doc_frequency",
    "process_document",
    "score_topic",
    "__version__",
]
