"""Social-discourse analytics: stance series, topic modeling, misinformation."""

from .charts import chart_series, chart_topics
from .lda import TopicModel, label_topics, top_keywords, train_lda
from .misinfo import MisinfoCategory, MisinfoFlag, detect_misinfo_batch
from .stance import (
    Stance,
    StanceBatchResult,
    StanceSeries,
    aggregate_daily,
    classify_stance_batch,
)
from .textproc import TokenizerContract, tokenize
from .tfidf import TfIdfModel, build_tfidf, select_vocabulary

__all__ = [
    "MisinfoCategory",
    "MisinfoFlag",
    "Stance",
    "StanceBatchResult",
    "StanceSeries",
    "TfIdfModel",
    "TokenizerContract",
    "TopicModel",
    "aggregate_daily",
    "build_tfidf",
    "chart_series",
    "chart_topics",
    "classify_stance_batch",
    "detect_misinfo_batch",
    "label_topics",
    "select_vocabulary",
    "tokenize",
    "top_keywords",
    "train_lda",
]
