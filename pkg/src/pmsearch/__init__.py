"""Precision-medicine search engine experimentation workbench."""

from .evaluation import (
    Qrels,
    Run,
    SampledQrels,
    Stratum,
    approx_randomization_test,
    inf_ndcg,
    mean_over_topics,
    ndcg,
)
from .harness import (
    AblationGroup,
    AblationReport,
    FoldPlan,
    RetrievalContext,
    ablation_score,
    reduced_model,
    run_ablation,
    stratified_folds,
)
from .indexing import (
    Bm25Params,
    Document,
    IndexStats,
    bm25_term_score,
    build_index,
    idf,
    tokenize,
)
from .optimizer import (
    ForestModel,
    Observation,
    expected_improvement,
    fit_forest,
    optimize,
    suggest_next,
)
from .queries import (
    AgeRange,
    BagOfWords,
    Bool,
    DisMax,
    Phrase,
    QueryNode,
    ScoredHit,
    SexFilter,
    Term,
    Weighted,
    render,
    search,
)
from .space import Configuration, ParamSpace, default_space, encode, load_preset
from .terminology import (
    Lexicons,
    expand_disease,
    filter_stopwords,
    gene_family,
    load_lexicons,
)
from .topics import KeywordConfig, Topic, build_query, parse_topics

__version__ = "0.1.0"
