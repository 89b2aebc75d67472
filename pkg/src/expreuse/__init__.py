"""Experiment reuse for early design studies.

Queries decompose into parameterized requests, requests complete into
executable experiment specs, and every layer consults an experiment store
before performing work: direct lookup, justification by monotonicity,
fuzzy retrieval, then fuzzy recomputation, strictly in that order.
"""

from .engine import EventLog, ProcessReport, ReuseEngine, ReuseEvent
from .errors import (
    CorruptLog,
    DomainViolation,
    DuplicateId,
    DuplicateKeyWithDifferentValue,
    EmptyDecomposition,
    EmptyResults,
    ExecutionFailure,
    InvalidLayout,
    MalformedConnection,
    MalformedLanguage,
    MissingResponses,
    MissingSignal,
    NoCompleter,
    NoDecomposer,
    ReuseError,
    SchemeMismatch,
    UnknownLanguage,
)
from .languages import (
    Answer,
    BindingSet,
    BindingSetAnswerDomain,
    BoolAnswerDomain,
    ExperimentResult,
    ExperimentSpec,
    LanguageRegistry,
    LanguageStructure,
    Query,
    QueryLanguage,
    Request,
    RequestLanguage,
    Response,
    SpecLanguage,
    TraceSeries,
    query_key,
    request_key,
    spec_key,
)
from .config import ServiceConfig, load_config
from .harness import ScenarioReport, run_scenario
from .pipeline import check_compatibility, run_pipeline
from .persist import FileTraceStore, open_store
from .reasoning import ReasoningScheme, check_insensitivity, check_metric_axioms
from .store import (
    ConsistencyReport,
    ExperimentStore,
    MemoryTraceStore,
    NullTraceStore,
    StoreStats,
    TtlConfig,
    consistency_check,
)
from .values import (
    BoxAxis,
    BoxConstraint,
    BoxDomain,
    ProfileDomain,
    ProfileRef,
    Quantity,
    RealDomain,
    STAR,
    Symbol,
    SymbolDomain,
    bind,
)

__version__ = "0.1.0"
