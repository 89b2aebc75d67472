"""Store-free pipeline execution and end-to-end compatibility checking."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyDecomposition, EmptyResults, MissingResponses
from .languages import (
    Answer,
    ExperimentResult,
    Fulfilment,
    LanguageRegistry,
    LanguageStructure,
    Query,
    validate_query,
    validate_request,
    validate_response,
    validate_spec,
)


@dataclass
class PipelineRun:
    answer: Answer
    fulfilments: list[Fulfilment]
    executed: int


def run_pipeline(registry: LanguageRegistry, structure: LanguageStructure, q: Query) -> PipelineRun:
    """Decompose, complete, execute, compute and aggregate without a store."""
    validate_query(registry, q)
    requests = structure.decompose(q)
    if not requests:
        raise EmptyDecomposition(f"{q.language_id}: decomposition produced no requests")
    spec_lang = registry.spec_language(structure.spec_language_id)
    fulfilments: list[Fulfilment] = []
    executed = 0
    for req in requests:
        validate_request(registry, req)
        specs = structure.complete(req)
        results: list[ExperimentResult] = []
        for spec in specs:
            validate_spec(registry, spec)
            if spec.kind not in spec_lang.result_kinds:
                continue  # preparatory step, folded into the producing run
            results.append(structure.execute(spec))
            executed += 1
        if not results:
            raise EmptyResults(f"completion of {req.language_id} produced no results")
        rsp = structure.compute(req, results)
        validate_response(registry, req, rsp)
        fulfilments.append((req, rsp))
    answer = structure.aggregate(q, fulfilments)
    return PipelineRun(answer=answer, fulfilments=fulfilments, executed=executed)


@dataclass
class CompatibilityFailure:
    query: Query
    answer: Answer
    detail: str


@dataclass
class CompatibilityReport:
    checked: int = 0
    failures: list[CompatibilityFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_compatibility(
    registry: LanguageRegistry,
    query_language_id: str,
    queries: Iterable[Query],
) -> CompatibilityReport:
    """Run each query end to end and compare against the registered ground truth.

    The structure's ``answered_by`` predicate is the oracle; structures
    registered without one cannot be checked and raise.
    """
    structure = registry.structure_for(query_language_id)
    if structure.answered_by is None:
        raise MissingResponses(
            f"{query_language_id}: no ground-truth predicate registered"
        )
    report = CompatibilityReport()
    for q in queries:
        run = run_pipeline(registry, structure, q)
        report.checked += 1
        if not structure.answered_by(q, run.answer):
            report.failures.append(
                CompatibilityFailure(q, run.answer, "answer rejected by ground truth")
            )
    return report
