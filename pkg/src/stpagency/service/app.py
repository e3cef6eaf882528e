"""HTTP service exposing the detection engine.

All analysis endpoints are POST and carry the chain (and entity set where
needed) in the request body, so the service holds no state; parsed chains
are cached by their canonical JSON to make repeated calls over one chain
cheap. Domain errors surface as HTTP 409 with a serialized error object,
malformed inputs as HTTP 422 in the same envelope.
"""

from __future__ import annotations

import json
import math
from functools import lru_cache
from typing import Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .. import __version__
from ..actions import ActionQuery, action_report, co_action_sets, find_co_actions
from ..chain import MarkovChain, Stp, VarIndex, check_label, format_rational, validate_chain
from ..entities import EntitySet, check_non_interpenetration, entity_set_from_document
from ..errors import AgencyError, InputError, QueryInvariantViolated
from ..fixtures import fixture_chain
from ..generators import random_paloop
from ..inference import enumerate_support, trajectory_index_of
from ..paloop import (
    PaLoop,
    conditional_entropy_next_memory,
    extend_paloop,
    extract_action_partition,
    extract_sensor_partition,
    specialization_survey,
    verify_action_entropy_equivalence,
    verify_invariant_extension,
    verify_perception_specialization,
)
from ..perceptions import PerceptionReport, perception_report
from . import models as m


@lru_cache(maxsize=32)
def _chain_from_json(text: str) -> MarkovChain:
    return MarkovChain.from_document(json.loads(text))


def _chain(doc: m.ChainDocument) -> MarkovChain:
    return _chain_from_json(json.dumps(doc.model_dump(), sort_keys=True))


def _entity_set(chain: MarkovChain, choice: m.EntitySetChoice) -> EntitySet:
    if isinstance(choice, m.BuiltinEntitySet):
        doc: object = {
            k: v
            for k, v in (
                ("builtin", choice.builtin),
                ("max_domain_size", choice.max_domain_size),
                ("cap", choice.cap),
            )
            if v is not None
        }
    else:
        doc = [{"id": e.id, "assignment": e.assignment} for e in choice]
    return entity_set_from_document(chain, doc)


def _trajectory(chain: MarkovChain, ref: m.TrajectoryRef):
    support = enumerate_support(chain)
    if isinstance(ref, int):
        if not 0 <= ref < len(support):
            raise QueryInvariantViolated(
                f"trajectory index {ref} is outside the support (size {len(support)})"
            )
        return ref, support[ref]
    full = Stp.of(
        (VarIndex.parse(key), check_label(sym, "symbol")) for key, sym in ref.items()
    )
    idx = trajectory_index_of(chain, full)
    if idx is None:
        raise QueryInvariantViolated("query trajectory is not in the support of the chain")
    return idx, support[idx]


def _partition_model(partition) -> m.PartitionModel:
    return m.PartitionModel(carrier=list(partition.carrier), blocks=[list(b) for b in partition.blocks])


def _pipeline_model(report: PerceptionReport) -> m.PipelineModel:
    return m.PipelineModel(
        co_entities=list(report.co_entities),
        environments=[e.pattern_string() for e in report.environments],
        branching=m.BranchingModel(
            t=report.branching.t,
            r=report.branching.r,
            blocks=[
                m.BranchBlockModel(id=b.block_id, members=list(b.members))
                for b in report.branching.blocks
            ],
            anchor_block=report.branching.anchor_block,
        ),
        morphs=[
            m.MorphModel(
                environment=morph.environment.pattern_string(),
                distribution={b: format_rational(p) for b, p in morph.distribution},
            )
            for morph in report.morphs
        ],
        perceptions=[list(b) for b in report.partition.blocks],
    )


def _sensor_action_rows(pa: PaLoop) -> list[m.SensorActionRow]:
    return [
        m.SensorActionRow(
            t=t,
            sensor=_partition_model(extract_sensor_partition(pa, t)),
            action=_partition_model(extract_action_partition(pa, t)),
        )
        for t in range(pa.chain.t_max)
    ]


def _specialization_row(result) -> m.SpecializationRowModel:
    return m.SpecializationRowModel(
        anchor=result.anchor_id,
        t=result.t,
        anchor_memory=result.anchor_memory,
        matches=result.matches,
        morphs_match_mechanism=result.morphs_match_mechanism,
        sensor_refines=result.sensor_refines,
        perception=_partition_model(result.perception),
        anchor_row_partition=_partition_model(result.anchor_row_partition),
        sensor=_partition_model(result.sensor),
        sensor_restricted=_partition_model(result.sensor_restricted),
        pipeline=_pipeline_model(result.report),
    )


def _verify_random_loops(seeds: int) -> Optional[m.RandomLoopCheck]:
    if seeds <= 0:
        return None
    failures = []
    for seed in range(seeds):
        loop = random_paloop(seed)
        if not verify_invariant_extension(loop, extend_paloop(loop)).equal:
            failures.append(seed)
    return m.RandomLoopCheck(seeds=seeds, failures=failures)


def _equiv_random_loops(seeds: int) -> Optional[m.RandomLoopCheck]:
    if seeds <= 0:
        return None
    failures = []
    for seed in range(seeds):
        loop = random_paloop(seed)
        if not all(
            verify_action_entropy_equivalence(loop, t).equivalent
            for t in range(loop.chain.t_max)
        ):
            failures.append(seed)
    return m.RandomLoopCheck(seeds=seeds, failures=failures)


def _specialize_random_loops(seeds: int) -> Optional[m.RandomLoopCheck]:
    if seeds <= 0:
        return None
    failures = []
    for seed in range(seeds):
        loop = random_paloop(seed)
        if not all(r.matches for r in specialization_survey(loop)):
            failures.append(seed)
    return m.RandomLoopCheck(seeds=seeds, failures=failures)


def create_app() -> FastAPI:
    app = FastAPI(title="stpagency", version=__version__)

    @app.exception_handler(AgencyError)
    def _agency_error(request: Request, exc: AgencyError) -> JSONResponse:
        status = 422 if isinstance(exc, InputError) else 409
        body = m.ErrorResponse(
            error=m.ErrorBody(code=exc.code, message=str(exc), details=exc.details)
        )
        return JSONResponse(status_code=status, content=body.model_dump())

    @app.exception_handler(RequestValidationError)
    def _validation_error(request: Request, exc: RequestValidationError) -> JSONResponse:
        body = m.ErrorResponse(
            error=m.ErrorBody(
                code="malformed-input",
                message="request body failed validation",
                details={"errors": [
                    {"loc": [str(x) for x in err["loc"]], "message": err["msg"]}
                    for err in exc.errors()
                ]},
            )
        )
        return JSONResponse(status_code=422, content=body.model_dump())

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/fixture/{name}", response_model=m.ChainDocument)
    def fixture(name: str) -> m.ChainDocument:
        return m.ChainDocument(**fixture_chain(name).to_document())

    @app.post("/validate", response_model=m.ValidateResponse)
    def validate(req: m.ValidateRequest) -> m.ValidateResponse:
        report = validate_chain(_chain(req.chain))
        return m.ValidateResponse(
            valid=report.ok,
            violations=[m.ViolationModel(**v.payload()) for v in report.violations],
        )

    @app.post("/enumerate", response_model=m.EnumerateResponse)
    def enumerate_(req: m.EnumerateRequest) -> m.EnumerateResponse:
        chain = _chain(req.chain)
        support = enumerate_support(chain, req.cap)
        return m.EnumerateResponse(
            variables=[str(v) for v in chain.variables],
            count=len(support),
            total_probability=format_rational(sum(t.probability for t in support)),
            trajectories=[
                m.TrajectoryModel(
                    index=i,
                    assignment={str(v): s for v, s in t.stp.items},
                    probability=format_rational(t.probability),
                )
                for i, t in enumerate(support)
            ],
        )

    @app.post("/actions/query", response_model=m.ActionsQueryResponse)
    def actions_query(req: m.ActionsRequest) -> m.ActionsQueryResponse:
        if req.t is None:
            raise InputError("field 't' is required for a single action query")
        chain = _chain(req.chain)
        es = _entity_set(chain, req.entity_set)
        idx, trajectory = _trajectory(chain, req.trajectory)
        query = ActionQuery(req.entity, trajectory, req.t, req.history)
        co_actions = find_co_actions(chain, es, query)
        classes = co_action_sets(chain, es, query)
        return m.ActionsQueryResponse(
            entity=req.entity,
            trajectory_index=idx,
            t=req.t,
            history=req.history,
            co_actions=[
                m.CoActionModel(
                    entity=ca.co_entity_id,
                    trajectory_index=trajectory_index_of(chain, ca.co_trajectory.stp),
                    kind=ca.kind,
                    next_slice=ca.next_slice.pattern_string(),
                )
                for ca in co_actions
            ],
            classes=[
                m.CoActionClassModel(
                    next_slice=c.next_slice.pattern_string(),
                    members=[
                        m.ClassMemberModel(
                            entity=eid,
                            trajectory_index=trajectory_index_of(chain, tr.stp),
                        )
                        for eid, tr in c.members
                    ],
                )
                for c in classes.classes
            ],
            n=classes.n,
            acted=classes.n > 1,
            kinds=sorted({ca.kind for ca in co_actions}),
            log2_n=math.log2(classes.n),
        )

    @app.post("/actions/report", response_model=m.ActionsReportResponse)
    def actions_report_(req: m.ActionsRequest) -> m.ActionsReportResponse:
        chain = _chain(req.chain)
        es = _entity_set(chain, req.entity_set)
        idx, trajectory = _trajectory(chain, req.trajectory)
        rows = action_report(chain, es, req.entity, trajectory, req.history)
        return m.ActionsReportResponse(
            entity=req.entity,
            trajectory_index=idx,
            history=req.history,
            rows=[
                m.ActionReportRowModel(
                    t=r.t, acted=r.acted, n=r.n, kinds=list(r.kinds), log2_n=r.log2_n
                )
                for r in rows
            ],
        )

    @app.post("/entityset/check", response_model=m.EntitySetCheckResponse)
    def entityset_check(req: m.EntitySetCheckRequest) -> m.EntitySetCheckResponse:
        chain = _chain(req.chain)
        es = _entity_set(chain, req.entity_set)
        result = check_non_interpenetration(chain, es)
        witness = None
        if result.witness is not None:
            witness = m.InterpenetrationWitnessModel(**result.witness.payload())
        return m.EntitySetCheckResponse(
            entity_count=len(es),
            provenance=es.provenance,
            passed=result.passed,
            witness=witness,
        )

    @app.post("/perceptions", response_model=m.PerceptionsResponse)
    def perceptions(req: m.PerceptionsRequest) -> m.PerceptionsResponse:
        chain = _chain(req.chain)
        es = _entity_set(chain, req.entity_set)
        report = perception_report(chain, es, req.anchor, req.t, req.r)
        pipeline = _pipeline_model(report)
        return m.PerceptionsResponse(
            anchor=req.anchor,
            t=req.t,
            r=req.r,
            co_entities=pipeline.co_entities,
            environments=pipeline.environments,
            branching=pipeline.branching,
            morphs=pipeline.morphs,
            perceptions=pipeline.perceptions,
        )

    @app.post("/paloop/extract", response_model=m.PaloopExtractResponse)
    def paloop_extract(req: m.PaloopRequest) -> m.PaloopExtractResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        return m.PaloopExtractResponse(rows=_sensor_action_rows(pa))

    @app.post("/paloop/extend", response_model=m.PaloopExtendResponse)
    def paloop_extend(req: m.PaloopRequest) -> m.PaloopExtendResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        ext = extend_paloop(pa)
        return m.PaloopExtendResponse(
            chain=m.ChainDocument(**ext.chain.to_document()),
            rows=_sensor_action_rows(pa),
        )

    @app.post("/paloop/verify", response_model=m.PaloopVerifyResponse)
    def paloop_verify(req: m.PaloopVerifyRequest) -> m.PaloopVerifyResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        check = verify_invariant_extension(pa, extend_paloop(pa))
        return m.PaloopVerifyResponse(
            equal=check.equal,
            max_discrepancy=format_rational(check.max_discrepancy),
            assignments_checked=check.assignments_checked,
            random_loops=_verify_random_loops(req.seeds),
        )

    @app.post("/paloop/entropy", response_model=m.PaloopEntropyResponse)
    def paloop_entropy(req: m.PaloopEntropyRequest) -> m.PaloopEntropyResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        times = range(pa.chain.t_max) if req.t is None else [req.t]
        rows = [conditional_entropy_next_memory(pa, t) for t in times]
        return m.PaloopEntropyResponse(
            rows=[m.EntropyRowModel(t=r.t, bits=r.bits, positive=r.positive) for r in rows]
        )

    @app.post("/paloop/equiv", response_model=m.PaloopEquivResponse)
    def paloop_equiv(req: m.PaloopEquivRequest) -> m.PaloopEquivResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        times = range(pa.chain.t_max) if req.t is None else [req.t]
        rows = [verify_action_entropy_equivalence(pa, t) for t in times]
        return m.PaloopEquivResponse(
            rows=[
                m.EquivRowModel(
                    t=r.t,
                    action_exists=r.action_exists,
                    entropy_positive=r.entropy_positive,
                    entropy_bits=r.entropy_bits,
                    equivalent=r.equivalent,
                )
                for r in rows
            ],
            all_equivalent=all(r.equivalent for r in rows),
            random_loops=_equiv_random_loops(req.seeds),
        )

    @app.post("/paloop/specialize", response_model=m.PaloopSpecializeResponse)
    def paloop_specialize(req: m.PaloopSpecializeRequest) -> m.PaloopSpecializeResponse:
        pa = PaLoop.from_chain(_chain(req.chain))
        if req.anchor is not None:
            if req.t is None:
                raise InputError("field 't' is required when 'anchor' is given")
            results = [verify_perception_specialization(pa, req.anchor, req.t)]
        else:
            results = [
                r
                for r in specialization_survey(pa)
                if req.t is None or r.t == req.t
            ]
        return m.PaloopSpecializeResponse(
            rows=[_specialization_row(r) for r in results],
            all_match=all(r.matches for r in results),
            random_loops=_specialize_random_loops(req.seeds),
        )

    return app
