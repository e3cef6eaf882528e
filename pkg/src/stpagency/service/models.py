"""Request and response models for the HTTP service.

Every response embeds a ``meta`` block with the report schema version and a
description of the canonical orderings the arrays rely on. The published
JSON schema (``schemas/report.schema.json``) is generated from the union of
these response models; ``report_json_schema`` is the single source of truth
for it.
"""

from __future__ import annotations

from typing import Any, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter

SCHEMA_VERSION = "1"

ORDERING = {
    "variables": "timestep ascending, then spatial label ascending",
    "symbols": "alphabet declaration order",
    "trajectories": "depth-first over variables in canonical order",
    "blocks": "first member's position in the carrier",
}


class Model(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ReportMeta(Model):
    schema_version: str = SCHEMA_VERSION
    ordering: dict[str, str] = Field(default_factory=lambda: dict(ORDERING))


class Report(Model):
    meta: ReportMeta = Field(default_factory=ReportMeta)


# ---------------------------------------------------------------------------
# shared input shapes


class ChainDocument(Model):
    spatial: list[str]
    t_max: int
    alphabets: dict[str, list[str]]
    parents: dict[str, list[str]] = Field(default_factory=dict)
    mechanisms: dict[str, dict[str, list[str]]]


class EntityItem(Model):
    id: str
    assignment: dict[str, str]


class BuiltinEntitySet(Model):
    builtin: Literal["all-stps", "pa-loop"]
    max_domain_size: Optional[int] = None
    cap: Optional[int] = None


EntitySetChoice = Union[list[EntityItem], BuiltinEntitySet]

TrajectoryRef = Union[int, dict[str, str]]  # support index or full assignment


# ---------------------------------------------------------------------------
# requests


class ValidateRequest(Model):
    chain: ChainDocument


class EnumerateRequest(Model):
    chain: ChainDocument
    cap: Optional[int] = None


class ActionsRequest(Model):
    chain: ChainDocument
    entity_set: EntitySetChoice
    entity: str
    trajectory: TrajectoryRef
    t: Optional[int] = None  # omitted: report every admissible timestep
    history: int = 0


class EntitySetCheckRequest(Model):
    chain: ChainDocument
    entity_set: EntitySetChoice


class PerceptionsRequest(Model):
    chain: ChainDocument
    entity_set: EntitySetChoice
    anchor: str
    t: int
    r: int = 1


class PaloopRequest(Model):
    chain: ChainDocument


class PaloopVerifyRequest(Model):
    chain: ChainDocument
    seeds: int = 0


class PaloopEntropyRequest(Model):
    chain: ChainDocument
    t: Optional[int] = None


class PaloopEquivRequest(Model):
    chain: ChainDocument
    t: Optional[int] = None
    seeds: int = 0


class PaloopSpecializeRequest(Model):
    chain: ChainDocument
    anchor: Optional[str] = None
    t: Optional[int] = None
    seeds: int = 0


# ---------------------------------------------------------------------------
# responses


class ViolationModel(Model):
    code: str
    var: Optional[str]
    message: str


class ValidateResponse(Report):
    kind: Literal["validation"] = "validation"
    valid: bool
    violations: list[ViolationModel]


class TrajectoryModel(Model):
    index: int
    assignment: dict[str, str]
    probability: str


class EnumerateResponse(Report):
    kind: Literal["support"] = "support"
    variables: list[str]
    count: int
    total_probability: str
    trajectories: list[TrajectoryModel]


class CoActionModel(Model):
    entity: str
    trajectory_index: int
    kind: Literal["value", "extent"]
    next_slice: str


class ClassMemberModel(Model):
    entity: str
    trajectory_index: int


class CoActionClassModel(Model):
    next_slice: str
    members: list[ClassMemberModel]


class ActionsQueryResponse(Report):
    kind: Literal["actions-query"] = "actions-query"
    entity: str
    trajectory_index: int
    t: int
    history: int
    co_actions: list[CoActionModel]
    classes: list[CoActionClassModel]
    n: int
    acted: bool
    kinds: list[str]
    log2_n: float


class ActionReportRowModel(Model):
    t: int
    acted: bool
    n: int
    kinds: list[str]
    log2_n: float


class ActionsReportResponse(Report):
    kind: Literal["actions-report"] = "actions-report"
    entity: str
    trajectory_index: int
    history: int
    rows: list[ActionReportRowModel]


class InterpenetrationWitnessModel(Model):
    first: str
    second: str
    t: int
    trajectory: dict[str, str]
    conditional_probability: str


class EntitySetCheckResponse(Report):
    kind: Literal["entityset-check"] = "entityset-check"
    entity_count: int
    provenance: str
    passed: bool
    witness: Optional[InterpenetrationWitnessModel]


class PartitionModel(Model):
    carrier: list[str]
    blocks: list[list[str]]


class BranchBlockModel(Model):
    id: str
    members: list[str]


class BranchingModel(Model):
    t: int
    r: int
    blocks: list[BranchBlockModel]
    anchor_block: str


class MorphModel(Model):
    environment: str
    distribution: dict[str, str]


class PerceptionsResponse(Report):
    kind: Literal["perceptions"] = "perceptions"
    anchor: str
    t: int
    r: int
    co_entities: list[str]
    environments: list[str]
    branching: BranchingModel
    morphs: list[MorphModel]
    perceptions: list[list[str]]


class SensorActionRow(Model):
    t: int
    sensor: PartitionModel
    action: PartitionModel


class PaloopExtractResponse(Report):
    kind: Literal["paloop-extract"] = "paloop-extract"
    rows: list[SensorActionRow]


class PaloopExtendResponse(Report):
    kind: Literal["paloop-extend"] = "paloop-extend"
    chain: ChainDocument
    rows: list[SensorActionRow]


class RandomLoopCheck(Model):
    seeds: int
    failures: list[int]


class PaloopVerifyResponse(Report):
    kind: Literal["paloop-verify"] = "paloop-verify"
    equal: bool
    max_discrepancy: str
    assignments_checked: int
    random_loops: Optional[RandomLoopCheck]


class EntropyRowModel(Model):
    t: int
    bits: float
    positive: bool


class PaloopEntropyResponse(Report):
    kind: Literal["paloop-entropy"] = "paloop-entropy"
    rows: list[EntropyRowModel]


class EquivRowModel(Model):
    t: int
    action_exists: bool
    entropy_positive: bool
    entropy_bits: float
    equivalent: bool


class PaloopEquivResponse(Report):
    kind: Literal["paloop-equiv"] = "paloop-equiv"
    rows: list[EquivRowModel]
    all_equivalent: bool
    random_loops: Optional[RandomLoopCheck]


class PipelineModel(Model):
    co_entities: list[str]
    environments: list[str]
    branching: BranchingModel
    morphs: list[MorphModel]
    perceptions: list[list[str]]


class SpecializationRowModel(Model):
    anchor: str
    t: int
    anchor_memory: str
    matches: bool
    morphs_match_mechanism: bool
    sensor_refines: bool
    perception: PartitionModel
    anchor_row_partition: PartitionModel
    sensor: PartitionModel
    sensor_restricted: PartitionModel
    pipeline: PipelineModel


class PaloopSpecializeResponse(Report):
    kind: Literal["paloop-specialize"] = "paloop-specialize"
    rows: list[SpecializationRowModel]
    all_match: bool
    random_loops: Optional[RandomLoopCheck]


class ErrorBody(Model):
    code: str
    message: str
    details: dict[str, Any] = Field(default_factory=dict)


class ErrorResponse(Model):
    error: ErrorBody


AnyReport = Union[
    ValidateResponse,
    EnumerateResponse,
    ActionsQueryResponse,
    ActionsReportResponse,
    EntitySetCheckResponse,
    PerceptionsResponse,
    PaloopExtractResponse,
    PaloopExtendResponse,
    PaloopVerifyResponse,
    PaloopEntropyResponse,
    PaloopEquivResponse,
    PaloopSpecializeResponse,
    ErrorResponse,
    ChainDocument,
]


def report_json_schema() -> dict:
    """Schema every JSON document the service or CLI emits must satisfy."""
    return TypeAdapter(AnyReport).json_schema()
