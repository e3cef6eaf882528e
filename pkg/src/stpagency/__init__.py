"""Exact action and perception detection for spatiotemporal patterns in
finite multivariate Markov chains, with a perception-action loop reading."""

from .chain import (
    EMPTY_STP,
    MarkovChain,
    Stp,
    Trajectory,
    ValidationReport,
    VarIndex,
    environment,
    format_rational,
    parse_rational,
    validate_chain,
)
from .inference import (
    conditional_probability,
    enumerate_support,
    stp_probability,
)
from .entities import (
    EntitySet,
    build_all_stps,
    build_paloop_entity_set,
    check_non_interpenetration,
    entity_set_from_document,
)
from .partition import Partition
from .actions import (
    ActionQuery,
    CoAction,
    action_report,
    any_co_action,
    co_action_sets,
    find_co_actions,
)
from .perceptions import (
    branch_morph,
    branching_partition,
    co_perception_entities,
    co_perception_environments,
    mutual_exclusivity_check,
    perception_partition,
    perception_report,
)
from .paloop import (
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
from .generators import random_chain, random_paloop
from .fixtures import fixture_chain

__version__ = "0.1.0"

__all__ = [
    "EMPTY_STP",
    "MarkovChain",
    "Stp",
    "Trajectory",
    "ValidationReport",
    "VarIndex",
    "environment",
    "format_rational",
    "parse_rational",
    "validate_chain",
    "conditional_probability",
    "enumerate_support",
    "stp_probability",
    "EntitySet",
    "build_all_stps",
    "build_paloop_entity_set",
    "check_non_interpenetration",
    "entity_set_from_document",
    "Partition",
    "ActionQuery",
    "CoAction",
    "action_report",
    "any_co_action",
    "co_action_sets",
    "find_co_actions",
    "branch_morph",
    "branching_partition",
    "co_perception_entities",
    "co_perception_environments",
    "mutual_exclusivity_check",
    "perception_partition",
    "perception_report",
    "PaLoop",
    "conditional_entropy_next_memory",
    "extend_paloop",
    "extract_action_partition",
    "extract_sensor_partition",
    "specialization_survey",
    "verify_action_entropy_equivalence",
    "verify_invariant_extension",
    "verify_perception_specialization",
    "random_chain",
    "random_paloop",
    "fixture_chain",
]
