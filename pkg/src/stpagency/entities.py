"""Entity sets: named collections of spatiotemporal patterns.

An entity set fixes, once and for all, which patterns count as "the same
kind of thing" for the action and perception constructions. Three flavours
are supported:

* explicit lists (id + assignment) loaded from JSON,
* ``all-stps``: every pattern over at most ``max_domain_size`` variables,
* ``pa-loop``: one entity per memory evolution of a perception-action loop,
  including evolutions the dynamics give probability zero.

The non-interpenetration check below is the structural precondition for the
perception constructions: whenever two member patterns share their past up
to some timestep but disagree later, the chain must give the combined later
parts probability zero given that shared past.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional

from .chain import MarkovChain, Stp, Trajectory, VarIndex, check_label
from .errors import EntityCapExceeded, InputError
from .inference import mask_to_indices, pattern_mask, stp_probability, support_index

DEFAULT_ENTITY_CAP = 10**6


class EntitySet:
    def __init__(self, entities: Iterable[tuple[str, Stp]], provenance: str = "explicit"):
        self.entities: tuple[tuple[str, Stp], ...] = tuple(entities)
        self.provenance = provenance
        self._by_id: dict[str, Stp] = {}
        self._position: dict[str, int] = {}
        patterns = set()
        for pos, (entity_id, pattern) in enumerate(self.entities):
            if not isinstance(entity_id, str) or not entity_id:
                raise InputError("entity id must be a non-empty string")
            if entity_id in self._by_id:
                raise InputError(f"duplicate entity id {entity_id!r}")
            if pattern.is_empty:
                raise InputError(f"entity {entity_id!r} has an empty pattern")
            if pattern in patterns:
                raise InputError(f"entity {entity_id!r} repeats another entity's pattern")
            patterns.add(pattern)
            self._by_id[entity_id] = pattern
            self._position[entity_id] = pos
        # memoized per-chain results (masks, non-interpenetration verdicts);
        # values keep a reference to the chain so id() keys stay unambiguous
        self._chain_memo: dict = {}

    def __len__(self) -> int:
        return len(self.entities)

    def __iter__(self):
        return iter(self.entities)

    def ids(self) -> tuple[str, ...]:
        return tuple(entity_id for entity_id, _ in self.entities)

    def get(self, entity_id: str) -> Stp:
        try:
            return self._by_id[entity_id]
        except KeyError:
            raise InputError(f"unknown entity id {entity_id!r}") from None

    def has(self, entity_id: str) -> bool:
        return entity_id in self._by_id

    def position(self, entity_id: str) -> int:
        return self._position[entity_id]

    def memo(self, chain: MarkovChain, name: str) -> dict:
        slot = self._chain_memo.setdefault((name, id(chain)), (chain, {}))
        return slot[1]


def entity_mask(chain: MarkovChain, es: EntitySet, entity_id: str) -> int:
    """Bitmask of support trajectories the entity occurs in (memoized)."""
    memo = es.memo(chain, "mask")
    hit = memo.get(entity_id)
    if hit is None:
        hit = memo[entity_id] = pattern_mask(chain, es.get(entity_id))
    return hit


# ---------------------------------------------------------------------------
# builders


def validate_entity_set(chain: MarkovChain, es: EntitySet) -> None:
    """Every entity variable must exist in the chain with a known symbol."""
    for entity_id, pattern in es:
        for var, sym in pattern.items:
            if not chain.has_var(var):
                raise InputError(f"entity {entity_id!r} uses unknown variable {var}")
            chain.symbol_index(var, sym)


def build_all_stps(
    chain: MarkovChain,
    max_domain_size: Optional[int] = None,
    cap: int = DEFAULT_ENTITY_CAP,
) -> EntitySet:
    """Every pattern over 1..max_domain_size variables, canonically ordered.

    Domains are enumerated by size, then lexicographically over variable
    combinations; values run through the alphabet product with the last
    variable fastest. Ids are ``e0``, ``e1``, ... in that order.
    """
    variables = chain.variables
    k = len(variables) if max_domain_size is None else max_domain_size
    if k < 1:
        raise InputError("max_domain_size must be at least 1")
    k = min(k, len(variables))

    total = 0
    for size in range(1, k + 1):
        for combo in itertools.combinations(variables, size):
            count = 1
            for var in combo:
                count *= len(chain.alphabets[var])
            total += count
            if total > cap:
                raise EntityCapExceeded(
                    f"entity count exceeds cap {cap}", cap=cap
                )

    entities = []
    counter = 0
    for size in range(1, k + 1):
        for combo in itertools.combinations(variables, size):
            for values in itertools.product(*(chain.alphabets[v] for v in combo)):
                entities.append((f"e{counter}", Stp(tuple(zip(combo, values)))))
                counter += 1
    return EntitySet(entities, provenance="all-stps")


def build_paloop_entity_set(paloop) -> EntitySet:
    """One entity per memory evolution, occupying every memory variable.

    Accepts a PaLoop or a bare chain whose memory label is ``M``. Evolutions
    with probability zero are included on purpose: absence from the support
    is itself behaviour the action/perception constructions must see.
    """
    chain: MarkovChain = getattr(paloop, "chain", paloop)
    if "M" not in chain.spatial:
        raise InputError("pa-loop entity set needs a chain with memory label 'M'")
    memory_vars = [VarIndex("M", t) for t in range(chain.t_max + 1)]
    entities = []
    for values in itertools.product(*(chain.alphabets[v] for v in memory_vars)):
        entity_id = ",".join(values)
        entities.append((entity_id, Stp(tuple(zip(memory_vars, values)))))
    return EntitySet(entities, provenance="pa-loop")


# ---------------------------------------------------------------------------
# serialization


def entity_set_from_document(chain: MarkovChain, doc: object) -> EntitySet:
    """Parse the entity-set JSON format against a chain.

    Either a list of ``{"id": ..., "assignment": {"j@t": symbol, ...}}``
    objects, or ``{"builtin": "all-stps", "max_domain_size": k}``, or
    ``{"builtin": "pa-loop"}``.
    """
    if isinstance(doc, dict):
        allowed = {"builtin", "max_domain_size", "cap"}
        unknown = set(doc) - allowed
        if unknown:
            raise InputError(f"unknown entity-set field {sorted(unknown)[0]!r}")
        builtin = doc.get("builtin")
        if builtin == "all-stps":
            cap = doc.get("cap", DEFAULT_ENTITY_CAP)
            if not isinstance(cap, int) or isinstance(cap, bool) or cap < 1:
                raise InputError("entity-set 'cap' must be a positive integer")
            size = doc.get("max_domain_size")
            if size is not None and (not isinstance(size, int) or isinstance(size, bool) or size < 1):
                raise InputError("'max_domain_size' must be a positive integer")
            return build_all_stps(chain, size, cap)
        if builtin == "pa-loop":
            if "max_domain_size" in doc:
                raise InputError("'max_domain_size' does not apply to the pa-loop builtin")
            return build_paloop_entity_set(chain)
        raise InputError(f"unknown builtin entity set {builtin!r}")

    if not isinstance(doc, list):
        raise InputError("entity set must be a list of entities or a builtin object")
    entities = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or set(item) != {"id", "assignment"}:
            raise InputError(f"entity #{i} must be an object with exactly 'id' and 'assignment'")
        entity_id = item["id"]
        if not isinstance(entity_id, str):
            raise InputError(f"entity #{i} id must be a string")
        assignment = item["assignment"]
        if not isinstance(assignment, dict) or not assignment:
            raise InputError(f"entity {entity_id!r} assignment must be a non-empty object")
        pairs = []
        for key, sym in assignment.items():
            pairs.append((VarIndex.parse(key), check_label(sym, "symbol")))
        entities.append((entity_id, Stp.of(pairs)))
    es = EntitySet(entities, provenance="explicit")
    validate_entity_set(chain, es)
    return es


def entity_set_to_document(es: EntitySet) -> list:
    return [
        {"id": entity_id, "assignment": {str(v): sym for v, sym in pattern.items}}
        for entity_id, pattern in es
    ]


# ---------------------------------------------------------------------------
# non-interpenetration


@dataclass(frozen=True)
class InterpenetrationWitness:
    first_id: str
    second_id: str
    t: int
    trajectory: Trajectory
    conditional_probability: Fraction

    def payload(self) -> dict:
        from .chain import format_rational

        return {
            "first": self.first_id,
            "second": self.second_id,
            "t": self.t,
            "trajectory": {str(v): s for v, s in self.trajectory.stp.items},
            "conditional_probability": format_rational(self.conditional_probability),
        }


@dataclass(frozen=True)
class NonInterpenetrationResult:
    passed: bool
    witness: Optional[InterpenetrationWitness]

    def payload(self) -> dict:
        return {
            "passed": self.passed,
            "witness": None if self.witness is None else self.witness.payload(),
        }


def check_non_interpenetration(chain: MarkovChain, es: EntitySet) -> NonInterpenetrationResult:
    """First violation, if any, in (pair position, timestep, trajectory) order.

    A violation is a pair of entities with equal prefixes up to t, unequal
    suffixes after t, and positive probability for the combined suffixes
    given the shared prefix. Pairs whose shared prefix has probability zero
    cannot violate the condition (the conditional is undefined), and suffix
    patterns that conflict outright have joint probability zero by fiat.
    """
    memo = es.memo(chain, "noninterpenetration")
    if "result" in memo:
        return memo["result"]

    index = support_index(chain)
    entities = es.entities
    result = None
    for i in range(len(entities)):
        first_id, first = entities[i]
        for j in range(i + 1, len(entities)):
            second_id, second = entities[j]
            for t in range(chain.t_max):
                prefix = first.prefix(t)
                if prefix != second.prefix(t):
                    continue
                first_suffix = first.suffix(t)
                second_suffix = second.suffix(t)
                if first_suffix == second_suffix:
                    continue
                joint_suffix = first_suffix.merge(second_suffix)
                if joint_suffix is None:
                    continue
                prefix_prob = stp_probability(chain, prefix)
                if prefix_prob == 0:
                    continue
                event = joint_suffix.merge(prefix)
                mask = pattern_mask(chain, event)
                if mask:
                    hit = mask_to_indices(mask)[0]
                    result = NonInterpenetrationResult(
                        False,
                        InterpenetrationWitness(
                            first_id,
                            second_id,
                            t,
                            index.trajectories[hit],
                            stp_probability(chain, event) / prefix_prob,
                        ),
                    )
                    break
            if result:
                break
        if result:
            break
    if result is None:
        result = NonInterpenetrationResult(True, None)
    memo["result"] = result
    return result
