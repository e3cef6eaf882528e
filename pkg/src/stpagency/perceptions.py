"""Perception constructions for an anchor entity at a timestep.

The pipeline, for an entity set E, an anchor entity x in E, a timestep t and
a horizon r >= 1:

1. Co-perception entities: members of E with the same prefix as x up to t
   and non-empty patterns at both t and t+1. The anchor is one of them.
2. Co-perception environments: assignments e to the timestep-t variables the
   anchor does not occupy such that at least one co-perception entity has
   positive joint probability with e. (The whole entity pattern is used, not
   just its prefix, so an environment counts as soon as any complete
   co-entity is jointly possible with it.)
3. Branching partition: co-perception entities grouped by their combined
   pattern on timesteps t+1 .. t+r. Block ids are that pattern's string.
4. Branch-morph of an environment e: for each block, the sum over member
   entities y of P(suffix of y after t | e and the shared prefix), then
   normalized across blocks. Blocks with probability zero stay at zero, so
   every morph is a distribution over the same block ids.
5. Perception partition: environments grouped by equal morphs (exact
   Fraction equality blockwise).

Steps 4 and 5 are only meaningful when the entity set does not
interpenetrate: otherwise one trajectory could advance two distinct blocks
at once and the per-block sums would not be a distribution. The morph
entrypoints therefore run the non-interpenetration check first and refuse
interpenetrating sets. ``mutual_exclusivity_check`` exposes the derived
guarantee directly (no two co-perception entities are jointly possible with
any co-perception environment and the shared prefix).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .chain import MarkovChain, Stp, format_rational
from .entities import EntitySet, check_non_interpenetration, entity_mask
from .errors import (
    AnchorSliceMissing,
    ConditionHasZeroProbability,
    EmptyEnvironmentSet,
    EnvironmentNotCoPerception,
    HorizonExceedsChain,
    InterpenetratingEntitySet,
    QueryInvariantViolated,
)
from .inference import mask_probability, pattern_mask, stp_probability
from .partition import Partition


def _checked_anchor(chain: MarkovChain, es: EntitySet, anchor_id: str, t: int) -> Stp:
    if not es.has(anchor_id):
        raise QueryInvariantViolated(f"entity {anchor_id!r} is not in the entity set")
    if t < 0 or t + 1 > chain.t_max:
        raise QueryInvariantViolated(
            f"timestep t={t} needs both t and t+1 within 0..{chain.t_max}"
        )
    anchor = es.get(anchor_id)
    for s in (t, t + 1):
        if anchor.time_slice(s).is_empty:
            raise AnchorSliceMissing(
                f"anchor {anchor_id!r} occupies nothing at timestep {s}", t=s
            )
    return anchor


def co_perception_entities(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int
) -> tuple[str, ...]:
    """Ids of entities sharing the anchor's prefix, occupying t and t+1."""
    anchor = _checked_anchor(chain, es, anchor_id, t)
    prefix = anchor.prefix(t)
    out = []
    for entity_id, y in es:
        if y.time_slice(t).is_empty or y.time_slice(t + 1).is_empty:
            continue
        if y.prefix(t) == prefix:
            out.append(entity_id)
    return tuple(out)


def co_perception_environments(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int
) -> tuple[Stp, ...]:
    """Timestep-t assignments off the anchor, jointly possible with some co-entity.

    Candidates run through the alphabet product over the unoccupied
    timestep-t variables in canonical order; an empty result raises
    ``EmptyEnvironmentSet`` (it means the anchor's prefix never happens).
    """
    anchor = _checked_anchor(chain, es, anchor_id, t)
    co_ids = co_perception_entities(chain, es, anchor_id, t)
    occupied = set(anchor.vars_at(t))
    free = [v for v in chain.slice_vars(t) if v not in occupied]
    co_masks = [entity_mask(chain, es, entity_id) for entity_id in co_ids]
    out = []
    for values in itertools.product(*(chain.alphabets[v] for v in free)):
        env = Stp(tuple(zip(free, values)))
        env_mask = pattern_mask(chain, env)
        if any(env_mask & m for m in co_masks):
            out.append(env)
    if not out:
        raise EmptyEnvironmentSet(
            f"no environment is jointly possible with any co-perception entity of {anchor_id!r} at t={t}"
        )
    return tuple(out)


@dataclass(frozen=True)
class BranchBlock:
    block_id: str  # pattern string of the shared t+1..t+r pattern
    signature: Stp
    members: tuple[str, ...]


@dataclass(frozen=True)
class BranchingPartition:
    t: int
    r: int
    carrier: tuple[str, ...]
    blocks: tuple[BranchBlock, ...]
    anchor_block: str

    def as_partition(self) -> Partition:
        return Partition(self.carrier, tuple(b.members for b in self.blocks))

    def payload(self) -> dict:
        return {
            "t": self.t,
            "r": self.r,
            "blocks": [
                {"id": b.block_id, "members": list(b.members)} for b in self.blocks
            ],
            "anchor_block": self.anchor_block,
        }


def branching_partition(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int, r: int = 1
) -> BranchingPartition:
    """Group co-perception entities by their pattern over t+1 .. t+r."""
    if r < 1:
        raise QueryInvariantViolated("horizon r must be at least 1")
    if t + r > chain.t_max:
        raise HorizonExceedsChain(
            f"horizon t+r={t + r} exceeds the chain's final timestep {chain.t_max}",
            t=t,
            r=r,
            t_max=chain.t_max,
        )
    co_ids = co_perception_entities(chain, es, anchor_id, t)

    def signature(entity_id: str) -> Stp:
        y = es.get(entity_id)
        return Stp(tuple(p for p in y.items if t + 1 <= p[0].t <= t + r))

    grouped: dict[Stp, list[str]] = {}
    for entity_id in co_ids:
        grouped.setdefault(signature(entity_id), []).append(entity_id)
    blocks = tuple(
        BranchBlock(sig.pattern_string(), sig, tuple(members))
        for sig, members in grouped.items()
    )
    anchor_block = next(b.block_id for b in blocks if anchor_id in b.members)
    return BranchingPartition(t, r, co_ids, blocks, anchor_block)


@dataclass(frozen=True)
class BranchMorph:
    environment: Stp
    distribution: tuple[tuple[str, Fraction], ...]  # (block id, probability)
    denominator: Fraction  # unnormalized mass, always > 0

    def as_dict(self) -> dict[str, Fraction]:
        return dict(self.distribution)

    def payload(self) -> dict:
        return {
            "environment": self.environment.pattern_string(),
            "distribution": {b: format_rational(p) for b, p in self.distribution},
        }


def _require_non_interpenetrating(chain: MarkovChain, es: EntitySet) -> None:
    result = check_non_interpenetration(chain, es)
    if not result.passed:
        raise InterpenetratingEntitySet(
            "entity set interpenetrates; branch-morphs are not defined",
            witness=result.witness.payload(),
        )


def branch_morph(
    chain: MarkovChain,
    es: EntitySet,
    anchor_id: str,
    t: int,
    env: Stp,
    r: int = 1,
    branching: Optional[BranchingPartition] = None,
    environments: Optional[tuple[Stp, ...]] = None,
) -> BranchMorph:
    """Distribution over branching blocks induced by one environment.

    ``branching`` and ``environments`` can be passed in to avoid recomputing
    them per environment; they must come from the same (anchor, t, r).
    """
    _require_non_interpenetrating(chain, es)
    anchor = _checked_anchor(chain, es, anchor_id, t)
    if environments is None:
        environments = co_perception_environments(chain, es, anchor_id, t)
    if env not in environments:
        raise EnvironmentNotCoPerception(
            f"{env.pattern_string() or '(empty)'} is not a co-perception environment of {anchor_id!r} at t={t}",
            environment=env.pattern_string(),
        )
    if branching is None:
        branching = branching_partition(chain, es, anchor_id, t, r)

    prefix = anchor.prefix(t)
    condition = env.merge(prefix)
    denom = stp_probability(chain, condition)
    if denom == 0:
        # cannot happen for a co-perception environment; guard anyway
        raise ConditionHasZeroProbability(
            "environment plus shared prefix has probability zero",
            given=condition.pattern_string(),
        )
    env_mask = pattern_mask(chain, condition)
    unnormalized = []
    total = Fraction(0)
    for block in branching.blocks:
        mass = Fraction(0)
        for entity_id in block.members:
            # entity pattern extends the shared prefix, so the joint event
            # "suffix of y and condition" is just "y and env"
            mass += mask_probability(chain, entity_mask(chain, es, entity_id) & env_mask)
        mass /= denom
        unnormalized.append((block.block_id, mass))
        total += mass
    if total == 0:
        # only reachable when a stale precomputed environment list is passed in
        raise EnvironmentNotCoPerception(
            f"no co-perception entity is jointly possible with {env.pattern_string()!r}",
            environment=env.pattern_string(),
        )
    distribution = tuple((b, mass / total) for b, mass in unnormalized)
    return BranchMorph(env, distribution, total)


@dataclass(frozen=True)
class ExclusivityWitness:
    first_id: str
    second_id: str
    environment: Stp
    probability: Fraction

    def payload(self) -> dict:
        return {
            "first": self.first_id,
            "second": self.second_id,
            "environment": self.environment.pattern_string(),
            "probability": format_rational(self.probability),
        }


@dataclass(frozen=True)
class MutualExclusivityResult:
    passed: bool
    witness: Optional[ExclusivityWitness]

    def payload(self) -> dict:
        return {
            "passed": self.passed,
            "witness": None if self.witness is None else self.witness.payload(),
        }


def mutual_exclusivity_check(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int
) -> MutualExclusivityResult:
    """Can two distinct co-perception entities happen in one trajectory?

    Scans entity pairs in carrier order, then environments, and reports the
    first pair jointly possible with some co-perception environment and the
    shared prefix. Non-interpenetrating entity sets always pass.
    """
    co_ids = co_perception_entities(chain, es, anchor_id, t)
    environments = co_perception_environments(chain, es, anchor_id, t)
    env_masks = [(env, pattern_mask(chain, env)) for env in environments]
    for i in range(len(co_ids)):
        first = es.get(co_ids[i])
        first_mask = entity_mask(chain, es, co_ids[i])
        for j in range(i + 1, len(co_ids)):
            second = es.get(co_ids[j])
            if first.merge(second) is None:
                continue
            pair_mask = first_mask & entity_mask(chain, es, co_ids[j])
            if not pair_mask:
                continue
            for env, env_mask in env_masks:
                joint = pair_mask & env_mask
                if joint:
                    return MutualExclusivityResult(
                        False,
                        ExclusivityWitness(
                            co_ids[i], co_ids[j], env, mask_probability(chain, joint)
                        ),
                    )
    return MutualExclusivityResult(True, None)


@dataclass(frozen=True)
class PerceptionReport:
    anchor_id: str
    t: int
    r: int
    co_entities: tuple[str, ...]
    environments: tuple[Stp, ...]
    branching: BranchingPartition
    morphs: tuple[BranchMorph, ...]  # aligned with environments
    partition: Partition  # carrier: environment pattern strings

    def payload(self) -> dict:
        return {
            "anchor": self.anchor_id,
            "t": self.t,
            "r": self.r,
            "co_entities": list(self.co_entities),
            "environments": [e.pattern_string() for e in self.environments],
            "branching": self.branching.payload(),
            "morphs": [m.payload() for m in self.morphs],
            "perceptions": [list(b) for b in self.partition.blocks],
        }


def perception_report(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int, r: int = 1
) -> PerceptionReport:
    """Run the whole pipeline once and keep every intermediate."""
    _require_non_interpenetrating(chain, es)
    co_ids = co_perception_entities(chain, es, anchor_id, t)
    environments = co_perception_environments(chain, es, anchor_id, t)
    branching = branching_partition(chain, es, anchor_id, t, r)
    morphs = tuple(
        branch_morph(chain, es, anchor_id, t, env, r, branching, environments)
        for env in environments
    )
    by_env = {env.pattern_string(): m for env, m in zip(environments, morphs)}
    partition = Partition.group_by(
        tuple(env.pattern_string() for env in environments),
        lambda env_id: by_env[env_id].distribution,
    )
    return PerceptionReport(
        anchor_id, t, r, co_ids, environments, branching, morphs, partition
    )


def perception_partition(
    chain: MarkovChain, es: EntitySet, anchor_id: str, t: int, r: int = 1
) -> Partition:
    """Environments grouped by equal branch-morphs."""
    return perception_report(chain, es, anchor_id, t, r).partition
