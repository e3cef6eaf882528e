"""Co-action detection for an entity occurring in a trajectory.

Fix an entity set, a query entity x, a support trajectory it occurs in, a
timestep t and a history length m. A co-action is a pair (entity y, support
trajectory y_V) with:

(i)   y occurs in y_V and y_V differs from the query trajectory,
(ii)  y occupies exactly the same variables as x at every timestep in
      [t-m .. t],
(iii) y_V agrees with the query trajectory on every unoccupied variable in
      those timesteps (equal environments over the interval), and
(iv)  y's timestep-(t+1) pattern differs from x's.

A co-action is "value"-kind when the two t+1 patterns occupy the same
variables with different symbols, and "extent"-kind otherwise. Grouping the
query occurrence together with its co-actions by their t+1 pattern yields
the co-action classes; x acts at t precisely when at least one co-action
exists, i.e. when there are two or more classes.

Condition (iii) is evaluated on the support bitmasks: the environment values
over the interval select a mask of admissible trajectories once, and each
candidate entity contributes the AND of its own occurrence mask.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Optional

from .chain import MarkovChain, Stp, Trajectory
from .entities import EntitySet, entity_mask
from .errors import QueryInvariantViolated
from .inference import mask_to_indices, support_index, trajectory_index_of


@dataclass(frozen=True)
class ActionQuery:
    entity_id: str
    trajectory: Trajectory
    t: int
    history: int = 0


@dataclass(frozen=True)
class CoAction:
    co_entity_id: str
    co_trajectory: Trajectory
    kind: str  # "value" | "extent"
    next_slice: Stp  # the co-entity's pattern at t+1


def _checked_query(chain: MarkovChain, es: EntitySet, query: ActionQuery) -> tuple[Stp, int]:
    """Validate the query invariants; return (entity pattern, trajectory index)."""
    if not es.has(query.entity_id):
        raise QueryInvariantViolated(f"entity {query.entity_id!r} is not in the entity set")
    x = es.get(query.entity_id)
    if query.history < 0:
        raise QueryInvariantViolated("history must be non-negative")
    if query.t - query.history < 0:
        raise QueryInvariantViolated(
            f"history {query.history} reaches before timestep 0 from t={query.t}"
        )
    if query.t < 0 or query.t + 1 > chain.t_max:
        raise QueryInvariantViolated(
            f"timestep t={query.t} needs both t and t+1 within 0..{chain.t_max}"
        )
    if x.time_slice(query.t).is_empty:
        raise QueryInvariantViolated(f"entity {query.entity_id!r} occupies nothing at t={query.t}")
    if x.time_slice(query.t + 1).is_empty:
        raise QueryInvariantViolated(
            f"entity {query.entity_id!r} occupies nothing at t+1={query.t + 1}"
        )
    if not x.occurs_in(query.trajectory.stp):
        raise QueryInvariantViolated(
            f"entity {query.entity_id!r} does not occur in the query trajectory"
        )
    idx = trajectory_index_of(chain, query.trajectory.stp)
    if idx is None:
        raise QueryInvariantViolated("query trajectory is not in the support of the chain")
    return x, idx


def _interval_environment_mask(
    chain: MarkovChain, x: Stp, query: ActionQuery
) -> int:
    index = support_index(chain)
    mask = index.full_mask
    values = query.trajectory.stp.as_dict
    for s in range(query.t - query.history, query.t + 1):
        occupied = set(x.vars_at(s))
        for var in chain.slice_vars(s):
            if var in occupied:
                continue
            key = (chain.var_position(var), chain.symbol_index(var, values[var]))
            mask &= index.masks.get(key, 0)
    return mask


def _candidates(
    chain: MarkovChain, es: EntitySet, query: ActionQuery
) -> Iterator[tuple[str, Stp, int]]:
    """Yield (entity id, pattern, trajectory mask) satisfying (i)-(iv)."""
    x, query_idx = _checked_query(chain, es, query)
    env_mask = _interval_environment_mask(chain, x, query) & ~(1 << query_idx)
    if not env_mask:
        return
    interval = range(query.t - query.history, query.t + 1)
    x_domains = {s: x.vars_at(s) for s in interval}
    x_next = x.time_slice(query.t + 1)
    for entity_id, y in es:
        if any(y.vars_at(s) != x_domains[s] for s in interval):
            continue
        y_next = y.time_slice(query.t + 1)
        if y_next.is_empty or y_next == x_next:
            continue
        mask = entity_mask(chain, es, entity_id) & env_mask
        if mask:
            yield entity_id, y, mask


def find_co_actions(chain: MarkovChain, es: EntitySet, query: ActionQuery) -> tuple[CoAction, ...]:
    """All co-actions, ordered by entity-set position then trajectory index."""
    x, _ = _checked_query(chain, es, query)
    x_next_domain = x.time_slice(query.t + 1).domain
    index = support_index(chain)
    out = []
    for entity_id, y, mask in _candidates(chain, es, query):
        y_next = y.time_slice(query.t + 1)
        kind = "value" if y_next.domain == x_next_domain else "extent"
        for idx in mask_to_indices(mask):
            out.append(CoAction(entity_id, index.trajectories[idx], kind, y_next))
    return tuple(out)


def any_co_action(chain: MarkovChain, es: EntitySet, query: ActionQuery) -> bool:
    for _ in _candidates(chain, es, query):
        return True
    return False


@dataclass(frozen=True)
class CoActionClass:
    next_slice: Stp
    members: tuple[tuple[str, Trajectory], ...]  # (entity id, trajectory)


@dataclass(frozen=True)
class CoActionClasses:
    classes: tuple[CoActionClass, ...]

    @property
    def n(self) -> int:
        return len(self.classes)


def co_action_sets(chain: MarkovChain, es: EntitySet, query: ActionQuery) -> CoActionClasses:
    """Partition the query occurrence plus all co-actions by t+1 pattern.

    The query's own class comes first; the rest follow in co-action order.
    """
    co_actions = find_co_actions(chain, es, query)
    x = es.get(query.entity_id)
    occurrences: list[tuple[str, Trajectory, Stp]] = [
        (query.entity_id, query.trajectory, x.time_slice(query.t + 1))
    ]
    for ca in co_actions:
        occurrences.append((ca.co_entity_id, ca.co_trajectory, ca.next_slice))
    grouped: dict[Stp, list[tuple[str, Trajectory]]] = {}
    for entity_id, trajectory, next_slice in occurrences:
        grouped.setdefault(next_slice, []).append((entity_id, trajectory))
    return CoActionClasses(
        tuple(CoActionClass(s, tuple(members)) for s, members in grouped.items())
    )


@dataclass(frozen=True)
class ActionReportRow:
    t: int
    acted: bool
    n: int
    kinds: tuple[str, ...]
    log2_n: float


def action_report(
    chain: MarkovChain, es: EntitySet, entity_id: str, trajectory: Trajectory, history: int = 0
) -> tuple[ActionReportRow, ...]:
    """One row per timestep where the entity occupies both t and t+1."""
    if not es.has(entity_id):
        raise QueryInvariantViolated(f"entity {entity_id!r} is not in the entity set")
    x = es.get(entity_id)
    if not x.occurs_in(trajectory.stp):
        raise QueryInvariantViolated(f"entity {entity_id!r} does not occur in the trajectory")
    rows = []
    for t in range(chain.t_max):
        if t - history < 0:
            continue
        if x.time_slice(t).is_empty or x.time_slice(t + 1).is_empty:
            continue
        query = ActionQuery(entity_id, trajectory, t, history)
        classes = co_action_sets(chain, es, query)
        # every member of a class shares one t+1 pattern, so kind is per class
        x_next = x.time_slice(t + 1)
        kinds = tuple(sorted({
            "value" if c.next_slice.domain == x_next.domain else "extent"
            for c in classes.classes
            if c.next_slice != x_next
        }))
        rows.append(
            ActionReportRow(
                t=t,
                acted=classes.n > 1,
                n=classes.n,
                kinds=kinds,
                log2_n=math.log2(classes.n),
            )
        )
    return tuple(rows)
