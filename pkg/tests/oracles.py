"""Independent reference implementations used to freeze expected values.

Nothing here may share algorithmic machinery with the code under test: the
probability oracle is a forward variable-elimination sweep (no support
enumeration, no bitmasks), the co-action oracle is the naive quadruple loop
over (entity, trajectory) pairs applying the membership conditions one by
one, and the counting oracle is plain combinatorics.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

from stpagency.chain import MarkovChain, Stp, Trajectory
from stpagency.entities import EntitySet
from stpagency.inference import enumerate_support


def ve_probability(chain: MarkovChain, pattern: Stp) -> Fraction:
    """Forward sweep over timesteps, keeping a distribution over slices."""
    wanted = pattern.as_dict
    states: dict[tuple[str, ...], Fraction] = {(): Fraction(1)}
    previous_vars: tuple = ()
    for t in range(chain.t_max + 1):
        slice_vars = chain.slice_vars(t)
        new: dict[tuple[str, ...], Fraction] = {}
        for prev_key, acc in states.items():
            prev_map = dict(zip(previous_vars, prev_key))
            choices = []
            for var in slice_vars:
                row = chain.mechanism_row(var, prev_map)
                allowed = [
                    (sym, p)
                    for sym, p in zip(chain.alphabets[var], row)
                    if var not in wanted or wanted[var] == sym
                ]
                choices.append(allowed)
            for combo in itertools.product(*choices):
                key = tuple(sym for sym, _ in combo)
                weight = acc
                for _, p in combo:
                    weight *= p
                new[key] = new.get(key, Fraction(0)) + weight
        states = new
        previous_vars = slice_vars
    return sum(states.values(), Fraction(0))


def brute_force_co_actions(
    chain: MarkovChain,
    es: EntitySet,
    entity_id: str,
    trajectory: Trajectory,
    t: int,
    history: int = 0,
) -> list[tuple[str, Trajectory]]:
    """Quadruple loop: every (entity, support trajectory) pair, conditions
    applied literally in order."""
    x = es.get(entity_id)
    interval = list(range(t - history, t + 1))
    out = []
    for y_id, y in es:
        for y_traj in enumerate_support(chain):
            # (i) a different support trajectory in which y occurs
            if y_traj.stp == trajectory.stp:
                continue
            if not y.occurs_in(y_traj.stp):
                continue
            # (ii) same occupied variables as x over the interval
            if any(set(y.vars_at(s)) != set(x.vars_at(s)) for s in interval):
                continue
            # (iii) same values on every unoccupied variable over the interval
            env_equal = True
            for s in interval:
                occupied = set(x.vars_at(s))
                for var in chain.slice_vars(s):
                    if var in occupied:
                        continue
                    if y_traj.stp.get(var) != trajectory.stp.get(var):
                        env_equal = False
            if not env_equal:
                continue
            # (iv) a different, non-empty pattern at t+1
            if y.time_slice(t + 1).is_empty:
                continue
            if y.time_slice(t + 1) == x.time_slice(t + 1):
                continue
            out.append((y_id, y_traj))
    return out


def count_bounded_patterns(alphabet_sizes: list[int], max_domain_size: int) -> int:
    """Number of value assignments over 1..max_domain_size of the variables."""
    total = 0
    for size in range(1, max_domain_size + 1):
        for positions in itertools.combinations(range(len(alphabet_sizes)), size):
            product = 1
            for pos in positions:
                product *= alphabet_sizes[pos]
            total += product
    return total


def interpenetration_violations(
    chain: MarkovChain, es: EntitySet
) -> list[tuple[str, str, int]]:
    """All violating (first, second, t) triples, literally, via the VE oracle."""
    out = []
    entities = list(es)
    for i in range(len(entities)):
        first_id, first = entities[i]
        for j in range(i + 1, len(entities)):
            second_id, second = entities[j]
            for t in range(chain.t_max):
                if first.prefix(t) != second.prefix(t):
                    continue
                if first.suffix(t) == second.suffix(t):
                    continue
                prefix_prob = ve_probability(chain, first.prefix(t))
                if prefix_prob == 0:
                    continue
                joint = first.suffix(t).merge(second.suffix(t))
                if joint is None:
                    continue
                event = joint.merge(first.prefix(t))
                if ve_probability(chain, event) > 0:
                    out.append((first_id, second_id, t))
    return out
