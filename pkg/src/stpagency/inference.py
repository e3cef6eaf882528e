"""Support enumeration and exact marginal queries.

The support of a chain is the set of trajectories with positive chain-rule
probability. It is enumerated once per chain by a depth-first walk over the
variables in canonical order, branching only on positive mechanism entries,
and then indexed: for every (variable, symbol) pair that appears, a Python
int bitmask records which support trajectories carry that symbol. A pattern
probability is then the Fraction-sum over the AND of its postings, which
keeps the repeated queries made by the action/perception machinery cheap.

Enumeration is guarded by a cap on a cheap upper bound of the support size
(product over variables of the largest positive-entry count in any row), so
oversized chains fail fast with ``SupportCapExceeded`` instead of grinding.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .chain import MarkovChain, Stp, Trajectory, validate_chain
from .errors import (
    ConditionHasZeroProbability,
    InputError,
    InvalidChain,
    SupportCapExceeded,
)

DEFAULT_SUPPORT_CAP = 10**6
SUPPORT_CAP_ENV = "AGENCY_SUPPORT_CAP"


def effective_support_cap(cap: Optional[int] = None) -> int:
    """Explicit argument, else the AGENCY_SUPPORT_CAP env var, else the default."""
    if cap is not None:
        return cap
    raw = os.environ.get(SUPPORT_CAP_ENV)
    if raw is not None:
        try:
            return int(raw)
        except ValueError:
            raise InputError(f"{SUPPORT_CAP_ENV} must be an integer, got {raw!r}") from None
    return DEFAULT_SUPPORT_CAP


@dataclass
class SupportIndex:
    trajectories: tuple[Trajectory, ...]
    sym_rows: tuple[tuple[int, ...], ...]  # symbol index per variable, per trajectory
    masks: dict[tuple[int, int], int]  # (var position, symbol index) -> bitmask
    row_lookup: dict[tuple[int, ...], int]  # full symbol-index row -> trajectory index

    @property
    def full_mask(self) -> int:
        return (1 << len(self.trajectories)) - 1


def require_valid_chain(chain: MarkovChain) -> None:
    report = validate_chain(chain)
    if not report.ok:
        first = report.violations[0]
        raise InvalidChain(
            f"chain fails validation: {first.message}"
            + (f" (at {first.var})" if first.var else ""),
            violations=[v.payload() for v in report.violations],
        )


def support_bound(chain: MarkovChain) -> int:
    """Upper bound on the support size; exact for chains with full-support rows."""
    cached = chain.caches.get("support_bound")
    if cached is not None:
        return cached
    require_valid_chain(chain)
    bound = 1
    for var in chain.variables:
        rows = chain.mechanisms[var]
        bound *= max(sum(1 for x in row if x > 0) for row in rows.values())
    chain.caches["support_bound"] = bound
    return bound


def support_index(chain: MarkovChain, cap: Optional[int] = None) -> SupportIndex:
    # the cap is enforced on every call, cached or not, so the answer cannot
    # depend on whether an earlier call already built the index
    limit = effective_support_cap(cap)
    bound = support_bound(chain)
    if bound > limit:
        raise SupportCapExceeded(
            f"support bound {bound} exceeds cap {limit}", bound=bound, cap=limit
        )
    cached = chain.caches.get("support")
    if cached is not None:
        return cached
    require_valid_chain(chain)

    variables = chain.variables
    n = len(variables)
    # per variable: parent positions and rows compiled down to symbol indices,
    # keeping positive entries only (this is what prunes the walk)
    compiled = []
    for var in variables:
        parent_pos = tuple(chain.var_position(p) for p in chain.parents[var])
        rows = {}
        for key, row in chain.mechanisms[var].items():
            key_idx = tuple(
                chain.symbol_index(p, sym) for p, sym in zip(chain.parents[var], key)
            )
            rows[key_idx] = tuple(
                (i, x) for i, x in enumerate(row) if x > 0
            )
        compiled.append((parent_pos, rows))

    assignments: list[tuple[int, ...]] = []
    probs: list[Fraction] = []
    current = [0] * n

    def walk(i: int, p: Fraction) -> None:
        if i == n:
            assignments.append(tuple(current))
            probs.append(p)
            return
        parent_pos, rows = compiled[i]
        for sym_idx, weight in rows[tuple(current[k] for k in parent_pos)]:
            current[i] = sym_idx
            walk(i + 1, p * weight)

    walk(0, Fraction(1))

    masks: dict[tuple[int, int], int] = {}
    for idx, row in enumerate(assignments):
        bit = 1 << idx
        for pos, sym_idx in enumerate(row):
            key = (pos, sym_idx)
            masks[key] = masks.get(key, 0) | bit

    trajectories = tuple(
        Trajectory(
            Stp(tuple(
                (var, chain.alphabets[var][sym_idx])
                for var, sym_idx in zip(variables, row)
            )),
            p,
        )
        for row, p in zip(assignments, probs)
    )
    index = SupportIndex(
        trajectories=trajectories,
        sym_rows=tuple(assignments),
        masks=masks,
        row_lookup={row: i for i, row in enumerate(assignments)},
    )
    chain.caches["support"] = index
    return index


def enumerate_support(chain: MarkovChain, cap: Optional[int] = None) -> tuple[Trajectory, ...]:
    """All positive-probability trajectories, in canonical DFS order."""
    return support_index(chain, cap).trajectories


# ---------------------------------------------------------------------------
# mask arithmetic


def pattern_mask(chain: MarkovChain, pattern: Stp, cap: Optional[int] = None) -> int:
    """Bitmask of the support trajectories the pattern occurs in."""
    index = support_index(chain, cap)
    mask = index.full_mask
    for var, sym in pattern.items:
        pos = chain.var_position(var)
        sym_idx = chain.symbol_index(var, sym)
        mask &= index.masks.get((pos, sym_idx), 0)
        if not mask:
            return 0
    return mask


def mask_to_indices(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mask_probability(chain: MarkovChain, mask: int) -> Fraction:
    index = support_index(chain)
    total = Fraction(0)
    for idx in mask_to_indices(mask):
        total += index.trajectories[idx].probability
    return total


# ---------------------------------------------------------------------------
# queries


def stp_probability(chain: MarkovChain, pattern: Stp, cap: Optional[int] = None) -> Fraction:
    """Exact marginal probability that the pattern occurs."""
    cache = chain.caches.setdefault("stp_probability", {})
    hit = cache.get(pattern)
    if hit is not None:
        return hit
    value = mask_probability(chain, pattern_mask(chain, pattern, cap))
    cache[pattern] = value
    return value


def conditional_probability(chain: MarkovChain, target: Stp, given: Stp) -> Fraction:
    """P(target | given); raises when the condition has probability zero."""
    denom = stp_probability(chain, given)
    if denom == 0:
        raise ConditionHasZeroProbability(
            "conditioning pattern has probability zero", given=given.pattern_string()
        )
    joint = target.merge(given)
    if joint is None:
        return Fraction(0)
    return stp_probability(chain, joint) / denom


def trajectory_index_of(chain: MarkovChain, full: Stp) -> Optional[int]:
    """Index of a full assignment within the support, or None if probability 0.

    The assignment must cover every variable of the chain exactly.
    """
    if len(full) != len(chain.variables):
        raise InputError(
            f"trajectory assignment covers {len(full)} of {len(chain.variables)} variables"
        )
    row = []
    for var in chain.variables:
        sym = full.get(var)
        if sym is None:
            raise InputError(f"trajectory assignment is missing {var}")
        row.append(chain.symbol_index(var, sym))
    return support_index(chain).row_lookup.get(tuple(row))
