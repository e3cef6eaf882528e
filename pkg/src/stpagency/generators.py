"""Seeded random chains and loops for property tests and batch verification.

Everything is driven by ``random.Random(seed)`` only, so a seed pins the
chain exactly. Rows are built from integer cut points over a bounded
denominator, which keeps entries rational with small denominators and lets
some entries be zero (that is wanted: zero entries exercise the support
pruning and the zero-probability branches downstream).
"""

from __future__ import annotations

import random
from fractions import Fraction

from .chain import MarkovChain, VarIndex
from .paloop import PaLoop

_SYMBOLS = ("0", "1", "2")
_LABELS = ("a", "b", "c")


def _random_row(
    rng: random.Random, size: int, deterministic_fraction: float, max_denominator: int
) -> tuple[Fraction, ...]:
    if size == 1:
        return (Fraction(1),)
    if rng.random() < deterministic_fraction:
        row = [Fraction(0)] * size
        row[rng.randrange(size)] = Fraction(1)
        return tuple(row)
    den = rng.randint(2, max_denominator)
    cuts = sorted(rng.randint(0, den) for _ in range(size - 1))
    bounds = [0] + cuts + [den]
    return tuple(Fraction(b - a, den) for a, b in zip(bounds, bounds[1:]))


def random_paloop(
    seed: int,
    max_alphabet: int = 3,
    max_t_max: int = 3,
    deterministic_fraction: float = 0.3,
    max_denominator: int = 16,
) -> PaLoop:
    rng = random.Random(seed)
    t_max = rng.randint(1, max_t_max)
    spatial = ["M", "E"]
    alphabets = {}
    for t in range(t_max + 1):
        for j in spatial:
            alphabets[VarIndex(j, t)] = _SYMBOLS[: rng.randint(1, max_alphabet)]

    def row(var):
        return _random_row(
            rng, len(alphabets[var]), deterministic_fraction, max_denominator
        )

    parents = {}
    mechanisms = {}
    for j in spatial:
        mechanisms[VarIndex(j, 0)] = {(): row(VarIndex(j, 0))}
    for t in range(1, t_max + 1):
        previous = [VarIndex("E", t - 1), VarIndex("M", t - 1)]  # canonical order
        for j in spatial:
            var = VarIndex(j, t)
            parents[var] = previous
            mechanisms[var] = {}
            for e in alphabets[previous[0]]:
                for m in alphabets[previous[1]]:
                    mechanisms[var][(e, m)] = row(var)
    chain = MarkovChain(spatial, t_max, alphabets, parents, mechanisms)
    return PaLoop.from_chain(chain)


def random_chain(
    seed: int,
    max_spatial: int = 3,
    max_alphabet: int = 3,
    max_t_max: int = 2,
    deterministic_fraction: float = 0.3,
    max_denominator: int = 16,
    parent_probability: float = 0.7,
) -> MarkovChain:
    rng = random.Random(seed)
    spatial = list(_LABELS[: rng.randint(1, max_spatial)])
    t_max = rng.randint(1, max_t_max)
    alphabets = {
        VarIndex(j, t): _SYMBOLS[: rng.randint(1, max_alphabet)]
        for t in range(t_max + 1)
        for j in spatial
    }
    parents = {}
    mechanisms = {}
    for t in range(t_max + 1):
        for j in sorted(spatial):
            var = VarIndex(j, t)
            if t == 0:
                chosen: list[VarIndex] = []
            else:
                chosen = [
                    VarIndex(i, t - 1)
                    for i in sorted(spatial)
                    if rng.random() < parent_probability
                ]
            parents[var] = chosen
            rows = {}
            keys = [()]
            for p in chosen:
                keys = [k + (sym,) for k in keys for sym in alphabets[p]]
            for key in keys:
                rows[key] = _random_row(
                    rng, len(alphabets[var]), deterministic_fraction, max_denominator
                )
            mechanisms[var] = rows
    return MarkovChain(spatial, t_max, alphabets, parents, mechanisms)
