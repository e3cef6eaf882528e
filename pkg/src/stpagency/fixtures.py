"""Small built-in chains used by the CLI, the docs and the test-suite."""

from __future__ import annotations

from fractions import Fraction

from .chain import MarkovChain, VarIndex
from .errors import UnknownFixture
from .paloop import PaLoop

_HALF = (Fraction(1, 2), Fraction(1, 2))
_BINARY = ("0", "1")


def _point(alphabet, value):
    return tuple(Fraction(1) if s == value else Fraction(0) for s in alphabet)


def copy_chain() -> MarkovChain:
    """One binary process started at 0 and copied forward deterministically."""
    a = [VarIndex("a", t) for t in range(3)]
    copy_rows = {(s,): _point(_BINARY, s) for s in _BINARY}
    return MarkovChain(
        ["a"],
        2,
        {v: _BINARY for v in a},
        {a[1]: [a[0]], a[2]: [a[1]]},
        {a[0]: {(): _point(_BINARY, "0")}, a[1]: copy_rows, a[2]: copy_rows},
    )


def pa_chain() -> MarkovChain:
    """XOR memory against a fresh uniform environment, three timesteps."""
    spatial = ["M", "E"]
    alphabets = {VarIndex(j, t): _BINARY for j in spatial for t in range(3)}
    parents = {}
    mechanisms = {VarIndex("M", 0): {(): _HALF}, VarIndex("E", 0): {(): _HALF}}
    for t in (1, 2):
        previous = [VarIndex("E", t - 1), VarIndex("M", t - 1)]
        for j in spatial:
            parents[VarIndex(j, t)] = previous
        mechanisms[VarIndex("M", t)] = {
            (e, m): _point(_BINARY, str((int(e) + int(m)) % 2))
            for e in _BINARY
            for m in _BINARY
        }
        mechanisms[VarIndex("E", t)] = {
            (e, m): _HALF for e in _BINARY for m in _BINARY
        }
    return MarkovChain(spatial, 2, alphabets, parents, mechanisms)


def ca2_chain() -> MarkovChain:
    """Two binary cells, one step: a1 = a0 OR b0, b1 a fresh coin."""
    a0, b0 = VarIndex("a", 0), VarIndex("b", 0)
    a1, b1 = VarIndex("a", 1), VarIndex("b", 1)
    return MarkovChain(
        ["a", "b"],
        1,
        {v: _BINARY for v in (a0, b0, a1, b1)},
        {a1: [a0, b0]},
        {
            a0: {(): _HALF},
            b0: {(): _HALF},
            a1: {
                (x, y): _point(_BINARY, "1" if "1" in (x, y) else "0")
                for x in _BINARY
                for y in _BINARY
            },
            b1: {(): _HALF},
        },
    )


FIXTURES = {"copy": copy_chain, "pa": pa_chain, "ca2": ca2_chain}


def fixture_chain(name: str) -> MarkovChain:
    try:
        builder = FIXTURES[name]
    except KeyError:
        raise UnknownFixture(
            f"unknown fixture {name!r}; available: {', '.join(sorted(FIXTURES))}",
            available=sorted(FIXTURES),
        ) from None
    return builder()


def degenerate_copy_loop() -> PaLoop:
    """A loop whose environment is a single symbol: memory just copies itself.

    Useful as the no-action, zero-entropy end of the spectrum; the loop
    wiring still carries the full parent sets.
    """
    spatial = ["M", "E"]
    single = ("0",)
    alphabets = {}
    for t in range(3):
        alphabets[VarIndex("M", t)] = _BINARY
        alphabets[VarIndex("E", t)] = single
    parents = {}
    mechanisms = {
        VarIndex("M", 0): {(): _point(_BINARY, "0")},
        VarIndex("E", 0): {(): (Fraction(1),)},
    }
    for t in (1, 2):
        previous = [VarIndex("E", t - 1), VarIndex("M", t - 1)]
        for j in spatial:
            parents[VarIndex(j, t)] = previous
        mechanisms[VarIndex("M", t)] = {("0", m): _point(_BINARY, m) for m in _BINARY}
        mechanisms[VarIndex("E", t)] = {("0", m): (Fraction(1),) for m in _BINARY}
    return PaLoop.from_chain(MarkovChain(spatial, 2, alphabets, parents, mechanisms))
