"""Set partitions over an ordered carrier of string elements."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence


@dataclass(frozen=True)
class Partition:
    """Blocks keep carrier order; blocks are ordered by their first member."""

    carrier: tuple[str, ...]
    blocks: tuple[tuple[str, ...], ...]

    @classmethod
    def group_by(cls, carrier: Sequence[str], key: Callable[[str], object]) -> "Partition":
        groups: dict = {}
        for element in carrier:
            groups.setdefault(key(element), []).append(element)
        return cls(tuple(carrier), tuple(tuple(g) for g in groups.values()))

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, element: str) -> tuple[str, ...]:
        for block in self.blocks:
            if element in block:
                return block
        raise KeyError(element)

    def as_sets(self) -> frozenset[frozenset[str]]:
        return frozenset(frozenset(b) for b in self.blocks)

    def same_blocks(self, other: "Partition") -> bool:
        return set(self.carrier) == set(other.carrier) and self.as_sets() == other.as_sets()

    def refines(self, other: "Partition") -> bool:
        """True when every block here sits inside a block of ``other``."""
        if set(self.carrier) != set(other.carrier):
            return False
        lookup = {e: i for i, block in enumerate(other.blocks) for e in block}
        return all(len({lookup[e] for e in block}) == 1 for block in self.blocks)

    def restricted(self, elements: Iterable[str]) -> "Partition":
        keep = set(elements)
        carrier = tuple(e for e in self.carrier if e in keep)
        blocks = tuple(
            tuple(e for e in block if e in keep)
            for block in self.blocks
            if any(e in keep for e in block)
        )
        return Partition(carrier, blocks)

    def payload(self) -> dict:
        return {"carrier": list(self.carrier), "blocks": [list(b) for b in self.blocks]}
