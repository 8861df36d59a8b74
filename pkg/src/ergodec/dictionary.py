"""Test-function dictionary: cylinder monomials prod_{i in S} x_i.

On binary product spaces the monomials indexed by finite subsets form a
countable convergence-determining family with exact orbit averages, and their
limits are exactly the moments that pin down a de Finetti mixing measure.
The empty subset gives the constant function 1.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .groups import Config


@dataclass(frozen=True)
class CylinderMonomial:
    indices: tuple[int, ...]  # strictly increasing, 1-based; () is the constant 1

    def __post_init__(self):
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("indices must be strictly increasing")
        if self.indices and self.indices[0] < 1:
            raise ValueError("indices are 1-based")

    def __call__(self, x: Config) -> int:
        for i in self.indices:
            if x[i - 1] == 0:
                return 0
        return 1

    @property
    def degree(self) -> int:
        return len(self.indices)

    def __repr__(self) -> str:
        return f"phi{list(self.indices)}"


@dataclass(frozen=True)
class TestDictionary:
    """All monomials over {1..width} with |S| <= depth, constant first."""

    __test__ = False  # not a pytest class despite the name

    depth: int
    width: int
    entries: tuple[CylinderMonomial, ...] = field(init=False)

    def __post_init__(self):
        if self.depth < 1 or self.width < 1:
            raise ValueError("depth and width must be >= 1")
        ent = [CylinderMonomial(())]
        for size in range(1, self.depth + 1):
            for combo in itertools.combinations(range(1, self.width + 1), size):
                ent.append(CylinderMonomial(combo))
        object.__setattr__(self, "entries", tuple(ent))

    @classmethod
    def build(cls, depth: int, width: int | None = None) -> "TestDictionary":
        return cls(depth=depth, width=width if width is not None else depth)

    def nonconstant(self) -> tuple[CylinderMonomial, ...]:
        return self.entries[1:]

    def extension_pairs(self):
        """Pairs (S, S u {j}) with both monomials present, for monotonicity checks."""
        have = {m.indices for m in self.entries}
        for m in self.entries:
            for j in range(1, self.width + 1):
                if j in m.indices:
                    continue
                ext = tuple(sorted(m.indices + (j,)))
                if ext in have:
                    yield m.indices, ext
