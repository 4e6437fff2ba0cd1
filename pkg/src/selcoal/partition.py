"""Canonical set partitions of {1..n} and merger bookkeeping.

A partition is kept in canonical form (each block sorted ascending, blocks
ordered by their least element), which makes equality, hashing and text
round-trips deterministic.  Mergers between two comparable partitions are
summarized by a :class:`MergerSignature` -- the data that coalescent
transition rates and probabilities are indexed by.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence


@dataclass(frozen=True)
class Partition:
    """Partition of {1..n} in canonical block form."""

    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"ground set size must be >= 1, got {self.n}")
        seen: set[int] = set()
        prev_min = 0
        for block in self.blocks:
            if not block:
                raise ValueError("empty block")
            if list(block) != sorted(block):
                raise ValueError(f"block {block} not sorted ascending")
            if block[0] <= prev_min:
                raise ValueError("blocks not ordered by least element")
            prev_min = block[0]
            for x in block:
                if not 1 <= x <= self.n:
                    raise ValueError(f"element {x} outside 1..{self.n}")
                if x in seen:
                    raise ValueError(f"element {x} appears twice")
                seen.add(x)
        if len(seen) != self.n:
            raise ValueError("blocks do not cover the ground set")

    @property
    def block_count(self) -> int:
        return len(self.blocks)

    def block_index_of(self, element: int) -> int:
        """0-based index (in canonical order) of the block containing ``element``."""
        for i, block in enumerate(self.blocks):
            if element in block:
                return i
        raise ValueError(f"element {element} not in partition")

    def __str__(self) -> str:
        return "|".join("{" + ",".join(str(x) for x in b) + "}" for b in self.blocks)


def make_partition(n: int, blocks: Iterable[Iterable[int]]) -> Partition:
    """Build a Partition, canonicalizing block and element order."""
    canonical = tuple(sorted((tuple(sorted(b)) for b in blocks), key=lambda b: b[0]))
    return Partition(n, canonical)


def partition_from_string(text: str) -> Partition:
    """Inverse of ``str(partition)``, e.g. ``"{1,2}|{3}"``."""
    blocks = []
    for chunk in text.split("|"):
        chunk = chunk.strip()
        if not (chunk.startswith("{") and chunk.endswith("}")):
            raise ValueError(f"malformed block {chunk!r}")
        blocks.append([int(x) for x in chunk[1:-1].split(",")])
    n = sum(len(b) for b in blocks)
    return make_partition(n, blocks)


def singleton_partition(n: int) -> Partition:
    """The finest partition {{1},{2},...,{n}}."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Partition(n, tuple((i,) for i in range(1, n + 1)))


def partition_from_labels(labels: Sequence) -> Partition:
    """Group positions 1..len(labels) by equal labels.

    ``labels[i]`` is any hashable tag; positions sharing a tag land in one
    block.  This is how ancestral partitions are read off parent arrays.
    """
    groups: dict = {}
    for pos, lab in enumerate(labels, start=1):
        groups.setdefault(lab, []).append(pos)
    return make_partition(len(labels), groups.values())


def is_refinement(fine: Partition, coarse: Partition) -> bool:
    """True iff every block of ``fine`` sits inside one block of ``coarse``."""
    if fine.n != coarse.n:
        raise ValueError(f"ground sets differ: {fine.n} vs {coarse.n}")
    owner = {}
    for i, block in enumerate(coarse.blocks):
        for x in block:
            owner[x] = i
    return all(len({owner[x] for x in block}) == 1 for block in fine.blocks)


def merge_blocks(p: Partition, groups: Sequence[Iterable[int]]) -> Partition:
    """Union each group of block indices (0-based, canonical order).

    Indices must be in range and disjoint across groups; untouched blocks
    pass through.  The result is re-canonicalized.
    """
    taken: set[int] = set()
    for g in groups:
        for i in g:
            if not 0 <= i < p.block_count:
                raise ValueError(f"block index {i} out of range")
            if i in taken:
                raise ValueError(f"block index {i} used twice")
            taken.add(i)
    new_blocks = [
        list(itertools.chain.from_iterable(p.blocks[i] for i in g)) for g in groups
    ]
    new_blocks.extend(p.blocks[i] for i in range(p.block_count) if i not in taken)
    return make_partition(p.n, new_blocks)


@dataclass(frozen=True)
class MergerSignature:
    """One coalescence step: b blocks -> a+s blocks.

    ``group_sizes`` lists the merged group sizes (each >= 2, sorted
    descending); ``s`` blocks are untouched; ``b = s + sum(group_sizes)``.
    """

    b: int
    group_sizes: tuple[int, ...]
    s: int

    def __post_init__(self):
        if tuple(sorted(self.group_sizes, reverse=True)) != self.group_sizes:
            raise ValueError("group_sizes must be sorted descending")
        if any(g < 2 for g in self.group_sizes):
            raise ValueError("merged groups must have size >= 2")
        if self.s < 0:
            raise ValueError("s must be nonnegative")
        if self.b != self.s + sum(self.group_sizes):
            raise ValueError("b != s + sum(group_sizes)")

    @property
    def a(self) -> int:
        """Number of merged groups."""
        return len(self.group_sizes)

    @property
    def is_merger(self) -> bool:
        return bool(self.group_sizes)


def merger_signature(before: Partition, after: Partition) -> MergerSignature:
    """Signature of the transition ``before`` -> ``after`` (refinement pair)."""
    if not is_refinement(before, after):
        raise ValueError("`before` is not a refinement of `after`")
    owner = {}
    for i, block in enumerate(after.blocks):
        for x in block:
            owner[x] = i
    group_size: dict[int, int] = {}
    for block in before.blocks:
        j = owner[block[0]]
        group_size[j] = group_size.get(j, 0) + 1
    sizes = sorted((c for c in group_size.values() if c >= 2), reverse=True)
    s = sum(1 for c in group_size.values() if c == 1)
    return MergerSignature(before.block_count, tuple(sizes), s)


@dataclass(frozen=True)
class PartitionPath:
    """A coalescing trajectory: states only ever merge as time increases."""

    times: tuple[float, ...]
    states: tuple[Partition, ...] = field(repr=False)

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must have equal length")
        if len(self.times) == 0:
            raise ValueError("path must contain at least one state")
        for t0, t1 in zip(self.times, self.times[1:]):
            if not t1 > t0:
                raise ValueError("times must be strictly increasing")
        for earlier, later in zip(self.states, self.states[1:]):
            if not is_refinement(earlier, later):
                raise ValueError("path is not coalescing (refinement violated)")

    def __len__(self) -> int:
        return len(self.times)

    def signatures(self) -> list[MergerSignature]:
        """Signature of every consecutive step (no-merge steps included)."""
        return [
            merger_signature(a, b) for a, b in zip(self.states, self.states[1:])
        ]


def all_partitions(n: int) -> Iterator[Partition]:
    """Enumerate every partition of {1..n} (Bell(n) of them, canonical order)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")

    def rec(elements: list[int]) -> Iterator[list[list[int]]]:
        if not elements:
            yield []
            return
        first, rest = elements[0], elements[1:]
        for sub in rec(rest):
            for i in range(len(sub)):
                yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]
            yield [[first]] + sub

    for blocks in rec(list(range(1, n + 1))):
        yield make_partition(n, blocks)
