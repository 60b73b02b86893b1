"""Compositions of [n] (ordered set partitions) and the FRAG operator.

Elements are the integers ``1..n``.  Blocks are stored as sorted tuples and
block order is significant, so structural equality is composition equality.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Sequence

MAX_ENUMERATION_N = 8


@dataclass(frozen=True)
class Composition:
    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be positive")
        seen: list[int] = []
        for b in self.blocks:
            if not b:
                raise ValueError("empty block")
            if list(b) != sorted(b):
                raise ValueError(f"block {b} is not sorted")
            seen.extend(b)
        if sorted(seen) != list(range(1, self.n + 1)):
            raise ValueError(f"blocks do not partition 1..{self.n}: {self.blocks}")

    @classmethod
    def of(cls, blocks: Sequence[Sequence[int]], n: int | None = None) -> "Composition":
        bl = tuple(tuple(sorted(b)) for b in blocks)
        if n is None:
            n = sum(len(b) for b in bl)
        return cls(n, bl)

    @classmethod
    def one(cls, n: int) -> "Composition":
        return cls(n, (tuple(range(1, n + 1)),))

    @classmethod
    def singletons(cls, n: int, order: Sequence[int] | None = None) -> "Composition":
        order = range(1, n + 1) if order is None else order
        return cls(n, tuple((i,) for i in order))

    def __repr__(self) -> str:
        inner = ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks)
        return f"({inner})"

    def __len__(self) -> int:
        return len(self.blocks)

    @property
    def block_sizes(self) -> tuple[int, ...]:
        return tuple(len(b) for b in self.blocks)

    def block_index(self) -> dict[int, int]:
        return {i: k for k, b in enumerate(self.blocks) for i in b}

    def same_block(self, i: int, j: int) -> bool:
        idx = self.block_index()
        return idx[i] == idx[j]

    def precedes(self, i: int, j: int) -> bool:
        """``i ≺ j``: the block of i comes strictly before the block of j."""
        idx = self.block_index()
        return idx[i] < idx[j]

    def refines(self, other: "Composition") -> bool:
        """Every block lies inside a block of ``other`` and block order is compatible."""
        if self.n != other.n:
            return False
        idx = other.block_index()
        last = -1
        for b in self.blocks:
            owners = {idx[i] for i in b}
            if len(owners) != 1:
                return False
            k = owners.pop()
            if k < last:
                return False
            last = k
        return True

    def to_json(self) -> str:
        return json.dumps([list(b) for b in self.blocks])

    @classmethod
    def from_json(cls, text: str) -> "Composition":
        return cls.of(json.loads(text))


@dataclass(frozen=True)
class Partition:
    n: int
    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        if list(self.blocks) != sorted(self.blocks, key=lambda b: b[0]):
            raise ValueError("partition blocks must be listed by smallest element")

    def __repr__(self) -> str:
        return "{" + ",".join("{" + ",".join(map(str, b)) + "}" for b in self.blocks) + "}"


def restrict(gamma: Composition, m: int) -> Composition:
    if not 1 <= m <= gamma.n:
        raise ValueError(f"restriction size {m} outside 1..{gamma.n}")
    blocks = tuple(tuple(i for i in b if i <= m) for b in gamma.blocks)
    return Composition(m, tuple(b for b in blocks if b))


def restrict_to(gamma: Composition, subset: Sequence[int]) -> tuple[tuple[int, ...], ...]:
    """Blocks of ``gamma`` intersected with ``subset`` (labels kept, empties dropped)."""
    s = set(subset)
    blocks = (tuple(i for i in b if i in s) for b in gamma.blocks)
    return tuple(b for b in blocks if b)


def frag(gamma: Composition, gamma_seq: Sequence[Composition]) -> Composition:
    """Refine each block of ``gamma`` by the composition indexed by the block minimum."""
    n = gamma.n
    if len(gamma_seq) != n:
        raise ValueError(f"need {n} fragmenting compositions, got {len(gamma_seq)}")
    for g in gamma_seq:
        if g.n != n:
            raise ValueError("fragmenting compositions must be compositions of the same [n]")
    out: list[tuple[int, ...]] = []
    for b in gamma.blocks:
        out.extend(restrict_to(gamma_seq[b[0] - 1], b))
    return Composition(n, tuple(out))


def shift(gamma: Composition, k: int) -> Composition:
    """Drop ``1..k`` and relabel ``k+1..n`` to ``1..n-k``."""
    if not 0 <= k < gamma.n:
        raise ValueError(f"shift {k} must satisfy 0 <= k < {gamma.n}")
    blocks = (tuple(i - k for i in b if i > k) for b in gamma.blocks)
    return Composition(gamma.n - k, tuple(b for b in blocks if b))


def project_to_partition(gamma: Composition) -> Partition:
    return Partition(gamma.n, tuple(sorted(gamma.blocks, key=lambda b: b[0])))


def apply_permutation(sigma: Sequence[int], gamma: Composition) -> Composition:
    """Relabel every element ``i`` as ``sigma[i-1]``; block order is kept."""
    n = gamma.n
    if len(sigma) != n or sorted(sigma) != list(range(1, n + 1)):
        raise ValueError(f"not a permutation of 1..{n}: {sigma}")
    return Composition(n, tuple(tuple(sorted(sigma[i - 1] for i in b)) for b in gamma.blocks))


def _set_partitions(items: list[int]):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in _set_partitions(rest):
        for k in range(len(part)):
            yield part[:k] + [[first] + part[k]] + part[k + 1:]
        yield [[first]] + part


def enumerate_compositions(n: int) -> list[Composition]:
    """All ordered set partitions of [n], each once (13 for n = 3)."""
    if not 1 <= n <= MAX_ENUMERATION_N:
        raise ValueError(f"enumeration limited to 1 <= n <= {MAX_ENUMERATION_N}")
    out = []
    for part in _set_partitions(list(range(1, n + 1))):
        blocks = [tuple(sorted(b)) for b in part]
        for perm in itertools.permutations(blocks):
            out.append(Composition(n, perm))
    return out
