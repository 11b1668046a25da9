"""Qubit sequences, destination-table permutations, discards and traceback.

All positions are 1-based. A permutation is stored as a destination table:
``dest[j]`` is where the item at source position ``j`` ends up.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any


class SequenceError(ValueError):
    """Invalid position, length mismatch or malformed permutation table."""


class Kind(str, Enum):
    SIFT = "SIFT"
    CTRL = "CTRL"
    FOREIGN = "foreign"


@dataclass(slots=True)
class TaggedQubit:
    """A travelling item plus oracle-only bookkeeping.

    ``origin`` (1-based position in Alice's S_A) and ``kind`` exist for tests
    and experiment oracles. Party logic only ever reads ``state``.
    """

    state: Any
    origin: int | None = None
    kind: Kind | None = None


QubitSequence = list  # list[TaggedQubit], position p lives at index p - 1


def states(seq: Sequence[TaggedQubit]) -> tuple:
    """The party-visible view of a sequence: states only, no tags."""
    return tuple(item.state for item in seq)


@dataclass(frozen=True)
class Permutation:
    dest: tuple[int, ...]

    def __post_init__(self) -> None:
        dest = tuple(int(d) for d in self.dest)
        if sorted(dest) != list(range(1, len(dest) + 1)):
            raise SequenceError(f"destination table is not a bijection on 1..{len(dest)}: {list(dest)}")
        object.__setattr__(self, "dest", dest)

    @classmethod
    def identity(cls, n: int) -> Permutation:
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.dest)

    def __getitem__(self, source: int) -> int:
        """Destination of 1-based source position ``source``."""
        if not 1 <= source <= len(self.dest):
            raise SequenceError(f"position {source} out of range 1..{len(self.dest)}")
        return self.dest[source - 1]

    def to_json(self) -> str:
        return json.dumps(list(self.dest))

    @classmethod
    def from_json(cls, text: str) -> Permutation:
        return cls(tuple(json.loads(text)))


def apply_permutation(seq: Sequence, p: Permutation) -> list:
    if len(seq) != len(p):
        raise SequenceError(f"sequence length {len(seq)} != permutation length {len(p)}")
    out = [None] * len(seq)
    for j, d in enumerate(p.dest):
        out[d - 1] = seq[j]
    return out


def invert(p: Permutation) -> Permutation:
    inv = [0] * len(p)
    for j, d in enumerate(p.dest, start=1):
        inv[d - 1] = j
    return Permutation(tuple(inv))


def compose(first: Permutation, then: Permutation) -> Permutation:
    """Apply ``first`` and then ``then``."""
    if len(first) != len(then):
        raise SequenceError("cannot compose permutations of different lengths")
    return Permutation(tuple(then.dest[d - 1] for d in first.dest))


@dataclass(frozen=True)
class IndexMap:
    """Post-discard position -> pre-discard position, and back."""

    kept: tuple[int, ...]
    discarded: tuple[int, ...] = ()

    def __len__(self) -> int:
        return len(self.kept)

    def to_pre(self, q: int) -> int:
        if not 1 <= q <= len(self.kept):
            raise SequenceError(f"post-discard position {q} out of range 1..{len(self.kept)}")
        return self.kept[q - 1]

    def to_post(self, p: int) -> int | None:
        """Position after discarding, or None if ``p`` was discarded."""
        i = bisect_left(self.kept, p)
        if i < len(self.kept) and self.kept[i] == p:
            return i + 1
        return None

    __call__ = to_pre


def remove_positions(seq: Sequence, discard: Iterable[int]) -> tuple[list, IndexMap]:
    discard = set(discard)
    bad = [p for p in discard if not 1 <= p <= len(seq)]
    if bad:
        raise SequenceError(f"discard positions {sorted(bad)} out of range 1..{len(seq)}")
    kept = tuple(p for p in range(1, len(seq) + 1) if p not in discard)
    return [seq[p - 1] for p in kept], IndexMap(kept, tuple(sorted(discard)))


@dataclass(frozen=True)
class HopRecord:
    """One participant's private record of what they did to a sequence."""

    party: str
    incoming_len: int
    measured: tuple[tuple[int, int], ...]
    discards: frozenset[int]
    perm: Permutation
    _index: IndexMap = field(init=False, repr=False, compare=False)
    _inverse: Permutation = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        measured_pos = {p for p, _ in self.measured}
        if not set(self.discards) <= measured_pos:
            raise SequenceError(f"{self.party}: discards must be a subset of measured positions")
        if len(self.perm) != self.incoming_len - len(self.discards):
            raise SequenceError(
                f"{self.party}: permutation length {len(self.perm)} != "
                f"{self.incoming_len} - {len(self.discards)} discards"
            )
        kept = tuple(p for p in range(1, self.incoming_len + 1) if p not in self.discards)
        object.__setattr__(self, "_index", IndexMap(kept, tuple(sorted(self.discards))))
        object.__setattr__(self, "_inverse", invert(self.perm))

    @property
    def outgoing_len(self) -> int:
        return len(self.perm)

    @property
    def index_map(self) -> IndexMap:
        return self._index

    def upstream(self, position: int) -> int:
        """Outgoing position -> incoming position."""
        if not 1 <= position <= self.outgoing_len:
            raise SequenceError(f"{self.party}: position {position} out of range 1..{self.outgoing_len}")
        return self._index.kept[self._inverse.dest[position - 1] - 1]

    def downstream(self, position: int) -> int | None:
        """Incoming position -> outgoing position, or None if discarded here."""
        if not 1 <= position <= self.incoming_len:
            raise SequenceError(f"{self.party}: position {position} out of range 1..{self.incoming_len}")
        q = self._index.to_post(position)
        return None if q is None else self.perm.dest[q - 1]

    def with_perm(self, perm: Permutation) -> HopRecord:
        return HopRecord(self.party, self.incoming_len, self.measured, self.discards, perm)

    def to_dict(self) -> dict:
        return {
            "party": self.party,
            "incoming_len": self.incoming_len,
            "measured": [[p, o] for p, o in self.measured],
            "discards": sorted(self.discards),
            "perm": list(self.perm.dest),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> HopRecord:
        perm = Permutation(tuple(d["perm"]))
        discards = frozenset(d["discards"])
        incoming = d.get("incoming_len", len(perm) + len(discards))
        return cls(d["party"], incoming, tuple((p, o) for p, o in d["measured"]), discards, perm)

    @classmethod
    def from_json(cls, text: str) -> HopRecord:
        return cls.from_dict(json.loads(text))


def trace_to_upstream(position: int, hop: HopRecord) -> int:
    return hop.upstream(position)


def trace_to_alice(position: int, hops: Sequence[HopRecord], alice_perm: Permutation) -> int:
    """Position in the sequence leaving Bob_M -> position in Alice's S_A.

    ``hops`` is ordered Bob_M down to Bob_1.
    """
    for hop in hops:
        position = hop.upstream(position)
    if not 1 <= position <= len(alice_perm):
        raise SequenceError(f"traced position {position} outside Alice's sequence")
    return invert(alice_perm).dest[position - 1]


def trace_downstream(position: int, hops: Sequence[HopRecord]) -> int | None:
    """Follow a position forward through ``hops`` (Bob_1 first); None if discarded."""
    for hop in hops:
        position = hop.downstream(position)
        if position is None:
            return None
    return position
