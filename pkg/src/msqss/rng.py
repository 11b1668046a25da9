"""Named, replayable random streams and the scripted decision source.

Every random choice a party makes goes through a stream named
``"<party>.<purpose>"`` (``"alice.sift"``, ``"bob2.perm"``, ``"tp.born"``...).
A stream is a PCG64 generator whose 256-bit initial state is
``blake2b(seed || name)``, so the same pair always replays the same draws and
different names do not collide.
A script may pin the next values of any stream; unscripted draws fall back to
the seeded generator.
"""

from __future__ import annotations

import hashlib
from collections import deque
from collections.abc import Mapping, Sequence

import numpy as np
from numpy.random.bit_generator import ISeedSequence

from .quantum_core import MINUS, PLUS, Basis

SEED_MASK = (1 << 64) - 1


class ScriptError(ValueError):
    """A scripted value is malformed or contradicts the simulated physics."""


class _HashSeed(ISeedSequence):
    """Seed source for PCG64 that hands over a fixed 256-bit digest."""

    __slots__ = ("_words",)

    def __init__(self, seed: int, stream_id: str):
        data = seed.to_bytes(8, "little") + stream_id.encode("utf-8")
        self._words = hashlib.blake2b(data, digest_size=32).digest()

    def generate_state(self, n_words: int, dtype=np.uint32) -> np.ndarray:
        words = np.frombuffer(self._words, dtype=dtype)
        if n_words > words.size:
            raise ValueError(f"only {words.size} words of seed material available")
        return words[:n_words].copy()


def derive_seed(seed: int, *keys: int) -> int:
    """Deterministic 64-bit child seed, e.g. one per Monte Carlo trial."""
    ss = np.random.SeedSequence(entropy=seed & SEED_MASK, spawn_key=tuple(keys))
    return int(ss.generate_state(1, np.uint64)[0])


class RngStream:
    """Seeded stream of draws for one (party, purpose) pair."""

    def __init__(self, seed: int, stream_id: str):
        if not 0 <= seed <= SEED_MASK:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = seed
        self.stream_id = stream_id
        self._gen = np.random.Generator(np.random.PCG64(_HashSeed(seed, stream_id)))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id!r})"

    def random(self) -> float:
        return float(self._gen.random())

    def bit(self) -> int:
        return int(self._gen.integers(2))

    def bits(self, n: int) -> list[int]:
        return [int(b) for b in self._gen.integers(0, 2, size=n)]

    def choose(self, probs) -> int:
        """Sample an index with the given (not necessarily normalized) weights."""
        total = float(sum(probs))
        u = self._gen.random() * total
        acc = 0.0
        last = 0
        for i, p in enumerate(probs):
            if p <= 0.0:
                continue
            last = i
            acc += p
            if u < acc:
                return i
        return last

    def subset(self, candidates: Sequence[int], k: int) -> list[int]:
        if k > len(candidates):
            raise ValueError(f"cannot draw {k} items from {len(candidates)}")
        picked = self._gen.choice(len(candidates), size=k, replace=False)
        return sorted(candidates[int(i)] for i in picked)

    def permutation(self, n: int) -> list[int]:
        """Uniform destination table on 1..n."""
        return [int(x) + 1 for x in self._gen.permutation(n)]

    def bases(self, n: int) -> list[Basis]:
        return [Basis.X if b else Basis.Z for b in self._gen.integers(0, 2, size=n)]


def _as_index(value) -> int:
    if value in (0, 1) and not isinstance(value, bool):
        return int(value)
    if value == PLUS:
        return 0
    if value == MINUS:
        return 1
    raise ScriptError(f"scripted Born outcome must be 0, 1, '+' or '-', got {value!r}")


class ScriptedStream:
    """A stream whose next draws are taken from a script, then from ``fallback``.

    Each scripted value answers exactly one call, whatever its kind: a list of
    positions for ``subset``, a destination table for ``permutation``, a list of
    'X'/'Z' for ``bases``, an outcome for ``choose``.
    """

    def __init__(self, values: Sequence, fallback: RngStream):
        self.stream_id = fallback.stream_id
        self._queue = deque(values)
        self._fallback = fallback
        self.overridden_size = False

    def __repr__(self) -> str:
        return f"ScriptedStream({self.stream_id!r}, pending={len(self._queue)})"

    @property
    def exhausted(self) -> bool:
        return not self._queue

    def _next(self):
        return self._queue.popleft() if self._queue else None

    def random(self) -> float:
        v = self._next()
        return self._fallback.random() if v is None else float(v)

    def bit(self) -> int:
        v = self._next()
        return self._fallback.bit() if v is None else _as_index(v)

    def bits(self, n: int) -> list[int]:
        v = self._next()
        if v is None:
            return self._fallback.bits(n)
        if len(v) != n:
            raise ScriptError(f"{self.stream_id}: expected {n} scripted bits, got {len(v)}")
        return [_as_index(b) for b in v]

    def choose(self, probs) -> int:
        v = self._next()
        if v is None:
            return self._fallback.choose(probs)
        idx = _as_index(v)
        if idx >= len(probs) or probs[idx] <= 1e-12:
            raise ScriptError(
                f"{self.stream_id}: scripted outcome {v!r} has probability "
                f"{probs[idx] if idx < len(probs) else 0.0:.3g}"
            )
        return idx

    def subset(self, candidates: Sequence[int], k: int) -> list[int]:
        v = self._next()
        if v is None:
            return self._fallback.subset(candidates, k)
        chosen = sorted(int(x) for x in v)
        if len(set(chosen)) != len(chosen) or not set(chosen) <= set(candidates):
            raise ScriptError(f"{self.stream_id}: scripted subset {v} is not a subset of the candidates")
        if len(chosen) != k:
            self.overridden_size = True
        return chosen

    def permutation(self, n: int) -> list[int]:
        v = self._next()
        if v is None:
            return self._fallback.permutation(n)
        if len(v) != n:
            raise ScriptError(f"{self.stream_id}: scripted permutation has length {len(v)}, expected {n}")
        return [int(x) for x in v]

    def bases(self, n: int) -> list[Basis]:
        v = self._next()
        if v is None:
            return self._fallback.bases(n)
        if len(v) != n:
            raise ScriptError(f"{self.stream_id}: expected {n} scripted bases, got {len(v)}")
        return [Basis(b) for b in v]


class Decisions:
    """Source of every random choice in a run: seeded streams plus optional script."""

    def __init__(self, seed: int, script: Mapping[str, Sequence] | None = None):
        self.seed = seed & SEED_MASK
        self.script = dict(script or {})
        self._streams: dict[str, RngStream | ScriptedStream] = {}

    def stream(self, name: str) -> RngStream | ScriptedStream:
        s = self._streams.get(name)
        if s is None:
            base = RngStream(self.seed, name)
            s = ScriptedStream(self.script[name], base) if name in self.script else base
            self._streams[name] = s
        return s

    @property
    def scripted(self) -> bool:
        return bool(self.script)

    def overridden(self, name: str) -> bool:
        s = self._streams.get(name)
        return isinstance(s, ScriptedStream) and s.overridden_size

    def unused_script(self) -> list[str]:
        """Scripted streams with values never consumed; a replay should leave none."""
        return sorted(
            name
            for name in self.script
            if name not in self._streams or not self._streams[name].exhausted
        )
