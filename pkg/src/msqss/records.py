"""Configuration and record types shared by the protocol and its checks."""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import Any, NamedTuple

from .quantum_core import Basis
from .sequence_perm import HopRecord, Permutation, TaggedQubit


class ConfigurationError(ValueError):
    """Parameters that cannot describe a runnable protocol instance."""


class ProtocolViolation(Exception):
    """A party's public disclosures are missing or inconsistent."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value).limit_denominator(10**9)
    return Fraction(str(value))


@dataclass(frozen=True)
class CheckConfig:
    """Thresholds for the eavesdropping and honesty checks.

    A balance check on ``n >= min_samples`` outcomes fails when the fraction of
    ones (or of '-') leaves ``0.5 +/- deviation_z * sqrt(0.25 / n)``. By
    Hoeffding the false-abort probability per check is at most
    ``2 exp(-deviation_z**2 / 2)``, about 3e-8 at the default of 6.
    """

    sift_error_threshold: float = 0.0
    deviation_z: float = 6.0
    min_samples: int = 4
    test_bit_count: int | float | None = None

    def __post_init__(self) -> None:
        if self.sift_error_threshold < 0 or self.deviation_z < 0 or self.min_samples < 0:
            raise ConfigurationError("check thresholds must be non-negative")
        t = self.test_bit_count
        if t is not None and (t < 0 or (isinstance(t, float) and t > 1)):
            raise ConfigurationError("test_bit_count must be a count >= 0 or a fraction in [0, 1]")

    def n_test_bits(self, n_case04: int, L: int) -> int:
        """How many Z-SIFT bits Alice sacrifices as test bits."""
        if n_case04 == 0:
            return 0
        t = self.test_bit_count
        if t is None:
            count = max(1, n_case04 - L)
        elif isinstance(t, float):
            count = max(1, round(t * n_case04)) if t > 0 else 0
        else:
            count = int(t)
        return min(count, n_case04)

    def balanced(self, ones: int, n: int) -> bool:
        if n < self.min_samples or n == 0:
            return True
        return abs(ones / n - 0.5) <= self.deviation_z * math.sqrt(0.25 / n)


@lru_cache(maxsize=1024)
def _sizes(L: int, M: int, epsilon: Fraction) -> tuple[int, int]:
    return math.floor(4 * L * (1 + M * epsilon)), math.floor(4 * L * epsilon)


@dataclass(frozen=True)
class ProtocolConfig:
    L: int
    M: int
    epsilon: Fraction = Fraction(1, 8)
    seed: int = 0
    check: CheckConfig = field(default_factory=CheckConfig)
    script: Mapping[str, Sequence] | None = None
    secret: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if self.L < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        if self.M < 1:
            raise ConfigurationError(f"M must be >= 1, got {self.M}")
        if not 0 < self.epsilon < 1:
            raise ConfigurationError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.n_qubits < 4:
            raise ConfigurationError(f"N = floor(4L(1+M*eps)) = {self.n_qubits} < 4")
        if self.M * self.bob_sample > self.n_qubits:
            raise ConfigurationError(
                f"the Bobs would measure {self.M * self.bob_sample} of only {self.n_qubits} qubits"
            )
        if self.secret is not None and (len(self.secret) != self.L or set(self.secret) - {"0", "1"}):
            raise ConfigurationError(f"secret must be a bit string of length L={self.L}")

    @property
    def n_qubits(self) -> int:
        return _sizes(self.L, self.M, self.epsilon)[0]

    @property
    def bob_sample(self) -> int:
        return _sizes(self.L, self.M, self.epsilon)[1]

    @property
    def final_len(self) -> int:
        return self.n_qubits - self.M * self.bob_sample

    def with_seed(self, seed: int) -> ProtocolConfig:
        return ProtocolConfig(self.L, self.M, self.epsilon, seed, self.check, self.script, self.secret)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "M": self.M,
            "epsilon": str(self.epsilon),
            "seed": self.seed,
            "check": asdict(self.check),
            "scripted": self.script is not None,
            "N": self.n_qubits,
            "bob_sample": self.bob_sample,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> ProtocolConfig:
        return cls(
            L=int(d["L"]),
            M=int(d["M"]),
            epsilon=as_fraction(d.get("epsilon", "1/8")),
            seed=int(d.get("seed", 0)),
            check=CheckConfig(**d.get("check", {})),
            secret=d.get("secret"),
        )


class CaseLabel(str, Enum):
    X_CTRL = "X_CTRL"
    X_SIFT = "X_SIFT"
    Z_CTRL = "Z_CTRL"
    Z_SIFT = "Z_SIFT"


@dataclass(frozen=True)
class AliceRecord:
    n: int
    sift_positions: frozenset[int]
    outcomes: Mapping[int, int]
    perm: Permutation
    sift_count_overridden: bool = False

    def is_sift(self, sa_position: int) -> bool:
        return sa_position in self.sift_positions

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "sift_positions": sorted(self.sift_positions),
            "outcomes": [[p, self.outcomes[p]] for p in sorted(self.outcomes)],
            "perm": list(self.perm.dest),
            "sift_count_overridden": self.sift_count_overridden,
        }


@dataclass(frozen=True)
class BobRecord:
    index: int
    hop: HopRecord

    def to_dict(self) -> dict:
        return {"index": self.index, **self.hop.to_dict()}


@dataclass(frozen=True)
class TPRecord:
    bases: tuple[Basis, ...]
    outcomes: tuple

    def __post_init__(self) -> None:
        if len(self.bases) != len(self.outcomes):
            raise ValueError("TP needs exactly one basis and one outcome per position")

    def basis(self, position: int) -> Basis:
        return self.bases[position - 1]

    def outcome(self, position: int):
        return self.outcomes[position - 1]

    def to_dict(self) -> dict:
        return {"bases": [b.value for b in self.bases], "outcomes": list(self.outcomes)}


class Announcement(NamedTuple):
    step: str
    sender: str
    payload: dict

    def to_dict(self) -> dict:
        return {"step": self.step, "sender": self.sender, "payload": self.payload}


@dataclass
class CheckReport:
    name: str
    per_bob: list[dict] = field(default_factory=list)
    cases: dict[str, dict] = field(default_factory=dict)
    verdict: str = "pass"
    reason: str | None = None

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def fail(self, reason: str) -> None:
        if self.verdict == "pass":
            self.verdict = "abort"
            self.reason = reason

    def to_dict(self) -> dict:
        return {"per_bob": self.per_bob, "cases": self.cases, "verdict": self.verdict, "reason": self.reason}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@dataclass
class Transcript:
    """Everything that happened in one run.

    ``snapshots`` and ``bob_measured_items`` hold tagged items for oracles and
    tests only; they are not part of the serialized transcript.
    """

    config: ProtocolConfig
    secret: str
    alice: AliceRecord | None = None
    bobs: list[BobRecord] = field(default_factory=list)
    tp: TPRecord | None = None
    announcements: list[Announcement] = field(default_factory=list)
    _by_step: dict[str, list[Announcement]] = field(default_factory=dict, init=False, repr=False, compare=False)
    _indexed: int = field(default=0, init=False, repr=False, compare=False)
    checks: dict[str, CheckReport] = field(default_factory=dict)
    key: str | None = None
    ciphertext: str | None = None
    abort_reason: str | None = None
    snapshots: dict[str, list[TaggedQubit]] = field(default_factory=dict, repr=False)
    bob_measured_items: dict[int, list[TaggedQubit]] = field(default_factory=dict, repr=False)

    def announce(self, step: str, sender: str, payload: dict) -> None:
        a = Announcement(step, sender, payload)
        self.announcements.append(a)
        self._by_step.setdefault(step, []).append(a)
        self._indexed += 1

    def find(self, step: str, **match) -> list[Announcement]:
        if self._indexed != len(self.announcements):
            self._reindex()
        found = self._by_step.get(step, [])
        if not match:
            return list(found)
        return [a for a in found if all(a.payload.get(k) == v for k, v in match.items())]

    def replace_announcement(self, index: int, new: Announcement) -> None:
        """Swap one log entry (used to simulate tampered disclosures)."""
        self.announcements[index] = new
        self._reindex()

    def _reindex(self) -> None:
        self._indexed = len(self.announcements)
        self._by_step = {}
        for a in self.announcements:
            self._by_step.setdefault(a.step, []).append(a)

    @property
    def aborted(self) -> bool:
        return self.abort_reason is not None

    @property
    def detected(self) -> bool:
        """Aborted by a security check (a key shortfall is not a detection)."""
        return self.abort_reason is not None and self.abort_reason != "insufficient-key"

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "alice": self.alice.to_dict() if self.alice else None,
            "bobs": [b.to_dict() for b in self.bobs],
            "tp": self.tp.to_dict() if self.tp else None,
            "announcements": [a.to_dict() for a in self.announcements],
            "checks": {k: v.to_dict() for k, v in self.checks.items()},
            "key": self.key,
            "ciphertext": self.ciphertext,
            "abort_reason": self.abort_reason,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent, sort_keys=True)
