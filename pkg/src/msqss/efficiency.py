"""Qubit efficiency of this scheme and of the GHZ- and graph-state schemes.

All values are exact :class:`~fractions.Fraction` objects so comparisons
between protocols are exact.
"""

from __future__ import annotations

from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

from .records import as_fraction

MAX_M = 1000


class EfficiencyRangeError(OverflowError):
    """M so large that the closed forms stop being meaningful numbers."""


class Scheme(str, Enum):
    OURS = "ours"
    OURS_DERIVED = "ours-derived"
    GHZ = "ghz"
    GRAPH = "graph"


@dataclass(frozen=True)
class EfficiencyParams:
    M: int
    epsilon: Fraction = Fraction(1, 8)
    protocol: Scheme = Scheme.OURS

    def __post_init__(self) -> None:
        object.__setattr__(self, "protocol", Scheme(self.protocol))
        object.__setattr__(self, "epsilon", as_fraction(self.epsilon))
        if isinstance(self.M, bool) or not isinstance(self.M, int) or self.M < 1:
            raise ValueError(f"M must be an integer >= 1, got {self.M!r}")
        if self.M > MAX_M:
            raise EfficiencyRangeError(f"M={self.M} exceeds the supported maximum {MAX_M}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


def qubit_efficiency(c, q, b) -> Fraction:
    """Key bits per qubit generated: c / (q + b)."""
    total = as_fraction(q) + as_fraction(b)
    if total <= 0:
        raise ValueError("q + b must be positive")
    return as_fraction(c) / total


def resource_counts(L: int, M: int, epsilon) -> tuple[Fraction, Fraction, Fraction]:
    """(c, q, b) for this scheme: key length, TP's qubits, Alice's fresh qubits."""
    eps = as_fraction(epsilon)
    q = 4 * L * (1 + M * eps)
    return Fraction(L), q, q / 2


def efficiency(params: EfficiencyParams | int, epsilon=Fraction(1, 8), protocol="ours") -> Fraction:
    """Closed-form efficiency for ``params`` (or for ``M``, ``epsilon``, ``protocol``).

    ``ours`` is the published headline value 1/(6 + M eps); ``ours-derived``
    is c/(q+b) evaluated from the resource counts, 1/(6(1 + M eps)).
    """
    if not isinstance(params, EfficiencyParams):
        params = EfficiencyParams(params, epsilon, protocol)
    M, eps = params.M, params.epsilon
    if params.protocol == Scheme.OURS:
        return 1 / (6 + M * eps)
    if params.protocol == Scheme.OURS_DERIVED:
        return qubit_efficiency(*resource_counts(1, M, eps))
    if params.protocol == Scheme.GHZ:
        return Fraction(1, 2 ** (M + 1) * (M + 1))
    return Fraction(1, 4 * (M + 1))


def parse_m_range(text: str) -> range:
    """'1..10' -> range(1, 11); a single integer is a one-element range."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo_i, hi_i = int(lo), int(hi)
    else:
        lo_i = hi_i = int(text)
    if lo_i < 1 or hi_i < lo_i:
        raise ValueError(f"bad M range {text!r}")
    return range(lo_i, hi_i + 1)


def efficiency_table(
    protocols: Iterable[str], Ms: Iterable[int], epsilons: Iterable
) -> Iterator[tuple[str, int, Fraction | None, Fraction]]:
    """Rows (protocol, M, epsilon, eta); epsilon is None for schemes without it."""
    Ms = list(Ms)
    epsilons = [as_fraction(e) for e in epsilons]
    for name in protocols:
        scheme = Scheme(name)
        uses_eps = scheme in (Scheme.OURS, Scheme.OURS_DERIVED)
        for eps in epsilons if uses_eps else [None]:
            for M in Ms:
                yield scheme.value, M, eps, efficiency(EfficiencyParams(M, eps or Fraction(1, 8), scheme))
