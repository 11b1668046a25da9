"""Pure-state simulation for single travel qubits and small qubit/probe systems."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

NORM_TOL = 1e-9
_SQRT_HALF = 1.0 / math.sqrt(2.0)


class InvalidStateError(ValueError):
    """Raised when an amplitude vector is not a valid unit-norm state."""


class Basis(str, Enum):
    Z = "Z"
    X = "X"


# X outcomes are reported as signs, Z outcomes as bits.
PLUS = "+"
MINUS = "-"
X_OUTCOMES = (PLUS, MINUS)
Z_OUTCOMES = (0, 1)


@dataclass(frozen=True, eq=False)
class PureState:
    """A unit-norm complex amplitude vector.

    Composite states are Kronecker-ordered, with the travel qubit as the first
    factor.
    """

    amps: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise InvalidStateError(f"state needs a 1-d vector of dim >= 2, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise InvalidStateError("state contains NaN or Inf amplitudes")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state norm^2 is {norm}, expected 1")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amps, self.amps).real))

    def overlap(self, other: PureState) -> complex:
        return complex(np.vdot(self.amps, other.amps))

    def close_to(self, other: PureState, tol: float = 1e-9) -> bool:
        """Equality up to a global phase."""
        return self.dim == other.dim and abs(abs(self.overlap(other)) - 1.0) <= tol

    @classmethod
    def normalized(cls, amps) -> PureState:
        amps = np.asarray(amps, dtype=complex)
        norm = np.sqrt(np.vdot(amps, amps).real)
        if norm == 0.0 or not np.isfinite(norm):
            raise InvalidStateError("cannot normalize a zero or non-finite vector")
        return cls(amps / norm)

    def __repr__(self) -> str:
        return f"PureState({np.array2string(self.amps, precision=4)})"


ZERO = PureState(np.array([1.0, 0.0]))
ONE = PureState(np.array([0.0, 1.0]))
PLUS_STATE = PureState(np.array([_SQRT_HALF, _SQRT_HALF]))
MINUS_STATE = PureState(np.array([_SQRT_HALF, -_SQRT_HALF]))

_LABELS = {"zero": ZERO, "one": ONE, "plus": PLUS_STATE, "minus": MINUS_STATE}
_BASIS_STATES = {Basis.Z: (ZERO, ONE), Basis.X: (PLUS_STATE, MINUS_STATE)}


def make_qubit(label: str) -> PureState:
    try:
        return _LABELS[label]
    except KeyError:
        raise ValueError(f"unknown qubit label {label!r}; expected one of {sorted(_LABELS)}") from None


def basis_state(basis: Basis, index: int) -> PureState:
    return _BASIS_STATES[Basis(basis)][index]


def outcome_label(basis: Basis, index: int):
    return Z_OUTCOMES[index] if basis == Basis.Z else X_OUTCOMES[index]


def outcome_index(basis: Basis, outcome) -> int:
    if basis == Basis.Z:
        if outcome not in (0, 1):
            raise ValueError(f"Z outcome must be 0 or 1, got {outcome!r}")
        return int(outcome)
    if outcome not in X_OUTCOMES:
        raise ValueError(f"X outcome must be '+' or '-', got {outcome!r}")
    return X_OUTCOMES.index(outcome)


def state_label(state: PureState, tol: float = 1e-9) -> str:
    """Short label ('0', '1', '+', '-') for the four basis states, '?' otherwise."""
    if state.dim != 2:
        return "?"
    for label, ref in (("0", ZERO), ("1", ONE), ("+", PLUS_STATE), ("-", MINUS_STATE)):
        if state.close_to(ref, tol):
            return label
    return "?"


def _branch_probs(amps: np.ndarray, basis: Basis, first_dim: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized remainders and probabilities of the two first-subsystem outcomes."""
    blocks = amps.reshape(first_dim, -1)
    if basis == Basis.Z:
        rem = (blocks[0], blocks[1])
    else:
        rem = ((blocks[0] + blocks[1]) * _SQRT_HALF, (blocks[0] - blocks[1]) * _SQRT_HALF)
    probs = np.array([np.vdot(r, r).real for r in rem])
    return rem, probs


def measure_qubit(state: PureState, basis: Basis, rng):
    """Measure a single qubit in the Z or X basis.

    ``rng`` is anything with ``choose(probs) -> index`` (an :class:`RngStream`
    or a scripted stream). Returns ``(outcome, post_state)``.
    """
    if state.dim != 2:
        raise InvalidStateError(f"measure_qubit expects dim 2, got {state.dim}")
    _, probs = _branch_probs(state.amps, basis)
    idx = rng.choose(probs)
    return outcome_label(basis, idx), basis_state(basis, idx)


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(np.kron(a.amps, b.amps))


def measure_first_subsystem(state: PureState, first_dim: int, basis: Basis, rng):
    """Measure the leading qubit of a composite state.

    Returns ``(outcome, collapsed)`` where ``collapsed`` is the renormalized
    state of the remaining subsystems.
    """
    if first_dim != 2:
        raise ValueError("only a leading qubit (first_dim=2) can be measured")
    if state.dim % first_dim or state.dim == first_dim:
        raise InvalidStateError(f"dim {state.dim} does not factor as 2 x (rest >= 2)")
    rem, probs = _branch_probs(state.amps, basis, first_dim)
    idx = rng.choose(probs)
    if probs[idx] <= 0.0:
        raise InvalidStateError("sampled a zero-probability branch")
    return outcome_label(basis, idx), PureState(rem[idx] / math.sqrt(probs[idx]))


def outcome_probabilities(state: PureState, basis: Basis) -> tuple[float, float]:
    """Born probabilities of the leading qubit's two outcomes."""
    _, probs = _branch_probs(state.amps, basis)
    return float(probs[0]), float(probs[1])
