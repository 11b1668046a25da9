"""Scripted replay of the 26-qubit, two-Bob example run (L=5, eps=1/6).

Every sequence below is written as ``label_origin`` items, where the label is
the qubit's state (0, 1, +, -) and the origin is its position in S_A.
"""

from __future__ import annotations

from fractions import Fraction

from .protocol import run_protocol
from .quantum_core import state_label
from .records import CaseLabel, ProtocolConfig, Transcript
from .sequence_perm import trace_downstream
from .verification import classify_cases, participant_key

_X_POSITIONS = {1, 2, 3, 5, 8, 10, 14, 17, 18}

# One entry per draw: subsets, tables and basis lists are single draws, Born
# outcomes are drawn one qubit at a time.
SCRIPT = {
    "alice.sift": [[1, 2, 3, 6, 7, 10, 13, 15, 16, 18, 19, 23, 24, 25, 26]],
    "alice.born": [0, 1, 1, 0, 1, 0, 0, 1, 0, 0, 0, 1, 1, 0, 1],
    "alice.perm": [[22, 19, 15, 5, 12, 14, 3, 21, 4, 20, 16, 6, 11, 1, 8, 7, 9, 13, 23, 17, 18, 24, 10, 2, 26, 25]],
    "bob1.sample": [[3, 25, 26]],
    "bob1.born": [1, 1, 0],
    "bob1.perm": [[13, 17, 15, 8, 4, 5, 21, 14, 12, 19, 3, 2, 18, 23, 10, 6, 16, 9, 11, 1, 22, 7, 20]],
    "bob2.sample": [[2, 6, 13]],
    "bob2.born": [0, 1, 0],
    "bob2.perm": [[7, 5, 1, 20, 8, 18, 12, 6, 15, 9, 13, 10, 11, 17, 16, 4, 3, 19, 2, 14]],
    "tp.basis": [["X" if p in _X_POSITIONS else "Z" for p in range(1, 21)]],
    "tp.born": ["+", "-", "+", 0, "+", 1, 0, "+", 1, "+", 1, 1, 0, "+", 0, 0, "-", "+", 1, 0],
    "alice.test": [[2, 6]],
}


SECRET = "10110"


def config(seed: int = 0) -> ProtocolConfig:
    return ProtocolConfig(L=5, M=2, epsilon=Fraction(1, 6), seed=seed, script=SCRIPT, secret=SECRET)


def _seq(text: str) -> list[tuple[str, int]]:
    return [(lab, int(org)) for lab, org in (tok.split("_") for tok in text.split())]


EXPECTED = {
    "S_A": _seq(
        "0_1 1_2 1_3 +_4 +_5 0_6 1_7 +_8 +_9 0_10 +_11 +_12 0_13 +_14 1_15 0_16 +_17 0_18 0_19 "
        "+_20 +_21 +_22 1_23 1_24 0_25 1_26"
    ),
    "S_A'": _seq(
        "+_14 1_24 1_7 +_9 +_4 +_12 0_16 1_15 +_17 1_23 0_13 +_5 0_18 0_6 1_3 +_11 +_20 +_21 1_2 "
        "0_10 +_8 0_1 0_19 +_22 1_26 0_25"
    ),
    "S_B1": _seq(
        "+_14 1_24 +_9 +_4 +_12 0_16 1_15 +_17 1_23 0_13 +_5 0_18 0_6 1_3 +_11 +_20 +_21 1_2 0_10 "
        "+_8 0_1 0_19 +_22"
    ),
    "S_B1'": _seq(
        "+_8 0_18 +_5 +_12 0_16 +_20 0_19 +_4 1_2 +_11 0_10 1_23 +_14 +_17 +_9 +_21 1_24 0_6 0_13 "
        "+_22 1_15 0_1 1_3"
    ),
    "S_B2": _seq(
        "+_8 +_5 +_12 0_16 0_19 +_4 1_2 +_11 0_10 1_23 +_17 +_9 +_21 1_24 0_6 0_13 +_22 1_15 0_1 1_3"
    ),
    "S_B2'": _seq(
        "+_12 0_1 +_22 0_13 +_5 +_11 +_8 0_19 1_23 +_9 +_21 1_2 +_17 1_3 0_10 0_6 1_24 +_4 1_15 0_16"
    ),
    "S_TP'": _seq(
        "+_12 -_1 +_22 0_13 +_5 1_11 0_8 +_19 1_23 +_9 1_21 1_2 0_17 +_3 0_10 0_6 -_24 +_4 1_15 0_16"
    ),
    "X_CTRL": _seq("+_12 +_22 +_5 +_9 +_4"),
    "X_SIFT": _seq("-_1 +_19 +_3 -_24"),
    "Z_CTRL": _seq("1_11 0_8 1_21 0_17"),
    "Z_SIFT": _seq("0_13 1_23 1_2 0_10 0_6 1_15 0_16"),
}

# Bob's and Charlie's measurements: (position, origin, outcome).
EXPECTED_MEASURED = {1: [(3, 7, 1), (25, 26, 1), (26, 25, 0)], 2: [(2, 18, 0), (6, 20, 1), (13, 14, 0)]}
EXPECTED_TP_VIEW = "01010"
EXPECTED_KEY = "00101"
EXPECTED_CIPHERTEXT = "10011"


def observed(tr: Transcript) -> dict[str, list[tuple[str, int]]]:
    """Sequences of the run in the same ``(label, origin)`` form as EXPECTED."""
    snaps = {
        name: [(state_label(item.state), item.origin) for item in tr.snapshots[name]]
        for name in ("S_A", "S_A'", "S_B1", "S_B1'", "S_B2", "S_B2'")
    }
    final = tr.snapshots["final"]
    tp_seq = [(str(o), item.origin) for item, o in zip(final, tr.tp.outcomes)]
    snaps["S_TP'"] = tp_seq
    labels = classify_cases(tr)
    for case in CaseLabel:
        snaps[case.value] = [tp_seq[p - 1] for p in sorted(labels) if labels[p] == case]
    return snaps


def tp_view(tr: Transcript) -> str:
    """Z-SIFT key outcomes in the order TP announced them (test bits removed)."""
    labels = classify_cases(tr)
    hops = [b.hop for b in tr.bobs]
    tests = {trace_downstream(p, hops) for p in tr.find("honesty.test_positions")[0].payload["positions"]}
    return "".join(
        str(tr.tp.outcomes[p - 1]) for p in sorted(labels) if labels[p] == CaseLabel.Z_SIFT and p not in tests
    )


def replay(seed: int = 0) -> tuple[Transcript, list[str]]:
    """Run the scripted example and list every deviation from the expected vectors."""
    tr = run_protocol(config(seed))
    problems = []
    if tr.aborted:
        return tr, [f"run aborted: {tr.abort_reason}"]
    got = observed(tr)
    for name, want in EXPECTED.items():
        if got[name] != want:
            problems.append(f"{name}: expected {want}, got {got[name]}")
    for i, want in EXPECTED_MEASURED.items():
        hop = tr.bobs[i - 1].hop
        items = tr.bob_measured_items[i]
        have = [(p, item.origin, o) for (p, o), item in zip(hop.measured, items)]
        if have != want:
            problems.append(f"bob{i} measurements: expected {want}, got {have}")
    if tp_view(tr) != EXPECTED_TP_VIEW:
        problems.append(f"TP view: expected {EXPECTED_TP_VIEW}, got {tp_view(tr)}")
    if tr.key != EXPECTED_KEY:
        problems.append(f"key: expected {EXPECTED_KEY}, got {tr.key}")
    if participant_key(tr) != EXPECTED_KEY:
        problems.append(f"participant key: expected {EXPECTED_KEY}, got {participant_key(tr)}")
    if tr.ciphertext != EXPECTED_CIPHERTEXT:
        problems.append(f"ciphertext: expected {EXPECTED_CIPHERTEXT}, got {tr.ciphertext}")
    return tr, problems
