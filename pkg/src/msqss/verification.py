"""Eavesdropping check, TP honesty check, key extraction and XOR sharing.

Every function here reads a :class:`Transcript`: the public announcement log
plus Alice's private record where Alice is the one checking. Nothing reads the
oracle-only tags on the travelling items.
"""

from __future__ import annotations

from collections.abc import Sequence

from .quantum_core import MINUS, PLUS, Basis
from .records import (
    CaseLabel,
    CheckConfig,
    CheckReport,
    ProtocolViolation,
    Transcript,
)
from .sequence_perm import HopRecord, invert, trace_downstream

__all__ = [
    "CaseLabel",
    "CheckConfig",
    "CheckReport",
    "InsufficientKey",
    "alice_case04_positions",
    "classify_cases",
    "eavesdropping_check",
    "encrypt",
    "extract_key",
    "honesty_check",
    "participant_key",
    "reconstruct",
    "secrecy_violations",
    "xor_bits",
]


class InsufficientKey(Exception):
    """Fewer than L key bits survive the test-bit sacrifice."""


def _single(tr: Transcript, step: str, **match):
    found = tr.find(step, **match)
    if len(found) != 1:
        detail = ", ".join(f"{k}={v}" for k, v in match.items())
        raise ProtocolViolation(f"expected exactly one '{step}' announcement ({detail}), found {len(found)}")
    return found[0]


def _chain(start: Sequence[int], disclosures, parties: Sequence[str]) -> list[int | None]:
    """Push positions through disclosed maps, one per party in ``parties`` order."""
    by_sender = {a.sender: dict((k, v) for k, v in a.payload["map"]) for a in disclosures}
    positions: list[int | None] = list(start)
    for party in parties:
        if party not in by_sender:
            raise ProtocolViolation(f"{party} did not disclose a transposition")
        table = by_sender[party]
        nxt = []
        for p in positions:
            if p is None:
                nxt.append(None)
            elif p not in table:
                raise ProtocolViolation(f"{party} gave no transposition for position {p}")
            else:
                nxt.append(table[p])
        positions = nxt
    return positions


def _bob(i: int) -> str:
    return f"bob{i}"


def _tp_log(tr: Transcript):
    a = _single(tr, "tp.announce")
    bases = [Basis(b) for b in a.payload["bases"]]
    return bases, a.payload["outcomes"]


def bob_tested_positions(tr: Transcript, i: int) -> list[tuple[int, int]]:
    """(S_A' position, announced outcome) for each qubit Bob_i measured."""
    positions = _single(tr, "check.positions", bob=i).payload["positions"]
    outcomes = _single(tr, "check.outcomes", bob=i).payload["outcomes"]
    if len(outcomes) != len(positions):
        raise ProtocolViolation(f"bob{i} announced {len(outcomes)} outcomes for {len(positions)} positions")
    upstream = tr.find("check.upstream", bob=i)
    traced = _chain(positions, upstream, [_bob(j) for j in range(i - 1, 0, -1)])
    return list(zip(traced, outcomes))


def eavesdropping_check(tr: Transcript, cfg: CheckConfig | None = None) -> CheckReport:
    cfg = cfg or tr.config.check
    report = CheckReport("eavesdropping")
    alice = tr.alice
    to_sa = invert(alice.perm).dest
    for i in range(1, tr.config.M + 1):
        try:
            tested = bob_tested_positions(tr, i)
        except ProtocolViolation as exc:
            report.fail(f"protocol-violation: {exc}")
            continue
        mism = sift = ones = ctrl = 0
        if any(not 1 <= sa_prime <= alice.n for sa_prime, _ in tested):
            report.fail(f"protocol-violation: bob{i}'s disclosures trace outside Alice's sequence")
            continue
        for sa_prime, outcome in tested:
            sa = to_sa[sa_prime - 1]
            if alice.is_sift(sa):
                sift += 1
                mism += outcome != alice.outcomes[sa]
            else:
                ctrl += 1
                ones += outcome == 1
        report.per_bob.append(
            {"bob": i, "sift_mismatches": mism, "sift_total": sift, "ctrl_ones": ones, "ctrl_total": ctrl}
        )
        if sift and mism / sift > cfg.sift_error_threshold:
            report.fail(f"bob{i}: SIFT error rate {mism}/{sift} above threshold")
        if not cfg.balanced(ones, ctrl):
            report.fail(f"bob{i}: CTRL outcomes unbalanced ({ones} ones of {ctrl})")
    return report


def _x_positions_sa_prime(tr: Transcript) -> dict[int, int]:
    """Final positions TP measured in X -> S_A' positions, via the Bobs' disclosures."""
    bases, _ = _tp_log(tr)
    xs = [p for p, b in enumerate(bases, start=1) if b == Basis.X]
    M = tr.config.M
    traced = _chain(xs, tr.find("honesty.x_upstream"), [_bob(j) for j in range(M, 0, -1)])
    return dict(zip(xs, traced))


def _ctrl_final_positions(tr: Transcript) -> dict[int, int]:
    """Final position -> S_A' position for every CTRL qubit that reached TP."""
    ctrl = _single(tr, "honesty.ctrl_positions").payload["positions"]
    M = tr.config.M
    traced = _chain(ctrl, tr.find("honesty.ctrl_downstream"), [_bob(j) for j in range(1, M + 1)])
    out = {}
    for src, dst in zip(ctrl, traced):
        if dst is None:
            continue
        if dst in out:
            raise ProtocolViolation(f"two CTRL qubits disclosed at final position {dst}")
        out[dst] = src
    return out


def classify_cases(tr: Transcript) -> dict[int, CaseLabel]:
    """Label every final position by (TP basis, SIFT/CTRL).

    Raises :class:`ProtocolViolation` if the disclosures cannot be traced or
    contradict each other.
    """
    bases, _ = _tp_log(tr)
    to_sa = invert(tr.alice.perm).dest
    x_trace = _x_positions_sa_prime(tr)
    ctrl_final = _ctrl_final_positions(tr)
    n_final = len(bases)
    if any(not 1 <= p <= n_final for p in ctrl_final):
        raise ProtocolViolation("CTRL disclosure points outside the final sequence")
    labels = {}
    for p, basis in enumerate(bases, start=1):
        is_ctrl = p in ctrl_final
        if basis == Basis.X:
            sa_prime = x_trace[p]
            if sa_prime is None or not 1 <= sa_prime <= tr.alice.n:
                raise ProtocolViolation(f"X position {p} traced outside Alice's sequence")
            alice_ctrl = not tr.alice.is_sift(to_sa[sa_prime - 1])
            if alice_ctrl != is_ctrl:
                raise ProtocolViolation(f"X position {p}: backward and forward disclosures disagree")
            labels[p] = CaseLabel.X_CTRL if is_ctrl else CaseLabel.X_SIFT
        else:
            labels[p] = CaseLabel.Z_CTRL if is_ctrl else CaseLabel.Z_SIFT
    return labels


def alice_case04_positions(tr: Transcript) -> dict[int, int]:
    """S_A' -> S_A positions of the SIFT qubits TP measured in Z, as Alice infers them.

    Alice knows her SIFT positions, which of them the Bobs measured (from the
    eavesdropping check) and which TP measured in X (from the honesty check);
    the rest reached TP and were measured in Z.
    """
    alice = tr.alice
    measured = set()
    for i in range(1, tr.config.M + 1):
        measured.update(p for p, _ in bob_tested_positions(tr, i))
    x_hit = set(_x_positions_sa_prime(tr).values())
    out = {}
    for sa in alice.sift_positions:
        sa_prime = alice.perm.dest[sa - 1]
        if sa_prime not in measured and sa_prime not in x_hit:
            out[sa_prime] = sa
    return out


def honesty_check(tr: Transcript, cfg: CheckConfig | None = None) -> CheckReport:
    cfg = cfg or tr.config.check
    report = CheckReport("honesty")
    try:
        labels = classify_cases(tr)
    except ProtocolViolation as exc:
        report.fail(f"protocol-violation: {exc}")
        return report
    _, outcomes = _tp_log(tr)
    groups: dict[CaseLabel, list] = {c: [] for c in CaseLabel}
    for p, label in labels.items():
        groups[label].append(outcomes[p - 1])

    x_ctrl = groups[CaseLabel.X_CTRL]
    bad = sum(o != PLUS for o in x_ctrl)
    report.cases["X_CTRL"] = {"total": len(x_ctrl), "minus": bad}
    if bad:
        report.fail(f"case X_CTRL: TP announced '-' on {bad} of {len(x_ctrl)} CTRL qubits")

    x_sift = groups[CaseLabel.X_SIFT]
    minus = sum(o == MINUS for o in x_sift)
    report.cases["X_SIFT"] = {"total": len(x_sift), "minus": minus}
    if not cfg.balanced(minus, len(x_sift)):
        report.fail(f"case X_SIFT: {minus} '-' of {len(x_sift)} is unbalanced")

    z_ctrl = groups[CaseLabel.Z_CTRL]
    ones = sum(o == 1 for o in z_ctrl)
    report.cases["Z_CTRL"] = {"total": len(z_ctrl), "ones": ones}
    if not cfg.balanced(ones, len(z_ctrl)):
        report.fail(f"case Z_CTRL: {ones} ones of {len(z_ctrl)} is unbalanced")

    z_sift = groups[CaseLabel.Z_SIFT]
    mismatches = tested = 0
    try:
        tests = _single(tr, "honesty.test_positions").payload["positions"]
        finals = _chain(tests, tr.find("honesty.test_downstream"), [_bob(j) for j in range(1, tr.config.M + 1)])
        to_sa = invert(tr.alice.perm).dest
        for sa_prime, final in zip(tests, finals):
            if final is None or labels.get(final) != CaseLabel.Z_SIFT:
                raise ProtocolViolation(f"test bit at S_A' position {sa_prime} does not land on a Z-SIFT qubit")
            tested += 1
            mismatches += outcomes[final - 1] != tr.alice.outcomes[to_sa[sa_prime - 1]]
    except ProtocolViolation as exc:
        report.fail(f"protocol-violation: {exc}")
    report.cases["Z_SIFT"] = {"total": len(z_sift), "tested": tested, "mismatches": mismatches}
    if mismatches:
        report.fail(f"case Z_SIFT: {mismatches} of {tested} test bits differ from Alice's")
    return report


def key_positions(tr: Transcript) -> list[tuple[int, int]]:
    """(S_A position, S_A' position) of the key qubits, ascending in S_A."""
    z_sift = alice_case04_positions(tr)
    tests = set(_single(tr, "honesty.test_positions").payload["positions"])
    return sorted((sa, sa_prime) for sa_prime, sa in z_sift.items() if sa_prime not in tests)


def extract_key(tr: Transcript, cfg: CheckConfig | None = None) -> str:
    """Alice's key: her Z-SIFT bits minus test bits, ascending in S_A, first L."""
    L = tr.config.L
    positions = key_positions(tr)
    if len(positions) < L:
        raise InsufficientKey(f"only {len(positions)} key bits for L={L}")
    return "".join(str(tr.alice.outcomes[sa]) for sa, _ in positions[:L])


def xor_bits(a: str, b: str) -> str:
    if len(a) != len(b):
        raise ValueError(f"bit strings differ in length: {len(a)} vs {len(b)}")
    return "".join("1" if x != y else "0" for x, y in zip(a, b))


def encrypt(secret: str, key: str) -> str:
    return xor_bits(secret, key)


def participant_key(tr: Transcript, hops: Sequence[HopRecord] | None = None) -> str:
    """The key the Bobs rebuild from TP's outcomes once everyone shares their orders.

    ``hops`` (Bob_1 first) defaults to the Bobs' true records; a colluding TP
    passes guessed ones.
    """
    if hops is None:
        hops = [b.hop for b in tr.bobs]
    order = _single(tr, "secret.key_order").payload["map"]
    _, outcomes = _tp_log(tr)
    bits = []
    for sa_prime, sa in order:
        final = trace_downstream(sa_prime, hops)
        if final is None:
            raise ProtocolViolation(f"key qubit at S_A' position {sa_prime} never reached TP")
        bits.append((sa, outcomes[final - 1]))
    bits.sort()
    return "".join(str(b) for _, b in bits[: tr.config.L])


def reconstruct(ciphertext: str, tr: Transcript, hops: Sequence[HopRecord] | None = None) -> str:
    return xor_bits(ciphertext, participant_key(tr, hops))


def secrecy_violations(tr: Transcript) -> list[str]:
    """Scan the public log for anything that leaks Alice's key material early."""
    problems = []
    verdict_seen = False
    key_sa = set()
    if tr.alice is not None:
        try:
            key_sa = {sa for sa, _ in key_positions(tr)}
        except (ProtocolViolation, KeyError):
            key_sa = set()
    for idx, a in enumerate(tr.announcements):
        if a.sender == "Alice" and "outcomes" in a.payload:
            problems.append(f"#{idx} {a.step}: Alice published measurement outcomes")
        if a.step == "honesty.verdict" and a.payload.get("verdict") == "pass":
            verdict_seen = True
        if a.step == "secret.key_order" and not verdict_seen:
            problems.append(f"#{idx}: key order disclosed before the honesty check passed")
        if a.sender == "Alice" and a.step != "secret.key_order":
            for sa in _sa_values(a.payload):
                if sa in key_sa:
                    problems.append(f"#{idx} {a.step}: S_A position {sa} of a key qubit disclosed")
    return problems


def _sa_values(payload: dict) -> list[int]:
    return [int(v) for v in payload.get("sa_positions", [])]
