"""Party behaviour and the end-to-end run of the mediated sharing protocol.

Qubits travel TP -> Alice -> Bob_1 -> ... -> Bob_M -> TP. The adversary
interface below lets an attack replace any leg of that loop, or the
transpositions a dishonest Bob discloses, without touching party logic.
"""

from __future__ import annotations

import logging
from dataclasses import replace

from . import verification
from .quantum_core import (
    Basis,
    PureState,
    make_qubit,
    measure_first_subsystem,
    measure_qubit,
)
from .records import (
    AliceRecord,
    BobRecord,
    ConfigurationError,
    ProtocolConfig,
    TPRecord,
    Transcript,
)
from .rng import Decisions, derive_seed
from .sequence_perm import (
    HopRecord,
    Kind,
    Permutation,
    TaggedQubit,
    apply_permutation,
    remove_positions,
)

log = logging.getLogger(__name__)

__all__ = [
    "Adversary",
    "ConfigurationError",
    "ProtocolConfig",
    "Transcript",
    "alice_process",
    "bob_process",
    "finish_run",
    "run_protocol",
    "run_until_key",
    "start_run",
    "tp_measure",
    "tp_prepare",
]


class Adversary:
    """Honest behaviour; attacks override the hooks they need."""

    name = "honest"

    def prepare(self, run: Run, n: int) -> list[TaggedQubit] | None:
        """TP's Step-01 sequence; None means honest |+> preparation."""
        return None

    def before_bob(self, run: Run, i: int, seq: list[TaggedQubit]) -> list[TaggedQubit]:
        return seq

    def after_bob(self, run: Run, i: int, seq: list[TaggedQubit]) -> list[TaggedQubit]:
        return seq

    def measure_foreign(self, run: Run, party: str, item: TaggedQubit, basis: Basis, stream):
        raise TypeError(f"{party} cannot measure {type(item.state).__name__}")

    def disclosed_hop(self, run: Run, i: int, hop: HopRecord) -> HopRecord:
        """The record Bob_i uses when disclosing transpositions."""
        return hop


HONEST = Adversary()


class Run:
    """Mutable state threaded through one protocol execution."""

    def __init__(self, config: ProtocolConfig, adversary: Adversary):
        self.config = config
        self.adversary = adversary
        self.decisions = Decisions(config.seed, config.script)
        self.transcript: Transcript | None = None

    def stream(self, name: str):
        return self.decisions.stream(name)

    def measure(self, party: str, item: TaggedQubit, basis: Basis, stream):
        state = item.state
        if isinstance(state, PureState):
            if state.dim == 2:
                return measure_qubit(state, basis, stream)[0]
            return measure_first_subsystem(state, 2, basis, stream)[0]
        return self.adversary.measure_foreign(self, party, item, basis, stream)


def tp_prepare(config: ProtocolConfig) -> list[TaggedQubit]:
    plus = make_qubit("plus")
    return [TaggedQubit(plus) for _ in range(config.n_qubits)]


def alice_process(seq: list[TaggedQubit], run: Run) -> tuple[list[TaggedQubit], AliceRecord]:
    """Step 02: measure half the qubits in Z, replace them, shuffle everything."""
    n = len(seq)
    sift_stream = run.stream("alice.sift")
    sift = sift_stream.subset(list(range(1, n + 1)), n // 2)
    born = run.stream("alice.born")
    outcomes = {}
    s_a = list(seq)
    for p in range(1, n + 1):
        item = seq[p - 1]
        if item.origin is None:
            item.origin = p
        item.kind = Kind.CTRL
    for p in sift:
        bit = run.measure("alice", seq[p - 1], Basis.Z, born)
        outcomes[p] = bit
        s_a[p - 1] = TaggedQubit(make_qubit("one" if bit else "zero"), p, Kind.SIFT)
    perm = Permutation(tuple(run.stream("alice.perm").permutation(n)))
    record = AliceRecord(
        n=n,
        sift_positions=frozenset(sift),
        outcomes=outcomes,
        perm=perm,
        sift_count_overridden=run.decisions.overridden("alice.sift"),
    )
    if run.transcript is not None:
        run.transcript.snapshots["S_A"] = s_a
    return apply_permutation(s_a, perm), record


def bob_process(seq: list[TaggedQubit], i: int, run: Run) -> tuple[list[TaggedQubit], BobRecord]:
    """Step 03: measure a random sample in Z, drop it, shuffle the rest."""
    n = len(seq)
    k = run.config.bob_sample
    if k > n:
        raise ConfigurationError(f"bob{i} must measure {k} qubits but only {n} arrived")
    party = f"bob{i}"
    positions = run.stream(f"{party}.sample").subset(list(range(1, n + 1)), k)
    born = run.stream(f"{party}.born")
    measured = tuple((p, run.measure(party, seq[p - 1], Basis.Z, born)) for p in positions)
    kept, _ = remove_positions(seq, positions)
    perm = Permutation(tuple(run.stream(f"{party}.perm").permutation(len(kept))))
    hop = HopRecord(party, n, measured, frozenset(positions), perm)
    if run.transcript is not None:
        run.transcript.snapshots[f"S_B{i}"] = kept
        run.transcript.bob_measured_items[i] = [seq[p - 1] for p in positions]
    return apply_permutation(kept, perm), BobRecord(i, hop)


def tp_measure(seq: list[TaggedQubit], run: Run) -> TPRecord:
    """Step 04: a uniformly random basis per qubit, then measure."""
    bases = tuple(run.stream("tp.basis").bases(len(seq)))
    born = run.stream("tp.born")
    outcomes = tuple(run.measure("tp", item, b, born) for item, b in zip(seq, bases))
    return TPRecord(bases, outcomes)


def _disclose_upstream(tr: Transcript, step: str, hop: HopRecord, positions, **extra) -> list[int]:
    mapped = [hop.upstream(p) for p in positions]
    tr.announce(step, hop.party, {**extra, "map": [[p, q] for p, q in zip(positions, mapped)]})
    return mapped


def _disclose_downstream(tr: Transcript, step: str, hop: HopRecord, positions) -> list[int]:
    live = [p for p in positions if p is not None]
    mapped = [hop.downstream(p) for p in live]
    tr.announce(step, hop.party, {"map": [[p, q] for p, q in zip(live, mapped)]})
    table = dict(zip(live, mapped))
    return [None if p is None else table[p] for p in positions]


def _abort(tr: Transcript, reason: str) -> Transcript:
    tr.abort_reason = reason
    tr.key = None
    return tr


def start_run(config: ProtocolConfig, adversary=None) -> Run:
    """Steps 01-03: preparation, Alice's processing and every Bob's hop.

    ``adversary`` is an :class:`Adversary`, an ``AttackSpec`` or None (honest).
    """
    if adversary is None:
        adversary = HONEST
    elif not isinstance(adversary, Adversary):
        from .adversary import make_adversary

        adversary = make_adversary(adversary, config)

    run = Run(config, adversary)
    secret = config.secret or "".join(map(str, run.stream("alice.secret").bits(config.L)))
    tr = Transcript(config=config, secret=secret)
    run.transcript = tr

    seq = adversary.prepare(run, config.n_qubits) or tp_prepare(config)
    seq, tr.alice = alice_process(seq, run)
    tr.snapshots["S_A'"] = seq
    for i in range(1, config.M + 1):
        seq = adversary.before_bob(run, i, seq)
        seq, bob = bob_process(seq, i, run)
        tr.bobs.append(bob)
        tr.snapshots[f"S_B{i}'"] = seq
        seq = adversary.after_bob(run, i, seq)
    tr.snapshots["final"] = seq
    return run


def run_protocol(config: ProtocolConfig, adversary=None) -> Transcript:
    """Execute Steps 01-08 once and return the full transcript."""
    return finish_run(start_run(config, adversary))


def finish_run(run: Run) -> Transcript:
    """Steps 04-08 on a run whose qubits have reached TP."""
    config, adversary, tr = run.config, run.adversary, run.transcript
    M = config.M
    seq = tr.snapshots["final"]
    secret = tr.secret

    # Step 04
    tr.tp = tp_measure(seq, run)
    tr.announce(
        "tp.announce", "TP", {"bases": [b.value for b in tr.tp.bases], "outcomes": list(tr.tp.outcomes)}
    )

    # Step 05: positions, upstream transpositions, then outcomes, Bob by Bob
    disclosing = [adversary.disclosed_hop(run, b.index, b.hop) for b in tr.bobs]
    for i, bob in enumerate(tr.bobs, start=1):
        positions = [p for p, _ in bob.hop.measured]
        tr.announce("check.positions", f"bob{i}", {"bob": i, "positions": positions})
        for j in range(i - 1, 0, -1):
            positions = _disclose_upstream(tr, "check.upstream", disclosing[j - 1], positions, bob=i)
        tr.announce("check.outcomes", f"bob{i}", {"bob": i, "outcomes": [o for _, o in bob.hop.measured]})
    report = verification.eavesdropping_check(tr)
    tr.checks["eavesdropping"] = report
    tr.announce("check.verdict", "Alice", {"verdict": report.verdict, "reason": report.reason})
    if not report.passed:
        return _abort(tr, f"eavesdropping: {report.reason}")

    # Step 06: X positions traced back, CTRL positions forward, then test bits
    xs = [p for p, b in enumerate(tr.tp.bases, start=1) if b == Basis.X]
    for j in range(M, 0, -1):
        xs = _disclose_upstream(tr, "honesty.x_upstream", disclosing[j - 1], xs)
    alice = tr.alice
    ctrl = sorted(alice.perm.dest[sa - 1] for sa in range(1, alice.n + 1) if not alice.is_sift(sa))
    tr.announce("honesty.ctrl_positions", "Alice", {"positions": ctrl})
    fwd = list(ctrl)
    for j in range(1, M + 1):
        fwd = _disclose_downstream(tr, "honesty.ctrl_downstream", disclosing[j - 1], fwd)

    try:
        case04 = verification.alice_case04_positions(tr)
    except verification.ProtocolViolation as exc:
        report = verification.CheckReport("honesty")
        report.fail(f"protocol-violation: {exc}")
        tr.checks["honesty"] = report
        return _abort(tr, f"honesty: {report.reason}")
    n_tests = config.check.n_test_bits(len(case04), config.L)
    test_sa = run.stream("alice.test").subset(sorted(case04.values()), n_tests)
    tests = sorted(alice.perm.dest[sa - 1] for sa in test_sa)
    tr.announce("honesty.test_positions", "Alice", {"positions": tests})
    fwd = list(tests)
    for j in range(1, M + 1):
        fwd = _disclose_downstream(tr, "honesty.test_downstream", disclosing[j - 1], fwd)

    report = verification.honesty_check(tr)
    tr.checks["honesty"] = report
    tr.announce("honesty.verdict", "Alice", {"verdict": report.verdict, "reason": report.reason})
    if not report.passed:
        return _abort(tr, f"honesty: {report.reason}")

    # Step 08
    try:
        key = verification.extract_key(tr)
    except verification.InsufficientKey:
        return _abort(tr, "insufficient-key")
    order = [[sa_prime, sa] for sa, sa_prime in verification.key_positions(tr)]
    tr.announce("secret.key_order", "Alice", {"map": order})
    tr.key = key
    tr.ciphertext = verification.encrypt(secret, key)
    tr.announce("secret.ciphertext", "Alice", {"ciphertext": tr.ciphertext})
    return tr


def run_until_key(config: ProtocolConfig, adversary=None, max_attempts: int = 200) -> tuple[Transcript, int]:
    """Re-run with derived seeds while the only failure is a key shortfall.

    Returns the first transcript that either yields a key or aborts on a check,
    plus the number of attempts it took.
    """
    cfg = config
    for attempt in range(1, max_attempts + 1):
        tr = run_protocol(cfg, adversary)
        if tr.abort_reason != "insufficient-key":
            return tr, attempt
        # Keep the same secret so retries share one message.
        cfg = replace(config, seed=derive_seed(config.seed, attempt), secret=tr.secret)
        log.debug("insufficient key, retrying with seed %d", cfg.seed)
    raise RuntimeError(f"no key after {max_attempts} attempts; L={config.L} is too small for this sizing")
