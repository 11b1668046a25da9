"""Command-line front end: run, example, attack and efficiency subcommands.

Exit codes: 0 success, 1 example mismatch, 2 usage error, 3 protocol abort.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import tempfile
from collections.abc import Sequence
from pathlib import Path

from . import worked_example
from .adversary import CSV_FIELDS, AttackKind, AttackSpec, ParameterError, attack_experiment, csv_row
from .efficiency import EfficiencyRangeError, efficiency_table, parse_m_range
from .protocol import run_protocol, run_until_key
from .records import ConfigurationError, ProtocolConfig, as_fraction

SEED_ENV = "MSQSS_SEED"
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_ABORT = 3


class UsageError(Exception):
    pass


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def git_blob_hash(data: bytes) -> str:
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _emit(text: str, args, config: dict | None = None) -> None:
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if getattr(args, "manifest", None):
        manifest = {
            "command": args.argv,
            "config": config,
            "seed": config.get("seed") if config else None,
            "output": args.out,
            "output_hash": git_blob_hash(text.encode("utf-8")),
        }
        atomic_write(args.manifest, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _load_config(args) -> ProtocolConfig:
    base: dict = {}
    if args.config:
        try:
            base = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
    for key in ("L", "M", "epsilon", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            base[key] = value
    base.setdefault("seed", _default_seed())
    if "L" not in base or "M" not in base:
        raise UsageError("L and M are required (flags or --config)")
    try:
        return ProtocolConfig.from_dict(base)
    except (ConfigurationError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None


def _parse_params(text: str | None) -> dict:
    if not text:
        return {}
    try:
        params = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--params is not valid JSON: {exc}") from None
    if not isinstance(params, dict):
        raise UsageError("--params must be a JSON object")
    return params


def _attack_spec(kind: str, params_text: str | None) -> AttackSpec:
    try:
        return AttackSpec(AttackKind(kind), _parse_params(params_text))
    except (ParameterError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    config = _load_config(args)
    adversary = _attack_spec(args.attack, args.params) if args.attack else None
    try:
        if args.retry:
            tr, _ = run_until_key(config, adversary)
        else:
            tr = run_protocol(config, adversary)
    except (ConfigurationError, ParameterError) as exc:
        raise UsageError(str(exc)) from None
    _emit(tr.to_json() + "\n", args, config.to_dict())
    if tr.aborted:
        print(f"abort: {tr.abort_reason}", file=sys.stderr)
        return EXIT_ABORT
    return 0


def cmd_example(args) -> int:
    tr, problems = worked_example.replay(args.seed if args.seed is not None else _default_seed())
    for p in problems:
        print(f"mismatch: {p}", file=sys.stderr)
    print(f"key {tr.key}")
    print(f"ciphertext {tr.ciphertext}")
    return EXIT_MISMATCH if problems else 0


def cmd_attack(args) -> int:
    config = _load_config(args)
    spec = _attack_spec(args.kind, args.params)
    if args.trials < 1:
        raise UsageError("--trials must be >= 1")
    try:
        stats = attack_experiment(spec, config, args.trials)
    except (ConfigurationError, ParameterError) as exc:
        raise UsageError(str(exc)) from None
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerow(csv_row(spec, config, stats))
    _emit(buf.getvalue(), args, {**config.to_dict(), "attack": spec.kind.value, "trials": args.trials})
    return 0


def cmd_efficiency(args) -> int:
    try:
        protocols = [p.strip() for p in args.protocols.split(",") if p.strip()]
        Ms = parse_m_range(args.M_range)
        epsilons = [as_fraction(e) for e in args.epsilon_list.split(",")]
        rows = list(efficiency_table(protocols, Ms, epsilons))
    except EfficiencyRangeError as exc:
        raise UsageError(f"range error: {exc}") from None
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(str(exc)) from None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["protocol", "M", "epsilon", "eta", "eta_exact"])
    for name, M, eps, eta in rows:
        writer.writerow([name, M, "" if eps is None else str(eps), repr(float(eta)), str(eta)])
    _emit(buf.getvalue(), args, {"protocols": protocols, "M_range": args.M_range, "epsilons": args.epsilon_list})
    return 0


def _add_protocol_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--L", type=int, help="secret length")
    p.add_argument("--M", type=int, help="number of Bobs")
    p.add_argument("--epsilon", type=str, help="Bob sampling fraction, e.g. 1/8 or 0.125")
    p.add_argument("--seed", type=int, help=f"master seed (default: ${SEED_ENV} or 0)")
    p.add_argument("--config", help="JSON file mirroring ProtocolConfig; flags override it")
    p.add_argument("--out", help="write output here (atomically) instead of stdout")
    p.add_argument("--manifest", help="write a JSON manifest with the output hash")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msqss", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the protocol once and print the transcript JSON")
    _add_protocol_flags(p)
    p.add_argument("--attack", choices=[k.value for k in AttackKind], help="adversary to run against")
    p.add_argument("--params", help="attack parameters as a JSON object")
    p.add_argument(
        "--retry",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="re-run with derived seeds while the only failure is a key shortfall",
    )
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("example", help="replay the scripted 26-qubit example")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_example)

    p = sub.add_parser("attack", help="Monte Carlo detection rate of one attack, as CSV")
    _add_protocol_flags(p)
    p.add_argument("--kind", required=True, choices=[k.value for k in AttackKind])
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--params", help="attack parameters as a JSON object")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("efficiency", help="qubit efficiency table as CSV")
    p.add_argument("--protocols", default="ours,ghz,graph")
    p.add_argument("--M-range", dest="M_range", default="1..10")
    p.add_argument("--epsilon-list", dest="epsilon_list", default="0.125,0.5")
    p.add_argument("--out")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_efficiency)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    args.argv = argv
    if getattr(args, "epsilon", None) is not None:
        args.epsilon = str(args.epsilon)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"msqss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
