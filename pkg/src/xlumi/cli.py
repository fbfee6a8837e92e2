"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 invariant violation,
3 signature verification failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from xlumi.crypto import CryptoError, verify
from xlumi.offchain import PaymentMessage
from xlumi.sim.adversarial import ATTACKS, run_adversarial
from xlumi.sim.baseline import UnsupportedEvent, run_punishment_baseline, xlumi_interactions
from xlumi.sim.engine import InvariantViolation, SimConfig, metrics_report, run_scenario
from xlumi.sim.script import MalformedScript, parse_script

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVARIANT = 2
EXIT_INVALID = 3


@dataclass(frozen=True)
class RunConfig:
    scenario_path: str
    fee: int = 1
    grace: int = 10
    seed: int = 0
    scheme: str = "ed25519"
    report_path: str | None = None
    format: str = "text"
    attack: str | None = None

    def sim_config(self) -> SimConfig:
        return SimConfig(fee=self.fee, grace=self.grace, seed=self.seed, scheme=self.scheme)


def bundled_scenarios() -> list[str]:
    root = resources.files("xlumi") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith(".scn"))


def read_scenario_text(name: str) -> str:
    """Read a scenario from disk, falling back to the bundled corpus by file name."""
    path = Path(name)
    if path.is_file():
        return path.read_text(encoding="utf-8")
    bundled = resources.files("xlumi") / "scenarios" / path.name
    if path.name == name and bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(name)


def cmd_run(cfg: RunConfig) -> tuple[int, str, str]:
    """Returns (exit code, report, diagnostics)."""
    try:
        scenario = parse_script(read_scenario_text(cfg.scenario_path))
        if cfg.attack:
            adv = run_adversarial(scenario, cfg.attack, cfg.sim_config())
            if adv.result is None:
                return EXIT_INVARIANT, "", f"{cfg.scenario_path}: invariant violation: {adv.violations[0]}\n"
            report = metrics_report(adv.result, cfg.format)
            verdict = {
                "attack": adv.attack,
                "verdict": adv.verdict,
                "loss": adv.loss,
                "expected_loss": adv.expected_loss,
                "violations": adv.violations,
            }
            if cfg.format == "structured":
                doc = json.loads(report)
                doc["adversarial"] = verdict
                report = json.dumps(doc, indent=2, sort_keys=True) + "\n"
            else:
                report += "".join(f"{k}={v}\n" for k, v in verdict.items() if k != "violations")
                report += "".join(f"violation: {v}\n" for v in adv.violations)
            return (EXIT_INVARIANT if adv.verdict == "unsafe" else EXIT_OK), report, ""
        result = run_scenario(scenario, cfg.sim_config())
    except FileNotFoundError:
        return EXIT_USAGE, "", f"{cfg.scenario_path}: no such scenario file\n"
    except MalformedScript as exc:
        return EXIT_USAGE, "", f"{cfg.scenario_path}: {exc}\n"
    except InvariantViolation as exc:
        return EXIT_INVARIANT, "", f"{cfg.scenario_path}: invariant violation: {exc}\n"
    return EXIT_OK, metrics_report(result, cfg.format), ""


def _run_job(cfg: RunConfig) -> tuple[int, str, str]:
    return cmd_run(cfg)


def cmd_verify(message_hex: str, public_key_hex: str, scheme: str = "ed25519") -> tuple[int, str]:
    try:
        message = PaymentMessage.from_bytes(bytes.fromhex(message_hex))
        key = bytes.fromhex(public_key_hex)
        valid = verify(key, message.payload, message.signature, scheme)
    except (ValueError, CryptoError) as exc:
        return EXIT_USAGE, f"format error: {exc}\n"
    out = (
        f"channel_id={message.channel_id.hex()}\n"
        f"amount={message.accumulated_amount}\n"
        f"{'VALID' if valid else 'INVALID'}\n"
    )
    return (EXIT_OK if valid else EXIT_INVALID), out


def cmd_compare(cfg: RunConfig) -> tuple[int, str, str]:
    try:
        scenario = parse_script(read_scenario_text(cfg.scenario_path))
        baseline = run_punishment_baseline(scenario)
        result = run_scenario(scenario, cfg.sim_config())
    except FileNotFoundError:
        return EXIT_USAGE, "", f"{cfg.scenario_path}: no such scenario file\n"
    except (MalformedScript, UnsupportedEvent) as exc:
        return EXIT_USAGE, "", f"{cfg.scenario_path}: {exc}\n"
    except InvariantViolation as exc:
        return EXIT_INVARIANT, "", f"{cfg.scenario_path}: invariant violation: {exc}\n"
    doc = {
        "payments": baseline.payments,
        "xlumi": {
            "onchain_tx": result.metrics.onchain_tx,
            "interactions": xlumi_interactions(scenario),
            "stored_secrets": result.metrics.stored_signatures,
        },
        "punishment": {
            "interactions": baseline.interactions,
            "stored_keys": baseline.stored_keys,
            "punished": baseline.punished,
        },
        "note": "punishment-channel interaction constants are a modelling assumption",
    }
    if cfg.format == "structured":
        return EXIT_OK, json.dumps(doc, indent=2, sort_keys=True) + "\n", ""
    x, p = doc["xlumi"], doc["punishment"]
    lines = [
        f"payments={doc['payments']}",
        f"{'':14}{'xlumi':>8}{'punishment':>12}",
        f"{'interactions':14}{x['interactions']:>8}{p['interactions']:>12}",
        f"{'stored_secrets':14}{x['stored_secrets']:>8}{p['stored_keys']:>12}",
        f"{'onchain_tx':14}{x['onchain_tx']:>8}{'-':>12}",
        f"note: {doc['note']}",
    ]
    return EXIT_OK, "".join(line + "\n" for line in lines), ""


def _default_seed() -> int:
    raw = os.environ.get("XLUMI_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"XLUMI_SEED must be an integer, got {raw!r}")


def _nonneg(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xlumi", description="Unidirectional payment channel simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def sim_options(p):
        p.add_argument("--fee", type=_nonneg, default=1)
        p.add_argument("--grace", type=_positive, default=10)
        p.add_argument("--seed", type=int, default=None, help="defaults to $XLUMI_SEED, then 0")
        p.add_argument("--scheme", choices=("ed25519", "toy"), default="ed25519")
        p.add_argument("--format", choices=("text", "structured"), default="text")

    run = sub.add_parser("run", help="replay scenario files and print metrics")
    run.add_argument("files", nargs="+")
    sim_options(run)
    run.add_argument("--report", help="write the report here instead of stdout")
    run.add_argument("--transcript", help="write the event transcript here (single file only)")
    run.add_argument("--txlog", help="write the on-chain transaction log here (single file only)")
    run.add_argument("--attack", choices=ATTACKS, help="judge the run as this attack")
    run.add_argument("--jobs", type=_positive, default=1)

    ver = sub.add_parser("verify", help="check a serialized payment message")
    ver.add_argument("message_hex")
    ver.add_argument("public_key_hex")
    ver.add_argument("--scheme", choices=("ed25519", "toy"), default="ed25519")

    cmp_ = sub.add_parser("compare", help="xLumi versus a punishment-channel baseline")
    cmp_.add_argument("files", nargs="+")
    sim_options(cmp_)

    sub.add_parser("scenarios", help="list bundled scenario files")
    return parser


def _write_artifacts(args, cfg: RunConfig) -> int:
    try:
        scenario = parse_script(read_scenario_text(cfg.scenario_path))
        result = run_scenario(scenario, cfg.sim_config())
    except (FileNotFoundError, MalformedScript, InvariantViolation):
        return EXIT_USAGE
    if args.transcript:
        Path(args.transcript).write_text(result.transcript_text(), encoding="utf-8")
    if args.txlog:
        Path(args.txlog).write_text(result.ledger.export_log(), encoding="utf-8")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    if args.command == "scenarios":
        print("\n".join(bundled_scenarios()))
        return EXIT_OK

    if args.command == "verify":
        code, out = cmd_verify(args.message_hex, args.public_key_hex, args.scheme)
        (sys.stdout if code != EXIT_USAGE else sys.stderr).write(out)
        return code

    seed = args.seed if args.seed is not None else _default_seed()
    configs = [
        RunConfig(
            f, fee=args.fee, grace=args.grace, seed=seed, scheme=args.scheme,
            format=args.format, report_path=getattr(args, "report", None),
            attack=getattr(args, "attack", None),
        )
        for f in args.files
    ]

    if args.command == "compare":
        outcomes = [cmd_compare(c) for c in configs]
    else:
        if (args.transcript or args.txlog) and len(configs) != 1:
            parser.print_usage(sys.stderr)
            sys.stderr.write("--transcript/--txlog need exactly one scenario file\n")
            return EXIT_USAGE
        if args.jobs > 1 and len(configs) > 1:
            with ProcessPoolExecutor(max_workers=args.jobs) as pool:
                outcomes = list(pool.map(_run_job, configs))
        else:
            outcomes = [cmd_run(c) for c in configs]

    chunks = []
    for cfg, (code, report, err) in zip(configs, outcomes):
        if err:
            sys.stderr.write(err)
        if report:
            chunks.append(f"== {cfg.scenario_path}\n{report}" if len(configs) > 1 else report)
    text = "".join(chunks)
    if getattr(args, "report", None):
        Path(args.report).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)

    code = max(code for code, _, _ in outcomes)
    if code == EXIT_OK and args.command == "run" and (args.transcript or args.txlog):
        code = _write_artifacts(args, configs[0])
    return code


if __name__ == "__main__":
    sys.exit(main())
