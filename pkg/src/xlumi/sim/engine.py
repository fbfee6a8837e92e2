"""Replay scripted timelines through the real ledger, contract and sessions."""

from __future__ import annotations

import hashlib
import json
import random
from collections import Counter
from dataclasses import dataclass, field

from xlumi import channel
from xlumi.crypto import generate_keypair
from xlumi.ledger import Ledger, TxRejected
from xlumi.offchain import (
    Acceptance,
    Action,
    OffchainError,
    PayerSession,
    PaymentMessage,
    RecipientSession,
    sign_payment,
)
from xlumi.sim.script import ACTORS, MalformedScript, Scenario, ScenarioEvent

CHANNEL_OPS = ("load", "extend", "abort", "collect", "unload")


class InvariantViolation(AssertionError):
    pass


@dataclass(frozen=True)
class SimConfig:
    fee: int = 1
    grace: int = 10
    seed: int = 0
    scheme: str = "ed25519"
    monitor_interval: int | None = None  # defaults to the grace period

    def __post_init__(self):
        if self.fee < 0:
            raise ValueError("fee must be >= 0")
        if self.grace < 1:
            raise ValueError("grace must be >= 1")


@dataclass(frozen=True)
class Sample:
    time: int
    X: int
    Y: int
    Z: int
    onchain: bool


@dataclass
class Metrics:
    series: list[Sample] = field(default_factory=list)
    onchain_tx: int = 0
    offchain_tx: int = 0
    rejected_tx: int = 0
    onchain_by_actor: dict[str, int] = field(default_factory=dict)
    fees_by_actor: dict[str, int] = field(default_factory=dict)
    kinds_by_actor: dict[str, dict[str, int]] = field(default_factory=dict)
    stored_signatures: int = 0

    @property
    def fees_saved(self) -> int:
        return self.offchain_tx - self.onchain_tx

    def to_dict(self) -> dict:
        return {
            "onchain_tx": self.onchain_tx,
            "offchain_tx": self.offchain_tx,
            "fees_saved": self.fees_saved,
            "rejected_tx": self.rejected_tx,
            "onchain_by_actor": self.onchain_by_actor,
            "fees_by_actor": self.fees_by_actor,
            "kinds_by_actor": self.kinds_by_actor,
            "stored_signatures": self.stored_signatures,
            "series": [[s.time, s.X, s.Y, s.Z, s.onchain] for s in self.series],
        }


@dataclass
class RunResult:
    metrics: Metrics
    ledger: Ledger
    transcript: list[str]
    addresses: dict[str, bytes]
    public_keys: dict[str, bytes]
    channel_id: bytes | None = None
    max_accepted: int = 0
    attack_log: list[tuple[int, str, str, bool]] = field(default_factory=list)
    losses: list[tuple[int, int]] = field(default_factory=list)  # (Z, Y) at each data loss

    @property
    def channel(self):
        return None if self.channel_id is None else self.ledger.channel(self.channel_id)

    def balances(self, actor: str) -> tuple[int, int]:
        addr = self.addresses[actor]
        return self.ledger.main_balances[addr], self.ledger.contract_balances[addr]

    def transcript_text(self) -> str:
        return "".join(line + "\n" for line in self.transcript)


def actor_seed(seed: int, actor: str) -> bytes:
    return hashlib.sha256(f"xlumi-sim:{seed}:{actor}".encode()).digest()


class _Run:
    def __init__(self, scenario: Scenario, config: SimConfig):
        self.config = config
        self.interval = config.monitor_interval or config.grace
        self.rng = random.Random(config.seed)
        self.ledger = Ledger(fee=config.fee, scheme=config.scheme)
        self.keys = {a: generate_keypair(actor_seed(config.seed, a), config.scheme) for a in ACTORS}
        self.addr = {}
        for actor in ACTORS:
            main, contract = scenario.genesis[actor]
            self.addr[actor] = self.ledger.open_account(self.keys[actor].public_key, main, contract)
        self.actor_of = {v: k for k, v in self.addr.items()}
        self.channel_id: bytes | None = None
        self.payer: PayerSession | None = None
        self.recipient: RecipientSession | None = None
        self.accepted_msgs: list[PaymentMessage] = []
        self.max_accepted = 0
        self.offchain_tx = 0
        self.series: list[Sample] = []
        self.attack_log: list[tuple[int, str, str, bool]] = []
        self.losses: list[tuple[int, int]] = []
        self.transcript = [
            f"# scheme={config.scheme} fee={config.fee} grace={config.grace} seed={config.seed}",
            *(f"# key {a}={self.keys[a].public_key.hex()}" for a in ACTORS),
        ]

    # helpers -------------------------------------------------------------

    def note(self, ev: ScenarioEvent, outcome: str) -> None:
        self.transcript.append(f"t={ev.time} {ev.actor} {ev.action} {outcome}")

    def attack(self, ev: ScenarioEvent, where: str, outcome: str, accepted: bool) -> None:
        self.attack_log.append((ev.time, f"{ev.action}:{where}", outcome, accepted))

    def submit(self, ev: ScenarioEvent, fn, *args) -> tuple[bool, object]:
        try:
            result = fn(self.ledger, *args)
        except TxRejected as exc:
            self.note(ev, f"rejected {exc.reason.value} tx={exc.record.tx_id.hex()}")
            return False, exc.reason
        self.note(ev, f"accepted tx={self.ledger.tx_log[-1].tx_id.hex()}" + self._result_suffix(result))
        return True, result

    @staticmethod
    def _result_suffix(result) -> str:
        if isinstance(result, int):
            return f" amount={result}"
        return ""

    def state(self):
        return None if self.channel_id is None else self.ledger.channel(self.channel_id)

    def xyz(self) -> tuple[int, int, int]:
        st = self.state()
        if st is None:
            return 0, 0, 0
        return st.accumulated_load, st.collected, self.payer.accumulated_paid

    def collect_as(self, ev: ScenarioEvent, actor: str, message: PaymentMessage) -> tuple[bool, object]:
        payload = message.signed_by(self.keys["payer"].public_key, self.config.scheme)
        return self.submit(ev, channel.collect_payment, self.addr[actor], self.channel_id, payload)

    # event handlers ------------------------------------------------------

    def apply(self, ev: ScenarioEvent) -> None:
        self.ledger.advance_to(ev.time)
        if ev.action in ("deposit", "withdraw"):
            fn = self.ledger.deposit_to_contract if ev.action == "deposit" else self.ledger.withdraw_from_contract
            try:
                fn(self.addr[ev.actor], ev.params["amount"])
            except TxRejected as exc:
                self.note(ev, f"rejected {exc.reason.value}")
            else:
                self.note(ev, f"accepted amount={ev.params['amount']}")
            return
        if ev.action == "create":
            if self.channel_id is not None:
                raise MalformedScript("a scenario drives a single channel; second create", ev.line)
            ok, cid = self.submit(
                ev, channel.create, self.addr["payer"], self.addr["recipient"],
                ev.params["amount"], ev.params["expiration"],
            )
            if ok:
                self.channel_id = cid
                self.payer = PayerSession(cid, self.keys["payer"], 0, ev.params["amount"])
                self.recipient = RecipientSession(cid, self.keys["payer"].public_key, self.config.scheme)
                self.transcript[-1] += f" channel={cid.hex()}"
            return
        if self.channel_id is None:
            self.note(ev, "skipped no-channel")
            return
        getattr(self, f"on_{ev.action}")(ev)

    def on_load(self, ev):
        ok, _ = self.submit(ev, channel.load, self.addr[ev.actor], self.channel_id, ev.params["amount"])
        if ev.actor == "adversary":
            self.attack(ev, "chain", self.transcript[-1], ok)
        if ok and ev.actor == "payer":
            self.payer.sync(self.ledger)

    def on_extend(self, ev):
        ok, _ = self.submit(ev, channel.extend_expiration, self.addr[ev.actor], self.channel_id, ev.params["expiration"])
        if ev.actor == "adversary":
            self.attack(ev, "chain", self.transcript[-1], ok)

    def on_abort(self, ev):
        ok, _ = self.submit(ev, channel.abort, self.addr[ev.actor], self.channel_id, self.config.grace)
        if ev.actor == "adversary":
            self.attack(ev, "chain", self.transcript[-1], ok)

    def on_unload(self, ev):
        ok, _ = self.submit(ev, channel.unload, self.addr[ev.actor], self.channel_id)
        if ev.actor == "adversary":
            self.attack(ev, "chain", self.transcript[-1], ok)

    def on_pay(self, ev):
        try:
            msg = self.payer.pay(ev.params["amount"])
        except OffchainError as exc:
            self.note(ev, f"refused {type(exc).__name__}")
            return
        verdict = self.recipient.accept(self.ledger, msg)
        if verdict is Acceptance.ACCEPTED:
            self.offchain_tx += 1
            self.accepted_msgs.append(msg)
            self.max_accepted = max(self.max_accepted, msg.accumulated_amount)
        self.note(ev, f"{verdict.value} Z={msg.accumulated_amount} msg={msg.hex()}")

    def on_collect(self, ev):
        if ev.actor == "recipient":
            msg = self.recipient.best_message
        else:
            msg = self.accepted_msgs[-1] if self.accepted_msgs else None
        if msg is None:
            self.note(ev, "skipped nothing-to-collect")
            return
        ok, _ = self.collect_as(ev, ev.actor, msg)
        if ev.actor == "adversary":
            self.attack(ev, "chain", self.transcript[-1], ok)

    def on_check(self, ev):
        action = self.recipient.monitor(self.ledger, self.interval)
        if action is Action.NONE and "risk" in ev.params:
            action = self.recipient.settle_threshold(self.ledger, ev.params["risk"])
        self.note(ev, action.value)
        if action is Action.COLLECT_NOW:
            self.collect_as(ev, "recipient", self.recipient.best_message)

    def on_drop_message(self, ev):
        _, y, z = self.xyz()
        self.losses.append((z, y))
        self.recipient.best_message = None
        self.note(ev, f"lost Z={z} Y={y}")

    def on_replay_old(self, ev):
        collected = self.state().collected
        stale = [m for m in self.accepted_msgs if m.accumulated_amount <= collected]
        if not stale:
            self.note(ev, "skipped nothing-to-replay")
            return
        old = stale[self.rng.randrange(len(stale))]
        verdict = self.recipient.accept(self.ledger, old)
        self.note(ev, f"offchain {verdict.value} Z={old.accumulated_amount}")
        self.attack(ev, "offchain", verdict.value, verdict is Acceptance.ACCEPTED)
        ok, _ = self.collect_as(ev, "recipient", old)
        self.attack(ev, "chain", self.transcript[-1], ok)

    def on_forge(self, ev):
        x, y, z = self.xyz()
        if ev.params.get("signer", "random") == "payer":
            signer = self.keys["payer"]
            total = x + ev.params["over"]
        else:
            signer = generate_keypair(self.rng.randbytes(32), self.config.scheme)
            total = max(z, y) + ev.params["over"]
        msg = sign_payment(signer, self.channel_id, total)
        verdict = self.recipient.accept(self.ledger, msg)
        self.note(ev, f"offchain {verdict.value} Z={total}")
        self.attack(ev, "offchain", verdict.value, verdict is Acceptance.ACCEPTED)
        payload = msg.signed_by(signer.public_key, self.config.scheme)
        ok, _ = self.submit(ev, channel.collect_payment, self.addr["recipient"], self.channel_id, payload)
        self.attack(ev, "chain", self.transcript[-1], ok)

    # invariants ----------------------------------------------------------

    def sample_and_check(self, ev: ScenarioEvent, log_len_before: int) -> None:
        x, y, z = self.xyz()
        onchain = any(r.accepted for r in self.ledger.tx_log[log_len_before:])
        sample = Sample(ev.time, x, y, z, onchain)
        problems = []
        if not y <= z <= x:
            problems.append(f"ordering Y<=Z<=X broken: X={x} Y={y} Z={z}")
        if self.series:
            prev = self.series[-1]
            if x < prev.X or y < prev.Y or z < prev.Z:
                problems.append(f"non-monotone step {prev} -> {sample}")
        st = self.state()
        if st is not None:
            expected = 0 if st.unloaded else x - y
            if self.ledger.escrow[self.channel_id] != expected:
                problems.append(f"escrow {self.ledger.escrow[self.channel_id]} != {expected}")
        if not self.ledger.conserved():
            problems.append(f"supply {self.ledger.circulating()} != {self.ledger.total_supply}")
        if self.recipient is not None and self.recipient.stored_signatures > 1:
            problems.append("recipient stores more than one signature")
        if problems:
            where = f"line {ev.line}" if ev.line is not None else f"t={ev.time}"
            raise InvariantViolation(f"{where} ({ev}): " + "; ".join(problems))
        self.series.append(sample)

    def run(self, scenario: Scenario) -> RunResult:
        for ev in scenario.events:
            before = len(self.ledger.tx_log)
            self.apply(ev)
            self.sample_and_check(ev, before)
        return self.result()

    def result(self) -> RunResult:
        ledger = self.ledger
        metrics = Metrics(series=self.series, offchain_tx=self.offchain_tx)
        metrics.onchain_tx = ledger.count_transactions()
        metrics.rejected_tx = sum(1 for r in ledger.tx_log if not r.accepted)
        for actor, addr in self.addr.items():
            metrics.onchain_by_actor[actor] = ledger.count_transactions(sender=addr)
            metrics.fees_by_actor[actor] = ledger.fees_by_sender.get(addr, 0)
            kinds = Counter(r.kind for r in ledger.tx_log if r.accepted and r.sender == addr)
            metrics.kinds_by_actor[actor] = dict(sorted(kinds.items()))
        if self.recipient is not None:
            metrics.stored_signatures = self.recipient.stored_signatures
        return RunResult(
            metrics=metrics,
            ledger=ledger,
            transcript=self.transcript,
            addresses=dict(self.addr),
            public_keys={a: kp.public_key for a, kp in self.keys.items()},
            channel_id=self.channel_id,
            max_accepted=self.max_accepted,
            attack_log=self.attack_log,
            losses=self.losses,
        )


def run_scenario(scenario: Scenario, config: SimConfig | None = None) -> RunResult:
    """Replay ``scenario`` deterministically, checking invariants after every event.

    Raises InvariantViolation if Y <= Z <= X, monotonicity, escrow or supply
    conservation ever fail, and MalformedScript for scripts the engine cannot
    drive.
    """
    return _Run(scenario, config or SimConfig()).run(scenario)


def usage_level_check(metrics: Metrics, level: int) -> bool:
    """Check the payer's on-chain footprint against a usage level.

    Level 1 uses only create; level 2 adds abort and unload; level 3 may also
    load and extend, costing one transaction each on top of the three.
    """
    kinds = metrics.kinds_by_actor.get("payer", {})
    count = metrics.onchain_by_actor.get("payer", 0)
    used = set(kinds)
    if level == 1:
        return count >= 1 and used == {"create"}
    if level == 2:
        return count >= 3 and used == {"create", "abort", "unload"}
    if level == 3:
        base = {"create", "abort", "unload"}
        if not base <= used <= base | {"load", "extend"}:
            return False
        return count >= 3 + kinds.get("load", 0) + kinds.get("extend", 0)
    raise ValueError(f"unknown usage level {level}")


def metrics_report(result: RunResult, fmt: str = "text") -> str:
    """Plot-ready report: counts, fees, final channel state and the X/Y/Z series."""
    m = result.metrics
    state = result.channel
    if fmt == "structured":
        doc = m.to_dict()
        doc["channel"] = None if state is None else {
            "channel_id": state.channel_id.hex(),
            "X": state.accumulated_load,
            "Y": state.collected,
            "expiration": state.expiration,
            "status": state.status.value,
            "unloaded": state.unloaded,
        }
        doc["balances"] = {a: dict(zip(("main", "contract"), result.balances(a))) for a in result.addresses}
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        f"onchain_tx={m.onchain_tx}",
        f"offchain_tx={m.offchain_tx}",
        f"fees_saved={m.fees_saved}",
        f"rejected_tx={m.rejected_tx}",
        f"stored_signatures={m.stored_signatures}",
    ]
    for actor in result.addresses:
        main, contract = result.balances(actor)
        lines.append(
            f"{actor}: onchain={m.onchain_by_actor[actor]} fees={m.fees_by_actor[actor]} "
            f"main={main} contract={contract}"
        )
    lines.append("channel: " + ("none" if state is None else state.dump()))
    lines.append("series: time X Y Z onchain")
    lines.extend(f"  {s.time} {s.X} {s.Y} {s.Z} {int(s.onchain)}" for s in m.series)
    return "".join(line + "\n" for line in lines)
