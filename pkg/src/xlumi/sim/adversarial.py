"""Attack runs and their safety verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field

from xlumi.sim.engine import InvariantViolation, RunResult, SimConfig, run_scenario
from xlumi.sim.script import Scenario

ATTACKS = ("replay_old", "over_load_sign", "forge", "early_abort", "data_loss")


@dataclass
class AdversarialResult:
    attack: str
    verdict: str  # "safe", "unsafe" or "loss"
    result: RunResult | None
    loss: int = 0
    expected_loss: int = 0
    attempts: int = 0
    violations: list[str] = field(default_factory=list)


def recipient_loss(result: RunResult) -> int:
    """Promised funds the recipient never collected, once the channel has expired.

    Before expiry nothing is lost yet, so the loss is 0.
    """
    state = result.channel
    if state is None or result.ledger.now < state.expiration:
        return 0
    return result.max_accepted - state.collected


def run_adversarial(scenario: Scenario, attack: str, config: SimConfig | None = None) -> AdversarialResult:
    if attack not in ATTACKS:
        raise ValueError(f"unknown attack {attack!r}; expected one of {ATTACKS}")
    try:
        result = run_scenario(scenario, config)
    except InvariantViolation as exc:
        return AdversarialResult(attack, "unsafe", None, violations=[str(exc)])

    violations = [f"t={t} {what} accepted: {outcome}" for t, what, outcome, ok in result.attack_log if ok]
    loss = recipient_loss(result)
    expected = 0
    if attack == "data_loss" and result.losses:
        z_at_loss, y_at_loss = result.losses[0]
        expected = z_at_loss - y_at_loss
    elif loss:
        violations.append(f"recipient lost {loss} of accepted payments")

    if violations:
        verdict = "unsafe"
    elif attack == "data_loss" and loss:
        verdict = "loss"
    else:
        verdict = "safe"
    return AdversarialResult(attack, verdict, result, loss, expected, len(result.attack_log), violations)
