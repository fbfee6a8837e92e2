"""Seeded random scenario generators."""

from __future__ import annotations

import random

from xlumi.sim.script import Scenario, make_event

DEFAULT_WEIGHTS = {"pay": 10, "collect": 2, "load": 1, "extend": 1, "abort": 1}

ADVERSARIAL_WEIGHTS = {
    "forge": 1,
    "replay_old": 1,
    "drop_message": 0.5,
    "check": 2,
    "unload": 1,
    "deposit": 0.5,
    "withdraw": 0.5,
}


def random_script(
    rng: random.Random,
    length: int = 20,
    weights: dict[str, float] | None = None,
    adversarial: bool = True,
) -> Scenario:
    """Unconstrained event soup: many events will be rejected, which is the point."""
    weights = dict(weights or DEFAULT_WEIGHTS)
    if adversarial:
        weights.update(ADVERSARIAL_WEIGHTS)
    actions = list(weights)
    cum = list(weights.values())
    sc = Scenario(genesis={"payer": (200, 100), "recipient": (100, 0), "adversary": (100, 20)})
    t = rng.randrange(0, 3)
    sc.events.append(make_event(t, "payer", "create", {"amount": rng.randint(1, 50), "expiration": t + rng.randint(1, 60)}))

    def who(owner: str) -> str:
        if not adversarial:
            return owner
        r = rng.random()
        return owner if r < 0.8 else ("adversary" if r < 0.93 else ("recipient" if owner == "payer" else "payer"))

    for _ in range(length):
        t += rng.randrange(0, 6)
        action = rng.choices(actions, cum)[0]
        if action == "pay":
            ev = make_event(t, "payer", "pay", {"amount": rng.randint(1, 8)})
        elif action == "collect":
            ev = make_event(t, who("recipient"), "collect")
        elif action == "load":
            ev = make_event(t, who("payer"), "load", {"amount": rng.randint(0, 25)})
        elif action == "extend":
            ev = make_event(t, who("payer"), "extend", {"expiration": max(0, t + rng.randint(-10, 60))})
        elif action == "abort":
            ev = make_event(t, who("payer"), "abort")
        elif action == "unload":
            ev = make_event(t, who("payer"), "unload")
        elif action == "forge":
            ev = make_event(t, "adversary", "forge", {"over": rng.randint(1, 10), "signer": rng.choice(("random", "payer"))})
        elif action in ("replay_old", "drop_message", "check"):
            actor = "adversary" if action == "replay_old" else "recipient"
            ev = make_event(t, actor, action)
        else:
            ev = make_event(t, rng.choice(("payer", "recipient", "adversary")), action, {"amount": rng.randint(0, 30)})
        sc.events.append(ev)
    return sc


def honest_script(rng: random.Random, grace: int = 10, fee: int = 1, max_events: int = 40) -> Scenario:
    """A script in which every event is valid and will be accepted.

    The generator tracks just enough state to stay valid; it is the
    scenario source for the balance-oracle comparison.
    """
    payer_main = rng.randint(0, 60) + (max_events + 5) * fee + 100
    payer_contract = rng.randint(0, 40)
    recipient_main = (max_events + 5) * fee + rng.randint(0, 20)
    sc = Scenario(genesis={"payer": (payer_main, payer_contract), "recipient": (recipient_main, 0), "adversary": (0, 0)})
    ev = sc.events.append
    t = rng.randrange(0, 5)

    deposit = rng.randint(1, 60)
    ev(make_event(t, "payer", "deposit", {"amount": deposit}))
    contract = payer_contract + deposit
    amount = rng.randint(1, contract)
    expiration = t + rng.randint(10, 80)
    ev(make_event(t, "payer", "create", {"amount": amount, "expiration": expiration}))
    contract -= amount
    x, y, z = amount, 0, 0
    aborted = False
    recipient_contract = 0

    for _ in range(rng.randint(0, max_events)):
        step = rng.randrange(0, 4)
        if t + step >= expiration:
            break
        t += step
        options = {}
        if z < x:
            options["pay"] = 10
        if z > y:
            options["collect"] = 2
        if not aborted:
            if contract > 0:
                options["load"] = 1
            options["extend"] = 1
            options["abort"] = 1
        if recipient_contract > 0:
            options["withdraw"] = 1
        if not options:
            break
        action = rng.choices(list(options), list(options.values()))[0]
        if action == "pay":
            delta = rng.randint(1, min(5, x - z))
            ev(make_event(t, "payer", "pay", {"amount": delta}))
            z += delta
        elif action == "collect":
            ev(make_event(t, "recipient", "collect"))
            recipient_contract += z - y
            y = z
        elif action == "load":
            delta = rng.randint(1, contract)
            ev(make_event(t, "payer", "load", {"amount": delta}))
            contract -= delta
            x += delta
        elif action == "extend":
            expiration += rng.randint(1, 40)
            ev(make_event(t, "payer", "extend", {"expiration": expiration}))
        elif action == "abort":
            ev(make_event(t, "payer", "abort"))
            expiration = min(expiration, t + grace)
            aborted = True
        else:
            out = rng.randint(1, recipient_contract)
            ev(make_event(t, "recipient", "withdraw", {"amount": out}))
            recipient_contract -= out

    if z > y and t < expiration:
        ev(make_event(t, "recipient", "collect"))
    ev(make_event(max(t, expiration), "payer", "unload"))
    return sc


def attack_script(attack: str, rng: random.Random, grace: int = 10) -> Scenario:
    """Honest prefix, one attack, then an abort/monitor/unload close-out."""
    load = rng.randint(5, 60)
    sc = Scenario(genesis={"payer": (100, load), "recipient": (100, 0), "adversary": (100, 0)})
    ev = sc.events.append
    ev(make_event(0, "payer", "create", {"amount": load, "expiration": 10_000}))
    t, z = 0, 0

    def pays(n: int) -> None:
        nonlocal t, z
        for _ in range(n):
            if z >= load:
                return
            t += 1
            delta = rng.randint(1, min(4, load - z))
            ev(make_event(t, "payer", "pay", {"amount": delta}))
            z += delta

    pays(rng.randint(1, 6))
    if attack == "replay_old" or rng.random() < 0.5:
        t += 1
        ev(make_event(t, "recipient", "collect"))
    pays(rng.randint(0 if attack != "early_abort" else 1, 6))

    t += 1
    if attack == "replay_old":
        for _ in range(rng.randint(1, 3)):
            ev(make_event(t, "adversary", "replay_old"))
    elif attack == "over_load_sign":
        ev(make_event(t, "adversary", "forge", {"signer": "payer", "over": rng.randint(1, 20)}))
    elif attack == "forge":
        ev(make_event(t, "adversary", "forge", {"signer": "random", "over": rng.randint(1, 20)}))
    elif attack == "data_loss":
        ev(make_event(t, "recipient", "drop_message"))
    elif attack != "early_abort":
        raise ValueError(f"unknown attack {attack!r}")

    # early_abort: the abort itself is the attack; the monitor must catch it in time
    t += rng.randint(0, 2)
    ev(make_event(t, "payer", "abort"))
    ev(make_event(t + rng.randint(0, grace - 1), "recipient", "check"))
    ev(make_event(t + grace, "payer", "unload"))
    return sc
