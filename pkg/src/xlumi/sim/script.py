"""Line-oriented scenario scripts.

::

    # comments run to end of line
    genesis payer main=10 contract=45
    at 0 payer create amount=25 expiration=70
    at 5 payer pay amount=2
    at 46 recipient check risk=18

``genesis`` lines set starting balances and must precede every ``at`` line.
Events must be sorted by time; ties run in script order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

ACTORS = ("payer", "recipient", "adversary")

# action -> (required params, optional params, allowed actors)
ACTIONS: dict[str, tuple[frozenset, frozenset, frozenset]] = {
    "create": (frozenset({"amount", "expiration"}), frozenset(), frozenset({"payer"})),
    "load": (frozenset({"amount"}), frozenset(), frozenset(ACTORS)),
    "extend": (frozenset({"expiration"}), frozenset(), frozenset(ACTORS)),
    "abort": (frozenset(), frozenset(), frozenset(ACTORS)),
    "pay": (frozenset({"amount"}), frozenset(), frozenset({"payer"})),
    "collect": (frozenset(), frozenset(), frozenset(ACTORS)),
    "unload": (frozenset(), frozenset(), frozenset(ACTORS)),
    "deposit": (frozenset({"amount"}), frozenset(), frozenset(ACTORS)),
    "withdraw": (frozenset({"amount"}), frozenset(), frozenset(ACTORS)),
    "drop_message": (frozenset(), frozenset(), frozenset({"recipient"})),
    "replay_old": (frozenset(), frozenset(), frozenset({"adversary"})),
    "forge": (frozenset({"over"}), frozenset({"signer"}), frozenset({"adversary"})),
    "check": (frozenset(), frozenset({"risk"}), frozenset({"recipient"})),
}

STRING_PARAMS = {"signer": ("random", "payer")}

DEFAULT_GENESIS = {
    "payer": (100, 100),
    "recipient": (100, 0),
    "adversary": (100, 0),
}


class MalformedScript(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ScenarioEvent:
    time: int
    actor: str
    action: str
    params: dict = field(default_factory=dict)
    line: int | None = None

    def __str__(self) -> str:
        extra = "".join(f" {k}={v}" for k, v in self.params.items())
        return f"at {self.time} {self.actor} {self.action}{extra}"


@dataclass
class Scenario:
    events: list[ScenarioEvent] = field(default_factory=list)
    genesis: dict[str, tuple[int, int]] = field(default_factory=lambda: dict(DEFAULT_GENESIS))

    def text(self) -> str:
        lines = []
        for actor, (main, contract) in self.genesis.items():
            if DEFAULT_GENESIS.get(actor) != (main, contract):
                lines.append(f"genesis {actor} main={main} contract={contract}")
        lines.extend(str(ev) for ev in self.events)
        return "".join(line + "\n" for line in lines)


def _int(text: str, what: str, lineno: int) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise MalformedScript(f"{what} must be an integer, got {text!r}", lineno) from None
    if value < 0:
        raise MalformedScript(f"{what} must be non-negative", lineno)
    return value


def _params(tokens: list[str], lineno: int) -> dict:
    out: dict = {}
    for tok in tokens:
        key, sep, value = tok.partition("=")
        if not sep or not key:
            raise MalformedScript(f"expected key=value, got {tok!r}", lineno)
        if key in out:
            raise MalformedScript(f"duplicate parameter {key!r}", lineno)
        if key in STRING_PARAMS:
            if value not in STRING_PARAMS[key]:
                raise MalformedScript(f"{key} must be one of {STRING_PARAMS[key]}", lineno)
            out[key] = value
        else:
            out[key] = _int(value, key, lineno)
    return out


def make_event(time: int, actor: str, action: str, params: dict | None = None, line: int | None = None) -> ScenarioEvent:
    """Build and validate one event."""
    params = dict(params or {})
    if actor not in ACTORS:
        raise MalformedScript(f"unknown actor {actor!r}", line)
    if action not in ACTIONS:
        raise MalformedScript(f"unknown action {action!r}", line)
    required, optional, actors = ACTIONS[action]
    if actor not in actors:
        raise MalformedScript(f"{actor} cannot perform {action}", line)
    missing = required - params.keys()
    if missing:
        raise MalformedScript(f"{action} requires {', '.join(sorted(missing))}", line)
    unknown = params.keys() - required - optional
    if unknown:
        raise MalformedScript(f"{action} does not take {', '.join(sorted(unknown))}", line)
    return ScenarioEvent(time, actor, action, params, line)


def parse_script(text: str) -> Scenario:
    scenario = Scenario()
    last_time = 0
    seen_event = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split("#", 1)[0].split()
        if not tokens:
            continue
        head = tokens[0]
        if head == "genesis":
            if seen_event:
                raise MalformedScript("genesis lines must come before events", lineno)
            if len(tokens) < 2 or tokens[1] not in ACTORS:
                raise MalformedScript("genesis needs an actor", lineno)
            params = _params(tokens[2:], lineno)
            if not params.keys() <= {"main", "contract"}:
                raise MalformedScript("genesis takes only main= and contract=", lineno)
            main, contract = scenario.genesis[tokens[1]]
            scenario.genesis[tokens[1]] = (params.get("main", main), params.get("contract", contract))
        elif head == "at":
            if len(tokens) < 4:
                raise MalformedScript("expected 'at <time> <actor> <action> [key=value ...]'", lineno)
            time = _int(tokens[1], "time", lineno)
            if time < last_time:
                raise MalformedScript(f"time {time} is earlier than previous event at {last_time}", lineno)
            event = make_event(time, tokens[2], tokens[3], _params(tokens[4:], lineno), lineno)
            scenario.events.append(event)
            last_time = time
            seen_event = True
        else:
            raise MalformedScript(f"unrecognised directive {head!r}", lineno)
    return scenario


def load_script(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return parse_script(fh.read())
