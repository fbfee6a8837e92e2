import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import RuleBasedStateMachine, initialize, invariant, rule

from conftest import Parties
from xlumi import channel
from xlumi.channel import Status
from xlumi.crypto import SignedPayload, encode_payment
from xlumi.ledger import Reason, TxRejected


def payment(keys, channel_id, total):
    return SignedPayload.create(keys, encode_payment(channel_id, total))


def reason_of(fn, *args):
    with pytest.raises(TxRejected) as info:
        fn(*args)
    return info.value.reason


@pytest.fixture
def opened(parties):
    p = parties
    # Bob's contract balance is 50; load 10 like the worked example
    cid = channel.create(p.ledger, p.bob, p.alice, 10, 100)
    return p, cid


def test_create():
    p = Parties(bob_contract=10)
    cid = channel.create(p.ledger, p.bob, p.alice, 10, 100)
    st_ = p.ledger.channel(cid)
    assert (st_.accumulated_load, st_.collected, st_.expiration, st_.status) == (10, 0, 100, Status.ACTIVE)
    assert p.ledger.contract_balances[p.bob] == 0
    assert p.ledger.escrow[cid] == 10
    assert cid == p.ledger.tx_log[-1].tx_id
    assert p.ledger.conserved()


def test_create_rejections(parties):
    p = parties
    L = p.ledger
    assert reason_of(channel.create, L, p.bob, p.alice, 10, 0) is Reason.PAST_EXPIRATION
    assert reason_of(channel.create, L, p.bob, p.bob, 10, 100) is Reason.SELF_CHANNEL
    assert reason_of(channel.create, L, p.bob, p.alice, 0, 100) is Reason.ZERO_AMOUNT
    assert reason_of(channel.create, L, p.bob, p.alice, 51, 100) is Reason.INSUFFICIENT_BALANCE
    assert L.channel_store == {}
    assert L.count_transactions() == 0


def test_two_creates_distinct_ids(parties):
    p = parties
    a = channel.create(p.ledger, p.bob, p.alice, 5, 100)
    b = channel.create(p.ledger, p.bob, p.alice, 5, 100)
    assert a != b


def test_load(opened):
    p, cid = opened
    channel.load(p.ledger, p.bob, cid, 15)
    assert p.ledger.channel(cid).accumulated_load == 25
    assert p.ledger.contract_balances[p.bob] == 25
    assert reason_of(channel.load, p.ledger, p.alice, cid, 1) is Reason.UNAUTHORIZED
    assert reason_of(channel.load, p.ledger, p.bob, cid, 0) is Reason.ZERO_AMOUNT
    assert reason_of(channel.load, p.ledger, p.bob, cid, 26) is Reason.INSUFFICIENT_BALANCE
    channel.abort(p.ledger, p.bob, cid, 10)
    assert reason_of(channel.load, p.ledger, p.bob, cid, 1) is Reason.CHANNEL_ABORTED


def test_extend(opened):
    p, cid = opened
    channel.extend_expiration(p.ledger, p.bob, cid, 200)
    assert p.ledger.channel(cid).expiration == 200
    assert reason_of(channel.extend_expiration, p.ledger, p.bob, cid, 200) is Reason.NOT_AN_EXTENSION
    assert reason_of(channel.extend_expiration, p.ledger, p.alice, cid, 300) is Reason.UNAUTHORIZED
    channel.abort(p.ledger, p.bob, cid, 10)
    assert reason_of(channel.extend_expiration, p.ledger, p.bob, cid, 300) is Reason.CHANNEL_ABORTED


def test_abort_sets_grace_expiration(opened):
    p, cid = opened
    p.ledger.advance_to(40)
    channel.abort(p.ledger, p.bob, cid, 10)
    state = p.ledger.channel(cid)
    assert state.status is Status.ABORTED
    assert state.expiration == 50
    assert reason_of(channel.abort, p.ledger, p.bob, cid, 10) is Reason.ALREADY_ABORTED


def test_abort_never_lengthens(opened):
    p, cid = opened
    p.ledger.advance_to(95)
    channel.abort(p.ledger, p.bob, cid, 10)
    assert p.ledger.channel(cid).expiration == 100


def test_abort_by_recipient_unauthorized(opened):
    p, cid = opened
    assert reason_of(channel.abort, p.ledger, p.alice, cid, 10) is Reason.UNAUTHORIZED
    assert p.ledger.channel(cid).status is Status.ACTIVE


def test_collect_and_replay(opened):
    p, cid = opened
    two = payment(p.keys["bob"], cid, 2)
    assert channel.collect_payment(p.ledger, p.alice, cid, two) == 2
    assert p.ledger.contract_balances[p.alice] == 2
    assert p.ledger.channel(cid).collected == 2
    assert p.ledger.escrow[cid] == 8
    before = (dict(p.ledger.contract_balances), dict(p.ledger.main_balances))
    assert reason_of(channel.collect_payment, p.ledger, p.alice, cid, two) is Reason.STALE_AMOUNT
    assert reason_of(channel.collect_payment, p.ledger, p.alice, cid, payment(p.keys["bob"], cid, 1)) is Reason.STALE_AMOUNT
    assert (dict(p.ledger.contract_balances), dict(p.ledger.main_balances)) == before


def test_collect_rejections(opened):
    p, cid = opened
    L = p.ledger
    bob = p.keys["bob"]
    assert reason_of(channel.collect_payment, L, p.alice, cid, payment(bob, cid, 11)) is Reason.EXCEEDS_LOAD
    assert reason_of(channel.collect_payment, L, p.bob, cid, payment(bob, cid, 1)) is Reason.UNAUTHORIZED
    other = bytes(32)
    assert reason_of(channel.collect_payment, L, p.alice, cid, payment(bob, other, 1)) is Reason.WRONG_CHANNEL
    forged = payment(p.keys["eve"], cid, 5)
    assert reason_of(channel.collect_payment, L, p.alice, cid, forged) is Reason.BAD_SIGNATURE
    junk = SignedPayload.create(bob, b"Total paid to Alice: 1 Coin")
    assert reason_of(channel.collect_payment, L, p.alice, cid, junk) is Reason.MALFORMED_PAYLOAD
    L.advance_to(100)
    assert reason_of(channel.collect_payment, L, p.alice, cid, payment(bob, cid, 1)) is Reason.EXPIRED
    assert L.channel(cid).collected == 0


def test_signature_from_other_channel_does_not_replay(parties):
    p = parties
    first = channel.create(p.ledger, p.bob, p.alice, 10, 100)
    second = channel.create(p.ledger, p.bob, p.alice, 10, 100)
    msg = payment(p.keys["bob"], first, 5)
    channel.collect_payment(p.ledger, p.alice, first, msg)
    assert reason_of(channel.collect_payment, p.ledger, p.alice, second, msg) is Reason.WRONG_CHANNEL


def test_collect_during_grace_then_unload(opened):
    p, cid = opened
    bob = p.keys["bob"]
    channel.collect_payment(p.ledger, p.alice, cid, payment(bob, cid, 3))
    p.ledger.advance_to(40)
    channel.abort(p.ledger, p.bob, cid, 10)
    p.ledger.advance_to(45)
    assert channel.collect_payment(p.ledger, p.alice, cid, payment(bob, cid, 7)) == 4
    assert reason_of(channel.unload, p.ledger, p.bob, cid) is Reason.CHANNEL_STILL_OPEN
    p.ledger.advance_to(50)
    assert reason_of(channel.collect_payment, p.ledger, p.alice, cid, payment(bob, cid, 8)) is Reason.EXPIRED
    bob_contract = p.ledger.contract_balances[p.bob]
    assert channel.unload(p.ledger, p.bob, cid) == 3
    assert p.ledger.contract_balances[p.bob] == bob_contract + 3
    assert p.ledger.escrow[cid] == 0
    assert reason_of(channel.unload, p.ledger, p.bob, cid) is Reason.ALREADY_UNLOADED
    assert p.ledger.conserved()


def test_unload_after_natural_expiry(opened):
    p, cid = opened
    channel.collect_payment(p.ledger, p.alice, cid, payment(p.keys["bob"], cid, 2))
    p.ledger.advance_to(99)
    assert reason_of(channel.unload, p.ledger, p.bob, cid) is Reason.CHANNEL_STILL_OPEN
    p.ledger.advance_to(100)
    assert reason_of(channel.unload, p.ledger, p.alice, cid) is Reason.UNAUTHORIZED
    assert channel.unload(p.ledger, p.bob, cid) == 8


def test_unload_empty_remainder(opened):
    p, cid = opened
    channel.collect_payment(p.ledger, p.alice, cid, payment(p.keys["bob"], cid, 10))
    p.ledger.advance_to(100)
    assert channel.unload(p.ledger, p.bob, cid) == 0
    assert p.ledger.channel(cid).unloaded
    for fn, args in [
        (channel.load, (p.bob, cid, 1)),
        (channel.extend_expiration, (p.bob, cid, 500)),
        (channel.abort, (p.bob, cid, 10)),
    ]:
        assert reason_of(fn, p.ledger, *args) in (Reason.ALREADY_UNLOADED, Reason.CHANNEL_ABORTED)


def test_unknown_channel(parties):
    p = parties
    assert reason_of(channel.load, p.ledger, p.bob, bytes(32), 1) is Reason.UNKNOWN_CHANNEL


def test_fee_insufficient():
    p = Parties(bob_main=0)
    assert reason_of(channel.create, p.ledger, p.bob, p.alice, 5, 100) is Reason.INSUFFICIENT_FEE_FUNDS


def test_dump(opened):
    p, cid = opened
    line = p.ledger.channel(cid).dump()
    assert line == f"channel_id={cid.hex()} X=10 Y=0 expiration=100 status=Active"
    assert channel.dump_channels(p.ledger) == line + "\n"


class ChannelMachine(RuleBasedStateMachine):
    """Random operation sequences by all three parties, including replays."""

    @initialize(amount=st.integers(1, 40), life=st.integers(1, 50))
    def setup(self, amount, life):
        self.p = Parties(scheme="toy")
        self.L = self.p.ledger
        self.cid = channel.create(self.L, self.p.bob, self.p.alice, amount, life)
        self.signed = 0
        self.history = []
        self.accepted_payloads = []
        self.prev = self.L.channel(self.cid)
        self.terminal_balances = None

    def _try(self, fn, *args):
        before = (dict(self.L.main_balances), dict(self.L.contract_balances), dict(self.L.channel_store))
        try:
            return True, fn(self.L, *args)
        except TxRejected:
            after = (dict(self.L.main_balances), dict(self.L.contract_balances), dict(self.L.channel_store))
            assert after == before
            return False, None

    def _caller(self, who):
        return {"bob": self.p.bob, "alice": self.p.alice, "eve": self.p.eve}[who]

    @rule(dt=st.integers(0, 15))
    def tick(self, dt):
        self.L.advance_time(dt)

    @rule(who=st.sampled_from(["bob", "alice", "eve"]), amount=st.integers(0, 20))
    def load(self, who, amount):
        ok, _ = self._try(channel.load, self._caller(who), self.cid, amount)
        assert not ok or who == "bob"

    @rule(who=st.sampled_from(["bob", "alice", "eve"]), delta=st.integers(-5, 30))
    def extend(self, who, delta):
        ok, _ = self._try(channel.extend_expiration, self._caller(who), self.cid, max(0, self.L.now + delta))
        assert not ok or who == "bob"

    @rule(who=st.sampled_from(["bob", "alice", "eve"]), grace=st.integers(1, 20))
    def abort(self, who, grace):
        ok, _ = self._try(channel.abort, self._caller(who), self.cid, grace)
        assert not ok or who == "bob"

    @rule(delta=st.integers(1, 6))
    def sign(self, delta):
        x = self.L.channel(self.cid).accumulated_load
        if self.signed + delta <= x:
            self.signed += delta
            self.history.append(payment(self.p.keys["bob"], self.cid, self.signed))

    @rule(who=st.sampled_from(["alice", "alice", "bob", "eve"]), pick=st.integers(0, 1000))
    def collect(self, who, pick):
        if not self.history:
            return
        payload = self.history[pick % len(self.history)]
        ok, _ = self._try(channel.collect_payment, self._caller(who), self.cid, payload)
        assert not ok or who == "alice"
        if ok:
            self.accepted_payloads.append(payload)

    @rule(pick=st.integers(0, 1000))
    def replay(self, pick):
        if not self.accepted_payloads:
            return
        payload = self.accepted_payloads[pick % len(self.accepted_payloads)]
        ok, _ = self._try(channel.collect_payment, self.p.alice, self.cid, payload)
        assert not ok

    @rule(over=st.integers(1, 10))
    def forge(self, over):
        state = self.L.channel(self.cid)
        ok, _ = self._try(channel.collect_payment, self.p.alice, self.cid,
                          payment(self.p.keys["eve"], self.cid, state.collected + over))
        assert not ok

    @rule(who=st.sampled_from(["bob", "alice", "eve"]))
    def unload(self, who):
        ok, _ = self._try(channel.unload, self._caller(who), self.cid)
        assert not ok or who == "bob"
        if ok:
            self.terminal_balances = (dict(self.L.main_balances), dict(self.L.contract_balances))

    @invariant()
    def accumulators(self):
        state = self.L.channel(self.cid)
        assert state.collected <= self.signed <= state.accumulated_load
        assert state.accumulated_load >= self.prev.accumulated_load
        assert state.collected >= self.prev.collected
        if self.prev.status is Status.ACTIVE and state.status is Status.ACTIVE:
            assert state.expiration >= self.prev.expiration
        expected = 0 if state.unloaded else state.accumulated_load - state.collected
        assert self.L.escrow[self.cid] == expected
        assert self.L.conserved()
        self.prev = state

    @invariant()
    def terminal(self):
        if self.terminal_balances is None:
            return
        # after unload only fees may move; contract balances are frozen
        assert dict(self.L.contract_balances) == self.terminal_balances[1]


TestChannelMachine = ChannelMachine.TestCase
TestChannelMachine.settings = settings(max_examples=150, stateful_step_count=40, deadline=None)
