"""The unidirectional channel contract.

Each channel keeps two on-chain accumulators: the accumulated load ``X``
(everything the owner has escrowed) and the accumulated collect ``Y``
(everything the recipient has claimed).  Both only grow.  A collect carries
a payment message signed by the owner for a running total ``Z`` and pays
out ``Z - Y``, so an older message can never be replayed.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

from xlumi.crypto import CryptoError, SignedPayload, decode_payment, verify
from xlumi.ledger import Address, Ledger, Reason, TxRejected

DEFAULT_GRACE = 10


class Status(str, enum.Enum):
    ACTIVE = "Active"
    ABORTED = "Aborted"


@dataclass(frozen=True)
class ChannelState:
    channel_id: bytes
    owner: Address
    recipient: Address
    accumulated_load: int
    collected: int
    expiration: int
    status: Status = Status.ACTIVE
    unloaded: bool = False

    @property
    def remaining(self) -> int:
        """Funds the contract still holds for this channel."""
        return 0 if self.unloaded else self.accumulated_load - self.collected

    def dump(self) -> str:
        return (
            f"channel_id={self.channel_id.hex()} X={self.accumulated_load} "
            f"Y={self.collected} expiration={self.expiration} status={self.status.value}"
            f"{' unloaded' if self.unloaded else ''}"
        )


def _owned(ledger: Ledger, caller: Address, channel_id: bytes) -> ChannelState:
    state = ledger.channel_store.get(channel_id)
    if state is None:
        raise TxRejected(Reason.UNKNOWN_CHANNEL)
    if caller != state.owner:
        raise TxRejected(Reason.UNAUTHORIZED)
    return state


def _store(ledger: Ledger, state: ChannelState) -> None:
    ledger.channel_store[state.channel_id] = state
    ledger.escrow[state.channel_id] = state.remaining


def create(ledger: Ledger, payer: Address, recipient: Address, amount: int, expiration: int) -> bytes:
    """Channel.Create(): open a channel funded from the payer's contract balance.

    Returns the channel id, which is the id of the creating transaction.
    """

    def action():
        if amount <= 0:
            raise TxRejected(Reason.ZERO_AMOUNT)
        if payer == recipient:
            raise TxRejected(Reason.SELF_CHANNEL)
        if recipient not in ledger.public_keys:
            raise TxRejected(Reason.UNKNOWN_ACCOUNT)
        if expiration <= ledger.now:
            raise TxRejected(Reason.PAST_EXPIRATION)
        if ledger.contract_balances[payer] < amount:
            raise TxRejected(Reason.INSUFFICIENT_BALANCE)
        channel_id = ledger.pending_tx_id
        ledger.contract_balances[payer] -= amount
        _store(ledger, ChannelState(channel_id, payer, recipient, amount, 0, expiration))
        return channel_id

    params = {"recipient": recipient, "amount": amount, "expiration": expiration}
    return ledger.transact(payer, "create", params, action)


def load(ledger: Ledger, caller: Address, channel_id: bytes, amount: int) -> None:
    """Channel.Load(): raise the accumulated load."""

    def action():
        state = _owned(ledger, caller, channel_id)
        if state.status is not Status.ACTIVE:
            raise TxRejected(Reason.CHANNEL_ABORTED)
        if state.unloaded:
            raise TxRejected(Reason.ALREADY_UNLOADED)
        if amount <= 0:
            raise TxRejected(Reason.ZERO_AMOUNT)
        if ledger.contract_balances[caller] < amount:
            raise TxRejected(Reason.INSUFFICIENT_BALANCE)
        ledger.contract_balances[caller] -= amount
        _store(ledger, replace(state, accumulated_load=state.accumulated_load + amount))

    ledger.transact(caller, "load", {"channel": channel_id, "amount": amount}, action)


def extend_expiration(ledger: Ledger, caller: Address, channel_id: bytes, new_expiration: int) -> None:
    """Channel.ExpireTime(): push the expiration later."""

    def action():
        state = _owned(ledger, caller, channel_id)
        if state.status is not Status.ACTIVE:
            raise TxRejected(Reason.CHANNEL_ABORTED)
        if state.unloaded:
            raise TxRejected(Reason.ALREADY_UNLOADED)
        if new_expiration <= state.expiration:
            raise TxRejected(Reason.NOT_AN_EXTENSION)
        _store(ledger, replace(state, expiration=new_expiration))

    ledger.transact(caller, "extend", {"channel": channel_id, "expiration": new_expiration}, action)


def abort(ledger: Ledger, caller: Address, channel_id: bytes, grace_period: int = DEFAULT_GRACE) -> None:
    """Channel.Abort(): close the channel, leaving ``grace_period`` for final collects.

    Abort never lengthens the channel's life.
    """
    if grace_period < 1:
        raise ValueError("grace period must be at least 1")

    def action():
        state = _owned(ledger, caller, channel_id)
        if state.status is Status.ABORTED:
            raise TxRejected(Reason.ALREADY_ABORTED)
        if state.unloaded:
            raise TxRejected(Reason.ALREADY_UNLOADED)
        expiration = min(state.expiration, ledger.now + grace_period)
        _store(ledger, replace(state, status=Status.ABORTED, expiration=expiration))

    ledger.transact(caller, "abort", {"channel": channel_id}, action)


def collect_payment(ledger: Ledger, caller: Address, channel_id: bytes, payload: SignedPayload) -> int:
    """Channel.CollectPayment(): pay the recipient ``amount - collected``.

    Returns the amount transferred to the recipient's contract balance.
    """

    def action():
        state = ledger.channel_store.get(channel_id)
        if state is None:
            raise TxRejected(Reason.UNKNOWN_CHANNEL)
        if caller != state.recipient:
            raise TxRejected(Reason.UNAUTHORIZED)
        if state.unloaded:
            raise TxRejected(Reason.ALREADY_UNLOADED)
        if ledger.now >= state.expiration:
            raise TxRejected(Reason.EXPIRED)
        try:
            msg_channel, amount = decode_payment(payload.message)
        except CryptoError:
            raise TxRejected(Reason.MALFORMED_PAYLOAD) from None
        if msg_channel != channel_id:
            raise TxRejected(Reason.WRONG_CHANNEL)
        owner_key = ledger.public_key(state.owner)
        try:
            valid = verify(owner_key, payload.message, payload.signature, ledger.scheme)
        except CryptoError:
            valid = False
        if not valid:
            raise TxRejected(Reason.BAD_SIGNATURE)
        if amount <= state.collected:
            raise TxRejected(Reason.STALE_AMOUNT)
        if amount > state.accumulated_load:
            raise TxRejected(Reason.EXCEEDS_LOAD)
        delta = amount - state.collected
        ledger.contract_balances[state.recipient] += delta
        _store(ledger, replace(state, collected=amount))
        return delta

    return ledger.transact(caller, "collect", {"channel": channel_id, "message": payload.message}, action)


def unload(ledger: Ledger, caller: Address, channel_id: bytes) -> int:
    """Channel.Unload(): return ``X - Y`` to the owner once the channel has expired."""

    def action():
        state = _owned(ledger, caller, channel_id)
        if state.unloaded:
            raise TxRejected(Reason.ALREADY_UNLOADED)
        if ledger.now < state.expiration:
            raise TxRejected(Reason.CHANNEL_STILL_OPEN)
        refund = state.remaining
        ledger.contract_balances[caller] += refund
        _store(ledger, replace(state, unloaded=True))
        return refund

    return ledger.transact(caller, "unload", {"channel": channel_id}, action)


def dump_channels(ledger: Ledger) -> str:
    return "".join(state.dump() + "\n" for state in ledger.channel_store.values())
