"""Deterministic in-memory mock chain.

Accounts hold a main balance and a balance inside the token contract.
Channel escrow is tracked separately per channel.  Every on-chain operation
goes through :meth:`Ledger.transact`, which charges the flat fee, appends a
:class:`TxRecord` and either applies the operation atomically or records a
rejection without touching any balance.
"""

from __future__ import annotations

import copy
import enum
import hashlib
import json
from dataclasses import dataclass
from typing import Callable

from xlumi.crypto import address_of

Address = bytes


class Reason(str, enum.Enum):
    ZERO_AMOUNT = "ZeroAmount"
    INSUFFICIENT_BALANCE = "InsufficientBalance"
    INSUFFICIENT_CONTRACT_BALANCE = "InsufficientContractBalance"
    INSUFFICIENT_FEE_FUNDS = "InsufficientFeeFunds"
    UNKNOWN_ACCOUNT = "UnknownAccount"
    UNKNOWN_CHANNEL = "UnknownChannel"
    PAST_EXPIRATION = "PastExpiration"
    SELF_CHANNEL = "SelfChannel"
    UNAUTHORIZED = "Unauthorized"
    CHANNEL_ABORTED = "ChannelAborted"
    ALREADY_ABORTED = "AlreadyAborted"
    NOT_AN_EXTENSION = "NotAnExtension"
    EXPIRED = "Expired"
    MALFORMED_PAYLOAD = "MalformedPayload"
    WRONG_CHANNEL = "WrongChannel"
    BAD_SIGNATURE = "BadSignature"
    STALE_AMOUNT = "StaleAmount"
    EXCEEDS_LOAD = "ExceedsLoad"
    CHANNEL_STILL_OPEN = "ChannelStillOpen"
    ALREADY_UNLOADED = "AlreadyUnloaded"

    def __str__(self) -> str:
        return self.value


class LedgerError(Exception):
    pass


class TxRejected(LedgerError):
    def __init__(self, reason: Reason, detail: str = ""):
        super().__init__(f"{reason.value}{': ' + detail if detail else ''}")
        self.reason = reason
        self.record: TxRecord | None = None


class UnknownChannel(LedgerError, KeyError):
    pass


@dataclass(frozen=True)
class TxRecord:
    tx_id: bytes
    seq: int
    time: int
    sender: Address
    kind: str
    outcome: str  # "accepted" or "rejected(<Reason>)"

    @property
    def accepted(self) -> bool:
        return self.outcome == "accepted"

    def line(self) -> str:
        return f"{self.time} {self.tx_id.hex()} {self.sender.hex()} {self.kind} {self.outcome}"


def _canonical(params: dict) -> bytes:
    flat = {k: v.hex() if isinstance(v, bytes) else v for k, v in params.items()}
    return json.dumps(flat, sort_keys=True, separators=(",", ":")).encode()


class Ledger:
    """Single-writer mock chain with a logical clock and flat fees."""

    def __init__(self, fee: int = 1, scheme: str = "ed25519"):
        if fee < 0:
            raise ValueError("fee must be non-negative")
        self.now = 0
        self.fee = fee
        self.scheme = scheme
        self.main_balances: dict[Address, int] = {}
        self.contract_balances: dict[Address, int] = {}
        self.public_keys: dict[Address, bytes] = {}
        self.channel_store: dict[bytes, object] = {}
        self.escrow: dict[bytes, int] = {}
        self.fees_collected = 0
        self.fees_by_sender: dict[Address, int] = {}
        self.tx_log: list[TxRecord] = []
        self.total_supply = 0
        self._pending_tx_id: bytes | None = None

    # genesis -----------------------------------------------------------

    def open_account(self, public_key: bytes, main: int = 0, contract: int = 0) -> Address:
        """Register an account and mint its starting balances (not a transaction)."""
        if main < 0 or contract < 0:
            raise ValueError("genesis balances must be non-negative")
        addr = address_of(public_key)
        if addr in self.public_keys:
            raise LedgerError(f"account {addr.hex()[:16]} already exists")
        self.public_keys[addr] = bytes(public_key)
        self.main_balances[addr] = main
        self.contract_balances[addr] = contract
        self.total_supply += main + contract
        return addr

    # clock -------------------------------------------------------------

    def advance_time(self, delta: int) -> None:
        if delta < 0:
            raise ValueError("time cannot go backwards")
        self.now += delta

    def advance_to(self, t: int) -> None:
        self.advance_time(t - self.now)

    # transactions ------------------------------------------------------

    def transact(self, sender: Address, kind: str, params: dict, action: Callable[[], object]):
        """Run ``action`` as one on-chain transaction.

        ``action`` must do all of its checks (raising TxRejected) before it
        mutates anything.  The fee is checked first and charged only on
        acceptance.
        """
        seq = len(self.tx_log)
        tx_id = hashlib.sha256(
            sender + kind.encode() + _canonical(params) + seq.to_bytes(8, "big")
        ).digest()
        try:
            if sender not in self.main_balances:
                raise TxRejected(Reason.UNKNOWN_ACCOUNT)
            if self.main_balances[sender] < self.fee:
                raise TxRejected(Reason.INSUFFICIENT_FEE_FUNDS)
            self._pending_tx_id = tx_id
            result = action()
        except TxRejected as exc:
            exc.record = TxRecord(tx_id, seq, self.now, sender, kind, f"rejected({exc.reason.value})")
            self.tx_log.append(exc.record)
            raise
        finally:
            self._pending_tx_id = None
        self.main_balances[sender] -= self.fee
        self.fees_collected += self.fee
        self.fees_by_sender[sender] = self.fees_by_sender.get(sender, 0) + self.fee
        self.tx_log.append(TxRecord(tx_id, seq, self.now, sender, kind, "accepted"))
        return result

    @property
    def pending_tx_id(self) -> bytes:
        """Id of the transaction currently being applied (used for channel ids)."""
        return self._pending_tx_id

    def deposit_to_contract(self, who: Address, amount: int) -> None:
        """Token.Deposit(): move funds from the main balance into the contract."""

        def action():
            if amount <= 0:
                raise TxRejected(Reason.ZERO_AMOUNT)
            if self.main_balances[who] < amount + self.fee:
                raise TxRejected(Reason.INSUFFICIENT_BALANCE)
            self.main_balances[who] -= amount
            self.contract_balances[who] += amount

        self.transact(who, "deposit", {"amount": amount}, action)

    def withdraw_from_contract(self, who: Address, amount: int) -> None:
        """Token.Withdraw(): move funds from the contract back to the main balance."""

        def action():
            if amount <= 0:
                raise TxRejected(Reason.ZERO_AMOUNT)
            if self.contract_balances[who] < amount:
                raise TxRejected(Reason.INSUFFICIENT_CONTRACT_BALANCE)
            self.contract_balances[who] -= amount
            self.main_balances[who] += amount

        self.transact(who, "withdraw", {"amount": amount}, action)

    # queries -----------------------------------------------------------

    def count_transactions(self, sender: Address | None = None, kind: str | None = None) -> int:
        return sum(
            1
            for rec in self.tx_log
            if rec.accepted
            and (sender is None or rec.sender == sender)
            and (kind is None or rec.kind == kind)
        )

    def channel(self, channel_id: bytes):
        try:
            return self.channel_store[channel_id]
        except KeyError:
            raise UnknownChannel(channel_id.hex()) from None

    def public_key(self, addr: Address) -> bytes:
        return self.public_keys[addr]

    def circulating(self) -> int:
        return (
            sum(self.main_balances.values())
            + sum(self.contract_balances.values())
            + sum(self.escrow.values())
            + self.fees_collected
        )

    def conserved(self) -> bool:
        return self.circulating() == self.total_supply and all(
            v >= 0
            for d in (self.main_balances, self.contract_balances, self.escrow)
            for v in d.values()
        )

    def snapshot(self) -> Ledger:
        return copy.deepcopy(self)

    def export_log(self) -> str:
        """One line per record: time, tx_id hex, sender hex, kind, outcome."""
        return "".join(rec.line() + "\n" for rec in self.tx_log)
