"""Payer and recipient sessions for off-chain payments.

Messages always carry the running total, never the increment, so the
recipient only ever needs the single message with the largest total.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from xlumi.channel import ChannelState, Status
from xlumi.crypto import (
    PAYMENT_SIZE,
    SIGNATURE_SIZE,
    CryptoError,
    FormatError,
    KeyPair,
    Signature,
    SignedPayload,
    decode_payment,
    encode_payment,
    sign,
    verify,
)
from xlumi.ledger import Ledger


class OffchainError(Exception):
    pass


class ZeroDelta(OffchainError, ValueError):
    pass


class ExceedsLoad(OffchainError):
    """The payer will not sign a total above the channel's accumulated load."""


class Acceptance(str, enum.Enum):
    ACCEPTED = "Accepted"
    BAD_SIGNATURE = "BadSignature"
    WRONG_CHANNEL = "WrongChannel"
    NOT_NEWER = "NotNewer"
    EXCEEDS_LOAD = "ExceedsLoad"
    EXPIRED = "Expired"

    def __bool__(self) -> bool:
        return self is Acceptance.ACCEPTED


class Action(str, enum.Enum):
    NONE = "None"
    COLLECT_NOW = "CollectNow"


@dataclass(frozen=True)
class PaymentMessage:
    channel_id: bytes
    accumulated_amount: int
    signature: Signature

    @property
    def payload(self) -> bytes:
        return encode_payment(self.channel_id, self.accumulated_amount)

    def to_bytes(self) -> bytes:
        return self.payload + self.signature.bytes

    def hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, data: bytes) -> PaymentMessage:
        if len(data) != PAYMENT_SIZE + SIGNATURE_SIZE:
            raise FormatError(
                f"serialized payment message must be {PAYMENT_SIZE + SIGNATURE_SIZE} bytes, got {len(data)}"
            )
        channel_id, amount = decode_payment(data[:PAYMENT_SIZE])
        return cls(channel_id, amount, Signature(bytes(data[PAYMENT_SIZE:])))

    def signed_by(self, public_key: bytes, scheme: str = "ed25519") -> SignedPayload:
        """Wrap for on-chain submission; raises CryptoError if ``public_key`` did not sign it."""
        return SignedPayload(self.payload, self.signature, public_key, scheme)

    def verifies(self, public_key: bytes, scheme: str = "ed25519") -> bool:
        try:
            return verify(public_key, self.payload, self.signature, scheme)
        except CryptoError:
            return False


def sign_payment(keypair: KeyPair, channel_id: bytes, total: int) -> PaymentMessage:
    """Sign a total with no session checks. Honest payers go through PayerSession.pay."""
    sig = sign(keypair.secret_key, encode_payment(channel_id, total), keypair.scheme)
    return PaymentMessage(channel_id, total, sig)


@dataclass
class PayerSession:
    channel_id: bytes
    keypair: KeyPair
    accumulated_paid: int = 0
    known_load: int = 0

    def pay(self, delta: int) -> PaymentMessage:
        """Promise ``delta`` more and return a message for the new total."""
        if delta <= 0:
            raise ZeroDelta("payment delta must be positive")
        total = self.accumulated_paid + delta
        if total > self.known_load:
            raise ExceedsLoad(f"total {total} would exceed load {self.known_load}")
        msg = sign_payment(self.keypair, self.channel_id, total)
        self.accumulated_paid = total
        return msg

    def sync(self, ledger: Ledger) -> None:
        self.known_load = ledger.channel(self.channel_id).accumulated_load


@dataclass
class RecipientSession:
    channel_id: bytes
    payer_public_key: bytes
    scheme: str = "ed25519"
    best_message: PaymentMessage | None = None
    last_checked: int = 0

    @property
    def best_amount(self) -> int:
        return self.best_message.accumulated_amount if self.best_message else 0

    @property
    def stored_signatures(self) -> int:
        return 0 if self.best_message is None else 1

    def accept(self, ledger: Ledger, message: PaymentMessage) -> Acceptance:
        """Validate ``message`` against the chain and keep it if it is the new best.

        Rejected messages are dropped, not cached.
        """
        state: ChannelState = ledger.channel(self.channel_id)
        if message.channel_id != self.channel_id:
            return Acceptance.WRONG_CHANNEL
        if not message.verifies(self.payer_public_key, self.scheme):
            return Acceptance.BAD_SIGNATURE
        if message.accumulated_amount <= max(self.best_amount, state.collected):
            return Acceptance.NOT_NEWER
        if message.accumulated_amount > state.accumulated_load:
            return Acceptance.EXCEEDS_LOAD
        if ledger.now >= state.expiration or state.unloaded:
            return Acceptance.EXPIRED
        self.best_message = message
        return Acceptance.ACCEPTED

    def uncollected(self, ledger: Ledger) -> int:
        return max(0, self.best_amount - ledger.channel(self.channel_id).collected)

    def monitor(self, ledger: Ledger, interval: int) -> Action:
        """Decide whether the recipient must collect now.

        Call at least once per grace period.  Fires when the channel was
        aborted or will expire within ``interval`` and there is something
        left to claim that can still be claimed.
        """
        state: ChannelState = ledger.channel(self.channel_id)
        self.last_checked = ledger.now
        closing = state.status is Status.ABORTED or state.expiration - ledger.now <= interval
        claimable = ledger.now < state.expiration and not state.unloaded
        if closing and claimable and self.best_amount > state.collected:
            return Action.COLLECT_NOW
        return Action.NONE

    def settle_threshold(self, ledger: Ledger, risk_limit: int) -> Action:
        """Collect once the uncollected total reaches ``risk_limit``."""
        if risk_limit <= 0:
            raise ValueError("risk limit must be positive")
        if self.uncollected(ledger) >= risk_limit:
            return Action.COLLECT_NOW
        return Action.NONE

    def payload(self) -> SignedPayload | None:
        if self.best_message is None:
            return None
        return self.best_message.signed_by(self.payer_public_key, self.scheme)
